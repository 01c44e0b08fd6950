#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dynsplat/scenario.hpp"

namespace dynsplat
{

enum class ObsMode
{
    Path,   ///< PNG written under obs_dir, its path returned
    Base64, ///< PNG bytes inline
    None
};

ObsMode obs_mode_from_string(const std::string& s);

struct ServiceOptions
{
    ObsMode obs = ObsMode::Path;
    std::filesystem::path obs_dir = "obs";
    int render_threads = 0;
};

/// Line-delimited JSON closed-loop session. Each step holds the commanded (v, w) for one frame
/// interval, integrated at control_dt with the termination checks of the expert after every tick.
class StepService
{
public:
    StepService(const SplatScene& scene, const SceneMaps& maps, const HumanModel& model, const Config& config,
                ServiceOptions options = {});

    /// Parses one request line. Malformed input yields {"error": ...} and aborts the episode.
    nlohmann::json handle_line(const std::string& line);
    nlohmann::json handle(const nlohmann::json& request);

    /// Serve until "close" or end of input. Returns the process exit code.
    int run(std::istream& in, std::ostream& out);

    bool closed() const { return closed_; }
    bool active() const { return active_; }
    bool done() const { return done_; }
    const RobotState& state() const { return state_; }
    double time() const { return static_cast<double>(tick_) * episode_.control_dt; }
    Outcome outcome() const { return outcome_; }
    const EpisodeConfig& episode() const { return episode_; }

private:
    nlohmann::json reset(const nlohmann::json& request);
    nlohmann::json step(const nlohmann::json& request);
    nlohmann::json observation();
    nlohmann::json response();
    void check_termination();
    nlohmann::json fail(const std::string& message);

    const SplatScene& scene_;
    const SceneMaps& maps_;
    const HumanModel& model_;
    const Config& config_;
    ServiceOptions options_;

    EpisodeConfig episode_;
    ExpertConfig expert_;
    std::vector<HumanActor> actors_;
    RobotState state_;
    Vec2d prev_action_ = Vec2d::Zero();
    long tick_ = 0;
    int steps_ = 0;
    int resets_ = 0;
    bool active_ = false;
    bool done_ = false;
    bool closed_ = false;
    Outcome outcome_ = Outcome::Timeout;
};

std::string base64_encode(std::string_view bytes);

} // namespace dynsplat

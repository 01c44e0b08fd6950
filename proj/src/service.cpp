#include "dynsplat/service.hpp"

#include <istream>
#include <ostream>

#include <openssl/evp.h>

namespace dynsplat
{

ObsMode obs_mode_from_string(const std::string& s)
{
    if (s == "path")
        return ObsMode::Path;
    if (s == "base64")
        return ObsMode::Base64;
    if (s == "none")
        return ObsMode::None;
    throw ConfigError("observation mode must be path, base64 or none");
}

std::string base64_encode(std::string_view bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

StepService::StepService(const SplatScene& scene, const SceneMaps& maps, const HumanModel& model,
                         const Config& config, ServiceOptions options)
    : scene_(scene), maps_(maps), model_(model), config_(config), options_(std::move(options))
{
}

nlohmann::json StepService::fail(const std::string& message)
{
    active_ = false;
    return {{"error", message}};
}

nlohmann::json StepService::handle_line(const std::string& line)
{
    nlohmann::json request;
    try
    {
        request = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception& e)
    {
        return fail(std::string("malformed JSON: ") + e.what());
    }
    return handle(request);
}

nlohmann::json StepService::handle(const nlohmann::json& request)
{
    if (!request.is_object() || !request.contains("cmd") || !request.at("cmd").is_string())
        return fail("request must be an object with a string \"cmd\"");
    const auto cmd = request.at("cmd").get<std::string>();
    try
    {
        if (cmd == "reset")
            return reset(request);
        if (cmd == "step")
            return step(request);
        if (cmd == "close")
        {
            closed_ = true;
            active_ = false;
            return {{"closed", true}};
        }
    }
    catch (const std::exception& e)
    {
        return fail(e.what());
    }
    return fail("unknown cmd '" + cmd + "'");
}

nlohmann::json StepService::reset(const nlohmann::json& request)
{
    active_ = false;
    if (request.contains("episode"))
        episode_ = episode_from_json(request.at("episode"));
    else if (request.contains("seed") && request.at("seed").is_number_integer() && request.at("seed").get<long long>() >= 0)
        episode_ = sample_episode(maps_, config_, scene_.name, request.at("seed").get<std::uint64_t>());
    else
        return fail("reset needs \"episode\" or a non-negative integer \"seed\"");

    expert_ = expert_config_for(config_, episode_);
    actors_ = make_actors(model_, plan_human_trajectories(episode_, maps_, config_), episode_.control_dt);
    state_ = RobotState::from_pose(episode_.start);
    prev_action_ = Vec2d::Zero();
    tick_ = 0;
    steps_ = 0;
    ++resets_;
    done_ = false;
    outcome_ = Outcome::Timeout;
    active_ = true;
    check_termination();
    return response();
}

nlohmann::json StepService::step(const nlohmann::json& request)
{
    if (!active_)
        return fail("no active episode; send reset first");
    if (done_)
        return fail("episode already finished");
    const auto& a = request.contains("action") ? request.at("action") : nlohmann::json();
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        return fail("step needs \"action\": [v, w]");
    const double v = a[0].get<double>();
    const double w = a[1].get<double>();
    if (!std::isfinite(v) || !std::isfinite(w))
        return fail("action must be finite");

    const double dt = episode_.control_dt;
    const auto ticks = std::lround(config_.dataset.frame_interval / dt);
    for (long i = 0; i < ticks && !done_; ++i)
    {
        state_ = RobotState::from_pose(integrate_unicycle(state_.pose(), v, w, dt), v, w);
        ++tick_;
        check_termination();
    }
    prev_action_ = Vec2d(v, w);
    ++steps_;
    return response();
}

void StepService::check_termination()
{
    const double t = time();
    if (robot_in_collision(maps_.robot, state_.position(), actors_, t, expert_.robot_radius))
        outcome_ = Outcome::Collision;
    else if ((state_.position() - episode_.goal).norm() <= episode_.goal_tolerance)
        outcome_ = Outcome::Success;
    else if (t >= episode_.time_limit - 1e-9)
        outcome_ = Outcome::Timeout;
    else
        return;
    done_ = true;
}

nlohmann::json StepService::observation()
{
    if (options_.obs == ObsMode::None)
        return nullptr;
    const auto cam = robot_camera(state_.pose(), expert_.camera_height, expert_.image_width, expert_.image_height,
                                  expert_.hfov);
    RenderOptions ro;
    ro.threads = options_.render_threads;
    const auto img = render_observation(scene_, actors_, time(), cam, config_.background(), ro);
    if (options_.obs == ObsMode::Base64)
        return base64_encode(encode_png(img));
    std::filesystem::create_directories(options_.obs_dir);
    const auto path = options_.obs_dir / ("r" + std::to_string(resets_) + "_" + std::to_string(steps_) + ".png");
    write_png(img, path);
    return path.string();
}

nlohmann::json StepService::response()
{
    const Vec2d rg = compute_relative_goal(state_.pose(), episode_.goal);
    return {{"obs", observation()},
            {"rel_goal", {rg.x(), rg.y()}},
            {"prev_action", {prev_action_.x(), prev_action_.y()}},
            {"done", done_},
            {"outcome", done_ ? to_string(outcome_) : std::string("running")},
            {"t", time()},
            {"state", {state_.x, state_.y, state_.theta}}};
}

int StepService::run(std::istream& in, std::ostream& out)
{
    std::string line;
    while (!closed_ && std::getline(in, line))
    {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        out << handle_line(line).dump() << '\n' << std::flush;
    }
    return 0;
}

} // namespace dynsplat

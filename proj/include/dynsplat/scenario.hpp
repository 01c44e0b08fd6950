#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynsplat/config.hpp"
#include "dynsplat/expert.hpp"
#include "dynsplat/human_planner.hpp"
#include "dynsplat/render.hpp"

namespace dynsplat
{

/// Planning maps of one scene: the robot map sliced up to the robot height, the human map up to
/// the human height, both inflated by their agent's radius.
struct SceneMaps
{
    double ground_z = 0.0;
    OccupancyGrid2D robot;
    OccupancyGrid2D human;
};

SceneMaps build_scene_maps(const VoxelGrid& voxels, double ground_z, const Config& config);
SceneMaps build_scene_maps(const SplatScene& scene, const Config& config);

struct HumanSpec
{
    Interaction interaction = Interaction::Crossing;
    Vec2d start = Vec2d::Zero();
    Vec2d goal = Vec2d::Zero();
    double speed = 1.0;
};

struct EpisodeConfig
{
    std::string scene;
    std::uint64_t seed = 0;
    Pose2d start;
    Vec2d goal = Vec2d::Zero();
    std::vector<HumanSpec> humans;
    double control_dt = 0.1;
    double time_limit = 50.0;
    double goal_tolerance = 1.0;
};

nlohmann::json to_json(const EpisodeConfig& ep);
EpisodeConfig episode_from_json(const nlohmann::json& j);

/// Mix an index into a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform draws over free cell centers until the pair is at least `min_dist` apart.
/// The start faces the goal. With `start_clearance` > 0 the start must also be that far from
/// any blocked cell, so a robot that cannot turn in place still has room to turn.
std::pair<Pose2d, Vec2d> sample_robot_endpoints(const OccupancyGrid2D& grid, double min_dist, std::mt19937_64& rng,
                                                int max_draws = 10000, double start_clearance = 0.0);

/// Smallest turning radius of the primitive set plus one cell.
double turning_clearance(const Config& config);

/// Robot endpoints connected in the robot map, plus `config.human.count` humans whose
/// endpoints satisfy the interaction rule and are connected in the human map.
EpisodeConfig sample_episode(const SceneMaps& maps, const Config& config, const std::string& scene,
                             std::uint64_t seed);

/// Seed path by grid A* on the human map, then spline smoothing.
std::vector<HumanTrajectory> plan_human_trajectories(const EpisodeConfig& ep, const SceneMaps& maps,
                                                     const Config& config);

std::vector<HumanActor> make_actors(const HumanModel& model, const std::vector<HumanTrajectory>& trajectories,
                                    double frame_dt);

/// The avatar shared by every episode of a config (procedural unless a model PLY is given).
HumanModel load_or_make_human_model(const Config& config);

/// Expert settings with the per-episode overrides applied.
ExpertConfig expert_config_for(const Config& config, const EpisodeConfig& ep);

/// (dx, dy) of the goal in the robot frame.
inline Vec2d compute_relative_goal(const Pose2d& robot, const Vec2d& goal)
{
    return relative_goal(robot, goal);
}

struct Sample
{
    int index = 0;
    double t = 0.0;
    std::array<std::string, 3> frames; ///< oldest first, relative to the episode directory
    Vec2d prev_action = Vec2d::Zero();
    Vec2d rel_goal = Vec2d::Zero();
    Pose2d pose;
    Vec2d action = Vec2d::Zero();
};

nlohmann::json to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);

struct EpisodeRecord
{
    EpisodeConfig config;
    std::vector<HumanTrajectory> humans;
    ExpertResult expert;
    std::vector<Sample> samples;

    Outcome outcome() const { return expert.outcome; }
    double reaching_time() const { return expert.reaching_time; }
    int replans() const { return expert.replans; }
};

/// Frame id k holds the observation at t = k * frame_interval.
std::string frame_name(int k);

/// One sample per frame interval while the expert still acts. The first two samples repeat the
/// initial frame in their history.
std::vector<Sample> make_samples(const EpisodeConfig& ep, const PlannedPath& executed, double frame_interval);

struct EpisodeOutput
{
    std::filesystem::path dir; ///< ep<NNNN>; frames go to dir/frames
    bool render = true;
    int render_threads = 0;
};

/// Plans the humans, runs the expert, builds the samples and optionally writes the episode.
EpisodeRecord run_episode(const SplatScene& scene, const SceneMaps& maps, const HumanModel& model,
                          const EpisodeConfig& ep, const Config& config, const EpisodeOutput* output = nullptr,
                          const TraceSink& trace = {});

void write_episode(const EpisodeRecord& rec, const std::filesystem::path& dir);

struct EpisodeSummary
{
    Outcome outcome = Outcome::Timeout;
    double reaching_time = 0.0;
};

struct Metrics
{
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    double average_reaching_time = 0.0; ///< failures count as the time limit
    std::array<std::size_t, 4> outcome_counts{}; ///< indexed by Outcome
};

Metrics compute_metrics(std::span<const EpisodeSummary> episodes, double time_limit = 50.0);
Metrics compute_metrics(std::span<const EpisodeRecord> records, double time_limit = 50.0);
nlohmann::json to_json(const Metrics& m);

struct DatasetOptions
{
    int episodes = 0;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir; ///< the scene directory is created below this
    int workers = 1;
    bool render = true;
};

struct DatasetResult
{
    std::filesystem::path root; ///< out_dir/<scene>
    Metrics metrics;
    std::vector<EpisodeSummary> episodes;
    std::size_t total_samples = 0;
};

DatasetResult generate_dataset(const SplatScene& scene, const SceneMaps& maps, const Config& config,
                               const DatasetOptions& options);

/// Reads manifest.json of a dataset directory and recomputes the metrics from its episode list.
Metrics dataset_metrics(const std::filesystem::path& root);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path, int indent = 1);

} // namespace dynsplat

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dynsplat/expert.hpp"

namespace dynsplat
{

struct SceneSettings
{
    double resolution = 0.1;        // m/voxel
    double opacity_threshold = 2.0; // summed opacity
    double ground_band = 0.05;      // m above ground_z where the projection band starts
};

struct RobotSettings
{
    double radius = 0.3;
    double height = 0.5;
    double v_max = 1.0;
    double w_max = 1.0;
    double camera_height = 0.4;
    double hfov_deg = 90.0;
    int image_width = 256;
    int image_height = 144;
};

struct HumanSettings
{
    int count = 1;
    double radius = 0.3;
    double height = 1.8;
    int primitive_count = 400;
    std::string interaction = "mixed"; // crossing | parallel | mixed
    double walk_speed_min = 0.8;
    double walk_speed_max = 1.6;
    double run_speed_min = 2.0;
    double run_speed_max = 3.0;
    double run_probability = 0.0;
    double parallel_max_angle_deg = 15.0;
    double parallel_min_offset = 0.5;
    double parallel_max_offset = 2.0;
    double min_path_length = 2.0;
    double waypoint_spacing = 0.5;
    int smoothing_iterations = 200;
    std::string model_path; // optional PLY avatar in the canonical body frame
    std::uint64_t model_seed = 0;
};

struct PlannerSettings
{
    double primitive_duration = 0.5;
    double w_len = 1.0;
    double w_steer = 0.3;
    double w_h = 1.0;
    int theta_bins = 16;
    double goal_tolerance = 0.5;
    std::size_t node_budget = 200000;
    double replan_period = 2.0;
    double safety_margin = 0.6;
    double lookahead = 2.0;
    double track_memory = 2.0;
    double prediction_horizon = 2.0;
    double safety_buffer = 0.4;
    double downsample_res = 0.1;
};

struct DatasetSettings
{
    double control_dt = 0.1;
    double time_limit = 50.0;
    double goal_tolerance = 1.0;
    double frame_interval = 0.5;
    double min_endpoint_distance = 3.0;
    int workers = 1;
    bool render = true;
    std::array<double, 3> background = {0.8, 0.85, 0.9};
};

/// Every tunable default, grouped by the config-file sections.
struct Config
{
    SceneSettings scene;
    RobotSettings robot;
    HumanSettings human;
    PlannerSettings planner;
    DatasetSettings dataset;

    ExpertConfig expert() const;
    Eigen::Vector3f background() const { return Eigen::Vector3d(dataset.background.data()).cast<float>(); }

    /// Unknown keys or wrong types raise ConfigError.
    static Config from_json(const nlohmann::json& j);
    static Config load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    void validate() const;
};

/// FNV-1a 64-bit digest, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

} // namespace dynsplat

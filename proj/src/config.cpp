#include "dynsplat/config.hpp"

#include <cstdio>
#include <fstream>

namespace dynsplat
{

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SceneSettings, resolution, opacity_threshold, ground_band)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RobotSettings, radius, height, v_max, w_max, camera_height, hfov_deg,
                                                image_width, image_height)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HumanSettings, count, radius, height, primitive_count, interaction,
                                                walk_speed_min, walk_speed_max, run_speed_min, run_speed_max,
                                                run_probability, parallel_max_angle_deg, parallel_min_offset,
                                                parallel_max_offset, min_path_length, waypoint_spacing,
                                                smoothing_iterations, model_path, model_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PlannerSettings, primitive_duration, w_len, w_steer, w_h, theta_bins,
                                                goal_tolerance, node_budget, replan_period, safety_margin, lookahead, track_memory,
                                                prediction_horizon, safety_buffer, downsample_res)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DatasetSettings, control_dt, time_limit, goal_tolerance,
                                                frame_interval, min_endpoint_distance, workers, render, background)

namespace
{

void reject_unknown_keys(const nlohmann::json& input, const nlohmann::json& reference, const std::string& where)
{
    if (!input.is_object())
        throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : input.items())
    {
        if (!reference.contains(key))
            throw ConfigError("unknown config key '" + where + key + "'");
        if (reference[key].is_object())
            reject_unknown_keys(value, reference[key], where + key + ".");
    }
}

} // namespace

ExpertConfig Config::expert() const
{
    ExpertConfig e;
    e.v_max = robot.v_max;
    e.w_max = robot.w_max;
    e.primitive_duration = planner.primitive_duration;
    e.search.weights = {planner.w_len, planner.w_steer, planner.w_h};
    e.search.theta_bins = planner.theta_bins;
    e.search.goal_tolerance = planner.goal_tolerance;
    e.search.node_budget = planner.node_budget;
    e.search.control_dt = dataset.control_dt;
    e.replan_period = planner.replan_period;
    e.safety_margin = planner.safety_margin;
    e.lookahead = planner.lookahead;
    e.track_memory = planner.track_memory;
    e.prediction.horizon = planner.prediction_horizon;
    e.prediction.human_radius = human.radius;
    e.prediction.safety_buffer = planner.safety_buffer;
    e.downsample_res = planner.downsample_res;
    e.robot_radius = robot.radius;
    e.camera_height = robot.camera_height;
    e.hfov = robot.hfov_deg * kPi / 180.0;
    e.image_width = robot.image_width;
    e.image_height = robot.image_height;
    e.control_dt = dataset.control_dt;
    e.time_limit = dataset.time_limit;
    e.success_tolerance = dataset.goal_tolerance;
    return e;
}

nlohmann::json Config::to_json() const
{
    return {{"scene", scene}, {"robot", robot}, {"human", human}, {"planner", planner}, {"dataset", dataset}};
}

Config Config::from_json(const nlohmann::json& j)
{
    const Config defaults;
    reject_unknown_keys(j, defaults.to_json(), "");
    Config c;
    try
    {
        if (j.contains("scene"))
            c.scene = j.at("scene").get<SceneSettings>();
        if (j.contains("robot"))
            c.robot = j.at("robot").get<RobotSettings>();
        if (j.contains("human"))
            c.human = j.at("human").get<HumanSettings>();
        if (j.contains("planner"))
            c.planner = j.at("planner").get<PlannerSettings>();
        if (j.contains("dataset"))
            c.dataset = j.at("dataset").get<DatasetSettings>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

void Config::validate() const
{
    const auto require = [](bool ok, const char* what) {
        if (!ok)
            throw ConfigError(what);
    };
    require(scene.resolution > 0.0, "scene.resolution must be positive");
    require(scene.opacity_threshold >= 0.0, "scene.opacity_threshold must be non-negative");
    require(robot.radius > 0.0 && robot.height > 0.0, "robot radius and height must be positive");
    require(robot.v_max > 0.0 && robot.w_max > 0.0, "robot v_max and w_max must be positive");
    require(robot.hfov_deg > 0.0 && robot.hfov_deg < 180.0, "robot.hfov_deg must be in (0, 180)");
    require(robot.image_width > 0 && robot.image_height > 0, "image size must be positive");
    require(human.count >= 0 && human.count <= 2, "human.count must be 0, 1 or 2");
    require(human.radius > 0.0 && human.height > 1.25 * human.radius, "human height must exceed 1.25 * radius");
    require(human.primitive_count >= 10, "human.primitive_count must be at least 10");
    require(human.interaction == "crossing" || human.interaction == "parallel" || human.interaction == "mixed",
            "human.interaction must be crossing, parallel or mixed");
    require(human.walk_speed_min > 0.0 && human.walk_speed_max >= human.walk_speed_min, "bad walking speed range");
    require(human.run_speed_min > 0.0 && human.run_speed_max >= human.run_speed_min, "bad running speed range");
    require(planner.primitive_duration > 0.0 && dataset.control_dt > 0.0, "durations must be positive");
    const double ratio = planner.primitive_duration / dataset.control_dt;
    require(std::abs(ratio - std::round(ratio)) < 1e-9, "planner.primitive_duration must be a multiple of control_dt");
    const double frame_ratio = dataset.frame_interval / dataset.control_dt;
    require(dataset.frame_interval > 0.0 && std::abs(frame_ratio - std::round(frame_ratio)) < 1e-9,
            "dataset.frame_interval must be a multiple of control_dt");
    require(planner.theta_bins > 0, "planner.theta_bins must be positive");
    require(dataset.time_limit > 0.0 && dataset.goal_tolerance > 0.0, "time limit and goal tolerance must be positive");
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace dynsplat

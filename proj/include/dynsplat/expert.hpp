#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynsplat/camera.hpp"
#include "dynsplat/grid_search.hpp"
#include "dynsplat/human.hpp"

namespace dynsplat
{

struct RobotState
{
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double v = 0.0;
    double w = 0.0;

    Pose2d pose() const { return {x, y, theta}; }
    Vec2d position() const { return {x, y}; }
    static RobotState from_pose(const Pose2d& p, double v = 0.0, double w = 0.0) { return {p.x, p.y, p.theta, v, w}; }
};

/// Constant (v, w) arc of fixed duration. end_offset is expressed in the start frame.
struct MotionPrimitive
{
    double v = 0.0;
    double w = 0.0;
    double duration = 0.0;
    double arc_length = 0.0;
    Pose2d end_offset;
};

/// 3 speeds {1/3, 2/3, 1} x v_max by 3 steerings {+w_max (left), 0, -w_max (right)}, speed-major.
std::vector<MotionPrimitive> build_motion_primitives(double v_max, double w_max, double duration);

/// The ceil(q * n)-th smallest value (nearest-rank definition).
double nearest_rank_percentile(std::vector<double> values, double q);

/// Drop primitives whose covariance trace exceeds the 75th percentile, then voxel-downsample
/// the surviving means (one centroid per occupied voxel, ordered by voxel key).
std::vector<Vec3d> filter_human_primitives(const Primitives& prims, double downsample_res);

struct PredictionParams
{
    double horizon = 2.0;       // s
    double human_radius = 0.3;  // m
    double safety_buffer = 0.4; // m
};

/// Any point that is both visible and within `margin` of the path segment.
bool human_gate(std::span<const Vec3d> points, const CameraModel& camera, const Polyline2d& path_segment,
                double margin);

/// Cells added for a gated human: the cells of its points plus every cell whose center lies in the
/// region swept by a disk of radius (human_radius + safety_buffer) moving from the point centroid
/// at `velocity` over the prediction horizon.
OccupancyGrid2D update_navigable_map(const OccupancyGrid2D& base, std::span<const Vec3d> human_points,
                                     const Vec2d& velocity, const CameraModel& camera,
                                     const Polyline2d& path_segment, double safety_margin,
                                     const PredictionParams& params = {});

/// The ungated part of update_navigable_map: stamp the points and the swept disk into `map`.
void add_human_region(OccupancyGrid2D& map, std::span<const Vec3d> human_points, const Vec2d& velocity,
                      const PredictionParams& params);

/// elapsed >= period, or some human point closer than `margin` to the look-ahead polyline.
bool should_replan(double elapsed_since_plan, double period, std::span<const Vec3d> human_points,
                   const Polyline2d& lookahead, double margin);

struct PlannerWeights
{
    double w_len = 1.0;
    double w_steer = 0.3;
    double w_h = 1.0;
};

struct HybridAStarOptions
{
    PlannerWeights weights;
    int theta_bins = 16;
    double xy_bin = 0.0; ///< bucket size in meters; 0 uses the grid resolution
    double goal_tolerance = 0.5;
    std::size_t node_budget = 200000;
    double control_dt = 0.1;
};

struct SearchStats
{
    std::size_t expanded = 0;
    std::size_t generated = 0;
    std::size_t open_size = 0;
    std::size_t closed_size = 0;
};

struct PlannedPath
{
    double t0 = 0.0;
    double dt = 0.1;
    std::vector<RobotState> states;   ///< states[i] at t0 + i * dt
    std::vector<Vec2d> actions;       ///< actions[i] = (v, w) applied over [t_i, t_{i+1})
    std::vector<double> replanned_at; ///< times of replans after the initial plan
    std::vector<std::size_t> primitive_ids;
    double cost = 0.0;
    SearchStats stats;

    bool empty() const { return actions.empty(); }
    double duration() const { return static_cast<double>(actions.size()) * dt; }
    Polyline2d positions() const;
};

/// Hybrid A* over the primitive lattice with (x, y, theta) bucket pruning and an obstacle-aware
/// Dijkstra heuristic. Throws NoPathError when the search fails.
PlannedPath hybrid_astar(const RobotState& start, const Vec2d& goal, const OccupancyGrid2D& grid,
                         std::span<const MotionPrimitive> primitives, const HybridAStarOptions& options = {});

/// Whether the constant (v, w) arc of duration T from `from` stays inside free cells. Exact up to
/// rounding: the arc is cut where it crosses grid lines and each piece is tested by its midpoint.
bool arc_free(const OccupancyGrid2D& grid, const Pose2d& from, double v, double w, double T);

/// Sample points along a primitive arc from `from` at spacing <= max_spacing (excluding `from`).
std::vector<Pose2d> primitive_samples(const Pose2d& from, const MotionPrimitive& prim, double max_spacing);

enum class Outcome
{
    Success,
    Collision,
    Timeout,
    PlanFailure
};
std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

struct ExpertConfig
{
    double v_max = 1.0;
    double w_max = 1.0;
    double primitive_duration = 0.5;
    HybridAStarOptions search;
    double replan_period = 2.0;
    double safety_margin = 0.6;
    double lookahead = 2.0;
    double track_memory = 2.0; ///< s a human stays tracked after leaving the camera frustum
    PredictionParams prediction;
    double downsample_res = 0.1;
    double robot_radius = 0.3;
    double camera_height = 0.4;
    double hfov = kPi / 2.0;
    int image_width = 256;
    int image_height = 144;
    double control_dt = 0.1;
    double time_limit = 50.0;
    double success_tolerance = 1.0;
};

/// Collision predicate shared by the expert and the step service: robot center in a blocked
/// cell of the (robot-radius inflated) map, or a human root within the sum of radii.
bool robot_in_collision(const OccupancyGrid2D& robot_map, const Vec2d& position, std::span<const HumanActor> humans,
                        double t, double robot_radius);

struct ExpertResult
{
    PlannedPath executed; ///< logged states/actions at control_dt, replan times
    Outcome outcome = Outcome::Timeout;
    std::string reason;
    double reaching_time = 0.0;
    int replans = 0;
    double min_human_clearance = std::numeric_limits<double>::infinity(); ///< min robot-human root distance
    std::vector<PlannedPath> plans;   ///< every plan snapshot
    std::vector<OccupancyGrid2D> maps; ///< map each plan was computed on (when keep_maps)
};

using TraceSink = std::function<void(const nlohmann::json&)>;

/// Closed-loop expert rollout. Plans and replans happen on primitive boundaries so that every
/// action is held for a whole primitive; replan triggers are evaluated every control tick.
ExpertResult execute_expert(const OccupancyGrid2D& robot_map, std::span<const HumanActor> humans,
                            const Pose2d& start, const Vec2d& goal, const ExpertConfig& config,
                            const TraceSink& trace = {}, bool keep_maps = false);

} // namespace dynsplat

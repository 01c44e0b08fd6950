#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "dynsplat/splat.hpp"

namespace dynsplat
{

/// Rigid Gaussian cluster in a body frame: origin on the ground between the feet, +x facing.
struct HumanModel
{
    Primitives canonical;
    double height = 1.8;
    double radius = 0.3;
};

struct TrajectorySample
{
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;

    Vec2d position() const { return {x, y}; }
};

/// Timed constant-speed 2D path of a human root.
struct HumanTrajectory
{
    std::vector<TrajectorySample> samples;
    double speed = 1.0;
    bool smoothing_fallback = false; ///< set when the seed polyline was used instead of the smoothed spline

    double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
    bool empty() const { return samples.empty(); }

    /// Root position/heading at time t (clamped to [0, duration]).
    TrajectorySample at(double t) const;
};

/// Procedural capsule-shaped stand-in for an avatar. Deterministic for a fixed seed.
HumanModel make_human_model(double height, double radius, int count, std::uint64_t seed);

/// One yaw-only pose per frame, frame k at time k * frame_dt.
std::vector<Pose3d> trajectory_to_root_motion(const HumanTrajectory& traj, double frame_dt);

/// Root pose at t, interpolated between the bracketing frames (shortest-arc yaw).
Pose3d root_pose_at(const std::vector<Pose3d>& motion, double t, double frame_dt);

/// Canonical primitives placed at the root pose for time t.
Primitives human_prims_at(const HumanModel& model, const std::vector<Pose3d>& motion, double t, double frame_dt);

/// A model animated along a trajectory. Times past the end hold the final pose.
struct HumanActor
{
    const HumanModel* model = nullptr;
    HumanTrajectory trajectory;
    std::vector<Pose3d> motion;
    double frame_dt = 0.1;

    HumanActor() = default;
    HumanActor(const HumanModel& m, HumanTrajectory traj, double dt)
        : model(&m), trajectory(std::move(traj)), motion(trajectory_to_root_motion(trajectory, dt)), frame_dt(dt)
    {
    }

    double clamp_time(double t) const
    {
        return std::clamp(t, 0.0, static_cast<double>(motion.size() - 1) * frame_dt);
    }
    Pose3d root(double t) const { return root_pose_at(motion, clamp_time(t), frame_dt); }
    Vec2d root_xy(double t) const { return root(t).translation().head<2>(); }
    Primitives primitives(double t) const { return human_prims_at(*model, motion, clamp_time(t), frame_dt); }
};

// [t, x, y, heading] rows.
nlohmann::json trajectory_to_json(const HumanTrajectory& traj);
HumanTrajectory trajectory_from_json(const nlohmann::json& j);

void save_human_model(const HumanModel& model, const std::filesystem::path& ply);
HumanModel load_human_model(const std::filesystem::path& ply, double height, double radius);

/// Build a trajectory with samples every `step` meters of chord along a polyline,
/// timed at constant speed, headings from neighboring samples.
HumanTrajectory time_parameterize(const Polyline2d& path, double speed, double step);

} // namespace dynsplat

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dynsplat
{

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Pose3d = Eigen::Isometry3d;

using Polyline2d = std::vector<Vec2d>;

constexpr double kPi = std::numbers::pi;

// Errors. The CLI maps each family onto a process exit code.
struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct FormatError : Error
{
    using Error::Error;
};
struct ConfigError : Error
{
    using Error::Error;
};
struct IoError : Error
{
    using Error::Error;
};
struct NoPathError : Error
{
    using Error::Error;
};
struct SamplingError : Error
{
    using Error::Error;
};

/// Wrap an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a)
{
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi_v<Scalar>)
        a += two_pi;
    else if (a > std::numbers::pi_v<Scalar>)
        a -= two_pi;
    return a;
}

/// Planar pose (x, y, heading).
template <typename Scalar>
struct Pose2
{
    Scalar x{0};
    Scalar y{0};
    Scalar theta{0};

    Vec2<Scalar> position() const { return {x, y}; }
};
using Pose2d = Pose2<double>;

/// Exact unicycle integration of a constant (v, w) command over dt.
template <typename Scalar>
Pose2<Scalar> integrate_unicycle(const Pose2<Scalar>& p, Scalar v, Scalar w, Scalar dt)
{
    Pose2<Scalar> out;
    if (std::abs(w) < Scalar(1e-12))
    {
        out.x = p.x + v * dt * std::cos(p.theta);
        out.y = p.y + v * dt * std::sin(p.theta);
        out.theta = p.theta;
    }
    else
    {
        const Scalar th1 = p.theta + w * dt;
        out.x = p.x + (v / w) * (std::sin(th1) - std::sin(p.theta));
        out.y = p.y - (v / w) * (std::cos(th1) - std::cos(p.theta));
        out.theta = wrap_angle(th1);
    }
    return out;
}

/// Goal expressed in the robot frame.
template <typename Scalar>
Vec2<Scalar> relative_goal(const Pose2<Scalar>& robot, const Vec2<Scalar>& goal)
{
    const Scalar dx = goal.x() - robot.x;
    const Scalar dy = goal.y() - robot.y;
    const Scalar c = std::cos(robot.theta);
    const Scalar s = std::sin(robot.theta);
    return {c * dx + s * dy, -s * dx + c * dy};
}

/// Distance from point p to segment [a, b].
template <typename Scalar>
Scalar point_segment_distance(const Vec2<Scalar>& p, const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
    const Vec2<Scalar> ab = b - a;
    const Scalar len2 = ab.squaredNorm();
    if (len2 <= Scalar(0))
        return (p - a).norm();
    const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
    return (p - (a + t * ab)).norm();
}

/// Minimum distance from p to a polyline; a single-vertex polyline degenerates to a point.
double point_polyline_distance(const Vec2d& p, const Polyline2d& line);

/// Yaw-only rigid transform with translation (x, y, z).
inline Pose3d make_pose(double x, double y, double z, double yaw)
{
    Pose3d T = Pose3d::Identity();
    T.linear() = Eigen::AngleAxisd(yaw, Vec3d::UnitZ()).toRotationMatrix();
    T.translation() = Vec3d(x, y, z);
    return T;
}

} // namespace dynsplat

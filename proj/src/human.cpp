#include "dynsplat/human.hpp"

#include <algorithm>
#include <random>

namespace dynsplat
{

TrajectorySample HumanTrajectory::at(double t) const
{
    if (samples.empty())
        throw Error("trajectory is empty");
    if (t <= samples.front().t)
        return samples.front();
    if (t >= samples.back().t)
        return samples.back();
    auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const TrajectorySample& s) { return v < s.t; });
    const auto& b = *hi;
    const auto& a = *(hi - 1);
    const double u = (t - a.t) / (b.t - a.t);
    TrajectorySample s;
    s.t = t;
    s.x = a.x + u * (b.x - a.x);
    s.y = a.y + u * (b.y - a.y);
    s.heading = wrap_angle(a.heading + u * wrap_angle(b.heading - a.heading));
    return s;
}

HumanModel make_human_model(double height, double radius, int count, std::uint64_t seed)
{
    if (!(height > 0.0) || !(radius > 0.0) || height <= 1.25 * radius)
        throw Error("make_human_model: need height > 1.25 * radius > 0");
    if (count < 10)
        throw Error("make_human_model: need at least 10 primitives");

    // Means sit on a capsule shrunk by one primitive sigma so each 1-sigma ball stays inside
    // the radius-r cylinder.
    const double sigma = radius / 4.0;
    const double rc = radius - sigma;
    const double z_bottom = sigma;
    const double z_cap = height - radius; // hemisphere center
    const double cyl_area = 2.0 * kPi * rc * (z_cap - z_bottom);
    const double cap_area = 2.0 * kPi * rc * rc;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Vec3d shirt(0.15 + 0.7 * U(rng), 0.15 + 0.7 * U(rng), 0.15 + 0.7 * U(rng));
    const Vec3d pants(0.1 + 0.3 * U(rng), 0.1 + 0.3 * U(rng), 0.15 + 0.4 * U(rng));
    const Vec3d skin(0.85, 0.66, 0.53);

    HumanModel model;
    model.height = height;
    model.radius = radius;
    model.canonical.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n)
    {
        const double phi = 2.0 * kPi * U(rng);
        Vec3d p;
        if (U(rng) * (cyl_area + cap_area) < cyl_area)
        {
            p = Vec3d(rc * std::cos(phi), rc * std::sin(phi), z_bottom + U(rng) * (z_cap - z_bottom));
        }
        else
        {
            const double cos_polar = U(rng); // uniform on the upper hemisphere
            const double sin_polar = std::sqrt(1.0 - cos_polar * cos_polar);
            p = Vec3d(rc * sin_polar * std::cos(phi), rc * sin_polar * std::sin(phi), z_cap + rc * cos_polar);
        }
        GaussianPrimitive g;
        g.mean = p;
        g.scale = Vec3d::Constant(sigma);
        g.opacity = 0.95;
        const Vec3d base = p.z() > 0.85 * height ? skin : (p.z() > 0.5 * height ? shirt : pants);
        const double jitter = 0.05 * (U(rng) - 0.5);
        g.color = (base.array() + jitter).cwiseMax(0.0).cwiseMin(1.0);
        model.canonical.push_back(g);
    }
    return model;
}

std::vector<Pose3d> trajectory_to_root_motion(const HumanTrajectory& traj, double frame_dt)
{
    if (traj.empty())
        throw Error("trajectory_to_root_motion: empty trajectory");
    if (!(frame_dt > 0.0))
        throw Error("trajectory_to_root_motion: frame_dt must be positive");
    if (traj.duration() + 1e-9 < frame_dt)
        throw Error("trajectory_to_root_motion: trajectory shorter than one frame");
    const auto frames = static_cast<std::size_t>(std::floor(traj.duration() / frame_dt + 1e-9)) + 1;
    std::vector<Pose3d> motion;
    motion.reserve(frames);
    for (std::size_t k = 0; k < frames; ++k)
    {
        const auto s = traj.at(static_cast<double>(k) * frame_dt);
        motion.push_back(make_pose(s.x, s.y, 0.0, s.heading));
    }
    return motion;
}

Pose3d root_pose_at(const std::vector<Pose3d>& motion, double t, double frame_dt)
{
    if (motion.empty())
        throw Error("root_pose_at: empty motion");
    const double t_max = static_cast<double>(motion.size() - 1) * frame_dt;
    if (t < 0.0 || t > t_max + 1e-9)
        throw Error("root_pose_at: t outside [0, " + std::to_string(t_max) + "]");
    const auto k = std::min(static_cast<std::size_t>(std::floor(t / frame_dt)), motion.size() - 1);
    if (k + 1 >= motion.size())
        return motion.back();
    const double u = std::clamp(t / frame_dt - static_cast<double>(k), 0.0, 1.0);
    if (u == 0.0)
        return motion[k];
    const auto yaw_of = [](const Pose3d& p) { return std::atan2(p.linear()(1, 0), p.linear()(0, 0)); };
    const double y0 = yaw_of(motion[k]);
    const double yaw = y0 + u * wrap_angle(yaw_of(motion[k + 1]) - y0);
    const Vec3d tr = (1.0 - u) * motion[k].translation() + u * motion[k + 1].translation();
    return make_pose(tr.x(), tr.y(), tr.z(), wrap_angle(yaw));
}

Primitives human_prims_at(const HumanModel& model, const std::vector<Pose3d>& motion, double t, double frame_dt)
{
    return transform_primitives(model.canonical, root_pose_at(motion, t, frame_dt));
}

nlohmann::json trajectory_to_json(const HumanTrajectory& traj)
{
    auto rows = nlohmann::json::array();
    for (const auto& s : traj.samples)
        rows.push_back({s.t, s.x, s.y, s.heading});
    return rows;
}

HumanTrajectory trajectory_from_json(const nlohmann::json& j)
{
    if (!j.is_array())
        throw FormatError("trajectory JSON must be an array of [t, x, y, heading]");
    HumanTrajectory traj;
    for (const auto& row : j)
    {
        if (!row.is_array() || row.size() != 4)
            throw FormatError("trajectory row must be [t, x, y, heading]");
        traj.samples.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>(), row[3].get<double>()});
    }
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
        if (!(traj.samples[i].t > traj.samples[i - 1].t))
            throw FormatError("trajectory times must be strictly increasing");
    if (traj.samples.size() >= 2)
    {
        const auto& a = traj.samples[0];
        const auto& b = traj.samples[1];
        traj.speed = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
    }
    return traj;
}

void save_human_model(const HumanModel& model, const std::filesystem::path& ply)
{
    save_primitives(model.canonical, ply);
}

HumanModel load_human_model(const std::filesystem::path& ply, double height, double radius)
{
    HumanModel model;
    model.canonical = load_primitives(ply);
    model.height = height;
    model.radius = radius;
    return model;
}

HumanTrajectory time_parameterize(const Polyline2d& path, double speed, double step)
{
    if (path.empty())
        throw Error("time_parameterize: empty path");
    if (!(speed > 0.0) || !(step > 0.0))
        throw Error("time_parameterize: speed and step must be positive");

    std::vector<Vec2d> pts{path.front()};
    std::vector<double> times{0.0};
    std::size_t seg = 0; // current position lies on segment [seg, seg+1] at parameter u
    double u = 0.0;
    Vec2d cur = path.front();
    while (seg + 1 < path.size())
    {
        bool found = false;
        for (std::size_t s = seg; s + 1 < path.size() && !found; ++s)
        {
            const Vec2d a = path[s];
            const Vec2d d = path[s + 1] - a;
            const double dd = d.squaredNorm();
            if (dd == 0.0)
                continue;
            // |a + x d - cur| = step, take the larger root beyond the current parameter
            const Vec2d f = a - cur;
            const double B = 2.0 * f.dot(d);
            const double C = f.squaredNorm() - step * step;
            const double disc = B * B - 4.0 * dd * C;
            if (disc < 0.0)
                continue;
            const double x = (-B + std::sqrt(disc)) / (2.0 * dd);
            const double lo = s == seg ? u : 0.0;
            if (x >= lo && x <= 1.0)
            {
                seg = s;
                u = x;
                cur = a + x * d;
                found = true;
            }
        }
        if (!found)
            break;
        pts.push_back(cur);
        times.push_back(times.back() + step / speed);
    }
    const double tail = (path.back() - pts.back()).norm();
    if (tail > 1e-9)
    {
        pts.push_back(path.back());
        times.push_back(times.back() + tail / speed);
    }

    HumanTrajectory traj;
    traj.speed = speed;
    traj.samples.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        Vec2d tangent = Vec2d::Zero();
        if (pts.size() >= 2)
        {
            const std::size_t prev = i == 0 ? 0 : i - 1;
            const std::size_t next = i + 1 == pts.size() ? i : i + 1;
            tangent = pts[next] - pts[prev];
        }
        traj.samples[i] = {times[i], pts[i].x(), pts[i].y(), std::atan2(tangent.y(), tangent.x())};
    }
    return traj;
}

} // namespace dynsplat

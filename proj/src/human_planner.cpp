#include "dynsplat/human_planner.hpp"

#include <random>

namespace dynsplat
{

std::string to_string(Interaction i) { return i == Interaction::Crossing ? "crossing" : "parallel"; }

Interaction interaction_from_string(const std::string& s)
{
    if (s == "crossing")
        return Interaction::Crossing;
    if (s == "parallel")
        return Interaction::Parallel;
    throw ConfigError("unknown interaction '" + s + "'");
}

namespace
{

double cross2(const Vec2d& a, const Vec2d& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace

bool segments_cross(const Vec2d& a0, const Vec2d& a1, const Vec2d& b0, const Vec2d& b1)
{
    const double d1 = cross2(a1 - a0, b0 - a0);
    const double d2 = cross2(a1 - a0, b1 - a0);
    const double d3 = cross2(b1 - b0, a0 - b0);
    const double d4 = cross2(b1 - b0, a1 - b0);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool is_parallel(const Vec2d& robot_start, const Vec2d& robot_goal, const Vec2d& start, const Vec2d& goal,
                 const InteractionRules& rules)
{
    const Vec2d r = robot_goal - robot_start;
    const Vec2d h = goal - start;
    if (r.norm() == 0.0 || h.norm() == 0.0)
        return false;
    const double c = std::min(1.0, std::abs(r.dot(h)) / (r.norm() * h.norm()));
    if (std::acos(c) > rules.parallel_max_angle)
        return false;
    const Vec2d n = r.normalized();
    const double o0 = cross2(n, start - robot_start);
    const double o1 = cross2(n, goal - robot_start);
    const auto in_band = [&](double o) {
        return std::abs(o) >= rules.parallel_min_offset && std::abs(o) <= rules.parallel_max_offset;
    };
    return in_band(o0) && in_band(o1) && (o0 > 0) == (o1 > 0);
}

bool satisfies_interaction(const Vec2d& robot_start, const Vec2d& robot_goal, const EndpointPair& pair,
                           const InteractionRules& rules)
{
    if (pair.interaction == Interaction::Crossing)
        return segments_cross(robot_start, robot_goal, pair.start, pair.goal);
    return is_parallel(robot_start, robot_goal, pair.start, pair.goal, rules);
}

EndpointPair sample_interaction_endpoints(const Vec2d& robot_start, const Vec2d& robot_goal,
                                          const OccupancyGrid2D& grid, std::uint64_t seed,
                                          std::optional<Interaction> kind, const InteractionRules& rules)
{
    if ((robot_goal - robot_start).norm() < 1.0)
        throw SamplingError("sample_interaction_endpoints: robot segment shorter than 1 m");
    std::vector<std::size_t> free_cells;
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        if (!grid.inflated[idx])
            free_cells.push_back(idx);
    if (free_cells.empty())
        throw SamplingError("sample_interaction_endpoints: no free space");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, free_cells.size() - 1);
    EndpointPair pair;
    pair.interaction = kind ? *kind : (std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? Interaction::Crossing
                                                                                          : Interaction::Parallel);
    const auto center = [&](std::size_t idx) {
        return grid.cell_center(static_cast<int>(idx % grid.width()), static_cast<int>(idx / grid.width()));
    };
    for (int draw = 0; draw < rules.max_draws; ++draw)
    {
        pair.start = center(free_cells[pick(rng)]);
        pair.goal = center(free_cells[pick(rng)]);
        if ((pair.goal - pair.start).norm() < rules.min_human_path)
            continue;
        if (satisfies_interaction(robot_start, robot_goal, pair, rules))
            return pair;
    }
    throw SamplingError("sample_interaction_endpoints: exhausted " + std::to_string(rules.max_draws) + " draws");
}

ClampedCubicSpline::ClampedCubicSpline(const Polyline2d& points) : values_(points)
{
    if (points.size() < 2)
        throw Error("spline needs at least two points");
    knots_.assign(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i)
    {
        const double d = (points[i] - points[i - 1]).norm();
        if (d <= 0.0)
            throw Error("spline points must be distinct");
        knots_[i] = knots_[i - 1] + d;
    }
    const std::size_t n = points.size();
    const Vec2d d0 = (points[1] - points[0]).normalized();
    const Vec2d dn = (points[n - 1] - points[n - 2]).normalized();

    // Tridiagonal system for the knot second derivatives M_i with clamped first derivatives.
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        h[i] = knots_[i + 1] - knots_[i];
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0);
    Polyline2d rhs(n, Vec2d::Zero());
    diag[0] = 2.0 * h[0];
    upper[0] = h[0];
    rhs[0] = 6.0 * ((points[1] - points[0]) / h[0] - d0);
    for (std::size_t i = 1; i + 1 < n; ++i)
    {
        lower[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = 6.0 * ((points[i + 1] - points[i]) / h[i] - (points[i] - points[i - 1]) / h[i - 1]);
    }
    lower[n - 1] = h[n - 2];
    diag[n - 1] = 2.0 * h[n - 2];
    rhs[n - 1] = 6.0 * (dn - (points[n - 1] - points[n - 2]) / h[n - 2]);

    // Thomas algorithm
    for (std::size_t i = 1; i < n; ++i)
    {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    second_.assign(n, Vec2d::Zero());
    second_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        second_[i] = (rhs[i] - upper[i] * second_[i + 1]) / diag[i];
}

Vec2d ClampedCubicSpline::operator()(double s) const
{
    s = std::clamp(s, 0.0, knots_.back());
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    i = std::min(i, knots_.size() - 2);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - s) / h;
    const double b = (s - knots_[i]) / h;
    return a * values_[i] + b * values_[i + 1] +
           ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * (h * h) / 6.0;
}

Polyline2d ClampedCubicSpline::sample(double step) const
{
    Polyline2d out;
    const auto n = static_cast<std::size_t>(std::ceil(length() / step));
    for (std::size_t k = 0; k < n; ++k)
        out.push_back((*this)(static_cast<double>(k) * step));
    out.push_back(values_.back());
    return out;
}

Polyline2d downsample_waypoints(const Polyline2d& seed, double spacing)
{
    Polyline2d out;
    if (seed.empty())
        return out;
    out.push_back(seed.front());
    for (std::size_t i = 1; i + 1 < seed.size(); ++i)
        if ((seed[i] - out.back()).norm() >= spacing)
            out.push_back(seed[i]);
    if (seed.size() > 1)
    {
        if (out.size() > 1 && (seed.back() - out.back()).norm() < spacing)
            out.back() = seed.back();
        else
            out.push_back(seed.back());
    }
    return out;
}

bool polyline_free(const OccupancyGrid2D& grid, const Polyline2d& line)
{
    if (line.empty())
        return true;
    if (!grid.is_free(line.front()))
        return false;
    const double step = grid.resolution / 2.0;
    for (std::size_t i = 1; i < line.size(); ++i)
    {
        const Vec2d a = line[i - 1], b = line[i];
        const double len = (b - a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int k = 1; k <= n; ++k)
            if (!grid.is_free(a + (b - a) * (double(k) / n)))
                return false;
    }
    return true;
}

namespace
{

// Elastic-band energy over interior waypoints: squared second differences plus a quadratic
// barrier on clearance below the barrier radius.
double band_energy(const Polyline2d& p, const OccupancyGrid2D& grid, const std::vector<double>& clearance,
                   const SmoothingOptions& opt)
{
    double e = 0.0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
    {
        e += (p[i - 1] - 2.0 * p[i] + p[i + 1]).squaredNorm();
        const double c = sample_field(grid, clearance, p[i]);
        if (c < opt.barrier_radius)
            e += opt.barrier_weight * (opt.barrier_radius - c) * (opt.barrier_radius - c);
    }
    return e;
}

Polyline2d band_gradient(const Polyline2d& p, const OccupancyGrid2D& grid, const std::vector<double>& clearance,
                         const SmoothingOptions& opt)
{
    const std::size_t n = p.size();
    Polyline2d grad(n, Vec2d::Zero());
    std::vector<Vec2d> d(n, Vec2d::Zero());
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = p[i - 1] - 2.0 * p[i] + p[i + 1];
    for (std::size_t i = 1; i + 1 < n; ++i)
    {
        Vec2d g = -4.0 * d[i];
        if (i >= 2)
            g += 2.0 * d[i - 1];
        if (i + 2 < n)
            g += 2.0 * d[i + 1];
        const double c = sample_field(grid, clearance, p[i]);
        if (c < opt.barrier_radius)
        {
            const double h = 0.5 * grid.resolution;
            const Vec2d dc((sample_field(grid, clearance, p[i] + Vec2d(h, 0)) -
                            sample_field(grid, clearance, p[i] - Vec2d(h, 0))) /
                               (2 * h),
                           (sample_field(grid, clearance, p[i] + Vec2d(0, h)) -
                            sample_field(grid, clearance, p[i] - Vec2d(0, h))) /
                               (2 * h));
            g += -2.0 * opt.barrier_weight * (opt.barrier_radius - c) * dc;
        }
        grad[i] = g;
    }
    return grad;
}

} // namespace

HumanTrajectory smooth_spline(const Polyline2d& seed, const OccupancyGrid2D& grid, double speed,
                              const SmoothingOptions& opt)
{
    if (seed.size() < 2)
        throw Error("smooth_spline: seed needs at least two points");
    const double step = speed * opt.frame_dt;
    const auto fallback = [&] {
        auto traj = time_parameterize(seed, speed, step);
        traj.smoothing_fallback = true;
        return traj;
    };
    if ((seed.back() - seed.front()).norm() < 1e-9)
        return fallback();

    Polyline2d way = downsample_waypoints(seed, opt.waypoint_spacing);
    if (way.size() >= 3)
    {
        const auto clearance = clearance_field(grid);
        double energy = band_energy(way, grid, clearance, opt);
        double alpha = 0.1;
        for (int it = 0; it < opt.iterations && alpha > 1e-6; ++it)
        {
            const auto grad = band_gradient(way, grid, clearance, opt);
            double gnorm = 0.0;
            for (const auto& g : grad)
                gnorm += g.squaredNorm();
            if (gnorm < 1e-16)
                break;
            for (;;)
            {
                Polyline2d trial = way;
                bool ok = true;
                for (std::size_t i = 1; i + 1 < trial.size() && ok; ++i)
                {
                    trial[i] -= alpha * grad[i];
                    ok = grid.is_free(trial[i]) && (trial[i] - trial[i - 1]).norm() > 1e-6;
                }
                const double e = ok ? band_energy(trial, grid, clearance, opt) : energy;
                if (ok && e < energy)
                {
                    way = std::move(trial);
                    energy = e;
                    alpha *= 1.5;
                    break;
                }
                alpha *= 0.5;
                if (alpha < 1e-6)
                    break;
            }
        }
    }

    const ClampedCubicSpline spline(way);
    const Polyline2d dense = spline.sample(std::min(0.02, grid.resolution / 4.0));
    if (!polyline_free(grid, dense))
        return fallback();
    auto traj = time_parameterize(dense, speed, step);
    Polyline2d sampled;
    for (const auto& s : traj.samples)
        sampled.push_back(s.position());
    if (!polyline_free(grid, sampled))
        return fallback();
    return traj;
}

} // namespace dynsplat

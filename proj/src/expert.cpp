#include "dynsplat/expert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <tuple>

namespace dynsplat
{

double point_polyline_distance(const Vec2d& p, const Polyline2d& line)
{
    if (line.empty())
        return std::numeric_limits<double>::infinity();
    if (line.size() == 1)
        return (p - line.front()).norm();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < line.size(); ++i)
        best = std::min(best, point_segment_distance<double>(p, line[i - 1], line[i]));
    return best;
}

std::vector<MotionPrimitive> build_motion_primitives(double v_max, double w_max, double duration)
{
    if (!(v_max > 0.0) || !(w_max > 0.0) || !(duration > 0.0))
        throw Error("build_motion_primitives: v_max, w_max and duration must be positive");
    std::vector<MotionPrimitive> out;
    for (double scale : {1.0 / 3.0, 2.0 / 3.0, 1.0})
        for (double steer : {1.0, 0.0, -1.0})
        {
            MotionPrimitive p;
            p.v = scale * v_max;
            p.w = steer * w_max;
            p.duration = duration;
            p.arc_length = p.v * duration;
            if (steer == 0.0)
                p.end_offset = {p.v * duration, 0.0, 0.0};
            else
            {
                const double wt = p.w * duration;
                p.end_offset = {(p.v / p.w) * std::sin(wt), (p.v / p.w) * (1.0 - std::cos(wt)), wt};
            }
            out.push_back(p);
        }
    return out;
}

double nearest_rank_percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw Error("percentile of an empty list");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::vector<Vec3d> filter_human_primitives(const Primitives& prims, double downsample_res)
{
    if (prims.empty())
        throw Error("filter_human_primitives: empty input");
    if (!(downsample_res > 0.0))
        throw Error("filter_human_primitives: downsample resolution must be positive");
    std::vector<double> traces(prims.size());
    for (std::size_t i = 0; i < prims.size(); ++i)
        traces[i] = prims[i].scale.squaredNorm(); // trace(R S^2 R^T) = sum of squared scales
    const double cutoff = nearest_rank_percentile(traces, 0.75);

    std::map<std::tuple<long, long, long>, std::pair<Vec3d, int>> voxels;
    for (std::size_t i = 0; i < prims.size(); ++i)
    {
        if (traces[i] > cutoff)
            continue;
        const Vec3d& m = prims[i].mean;
        const auto key = std::make_tuple(static_cast<long>(std::floor(m.x() / downsample_res)),
                                         static_cast<long>(std::floor(m.y() / downsample_res)),
                                         static_cast<long>(std::floor(m.z() / downsample_res)));
        auto& acc = voxels[key];
        if (acc.second == 0)
            acc.first = Vec3d::Zero();
        acc.first += m;
        acc.second += 1;
    }
    std::vector<Vec3d> out;
    out.reserve(voxels.size());
    for (const auto& [key, acc] : voxels)
        out.push_back(acc.first / acc.second);
    return out;
}

bool human_gate(std::span<const Vec3d> points, const CameraModel& camera, const Polyline2d& path_segment,
                double margin)
{
    for (const auto& p : points)
        if (camera.in_frustum(p) && point_polyline_distance(p.head<2>(), path_segment) <= margin)
            return true;
    return false;
}

OccupancyGrid2D update_navigable_map(const OccupancyGrid2D& base, std::span<const Vec3d> human_points,
                                     const Vec2d& velocity, const CameraModel& camera,
                                     const Polyline2d& path_segment, double safety_margin,
                                     const PredictionParams& params)
{
    if (human_points.empty() || !human_gate(human_points, camera, path_segment, safety_margin))
        return base;
    OccupancyGrid2D out = base;
    add_human_region(out, human_points, velocity, params);
    return out;
}

void add_human_region(OccupancyGrid2D& out, std::span<const Vec3d> human_points, const Vec2d& velocity,
                      const PredictionParams& params)
{
    if (human_points.empty())
        return;
    Vec2d centroid = Vec2d::Zero();
    for (const auto& p : human_points)
    {
        centroid += p.head<2>();
        if (const auto c = out.cell_of(p.head<2>()))
            out.set_occupied(c->x(), c->y());
    }
    centroid /= static_cast<double>(human_points.size());

    const Vec2d end = centroid + params.horizon * velocity;
    const double R = params.human_radius + params.safety_buffer;
    const Vec2d lo = centroid.cwiseMin(end) - Vec2d::Constant(R);
    const Vec2d hi = centroid.cwiseMax(end) + Vec2d::Constant(R);
    const int i0 = std::max(0, static_cast<int>(std::floor((lo.x() - out.origin.x()) / out.resolution)));
    const int j0 = std::max(0, static_cast<int>(std::floor((lo.y() - out.origin.y()) / out.resolution)));
    const int i1 = std::min(out.width() - 1, static_cast<int>(std::floor((hi.x() - out.origin.x()) / out.resolution)));
    const int j1 = std::min(out.height() - 1, static_cast<int>(std::floor((hi.y() - out.origin.y()) / out.resolution)));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            if (point_segment_distance<double>(out.cell_center(i, j), centroid, end) <= R)
                out.set_occupied(i, j);
}

bool should_replan(double elapsed_since_plan, double period, std::span<const Vec3d> human_points,
                   const Polyline2d& lookahead, double margin)
{
    if (elapsed_since_plan >= period)
        return true;
    for (const auto& p : human_points)
        if (point_polyline_distance(p.head<2>(), lookahead) < margin)
            return true;
    return false;
}

Polyline2d PlannedPath::positions() const
{
    Polyline2d out;
    out.reserve(states.size());
    for (const auto& s : states)
        out.push_back(s.position());
    return out;
}

std::vector<Pose2d> primitive_samples(const Pose2d& from, const MotionPrimitive& prim, double max_spacing)
{
    const int n = std::max(1, static_cast<int>(std::ceil(prim.arc_length / max_spacing)));
    std::vector<Pose2d> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k)
        out.push_back(integrate_unicycle(from, prim.v, prim.w, prim.duration * k / n));
    return out;
}

bool arc_free(const OccupancyGrid2D& grid, const Pose2d& from, double v, double w, double T)
{
    if (!grid.is_free(from.position()))
        return false;
    if (v == 0.0 || T <= 0.0)
        return true;
    const double res = grid.resolution;
    const Vec2d lo = grid.origin;
    const Vec2d hi = grid.origin + res * grid.dims.cast<double>();
    std::vector<double> cuts{0.0, T};
    const auto keep = [&](double t) {
        if (t > 0.0 && t < T)
            cuts.push_back(t);
    };
    // grid lines k with lo + k * res inside [a, b]
    const auto lines = [&](double a, double b, double o, double extent, auto&& f) {
        const double first = std::max(a, o), last = std::min(b, o + extent);
        for (auto k = static_cast<long>(std::ceil((first - o) / res)); o + k * res <= last; ++k)
            f(o + k * res);
    };

    if (w == 0.0)
    {
        const double dx = v * std::cos(from.theta), dy = v * std::sin(from.theta);
        const Vec2d end(from.x + dx * T, from.y + dy * T);
        if (dx != 0.0)
            lines(std::min(from.x, end.x()), std::max(from.x, end.x()), lo.x(), hi.x() - lo.x(),
                  [&](double X) { keep((X - from.x) / dx); });
        if (dy != 0.0)
            lines(std::min(from.y, end.y()), std::max(from.y, end.y()), lo.y(), hi.y() - lo.y(),
                  [&](double Y) { keep((Y - from.y) / dy); });
    }
    else
    {
        // x = cx + R sin(phi), y = cy - R cos(phi), phi = theta + w t
        const double R = v / w;
        const double cx = from.x - R * std::sin(from.theta);
        const double cy = from.y + R * std::cos(from.theta);
        const double pa = std::min(from.theta, from.theta + w * T), pb = std::max(from.theta, from.theta + w * T);
        const auto roots = [&](double base) {
            for (auto n = static_cast<long>(std::ceil((pa - base) / (2 * kPi))); base + 2 * kPi * n <= pb; ++n)
                keep((base + 2 * kPi * n - from.theta) / w);
        };
        const double r = std::abs(R);
        lines(cx - r, cx + r, lo.x(), hi.x() - lo.x(), [&](double X) {
            const double a = std::clamp((X - cx) / R, -1.0, 1.0);
            roots(std::asin(a));
            roots(kPi - std::asin(a));
        });
        lines(cy - r, cy + r, lo.y(), hi.y() - lo.y(), [&](double Y) {
            const double b = std::clamp((cy - Y) / R, -1.0, 1.0);
            roots(std::acos(b));
            roots(-std::acos(b));
        });
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 1; i < cuts.size(); ++i)
    {
        if (cuts[i] - cuts[i - 1] <= 0.0)
            continue;
        const Pose2d mid = integrate_unicycle(from, v, w, 0.5 * (cuts[i - 1] + cuts[i]));
        if (!grid.is_free(mid.position()))
            return false;
    }
    return grid.is_free(integrate_unicycle(from, v, w, T).position());
}

namespace
{

struct SearchNode
{
    Pose2d pose;
    double g = 0.0;
    double h = 0.0;
    std::int64_t parent = -1;
    int primitive = -1;
};

} // namespace

PlannedPath hybrid_astar(const RobotState& start, const Vec2d& goal, const OccupancyGrid2D& grid,
                         std::span<const MotionPrimitive> primitives, const HybridAStarOptions& opt)
{
    if (primitives.empty())
        throw Error("hybrid_astar: empty primitive set");
    if (!grid.is_free(start.position()))
        throw NoPathError("hybrid_astar: start pose is in collision");
    const auto goal_cell = grid.cell_of(goal);
    if (!goal_cell)
        throw NoPathError("hybrid_astar: goal outside the map");

    const auto steps = static_cast<int>(std::lround(primitives.front().duration / opt.control_dt));
    for (const auto& p : primitives)
        if (steps < 1 || std::abs(steps * opt.control_dt - p.duration) > 1e-9)
            throw Error("hybrid_astar: primitive duration must be a multiple of control_dt");

    const std::vector<double> hfield = distance_field(grid, *goal_cell);
    const auto heuristic = [&](const Pose2d& p) {
        const auto c = grid.cell_of(p.position());
        return c ? hfield[grid.index(c->x(), c->y())] : kUnreachable;
    };

    const double xy_bin = opt.xy_bin > 0.0 ? opt.xy_bin : grid.resolution;
    const int nx = static_cast<int>(std::ceil(grid.width() * grid.resolution / xy_bin));
    const int ny = static_cast<int>(std::ceil(grid.height() * grid.resolution / xy_bin));
    const int nt = std::max(1, opt.theta_bins);
    const auto bucket = [&](const Pose2d& p) -> std::size_t {
        const int ix = std::clamp(static_cast<int>(std::floor((p.x - grid.origin.x()) / xy_bin)), 0, nx - 1);
        const int iy = std::clamp(static_cast<int>(std::floor((p.y - grid.origin.y()) / xy_bin)), 0, ny - 1);
        int it = static_cast<int>(std::floor((wrap_angle(p.theta) + kPi) / (2.0 * kPi / nt)));
        it = ((it % nt) + nt) % nt;
        return (static_cast<std::size_t>(iy) * nx + ix) * nt + it;
    };
    std::vector<double> best_g(static_cast<std::size_t>(nx) * ny * nt, kUnreachable);
    std::vector<std::uint8_t> closed(best_g.size(), 0);

    std::vector<SearchNode> nodes;
    using Entry = std::tuple<double, double, std::uint64_t, std::size_t>; // f, h, order, node
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::uint64_t order = 0;

    SearchNode root;
    root.pose = start.pose();
    root.h = heuristic(root.pose);
    nodes.push_back(root);
    best_g[bucket(root.pose)] = 0.0;
    open.emplace(opt.weights.w_h * root.h, root.h, order++, 0);

    PlannedPath path;
    std::int64_t found = -1;
    while (!open.empty())
    {
        const auto [f, h, ord, id] = open.top();
        open.pop();
        const SearchNode node = nodes[id];
        const std::size_t b = bucket(node.pose);
        if (closed[b] && id != 0)
            continue;
        closed[b] = 1;
        ++path.stats.expanded;
        if ((node.pose.position() - goal).norm() <= opt.goal_tolerance)
        {
            found = static_cast<std::int64_t>(id);
            break;
        }
        for (std::size_t k = 0; k < primitives.size(); ++k)
        {
            const auto& prim = primitives[k];
            const Pose2d child = integrate_unicycle(node.pose, prim.v, prim.w, prim.duration);
            const std::size_t cb = bucket(child);
            if (closed[cb])
                continue;
            const double g = node.g + opt.weights.w_len * prim.arc_length +
                             opt.weights.w_steer * std::abs(prim.w) * prim.duration;
            if (g >= best_g[cb])
                continue;
            const double ch = heuristic(child);
            if (!std::isfinite(ch))
                continue;
            if (!arc_free(grid, node.pose, prim.v, prim.w, prim.duration))
                continue;
            best_g[cb] = g;
            nodes.push_back({child, g, ch, static_cast<std::int64_t>(id), static_cast<int>(k)});
            ++path.stats.generated;
            if (path.stats.generated > opt.node_budget)
                throw NoPathError("hybrid_astar: node budget exceeded");
            open.emplace(g + opt.weights.w_h * ch, ch, order++, nodes.size() - 1);
        }
    }
    path.stats.open_size = open.size();
    path.stats.closed_size = path.stats.expanded;
    if (found < 0)
        throw NoPathError("hybrid_astar: open set exhausted");

    for (std::int64_t i = found; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent)
        path.primitive_ids.push_back(static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)].primitive));
    std::reverse(path.primitive_ids.begin(), path.primitive_ids.end());
    path.cost = nodes[static_cast<std::size_t>(found)].g;
    path.dt = opt.control_dt;
    path.states.push_back(start);
    Pose2d cur = start.pose();
    for (auto k : path.primitive_ids)
    {
        const auto& prim = primitives[k];
        for (int s = 0; s < steps; ++s)
        {
            cur = integrate_unicycle(cur, prim.v, prim.w, opt.control_dt);
            path.actions.emplace_back(prim.v, prim.w);
            path.states.push_back(RobotState::from_pose(cur, prim.v, prim.w));
        }
    }
    return path;
}

std::string to_string(Outcome o)
{
    switch (o)
    {
    case Outcome::Success:
        return "success";
    case Outcome::Collision:
        return "collision";
    case Outcome::Timeout:
        return "timeout";
    case Outcome::PlanFailure:
        return "plan-failure";
    }
    return "unknown";
}

Outcome outcome_from_string(const std::string& s)
{
    if (s == "success")
        return Outcome::Success;
    if (s == "collision")
        return Outcome::Collision;
    if (s == "timeout")
        return Outcome::Timeout;
    if (s == "plan-failure")
        return Outcome::PlanFailure;
    throw FormatError("unknown outcome '" + s + "'");
}

bool robot_in_collision(const OccupancyGrid2D& robot_map, const Vec2d& position, std::span<const HumanActor> humans,
                        double t, double robot_radius)
{
    if (!robot_map.is_free(position))
        return true;
    for (const auto& h : humans)
        if ((h.root_xy(t) - position).norm() < robot_radius + h.model->radius)
            return true;
    return false;
}

namespace
{

struct HumanObservation
{
    std::vector<Vec3d> points;
    Vec2d velocity = Vec2d::Zero();
    bool tracked = false; // seen by the camera within the track memory
};

constexpr int kHorizonSteps = 8;

class ExpertLoop
{
public:
    ExpertLoop(const OccupancyGrid2D& map, std::span<const HumanActor> humans, const Vec2d& goal,
               const ExpertConfig& cfg, const TraceSink& trace, bool keep_maps)
        : base_(map), humans_(humans), goal_(goal), cfg_(cfg), trace_(trace), keep_maps_(keep_maps),
          prims_(build_motion_primitives(cfg.v_max, cfg.w_max, cfg.primitive_duration))
    {
        auto opts = cfg.search;
        opts.control_dt = cfg.control_dt;
        search_ = opts;
    }

    ExpertResult run(const Pose2d& start)
    {
        const double dt = cfg_.control_dt;
        const int steps_per_prim = static_cast<int>(std::lround(cfg_.primitive_duration / dt));
        ExpertResult result;
        result.executed.dt = dt;
        RobotState state = RobotState::from_pose(start);
        result.executed.states.push_back(state);
        double last_plan_t = 0.0;
        bool pending = false;

        for (long k = 0;; ++k)
        {
            const double t = static_cast<double>(k) * dt;
            for (const auto& h : humans_)
                result.min_human_clearance = std::min(result.min_human_clearance, (h.root_xy(t) - state.position()).norm());
            if (robot_in_collision(base_, state.position(), humans_, t, cfg_.robot_radius))
            {
                finish(result, Outcome::Collision, t, "robot footprint overlaps an obstacle");
                break;
            }
            if ((state.position() - goal_).norm() <= cfg_.success_tolerance)
            {
                finish(result, Outcome::Success, t, "");
                break;
            }
            if (t >= cfg_.time_limit - 1e-9)
            {
                finish(result, Outcome::Timeout, t, "time limit reached");
                break;
            }

            const CameraModel cam = camera_at(state);
            const auto obs = observe(t, cam);
            const auto tracked = tracked_points(obs);
            const Polyline2d look = lookahead();
            const bool triggered = !tracked.empty() &&
                                   should_replan(t - last_plan_t, cfg_.replan_period, tracked, look, cfg_.safety_margin);
            const bool boundary = k % steps_per_prim == 0;
            if (!boundary)
            {
                pending = pending || triggered;
            }
            else if (k == 0 || pending || triggered || plan_step_ >= plan_.actions.size())
            {
                try
                {
                    replan(state, t, obs, look);
                }
                catch (const NoPathError& e)
                {
                    finish(result, Outcome::PlanFailure, t, e.what());
                    break;
                }
                if (k != 0)
                {
                    ++result.replans;
                    result.executed.replanned_at.push_back(t);
                }
                result.plans.push_back(plan_);
                if (keep_maps_)
                    result.maps.push_back(last_map_);
                last_plan_t = t;
                pending = false;
            }

            const Vec2d action = plan_.actions[plan_step_++];
            const Pose2d next = integrate_unicycle(state.pose(), action.x(), action.y(), dt);
            state = RobotState::from_pose(next, action.x(), action.y());
            result.executed.actions.push_back(action);
            result.executed.states.push_back(state);
        }
        return result;
    }

private:
    void finish(ExpertResult& r, Outcome o, double t, std::string reason) const
    {
        r.outcome = o;
        r.reaching_time = t;
        r.reason = std::move(reason);
        if (trace_)
            trace_({{"event", "finish"}, {"t", t}, {"outcome", to_string(o)}, {"replans", r.replans}});
    }

    CameraModel camera_at(const RobotState& s) const
    {
        return robot_camera(s.pose(), cfg_.camera_height, cfg_.image_width, cfg_.image_height, cfg_.hfov);
    }

    std::vector<HumanObservation> observe(double t, const CameraModel& cam)
    {
        std::vector<HumanObservation> out;
        for (std::size_t i = 0; i < humans_.size(); ++i)
        {
            const auto& h = humans_[i];
            HumanObservation o;
            o.points = filter_human_primitives(h.primitives(t), cfg_.downsample_res);
            if (t >= cfg_.control_dt)
                o.velocity = (h.root_xy(t) - h.root_xy(t - cfg_.control_dt)) / cfg_.control_dt;
            if (std::any_of(o.points.begin(), o.points.end(), [&](const Vec3d& p) { return cam.in_frustum(p); }))
                last_seen_[i] = t;
            o.tracked = last_seen_[i] >= 0.0 && t - last_seen_[i] <= cfg_.track_memory + 1e-9;
            out.push_back(std::move(o));
        }
        return out;
    }

    // Observed points plus their constant-velocity extrapolation over the prediction horizon,
    // so a human walking toward the path counts as close before it gets there.
    std::vector<Vec3d> predicted_points(const HumanObservation& o) const
    {
        std::vector<Vec3d> out = o.points;
        const int n = static_cast<int>(std::ceil(cfg_.prediction.horizon / cfg_.primitive_duration - 1e-9));
        if (o.velocity.norm() < 1e-9)
            return out;
        for (int s = 1; s <= n; ++s)
        {
            const double tau = std::min(s * cfg_.primitive_duration, cfg_.prediction.horizon);
            const Vec3d shift(o.velocity.x() * tau, o.velocity.y() * tau, 0.0);
            for (const auto& p : o.points)
                out.push_back(p + shift);
        }
        return out;
    }

    std::vector<Vec3d> tracked_points(const std::vector<HumanObservation>& obs) const
    {
        std::vector<Vec3d> out;
        for (const auto& o : obs)
            if (o.tracked)
            {
                const auto p = predicted_points(o);
                out.insert(out.end(), p.begin(), p.end());
            }
        return out;
    }

    bool near_path(const HumanObservation& o, const Polyline2d& path) const
    {
        if (!o.tracked)
            return false;
        const auto pts = predicted_points(o);
        return std::any_of(pts.begin(), pts.end(), [&](const Vec3d& p) {
            return point_polyline_distance(p.head<2>(), path) < cfg_.safety_margin;
        });
    }

    Polyline2d lookahead() const
    {
        Polyline2d out;
        if (plan_step_ >= plan_.states.size())
            return out;
        const auto n = static_cast<std::size_t>(std::lround(cfg_.lookahead / cfg_.control_dt));
        for (std::size_t i = plan_step_; i < plan_.states.size() && i <= plan_step_ + n; ++i)
            out.push_back(plan_.states[i].position());
        return out;
    }

    Polyline2d lookahead_of(const PlannedPath& p) const
    {
        Polyline2d out;
        const auto n = static_cast<std::size_t>(std::lround(cfg_.lookahead / cfg_.control_dt));
        for (std::size_t i = 0; i < p.states.size() && i <= n; ++i)
            out.push_back(p.states[i].position());
        return out;
    }

    // Plans on the static map plus every gated human. A human that only becomes relevant for
    // the new plan's look-ahead is added in a second pass. When the predicted sweep covers the
    // robot, the horizon is shortened step by step before giving up.
    void replan(const RobotState& state, double t, const std::vector<HumanObservation>& obs,
                const Polyline2d& current_lookahead)
    {
        std::vector<bool> gated(obs.size(), false);
        for (std::size_t i = 0; i < obs.size(); ++i)
            gated[i] = near_path(obs[i], current_lookahead);

        std::string last_error;
        for (int step = 0; step <= kHorizonSteps; ++step)
        {
            const double horizon = cfg_.prediction.horizon * (kHorizonSteps - step) / kHorizonSteps;
            auto attempt = gated;
            for (int pass = 0; pass < 2; ++pass)
            {
                const auto map = build_map(obs, attempt, horizon);
                PlannedPath p;
                try
                {
                    p = hybrid_astar(state, goal_, map, prims_, search_);
                }
                catch (const NoPathError& e)
                {
                    last_error = e.what();
                    break;
                }
                bool added = false;
                const auto la = lookahead_of(p);
                for (std::size_t i = 0; i < obs.size(); ++i)
                    if (!attempt[i] && near_path(obs[i], la))
                        attempt[i] = added = true;
                if (!added || pass == 1)
                {
                    adopt(std::move(p), t, map);
                    return;
                }
            }
        }
        throw NoPathError(last_error.empty() ? "replanning failed" : last_error);
    }

    OccupancyGrid2D build_map(const std::vector<HumanObservation>& obs, const std::vector<bool>& gated,
                              double horizon) const
    {
        OccupancyGrid2D map = base_;
        auto params = cfg_.prediction;
        params.horizon = horizon;
        for (std::size_t i = 0; i < obs.size(); ++i)
            if (gated[i])
                add_human_region(map, obs[i].points, obs[i].velocity, params);
        return map;
    }

    void adopt(PlannedPath p, double t, const OccupancyGrid2D& map)
    {
        p.t0 = t;
        plan_ = std::move(p);
        plan_step_ = 0;
        if (keep_maps_)
            last_map_ = map;
        if (trace_)
            trace_({{"event", "plan"},
                    {"t", t},
                    {"cost", plan_.cost},
                    {"expanded", plan_.stats.expanded},
                    {"generated", plan_.stats.generated},
                    {"open", plan_.stats.open_size},
                    {"closed", plan_.stats.closed_size},
                    {"primitives", plan_.primitive_ids.size()}});
    }

    const OccupancyGrid2D& base_;
    std::span<const HumanActor> humans_;
    Vec2d goal_;
    const ExpertConfig& cfg_;
    const TraceSink& trace_;
    bool keep_maps_;
    std::vector<MotionPrimitive> prims_;
    HybridAStarOptions search_;
    PlannedPath plan_;
    std::size_t plan_step_ = 0;
    OccupancyGrid2D last_map_;
    std::vector<double> last_seen_ = std::vector<double>(humans_.size(), -1.0);
};

} // namespace

ExpertResult execute_expert(const OccupancyGrid2D& robot_map, std::span<const HumanActor> humans,
                            const Pose2d& start, const Vec2d& goal, const ExpertConfig& config,
                            const TraceSink& trace, bool keep_maps)
{
    if (!(config.control_dt > 0.0))
        throw ConfigError("control_dt must be positive");
    const double ratio = config.primitive_duration / config.control_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
        throw ConfigError("primitive_duration must be a multiple of control_dt");
    ExpertLoop loop(robot_map, humans, goal, config, trace, keep_maps);
    return loop.run(start);
}

} // namespace dynsplat

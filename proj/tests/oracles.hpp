#pragma once

// Brute-force reference implementations. None of these call into the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <array>
#include <queue>
#include <vector>

#include "dynsplat/camera.hpp"
#include "dynsplat/splat.hpp"
#include "dynsplat/voxel.hpp"

namespace dynsplat::oracle
{

// ---------------------------------------------------------------- voxels

enum class Verdict
{
    Hit,
    Miss,
    Ambiguous
};

struct Quadric
{
    Mat3d P;  // precision
    Vec3d mu;
    double lipschitz; // of sqrt(q): sqrt of the largest eigenvalue of P

    explicit Quadric(const GaussianPrimitive& g)
    {
        const Mat3d R = g.rotation.toRotationMatrix();
        Vec3d inv2;
        for (int a = 0; a < 3; ++a)
            inv2[a] = 1.0 / (g.scale[a] * g.scale[a]);
        P = R * inv2.asDiagonal() * R.transpose();
        mu = g.mean;
        lipschitz = std::sqrt(inv2.maxCoeff());
    }
    double q(const Vec3d& x) const { return (x - mu).dot(P * (x - mu)); }
};

/// Refine a box until a point inside the ellipsoid is found, the box is certified clear
/// (sqrt(q) at the center minus the Lipschitz bound over the half diagonal exceeds 1), or the
/// box is smaller than `tol`.
inline Verdict refine_box(const Quadric& Q, const Vec3d& lo, const Vec3d& hi, double tol, int depth = 0)
{
    const Vec3d c = 0.5 * (lo + hi);
    const double r = 0.5 * (hi - lo).norm();
    const double qc = Q.q(c);
    if (qc <= 1.0)
        return Verdict::Hit;
    if (std::sqrt(qc) - Q.lipschitz * r > 1.0)
        return Verdict::Miss;
    if (2.0 * r < tol || depth > 40)
        return Verdict::Ambiguous;
    bool ambiguous = false;
    for (int o = 0; o < 8; ++o)
    {
        Vec3d a, b;
        for (int k = 0; k < 3; ++k)
        {
            const bool upper = (o >> k) & 1;
            a[k] = upper ? c[k] : lo[k];
            b[k] = upper ? hi[k] : c[k];
        }
        const Verdict v = refine_box(Q, a, b, tol, depth + 1);
        if (v == Verdict::Hit)
            return Verdict::Hit;
        ambiguous |= v == Verdict::Ambiguous;
    }
    return ambiguous ? Verdict::Ambiguous : Verdict::Miss;
}

/// 11^3 lattice samples over the voxel (corners included). A miss is only accepted once every
/// lattice sub-cell is certified clear; otherwise the pair is ambiguous at the 1e-3 m scale.
inline Verdict dense_sample_voxel(const Quadric& Q, const Vec3d& lo, double res, double tol = 1e-3)
{
    constexpr int n = 11;
    const double h = res / (n - 1);
    for (int c = 0; c < n; ++c)
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a)
                if (Q.q(lo + h * Vec3d(a, b, c)) <= 1.0)
                    return Verdict::Hit;
    bool ambiguous = false;
    for (int c = 0; c < n - 1; ++c)
        for (int b = 0; b < n - 1; ++b)
            for (int a = 0; a < n - 1; ++a)
            {
                const Vec3d sl = lo + h * Vec3d(a, b, c);
                const Verdict v = refine_box(Q, sl, sl + Vec3d::Constant(h), tol);
                if (v == Verdict::Hit)
                    return Verdict::Hit;
                ambiguous |= v == Verdict::Ambiguous;
            }
    return ambiguous ? Verdict::Ambiguous : Verdict::Miss;
}

struct VoxelOracle
{
    std::vector<double> opacity;     // summed over certain hits
    std::vector<std::uint8_t> ambiguous;
};

/// Opacity per voxel of `grid` (only its geometry is used).
inline VoxelOracle voxel_oracle(const Primitives& prims, const VoxelGrid& grid)
{
    VoxelOracle out;
    out.opacity.assign(grid.size(), 0.0);
    out.ambiguous.assign(grid.size(), 0);
    for (const auto& g : prims)
    {
        const Quadric Q(g);
        // 1-sigma ellipsoid bounding box: half extent along axis a is sqrt(Sigma_aa)
        const Mat3d R = g.rotation.toRotationMatrix();
        const Mat3d S = R * g.scale.cwiseAbs2().asDiagonal() * R.transpose();
        Eigen::Vector3i i0, i1;
        for (int a = 0; a < 3; ++a)
        {
            const double e = std::sqrt(S(a, a));
            i0[a] = std::max(0, int(std::floor((g.mean[a] - e - grid.origin[a]) / grid.resolution)) - 1);
            i1[a] = std::min(grid.dims[a] - 1, int(std::floor((g.mean[a] + e - grid.origin[a]) / grid.resolution)) + 1);
        }
        for (int k = i0.z(); k <= i1.z(); ++k)
            for (int j = i0.y(); j <= i1.y(); ++j)
                for (int i = i0.x(); i <= i1.x(); ++i)
                {
                    const Vec3d lo = grid.origin + grid.resolution * Vec3d(i, j, k);
                    const std::size_t idx = std::size_t(i) + std::size_t(grid.dims.x()) * (j + std::size_t(grid.dims.y()) * k);
                    switch (dense_sample_voxel(Q, lo, grid.resolution))
                    {
                    case Verdict::Hit: out.opacity[idx] += g.opacity; break;
                    case Verdict::Ambiguous: out.ambiguous[idx] = 1; break;
                    case Verdict::Miss: break;
                    }
                }
    }
    return out;
}

// ---------------------------------------------------------------- 2D maps

/// Per-column scan: cell set when any voxel of the column with center z in [z_min, z_max] is set.
inline std::vector<std::uint8_t> column_scan(const VoxelGrid& g, double z_min, double z_max)
{
    std::vector<std::uint8_t> out(std::size_t(g.dims.x()) * g.dims.y(), 0);
    for (int j = 0; j < g.dims.y(); ++j)
        for (int i = 0; i < g.dims.x(); ++i)
            for (int k = 0; k < g.dims.z(); ++k)
            {
                const double zc = g.origin.z() + (k + 0.5) * g.resolution;
                if (zc < z_min || zc > z_max)
                    continue;
                if (g.occupied[std::size_t(i) + std::size_t(g.dims.x()) * (j + std::size_t(g.dims.y()) * k)])
                {
                    out[std::size_t(j) * g.dims.x() + i] = 1;
                    break;
                }
            }
    return out;
}

/// All pairs: a cell is inflated when some occupied cell center lies within radius (plus the
/// library's documented 1e-9 slack) of its center.
inline std::vector<std::uint8_t> all_pairs_inflation(const OccupancyGrid2D& g, double radius)
{
    std::vector<Vec2d> occ;
    for (int j = 0; j < g.height(); ++j)
        for (int i = 0; i < g.width(); ++i)
            if (g.occupied[std::size_t(j) * g.width() + i])
                occ.push_back(g.origin + g.resolution * Vec2d(i + 0.5, j + 0.5));
    std::vector<std::uint8_t> out(g.size(), 0);
    for (int j = 0; j < g.height(); ++j)
        for (int i = 0; i < g.width(); ++i)
        {
            const Vec2d c = g.origin + g.resolution * Vec2d(i + 0.5, j + 0.5);
            for (const auto& o : occ)
                if ((o - c).norm() <= radius + 1e-9)
                {
                    out[std::size_t(j) * g.width() + i] = 1;
                    break;
                }
        }
    return out;
}

/// Plain Dijkstra over 8-connected free cells, diagonals need both side cells free. Meters.
inline double dijkstra_cost(const OccupancyGrid2D& g, Eigen::Vector2i s, Eigen::Vector2i t)
{
    const auto free = [&](int i, int j) {
        return i >= 0 && j >= 0 && i < g.width() && j < g.height() && !g.inflated[std::size_t(j) * g.width() + i];
    };
    std::vector<double> d(g.size(), std::numeric_limits<double>::infinity());
    using E = std::pair<double, int>;
    std::priority_queue<E, std::vector<E>, std::greater<>> pq;
    d[std::size_t(s.y()) * g.width() + s.x()] = 0;
    pq.emplace(0.0, s.y() * g.width() + s.x());
    while (!pq.empty())
    {
        auto [dist, id] = pq.top();
        pq.pop();
        if (dist > d[std::size_t(id)])
            continue;
        const int i = id % g.width(), j = id / g.width();
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
            {
                if (!di && !dj)
                    continue;
                if (!free(i + di, j + dj))
                    continue;
                if (di && dj && !(free(i + di, j) && free(i, j + dj)))
                    continue;
                const double nd = dist + std::sqrt(double(di * di + dj * dj)) * g.resolution;
                const int nid = (j + dj) * g.width() + i + di;
                if (nd < d[std::size_t(nid)])
                {
                    d[std::size_t(nid)] = nd;
                    pq.emplace(nd, nid);
                }
            }
    }
    return d[std::size_t(t.y()) * g.width() + t.x()];
}

// ---------------------------------------------------------------- dynamic obstacles

/// Smallest list value v with #{x <= v} >= ceil(q * n).
inline double percentile_by_counting(const std::vector<double>& xs, double q)
{
    const double need = std::ceil(q * double(xs.size()));
    double best = std::numeric_limits<double>::infinity();
    for (double v : xs)
    {
        const auto le = std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= v; });
        if (double(le) >= need)
            best = std::min(best, v);
    }
    return best;
}

inline double seg_dist(const Vec2d& p, const Vec2d& a, const Vec2d& b)
{
    // closest point by parametrization, clamped by comparison with the endpoints
    const Vec2d d = b - a;
    const double L2 = d.squaredNorm();
    double best = std::min((p - a).norm(), (p - b).norm());
    if (L2 > 0.0)
    {
        const double t = (p - a).dot(d) / L2;
        if (t > 0.0 && t < 1.0)
            best = std::min(best, std::abs(d.x() * (p.y() - a.y()) - d.y() * (p.x() - a.x())) / std::sqrt(L2));
    }
    return best;
}

inline bool replan_oracle(double elapsed, double period, const std::vector<Vec3d>& pts, const Polyline2d& look,
                          double margin)
{
    if (elapsed >= period)
        return true;
    for (const auto& p : pts)
    {
        if (look.size() == 1 && (p.head<2>() - look[0]).norm() < margin)
            return true;
        for (std::size_t s = 0; s + 1 < look.size(); ++s)
            if (seg_dist(p.head<2>(), look[s], look[s + 1]) < margin)
                return true;
    }
    return false;
}

/// Cells a human adds: cells containing a point, plus cells whose center lies in the capsule
/// swept by a disk of radius R from the centroid c along c + horizon * velocity.
inline std::vector<std::uint8_t> swept_capsule_cells(const OccupancyGrid2D& g, const std::vector<Vec3d>& pts,
                                                     const Vec2d& velocity, double horizon, double R)
{
    std::vector<std::uint8_t> out(g.size(), 0);
    Vec2d c = Vec2d::Zero();
    for (const auto& p : pts)
    {
        c += p.head<2>();
        const int i = int(std::floor((p.x() - g.origin.x()) / g.resolution));
        const int j = int(std::floor((p.y() - g.origin.y()) / g.resolution));
        if (i >= 0 && j >= 0 && i < g.width() && j < g.height())
            out[std::size_t(j) * g.width() + i] = 1;
    }
    c /= double(pts.size());
    const Vec2d e = c + horizon * velocity;
    for (int j = 0; j < g.height(); ++j)
        for (int i = 0; i < g.width(); ++i)
        {
            const Vec2d x = g.origin + g.resolution * Vec2d(i + 0.5, j + 0.5);
            if (seg_dist(x, c, e) <= R)
                out[std::size_t(j) * g.width() + i] = 1;
        }
    return out;
}

// ---------------------------------------------------------------- primitive graph

struct ArcCmd
{
    double v, w, T;
};

/// Closed-form unicycle pose after time t of a constant (v, w) command.
inline Vec3d arc_pose(const Vec3d& p, double v, double w, double t)
{
    if (w == 0.0)
        return {p.x() + v * t * std::cos(p.z()), p.y() + v * t * std::sin(p.z()), p.z()};
    const double th = p.z() + w * t;
    return {p.x() + v / w * (std::sin(th) - std::sin(p.z())), p.y() - v / w * (std::cos(th) - std::cos(p.z())), th};
}

inline bool point_free(const OccupancyGrid2D& g, double x, double y)
{
    const int i = int(std::floor((x - g.origin.x()) / g.resolution));
    const int j = int(std::floor((y - g.origin.y()) / g.resolution));
    return i >= 0 && j >= 0 && i < g.width() && j < g.height() && !g.inflated[std::size_t(j) * g.width() + i];
}

/// Arc sampled every `spacing` meters (endpoints included) stays in free cells.
inline bool arc_free(const OccupancyGrid2D& g, const Vec3d& p, const ArcCmd& a, double spacing = 0.005)
{
    const int n = std::max(1, int(std::ceil(std::abs(a.v) * a.T / spacing)));
    for (int k = 0; k <= n; ++k)
    {
        const Vec3d q = arc_pose(p, a.v, a.w, a.T * k / n);
        if (!point_free(g, q.x(), q.y()))
            return false;
    }
    return true;
}

struct GraphOptimum
{
    bool found = false;
    double cost = std::numeric_limits<double>::infinity();
    int depth = 0;
    std::size_t visited = 0;
};

/// Cheapest primitive sequence of length <= max_depth ending within `tol` of the goal, every arc
/// collision-free. Depth-first enumeration; a branch is cut only when its cost plus w_len times
/// the remaining straight-line shortfall already reaches the best solution, or when the same
/// pose was reached before at no greater depth and cost.
inline GraphOptimum exhaustive_primitive_optimum(const OccupancyGrid2D& g, const Vec3d& start, const Vec2d& goal,
                                                 const std::vector<ArcCmd>& prims, double w_len, double w_steer,
                                                 double tol, int max_depth)
{
    GraphOptimum best;
    std::map<std::array<long long, 3>, std::vector<double>> seen_at; // per pose key: best cost by depth
    const auto key = [](const Vec3d& p) {
        const double th = std::remainder(p.z(), 2.0 * 3.14159265358979323846);
        return std::array<long long, 3>{std::llround(p.x() * 1e6), std::llround(p.y() * 1e6), std::llround(th * 1e6)};
    };
    const auto shortfall = [&](const Vec3d& p) { return std::max(0.0, (p.head<2>() - goal).norm() - tol); };
    std::function<void(const Vec3d&, double, int)> dfs = [&](const Vec3d& p, double cost, int depth) {
        ++best.visited;
        if ((p.head<2>() - goal).norm() <= tol)
        {
            if (cost < best.cost)
                best = {true, cost, depth, best.visited};
            return;
        }
        if (depth == max_depth)
            return;
        auto& rec = seen_at[key(p)];
        if (rec.empty())
            rec.assign(std::size_t(max_depth + 1), std::numeric_limits<double>::infinity());
        for (int d = 0; d <= depth; ++d)
            if (rec[std::size_t(d)] <= cost)
                return;
        rec[std::size_t(depth)] = cost;

        struct Child
        {
            Vec3d pose;
            double cost, bound;
            const ArcCmd* cmd;
        };
        std::vector<Child> kids;
        for (const auto& a : prims)
        {
            const Vec3d q = arc_pose(p, a.v, a.w, a.T);
            const double c = cost + w_len * std::abs(a.v) * a.T + w_steer * std::abs(a.w) * a.T;
            const double b = c + w_len * shortfall(q);
            if (b >= best.cost)
                continue;
            kids.push_back({q, c, b, &a});
        }
        std::sort(kids.begin(), kids.end(), [](const Child& x, const Child& y) { return x.bound < y.bound; });
        for (const auto& k : kids)
            if (k.bound < best.cost && arc_free(g, p, *k.cmd))
                dfs(k.pose, k.cost, depth + 1);
    };
    if (point_free(g, start.x(), start.y()))
        dfs(start, 0.0, 0);
    return best;
}

// ---------------------------------------------------------------- rendering

/// Per pixel, every primitive, sorted by camera depth, composited in double precision.
/// Same image model as the rasterizer: EWA projection with a 0.3 px^2 dilation and a 3-sigma cutoff.
inline std::vector<double> reference_render(const Primitives& prims, const CameraModel& cam, const Vec3d& bg)
{
    struct P2
    {
        double depth, opacity;
        Vec2d mu;
        Eigen::Matrix2d inv;
        Vec3d color;
    };
    std::vector<P2> proj;
    const Mat3d W = cam.pose.linear();
    for (const auto& g : prims)
    {
        const Vec3d t = cam.pose * g.mean;
        if (t.z() < cam.near_plane)
            continue;
        Eigen::Matrix<double, 2, 3> J;
        J << cam.fx / t.z(), 0, -cam.fx * t.x() / (t.z() * t.z()), 0, cam.fy / t.z(), -cam.fy * t.y() / (t.z() * t.z());
        const Mat3d R = g.rotation.toRotationMatrix();
        const Mat3d S = R * g.scale.cwiseAbs2().asDiagonal() * R.transpose();
        Eigen::Matrix2d C = J * W * S * W.transpose() * J.transpose();
        C(0, 0) += 0.3;
        C(1, 1) += 0.3;
        C(0, 1) = C(1, 0) = 0.5 * (C(0, 1) + C(1, 0));
        if (!(C.determinant() > 0))
            continue;
        proj.push_back({t.z(), g.opacity, Vec2d(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy),
                        C.inverse(), g.color});
    }
    std::vector<double> img(std::size_t(cam.width) * cam.height * 3);
    std::vector<const P2*> order;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
        {
            order.clear();
            for (const auto& p : proj)
                order.push_back(&p);
            std::stable_sort(order.begin(), order.end(), [](const P2* a, const P2* b) { return a->depth < b->depth; });
            double T = 1;
            Vec3d C = Vec3d::Zero();
            for (const P2* p : order)
            {
                const Vec2d d = Vec2d(x, y) - p->mu;
                const double m = d.dot(p->inv * d);
                if (m > 9.0)
                    continue;
                const double a = p->opacity * std::exp(-0.5 * m);
                C += T * a * p->color;
                T *= 1 - a;
            }
            C += T * bg;
            for (int k = 0; k < 3; ++k)
                img[(std::size_t(y) * cam.width + x) * 3 + k] = C[k];
        }
    return img;
}

} // namespace dynsplat::oracle

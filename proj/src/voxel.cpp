#include "dynsplat/voxel.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace dynsplat
{

OccupancyGrid2D::OccupancyGrid2D(const Vec2d& origin_, double resolution_, const Eigen::Vector2i& dims_, MapKind kind_)
    : origin(origin_), resolution(resolution_), dims(dims_), kind(kind_)
{
    if (dims.x() <= 0 || dims.y() <= 0 || resolution <= 0.0)
        throw Error("occupancy grid needs positive dims and resolution");
    occupied.assign(size(), 0);
    inflated.assign(size(), 0);
}

std::optional<Eigen::Vector2i> OccupancyGrid2D::cell_of(const Vec2d& p) const
{
    const Vec2d q = (p - origin) / resolution;
    const int i = static_cast<int>(std::floor(q.x()));
    const int j = static_cast<int>(std::floor(q.y()));
    if (!in_bounds(i, j))
        return std::nullopt;
    return Eigen::Vector2i(i, j);
}

bool OccupancyGrid2D::is_free(const Vec2d& p) const
{
    const auto c = cell_of(p);
    return c && !is_inflated(c->x(), c->y());
}

std::size_t OccupancyGrid2D::count_occupied() const
{
    std::size_t n = 0;
    for (auto v : occupied)
        n += v;
    return n;
}

std::size_t OccupancyGrid2D::count_inflated() const
{
    std::size_t n = 0;
    for (auto v : inflated)
        n += v;
    return n;
}

double box_min_quadratic(const Mat3d& P, const Vec3d& mean, const Vec3d& lo, const Vec3d& hi)
{
    const Vec3d a = lo - mean;
    const Vec3d b = hi - mean;
    if ((a.array() <= 0.0).all() && (b.array() >= 0.0).all())
        return 0.0;

    // The minimizer of a convex quadratic over a box lies in the relative interior of exactly
    // one face (3D interior excluded above). Enumerate each face: fix the bound coordinates,
    // solve the unconstrained problem in the free ones and keep feasible candidates.
    constexpr double tol = 1e-12;
    double best = std::numeric_limits<double>::infinity();
    for (int code = 0; code < 27; ++code)
    {
        std::array<int, 3> status{code % 3, (code / 3) % 3, code / 9}; // 0 free, 1 lower, 2 upper
        if (status[0] == 0 && status[1] == 0 && status[2] == 0)
            continue;
        Vec3d d = Vec3d::Zero();
        std::array<int, 3> free_idx{};
        int nfree = 0;
        for (int i = 0; i < 3; ++i)
        {
            if (status[i] == 1)
                d[i] = a[i];
            else if (status[i] == 2)
                d[i] = b[i];
            else
                free_idx[nfree++] = i;
        }
        if (nfree > 0)
        {
            // P_UU d_U = -P_UF d_F, with d_U initially zero so P*d only carries fixed terms.
            const Vec3d rhs_full = -(P * d);
            bool feasible = true;
            if (nfree == 1)
            {
                const int u = free_idx[0];
                d[u] = rhs_full[u] / P(u, u);
            }
            else
            {
                const int u = free_idx[0], w = free_idx[1];
                Eigen::Matrix2d M;
                M << P(u, u), P(u, w), P(w, u), P(w, w);
                const Eigen::Vector2d s = M.ldlt().solve(Eigen::Vector2d(rhs_full[u], rhs_full[w]));
                d[u] = s[0];
                d[w] = s[1];
            }
            for (int k = 0; k < nfree; ++k)
            {
                const int i = free_idx[k];
                if (d[i] < a[i] - tol || d[i] > b[i] + tol)
                    feasible = false;
                d[i] = std::clamp(d[i], a[i], b[i]);
            }
            if (!feasible)
                continue;
        }
        best = std::min(best, d.dot(P * d));
    }
    return best;
}

bool box_intersects_ellipsoid(const Mat3d& P, const Vec3d& mean, const Vec3d& lo, const Vec3d& hi)
{
    const Vec3d c = 0.5 * (lo + hi) - mean;
    if (c.dot(P * c) <= 1.0)
        return true;
    return box_min_quadratic(P, mean, lo, hi) <= 1.0;
}

VoxelGrid voxelize(const SplatScene& scene, double resolution, double opacity_threshold)
{
    if (scene.primitives.empty())
        throw Error("voxelize: empty scene");
    if (!(resolution > 0.0))
        throw Error("voxelize: resolution must be positive");
    if (opacity_threshold < 0.0)
        throw Error("voxelize: opacity threshold must be non-negative");

    Vec3d lo = Vec3d::Constant(std::numeric_limits<double>::infinity());
    Vec3d hi = -lo;
    std::vector<Vec3d> half(scene.primitives.size());
    for (std::size_t n = 0; n < scene.primitives.size(); ++n)
    {
        const auto& g = scene.primitives[n];
        half[n] = ellipsoid_half_extents(g);
        lo = lo.cwiseMin(g.mean - half[n]);
        hi = hi.cwiseMax(g.mean + half[n]);
    }

    VoxelGrid grid;
    grid.resolution = resolution;
    grid.opacity_threshold = opacity_threshold;
    grid.origin = lo - Vec3d::Constant(resolution);
    for (int a = 0; a < 3; ++a)
        grid.dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / resolution)) + 2;
    grid.opacity_sum.assign(grid.size(), 0.0);
    grid.occupied.assign(grid.size(), 0);

    for (std::size_t n = 0; n < scene.primitives.size(); ++n)
    {
        const auto& g = scene.primitives[n];
        const Mat3d P = g.precision();
        Eigen::Vector3i i0, i1;
        for (int a = 0; a < 3; ++a)
        {
            i0[a] = std::max(0, static_cast<int>(std::floor((g.mean[a] - half[n][a] - grid.origin[a]) / resolution)));
            i1[a] = std::min(grid.dims[a] - 1,
                             static_cast<int>(std::floor((g.mean[a] + half[n][a] - grid.origin[a]) / resolution)));
        }
        for (int k = i0.z(); k <= i1.z(); ++k)
            for (int j = i0.y(); j <= i1.y(); ++j)
                for (int i = i0.x(); i <= i1.x(); ++i)
                {
                    const Vec3d vlo = grid.voxel_min(i, j, k);
                    if (box_intersects_ellipsoid(P, g.mean, vlo, vlo + Vec3d::Constant(resolution)))
                        grid.opacity_sum[grid.index(i, j, k)] += g.opacity;
                }
    }
    for (std::size_t v = 0; v < grid.size(); ++v)
        grid.occupied[v] = grid.opacity_sum[v] > opacity_threshold ? 1 : 0;
    return grid;
}

OccupancyGrid2D project_occupancy(const VoxelGrid& grid, double z_min, double z_max, MapKind kind)
{
    if (!(z_min < z_max))
        throw Error("project_occupancy: z_min must be below z_max");
    int k0 = grid.dims.z(), k1 = -1;
    for (int k = 0; k < grid.dims.z(); ++k)
    {
        const double zc = grid.origin.z() + (k + 0.5) * grid.resolution;
        if (zc >= z_min && zc <= z_max)
        {
            k0 = std::min(k0, k);
            k1 = std::max(k1, k);
        }
    }
    if (k1 < k0)
        throw Error("project_occupancy: height range does not overlap the voxel grid");

    OccupancyGrid2D out(grid.origin.head<2>(), grid.resolution, grid.dims.head<2>(), kind);
    for (int k = k0; k <= k1; ++k)
        for (int j = 0; j < grid.dims.y(); ++j)
            for (int i = 0; i < grid.dims.x(); ++i)
                if (grid.is_occupied(i, j, k))
                    out.set_occupied(i, j);
    return out;
}

OccupancyGrid2D inflate(const OccupancyGrid2D& grid, double radius)
{
    if (radius < 0.0)
        throw Error("inflate: radius must be non-negative");
    OccupancyGrid2D out = grid;
    out.inflation_radius = radius;
    out.inflated = out.occupied;

    const double r = radius + kInflationSlack;
    const int reach = static_cast<int>(std::floor(r / grid.resolution));
    std::vector<Eigen::Vector2i> offsets;
    for (int dj = -reach; dj <= reach; ++dj)
        for (int di = -reach; di <= reach; ++di)
        {
            const double d2 = (double(di) * di + double(dj) * dj) * grid.resolution * grid.resolution;
            if ((di != 0 || dj != 0) && d2 <= r * r)
                offsets.emplace_back(di, dj);
        }
    for (int j = 0; j < grid.height(); ++j)
        for (int i = 0; i < grid.width(); ++i)
        {
            if (!grid.is_occupied(i, j))
                continue;
            for (const auto& o : offsets)
            {
                const int ii = i + o.x(), jj = j + o.y();
                if (out.in_bounds(ii, jj))
                    out.inflated[out.index(ii, jj)] = 1;
            }
        }
    return out;
}

void write_pgm(const OccupancyGrid2D& grid, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
    for (int j = grid.height() - 1; j >= 0; --j)
        for (int i = 0; i < grid.width(); ++i)
        {
            const unsigned char v = grid.is_occupied(i, j) ? 0 : grid.is_inflated(i, j) ? 128 : 255;
            out.put(static_cast<char>(v));
        }
    if (!out)
        throw IoError("write failed for " + path.string());
}

void write_pgm_slices(const VoxelGrid& grid, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (int k = 0; k < grid.dims.z(); ++k)
    {
        const auto path = dir / ("z" + std::to_string(k) + ".pgm");
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << "P5\n" << grid.dims.x() << " " << grid.dims.y() << "\n255\n";
        for (int j = grid.dims.y() - 1; j >= 0; --j)
            for (int i = 0; i < grid.dims.x(); ++i)
                out.put(static_cast<char>(grid.is_occupied(i, j, k) ? 0 : 255));
    }
}

} // namespace dynsplat

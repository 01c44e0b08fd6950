#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dynsplat/splat.hpp"

namespace dynsplat
{

/// Dense 3D grid of accumulated Gaussian opacity. Voxel (i,j,k) spans
/// origin + [i,i+1) * resolution along each axis.
struct VoxelGrid
{
    Vec3d origin = Vec3d::Zero();
    double resolution = 0.1;
    Eigen::Vector3i dims = Eigen::Vector3i::Zero();
    double opacity_threshold = 0.0;
    std::vector<double> opacity_sum;
    std::vector<std::uint8_t> occupied;

    std::size_t index(int i, int j, int k) const
    {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.x()) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims.y()) * k);
    }
    bool is_occupied(int i, int j, int k) const { return occupied[index(i, j, k)] != 0; }
    Vec3d voxel_min(int i, int j, int k) const { return origin + resolution * Vec3d(i, j, k); }
    Vec3d voxel_center(int i, int j, int k) const { return origin + resolution * Vec3d(i + 0.5, j + 0.5, k + 0.5); }
    std::size_t size() const { return static_cast<std::size_t>(dims.prod()); }
};

enum class MapKind
{
    RobotNavigable,
    HumanWalkable
};

/// 2D occupancy. `inflated` is the planning-space map (occupied dilated by a safety radius).
struct OccupancyGrid2D
{
    Vec2d origin = Vec2d::Zero();
    double resolution = 0.1;
    Eigen::Vector2i dims = Eigen::Vector2i::Zero();
    std::vector<std::uint8_t> occupied;
    std::vector<std::uint8_t> inflated;
    MapKind kind = MapKind::RobotNavigable;
    double inflation_radius = 0.0;

    OccupancyGrid2D() = default;
    OccupancyGrid2D(const Vec2d& origin, double resolution, const Eigen::Vector2i& dims, MapKind kind);

    int width() const { return dims.x(); }
    int height() const { return dims.y(); }
    std::size_t size() const { return static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * dims.x() + i; }
    bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < dims.x() && j < dims.y(); }

    Vec2d cell_center(int i, int j) const { return origin + resolution * Vec2d(i + 0.5, j + 0.5); }
    std::optional<Eigen::Vector2i> cell_of(const Vec2d& p) const;

    bool is_occupied(int i, int j) const { return occupied[index(i, j)] != 0; }
    bool is_inflated(int i, int j) const { return inflated[index(i, j)] != 0; }

    /// Planning-space free test; anything outside the grid counts as blocked.
    bool is_free(const Vec2d& p) const;
    bool cell_free(int i, int j) const { return in_bounds(i, j) && !is_inflated(i, j); }

    void set_occupied(int i, int j)
    {
        occupied[index(i, j)] = 1;
        inflated[index(i, j)] = 1;
    }

    std::size_t count_occupied() const;
    std::size_t count_inflated() const;
};

/// Accumulate every primitive's opacity into each voxel its 1-sigma ellipsoid touches.
VoxelGrid voxelize(const SplatScene& scene, double resolution, double opacity_threshold);

/// Exact test whether the box [lo, hi] meets {x : (x-mean)^T P (x-mean) <= 1}.
bool box_intersects_ellipsoid(const Mat3d& precision, const Vec3d& mean, const Vec3d& lo, const Vec3d& hi);

/// Minimum of (x-mean)^T P (x-mean) over the box [lo, hi].
double box_min_quadratic(const Mat3d& precision, const Vec3d& mean, const Vec3d& lo, const Vec3d& hi);

/// Column-wise OR over voxels whose center z lies in [z_min, z_max].
OccupancyGrid2D project_occupancy(const VoxelGrid& grid, double z_min, double z_max, MapKind kind);

/// Recompute `inflated` as all cells whose center lies within `radius` of an occupied cell center.
OccupancyGrid2D inflate(const OccupancyGrid2D& grid, double radius);

/// Absolute slack applied to the inflation distance comparison (m).
inline constexpr double kInflationSlack = 1e-9;

// Debug dumps (binary PGM, +y up).
void write_pgm(const OccupancyGrid2D& grid, const std::filesystem::path& path);
void write_pgm_slices(const VoxelGrid& grid, const std::filesystem::path& dir);

} // namespace dynsplat

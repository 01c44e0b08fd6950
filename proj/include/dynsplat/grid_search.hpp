#pragma once

#include <limits>
#include <vector>

#include "dynsplat/voxel.hpp"

namespace dynsplat
{

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct GridPath
{
    std::vector<Eigen::Vector2i> cells;
    Polyline2d points; ///< cell centers
    double cost = 0.0; ///< meters
};

/// 8-connected A* over free (non-inflated) cells with Euclidean step costs and heuristic.
/// Diagonal moves require both side-neighbors free, so the polyline never clips a blocked corner.
GridPath astar_2d(const OccupancyGrid2D& grid, const Vec2d& start, const Vec2d& goal);

/// True when no blocked (inflated or out-of-map) cell comes within `radius` of p.
bool disk_free(const OccupancyGrid2D& grid, const Vec2d& p, double radius);

/// Dijkstra distance (m) from `source` through free cells, same move set as astar_2d.
/// The source cell is seeded even when blocked.
std::vector<double> distance_field(const OccupancyGrid2D& grid, const Eigen::Vector2i& source);

/// Chamfer distance (m) from every cell center to the nearest blocked (inflated) cell.
std::vector<double> clearance_field(const OccupancyGrid2D& grid);

/// Bilinear lookup of a per-cell field at a world point (clamped at the border).
double sample_field(const OccupancyGrid2D& grid, const std::vector<double>& field, const Vec2d& p);

} // namespace dynsplat

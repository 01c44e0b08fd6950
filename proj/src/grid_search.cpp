#include "dynsplat/grid_search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <tuple>

namespace dynsplat
{
namespace
{

struct Move
{
    int di, dj;
    double len;
};
constexpr double kSqrt2 = 1.4142135623730951;
constexpr std::array<Move, 8> kMoves = {{{1, 0, 1.0},
                                         {-1, 0, 1.0},
                                         {0, 1, 1.0},
                                         {0, -1, 1.0},
                                         {1, 1, kSqrt2},
                                         {1, -1, kSqrt2},
                                         {-1, 1, kSqrt2},
                                         {-1, -1, kSqrt2}}};

bool move_allowed(const OccupancyGrid2D& g, int i, int j, const Move& m)
{
    const int ii = i + m.di, jj = j + m.dj;
    if (!g.cell_free(ii, jj))
        return false;
    if (m.di != 0 && m.dj != 0)
        return g.cell_free(i + m.di, j) && g.cell_free(i, j + m.dj);
    return true;
}

// Min-heap entry ordered by (f, h, insertion order).
using HeapEntry = std::tuple<double, double, std::uint64_t, std::size_t>;

} // namespace

GridPath astar_2d(const OccupancyGrid2D& grid, const Vec2d& start, const Vec2d& goal)
{
    const auto sc = grid.cell_of(start);
    const auto gc = grid.cell_of(goal);
    if (!sc || !gc || !grid.cell_free(sc->x(), sc->y()) || !grid.cell_free(gc->x(), gc->y()))
        throw NoPathError("astar_2d: start or goal is not in free space");

    const std::size_t n = grid.size();
    std::vector<double> g(n, kUnreachable);
    std::vector<std::int64_t> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    const auto h = [&](int i, int j) { return std::hypot(double(i - gc->x()), double(j - gc->y())); };

    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> open;
    std::uint64_t counter = 0;
    const std::size_t s_idx = grid.index(sc->x(), sc->y());
    const std::size_t g_idx = grid.index(gc->x(), gc->y());
    g[s_idx] = 0.0;
    open.emplace(h(sc->x(), sc->y()), h(sc->x(), sc->y()), counter++, s_idx);
    while (!open.empty())
    {
        const auto [f, hh, order, idx] = open.top();
        open.pop();
        if (closed[idx])
            continue;
        closed[idx] = 1;
        if (idx == g_idx)
            break;
        const int i = static_cast<int>(idx % grid.width());
        const int j = static_cast<int>(idx / grid.width());
        for (const auto& m : kMoves)
        {
            if (!move_allowed(grid, i, j, m))
                continue;
            const std::size_t nidx = grid.index(i + m.di, j + m.dj);
            const double ng = g[idx] + m.len;
            if (closed[nidx] || ng >= g[nidx])
                continue;
            g[nidx] = ng;
            parent[nidx] = static_cast<std::int64_t>(idx);
            const double nh = h(i + m.di, j + m.dj);
            open.emplace(ng + nh, nh, counter++, nidx);
        }
    }
    if (!closed[g_idx])
        throw NoPathError("astar_2d: goal unreachable");

    GridPath path;
    for (std::int64_t idx = static_cast<std::int64_t>(g_idx); idx >= 0; idx = parent[static_cast<std::size_t>(idx)])
    {
        const int i = static_cast<int>(idx % grid.width());
        const int j = static_cast<int>(idx / grid.width());
        path.cells.emplace_back(i, j);
    }
    std::reverse(path.cells.begin(), path.cells.end());
    for (const auto& c : path.cells)
        path.points.push_back(grid.cell_center(c.x(), c.y()));
    path.cost = g[g_idx] * grid.resolution;
    return path;
}

std::vector<double> distance_field(const OccupancyGrid2D& grid, const Eigen::Vector2i& source)
{
    std::vector<double> dist(grid.size(), kUnreachable);
    if (!grid.in_bounds(source.x(), source.y()))
        return dist;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const std::size_t s = grid.index(source.x(), source.y());
    dist[s] = 0.0;
    open.emplace(0.0, s);
    while (!open.empty())
    {
        const auto [d, idx] = open.top();
        open.pop();
        if (d > dist[idx])
            continue;
        const int i = static_cast<int>(idx % grid.width());
        const int j = static_cast<int>(idx / grid.width());
        for (const auto& m : kMoves)
        {
            if (!move_allowed(grid, i, j, m))
                continue;
            const std::size_t nidx = grid.index(i + m.di, j + m.dj);
            const double nd = d + m.len * grid.resolution;
            if (nd < dist[nidx])
            {
                dist[nidx] = nd;
                open.emplace(nd, nidx);
            }
        }
    }
    return dist;
}

std::vector<double> clearance_field(const OccupancyGrid2D& grid)
{
    std::vector<double> dist(grid.size(), kUnreachable);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        if (grid.inflated[idx])
        {
            dist[idx] = 0.0;
            open.emplace(0.0, idx);
        }
    while (!open.empty())
    {
        const auto [d, idx] = open.top();
        open.pop();
        if (d > dist[idx])
            continue;
        const int i = static_cast<int>(idx % grid.width());
        const int j = static_cast<int>(idx / grid.width());
        for (const auto& m : kMoves)
        {
            if (!grid.in_bounds(i + m.di, j + m.dj))
                continue;
            const std::size_t nidx = grid.index(i + m.di, j + m.dj);
            const double nd = d + m.len * grid.resolution;
            if (nd < dist[nidx])
            {
                dist[nidx] = nd;
                open.emplace(nd, nidx);
            }
        }
    }
    return dist;
}

double sample_field(const OccupancyGrid2D& grid, const std::vector<double>& field, const Vec2d& p)
{
    const Vec2d q = (p - grid.origin) / grid.resolution - Vec2d(0.5, 0.5);
    const double fx = std::clamp(q.x(), 0.0, double(grid.width() - 1));
    const double fy = std::clamp(q.y(), 0.0, double(grid.height() - 1));
    const int i0 = std::min(static_cast<int>(fx), grid.width() - 1);
    const int j0 = std::min(static_cast<int>(fy), grid.height() - 1);
    const int i1 = std::min(i0 + 1, grid.width() - 1);
    const int j1 = std::min(j0 + 1, grid.height() - 1);
    const double u = fx - i0, v = fy - j0;
    return (1 - u) * (1 - v) * field[grid.index(i0, j0)] + u * (1 - v) * field[grid.index(i1, j0)] +
           (1 - u) * v * field[grid.index(i0, j1)] + u * v * field[grid.index(i1, j1)];
}

bool disk_free(const OccupancyGrid2D& grid, const Vec2d& p, double radius)
{
    const Vec2d lo = (p - grid.origin).array() / grid.resolution - radius / grid.resolution;
    const Vec2d hi = (p - grid.origin).array() / grid.resolution + radius / grid.resolution;
    for (int j = static_cast<int>(std::floor(lo.y())); j <= static_cast<int>(std::floor(hi.y())); ++j)
        for (int i = static_cast<int>(std::floor(lo.x())); i <= static_cast<int>(std::floor(hi.x())); ++i)
        {
            if (grid.cell_free(i, j))
                continue;
            const Vec2d cmin = grid.origin + grid.resolution * Vec2d(i, j);
            const Vec2d nearest = p.cwiseMax(cmin).cwiseMin(cmin + Vec2d::Constant(grid.resolution));
            if ((nearest - p).norm() <= radius)
                return false;
        }
    return true;
}

} // namespace dynsplat

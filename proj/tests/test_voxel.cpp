#include <gtest/gtest.h>

#include "dynsplat/voxel.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace dynsplat;
namespace tu = dynsplat::testing;

namespace
{

SplatScene one_gaussian(double opacity)
{
    GaussianPrimitive g;
    g.mean = Vec3d::Zero();
    g.scale = Vec3d::Constant(0.1);
    g.opacity = opacity;
    return {"one", 0.0, {g}};
}

Primitives random_prims(std::mt19937_64& rng, int n, double extent = 3.0)
{
    Primitives p;
    for (int i = 0; i < n; ++i)
        p.push_back(tu::random_gaussian(rng, Vec3d::Zero(), Vec3d::Constant(extent), 0.03, 0.4));
    return p;
}

VoxelGrid random_voxels(std::mt19937_64& rng, Eigen::Vector3i dims, double fill)
{
    VoxelGrid g;
    g.origin = Vec3d(tu::uniform(rng, -1, 1), tu::uniform(rng, -1, 1), tu::uniform(rng, -0.3, 0.3));
    g.resolution = 0.1;
    g.dims = dims;
    g.opacity_sum.assign(g.size(), 0.0);
    g.occupied.assign(g.size(), 0);
    std::bernoulli_distribution b(fill);
    for (auto& v : g.occupied)
        v = b(rng);
    return g;
}

} // namespace

TEST(Voxelize, SmallGaussianFillsOneVoxel)
{
    const auto g = voxelize(one_gaussian(0.9), 0.5, 0.1);
    ASSERT_EQ(std::count(g.occupied.begin(), g.occupied.end(), 1), 1);
    for (int k = 0; k < g.dims.z(); ++k)
        for (int j = 0; j < g.dims.y(); ++j)
            for (int i = 0; i < g.dims.x(); ++i)
                if (g.is_occupied(i, j, k))
                {
                    const Vec3d lo = g.voxel_min(i, j, k);
                    EXPECT_TRUE((lo.array() <= 0.0).all() && ((lo.array() + 0.5) > 0.0).all());
                }
}

TEST(Voxelize, BelowThresholdIsEmpty)
{
    const auto g = voxelize(one_gaussian(0.05), 0.5, 0.1);
    EXPECT_EQ(std::count(g.occupied.begin(), g.occupied.end(), 1), 0);
}

TEST(Voxelize, Errors)
{
    EXPECT_THROW(voxelize(SplatScene{}, 0.1, 0.1), Error);
    EXPECT_THROW(voxelize(one_gaussian(0.5), 0.0, 0.1), Error);
    EXPECT_THROW(voxelize(one_gaussian(0.5), -1.0, 0.1), Error);
}

TEST(Voxelize, MatchesDenseSamplingOracle)
{
    std::mt19937_64 rng(17);
    for (int scene = 0; scene < 3; ++scene)
    {
        SplatScene s{"r", 0.0, random_prims(rng, 50)};
        const double threshold = tu::uniform(rng, 0.05, 0.8);
        const auto grid = voxelize(s, 0.25, threshold);
        const auto ref = oracle::voxel_oracle(s.primitives, grid);
        std::size_t checked = 0, mismatches = 0;
        for (std::size_t v = 0; v < grid.size(); ++v)
        {
            if (ref.ambiguous[v])
                continue;
            ++checked;
            mismatches += (ref.opacity[v] > threshold) != (grid.occupied[v] != 0);
        }
        EXPECT_EQ(mismatches, 0u) << "scene " << scene;
        EXPECT_GT(checked, grid.size() / 2);
    }
}

TEST(Voxelize, BoxTestAgreesWithDenseSampling)
{
    std::mt19937_64 rng(5);
    int hits = 0;
    for (int trial = 0; trial < 400; ++trial)
    {
        const auto g = tu::random_gaussian(rng, Vec3d::Constant(-0.5), Vec3d::Constant(0.5), 0.02, 0.5);
        const Vec3d lo(tu::uniform(rng, -1, 0.5), tu::uniform(rng, -1, 0.5), tu::uniform(rng, -1, 0.5));
        const double res = tu::uniform(rng, 0.05, 0.5);
        const auto v = oracle::dense_sample_voxel(oracle::Quadric(g), lo, res);
        if (v == oracle::Verdict::Ambiguous)
            continue;
        hits += v == oracle::Verdict::Hit;
        EXPECT_EQ(box_intersects_ellipsoid(g.precision(), g.mean, lo, lo + Vec3d::Constant(res)),
                  v == oracle::Verdict::Hit);
    }
    EXPECT_GT(hits, 20);
}

TEST(Voxelize, ThresholdMonotone)
{
    std::mt19937_64 rng(23);
    SplatScene s{"r", 0.0, random_prims(rng, 60)};
    const auto lo = voxelize(s, 0.2, 0.2);
    const auto hi = voxelize(s, 0.2, 0.6);
    ASSERT_EQ(lo.size(), hi.size());
    for (std::size_t v = 0; v < lo.size(); ++v)
        EXPECT_LE(hi.occupied[v], lo.occupied[v]);
}

TEST(Voxelize, OracleNeverClearsAVoxelHoldingAnInsidePoint)
{
    // Refining the grid around a fixed query point never flips the oracle against it.
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto g = tu::random_gaussian(rng, Vec3d::Constant(-0.5), Vec3d::Constant(0.5), 0.05, 0.5);
        const oracle::Quadric Q(g);
        const Vec3d x(tu::uniform(rng, -1, 1), tu::uniform(rng, -1, 1), tu::uniform(rng, -1, 1));
        const bool inside = Q.q(x) <= 1.0;
        for (double res : {0.4, 0.2, 0.1, 0.05})
        {
            const Vec3d lo = (x / res).array().floor() * res;
            const auto v = oracle::dense_sample_voxel(Q, lo, res);
            if (inside)
                EXPECT_NE(v, oracle::Verdict::Miss);
        }
    }
}

TEST(Projection, SingleVoxelInsideAndOutsideBand)
{
    VoxelGrid g;
    g.origin = Vec3d(0, 0, 0.35);
    g.resolution = 0.1;
    g.dims = {3, 3, 12};
    g.occupied.assign(g.size(), 0);
    g.opacity_sum.assign(g.size(), 0);
    g.occupied[g.index(1, 1, 0)] = 1; // center z = 0.4
    auto m = project_occupancy(g, 0.1, 1.0, MapKind::RobotNavigable);
    EXPECT_TRUE(m.is_occupied(1, 1));
    EXPECT_EQ(m.count_occupied(), 1u);

    std::fill(g.occupied.begin(), g.occupied.end(), 0);
    g.occupied[g.index(1, 1, 11)] = 1; // center z = 1.5
    m = project_occupancy(g, 0.1, 1.0, MapKind::RobotNavigable);
    EXPECT_EQ(m.count_occupied(), 0u);
}

TEST(Projection, EmptyOverlapThrows)
{
    VoxelGrid g;
    g.dims = {2, 2, 2};
    g.occupied.assign(g.size(), 0);
    EXPECT_THROW(project_occupancy(g, 5.0, 6.0, MapKind::RobotNavigable), Error);
    EXPECT_THROW(project_occupancy(g, 1.0, 0.5, MapKind::RobotNavigable), Error);
}

TEST(Projection, MatchesColumnScan)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto g = random_voxels(rng, {std::uniform_int_distribution(1, 60)(rng),
                                           std::uniform_int_distribution(1, 60)(rng), 20},
                                     0.03);
        const double a = tu::uniform(rng, g.origin.z(), g.origin.z() + 1.0);
        const double b = a + tu::uniform(rng, 0.15, 1.0);
        const auto m = project_occupancy(g, a, b, MapKind::HumanWalkable);
        EXPECT_EQ(m.occupied, oracle::column_scan(g, a, b));
    }
}

TEST(Projection, MonotoneInHeightRange)
{
    std::mt19937_64 rng(37);
    const auto g = random_voxels(rng, {40, 40, 20}, 0.02);
    const auto inner = project_occupancy(g, g.origin.z() + 0.5, g.origin.z() + 1.0, MapKind::RobotNavigable);
    const auto outer = project_occupancy(g, g.origin.z() + 0.3, g.origin.z() + 1.6, MapKind::RobotNavigable);
    for (std::size_t c = 0; c < inner.size(); ++c)
        EXPECT_LE(inner.occupied[c], outer.occupied[c]);
}

TEST(Projection, RobotAndHumanMapsAgreeOnLowColumns)
{
    // Every occupied voxel sits below both heights, so the two bands see the same columns.
    std::mt19937_64 rng(41);
    auto g = random_voxels(rng, {30, 30, 20}, 0.0);
    g.origin.z() = 0.0;
    std::bernoulli_distribution b(0.05);
    for (int k = 1; k < 4; ++k)
        for (int j = 0; j < 30; ++j)
            for (int i = 0; i < 30; ++i)
                g.occupied[g.index(i, j, k)] = b(rng);
    const auto robot = project_occupancy(g, 0.05, 0.5, MapKind::RobotNavigable);
    const auto human = project_occupancy(g, 0.05, 1.8, MapKind::HumanWalkable);
    EXPECT_EQ(robot.occupied, human.occupied);
}

TEST(Inflation, ZeroRadiusIsIdentityAndIdempotent)
{
    std::mt19937_64 rng(43);
    const auto m = tu::random_map(rng, 50, 40, 0.1, 0.05);
    const auto once = inflate(m, 0.0);
    EXPECT_EQ(once.inflated, m.occupied);
    EXPECT_EQ(inflate(once, 0.0).inflated, once.inflated);
}

TEST(Inflation, DiskAroundOneCell)
{
    OccupancyGrid2D m(Vec2d::Zero(), 0.1, {21, 21}, MapKind::RobotNavigable);
    m.set_occupied(10, 10);
    const auto out = inflate(m, 0.2);
    for (int j = 0; j < 21; ++j)
        for (int i = 0; i < 21; ++i)
        {
            const int d2 = (i - 10) * (i - 10) + (j - 10) * (j - 10);
            EXPECT_EQ(out.is_inflated(i, j), d2 <= 4) << i << "," << j;
        }
    EXPECT_EQ(out.count_inflated(), 13u);
}

TEST(Inflation, MatchesAllPairsOracle)
{
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 15; ++trial)
    {
        const int w = std::uniform_int_distribution(5, 80)(rng);
        const int h = std::uniform_int_distribution(5, 80)(rng);
        const double res = tu::uniform(rng, 0.05, 0.2);
        const auto m = tu::random_map(rng, w, h, res, tu::uniform(rng, 0.0, 0.05));
        // exact multiples of the resolution exercise the boundary
        const double r = trial % 2 ? res * std::uniform_int_distribution(0, 5)(rng) : tu::uniform(rng, 0.0, 0.6);
        EXPECT_EQ(inflate(m, r).inflated, oracle::all_pairs_inflation(m, r)) << "trial " << trial;
    }
}

TEST(Inflation, MonotoneInRadius)
{
    std::mt19937_64 rng(53);
    const auto m = tu::random_map(rng, 60, 60, 0.1, 0.02);
    const auto a = inflate(m, 0.15);
    const auto b = inflate(m, 0.35);
    for (std::size_t c = 0; c < m.size(); ++c)
        EXPECT_LE(a.inflated[c], b.inflated[c]);
}

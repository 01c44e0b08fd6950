#include "dynsplat/synthetic.hpp"

#include <random>

namespace dynsplat
{

namespace
{

// Evenly spaced samples covering [-half, half] with spacing at most `step`.
std::vector<double> spread(double half, double step)
{
    const int n = std::max(2, static_cast<int>(std::ceil(2.0 * half / step)) + 1);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = -half + 2.0 * half * i / (n - 1);
    return out;
}

} // namespace

SplatScene make_synthetic_scene(std::uint64_t seed, const SyntheticSceneOptions& o)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SplatScene scene;
    scene.name = "synthetic";
    scene.ground_z = 0.0;
    auto& prims = scene.primitives;

    for (double x = 0.5 * o.floor_spacing; x < o.size; x += o.floor_spacing)
        for (double y = 0.5 * o.floor_spacing; y < o.size; y += o.floor_spacing)
        {
            GaussianPrimitive g;
            g.mean = Vec3d(x, y, -0.02);
            g.scale = Vec3d(0.15, 0.15, 0.01);
            g.opacity = o.floor_opacity;
            const bool dark = (static_cast<int>(x) + static_cast<int>(y)) % 2 == 0;
            g.color = dark ? Vec3d(0.45, 0.42, 0.38) : Vec3d(0.62, 0.6, 0.55);
            prims.push_back(g);
        }

    for (int b = 0; b < o.boxes; ++b)
    {
        const double hx = 0.5 * uniform(o.footprint_min, o.footprint_max);
        const double hy = 0.5 * uniform(o.footprint_min, o.footprint_max);
        const double h = uniform(o.height_min, o.height_max);
        const double yaw = uniform(-kPi, kPi);
        const Vec2d c(uniform(1.0, o.size - 1.0), uniform(1.0, o.size - 1.0));
        const Vec3d color(uniform(0.1, 0.9), uniform(0.1, 0.9), uniform(0.1, 0.9));
        const Pose3d pose = make_pose(c.x(), c.y(), 0.0, yaw);
        const Eigen::Quaterniond q(pose.linear());
        const auto zs = spread(0.5 * (h - o.sigma), o.lattice);
        for (double lx : spread(hx, o.lattice))
            for (double ly : spread(hy, o.lattice))
                for (double lz : zs)
                {
                    GaussianPrimitive g;
                    g.mean = pose * Vec3d(lx, ly, lz + 0.5 * (h + o.sigma));
                    g.rotation = q;
                    g.scale = Vec3d::Constant(o.sigma);
                    g.opacity = o.box_opacity;
                    g.color = color;
                    prims.push_back(g);
                }
    }

    for (int f = 0; f < o.floaters; ++f)
    {
        GaussianPrimitive g;
        g.mean = Vec3d(uniform(0.0, o.size), uniform(0.0, o.size), uniform(0.05, 0.4));
        g.scale = Vec3d::Constant(uniform(0.03, 0.08));
        g.opacity = o.floater_opacity;
        g.color = Vec3d::Constant(0.9);
        prims.push_back(g);
    }
    return scene;
}

} // namespace dynsplat

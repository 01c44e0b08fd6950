#include <gtest/gtest.h>

#include "dynsplat/human.hpp"
#include "testing.hpp"

using namespace dynsplat;
using dynsplat::testing::TempDir;

namespace
{

double yaw_of(const Pose3d& p) { return std::atan2(p.linear()(1, 0), p.linear()(0, 0)); }

Polyline2d semicircle(double r, int n)
{
    Polyline2d pts;
    for (int i = 0; i <= n; ++i)
    {
        const double a = kPi * i / n;
        pts.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return pts;
}

} // namespace

TEST(HumanModel, DeterministicForSeed)
{
    const auto a = make_human_model(1.8, 0.3, 200, 7);
    const auto b = make_human_model(1.8, 0.3, 200, 7);
    ASSERT_EQ(a.canonical.size(), 200u);
    for (std::size_t i = 0; i < a.canonical.size(); ++i)
    {
        EXPECT_EQ(a.canonical[i].mean, b.canonical[i].mean);
        EXPECT_EQ(a.canonical[i].scale, b.canonical[i].scale);
        EXPECT_EQ(a.canonical[i].rotation.coeffs(), b.canonical[i].rotation.coeffs());
        EXPECT_EQ(a.canonical[i].opacity, b.canonical[i].opacity);
    }
    const auto c = make_human_model(1.8, 0.3, 200, 8);
    EXPECT_NE(a.canonical[0].mean, c.canonical[0].mean);
}

TEST(HumanModel, InvalidDimensions)
{
    EXPECT_THROW(make_human_model(0.3, 0.3, 200, 1), Error);
    EXPECT_THROW(make_human_model(1.8, 0.0, 200, 1), Error);
    EXPECT_THROW(make_human_model(1.8, 0.3, 3, 1), Error);
}

TEST(HumanModel, CanonicalFrameShape)
{
    const auto m = make_human_model(1.8, 0.3, 400, 2);
    for (const auto& g : m.canonical)
    {
        EXPECT_LE(g.mean.head<2>().norm(), 0.3 + 1e-6);
        EXPECT_GE(g.mean.z(), 0.0);
        EXPECT_LE(g.mean.z(), 1.8);
    }
    validate_primitives(m.canonical);
}

TEST(HumanModel, PlyRoundTrip)
{
    TempDir dir("human");
    const auto m = make_human_model(1.7, 0.25, 100, 3);
    save_human_model(m, dir / "avatar.ply");
    const auto back = load_human_model(dir / "avatar.ply", 1.7, 0.25);
    ASSERT_EQ(back.canonical.size(), m.canonical.size());
    for (std::size_t i = 0; i < m.canonical.size(); ++i)
        EXPECT_LT((back.canonical[i].mean - m.canonical[i].mean).norm(), 1e-5);
}

TEST(RootMotion, StraightLineFrames)
{
    const auto traj = time_parameterize({{0, 0}, {5, 0}}, 1.0, 0.1);
    const auto motion = trajectory_to_root_motion(traj, 0.5);
    ASSERT_EQ(motion.size(), 11u);
    for (std::size_t k = 0; k < motion.size(); ++k)
    {
        EXPECT_NEAR(motion[k].translation().x(), 0.5 * k, 1e-9);
        EXPECT_NEAR(motion[k].translation().y(), 0.0, 1e-12);
        EXPECT_NEAR(motion[k].translation().z(), 0.0, 1e-12);
        EXPECT_NEAR(yaw_of(motion[k]), 0.0, 1e-12);
    }
}

TEST(RootMotion, TimeZeroIsStartPose)
{
    const auto traj = time_parameterize({{1, 2}, {1, 6}}, 1.3, 0.13);
    const auto motion = trajectory_to_root_motion(traj, 0.1);
    const Pose3d p = root_pose_at(motion, 0.0, 0.1);
    EXPECT_EQ(p.translation(), Vec3d(1, 2, 0));
    EXPECT_NEAR(yaw_of(p), kPi / 2, 1e-12);
}

TEST(RootMotion, SemicircleHeadingsMatchFiniteDifferences)
{
    const auto traj = time_parameterize(semicircle(2.0, 400), 1.0, 0.05);
    const double dt = 0.1;
    const auto motion = trajectory_to_root_motion(traj, dt);
    ASSERT_GT(motion.size(), 20u);
    for (std::size_t k = 1; k + 1 < motion.size(); ++k)
    {
        const Vec3d d = motion[k + 1].translation() - motion[k - 1].translation();
        const double fd = std::atan2(d.y(), d.x());
        EXPECT_NEAR(wrap_angle(yaw_of(motion[k]) - fd), 0.0, 1e-2) << "frame " << k;
    }
}

TEST(RootMotion, Errors)
{
    EXPECT_THROW(trajectory_to_root_motion(HumanTrajectory{}, 0.1), Error);
    const auto traj = time_parameterize({{0, 0}, {1, 0}}, 1.0, 0.1);
    const auto motion = trajectory_to_root_motion(traj, 0.1);
    EXPECT_THROW(root_pose_at(motion, -0.01, 0.1), Error);
    EXPECT_THROW(root_pose_at(motion, 5.0, 0.1), Error);
    EXPECT_THROW(root_pose_at({}, 0.0, 0.1), Error);
    EXPECT_THROW(time_parameterize({}, 1.0, 0.1), Error);
}

TEST(RootMotion, SampleTimesReproduceTrajectory)
{
    const double dt = 0.1;
    const auto traj = time_parameterize(semicircle(1.5, 100), 1.2, 1.2 * dt);
    const auto motion = trajectory_to_root_motion(traj, dt);
    for (const auto& s : traj.samples)
    {
        const double k = s.t / dt;
        if (std::abs(k - std::round(k)) > 1e-9)
            continue; // the final tail sample is off the frame grid
        const Pose3d p = root_pose_at(motion, s.t, dt);
        EXPECT_NEAR(p.translation().x(), s.x, 1e-9);
        EXPECT_NEAR(p.translation().y(), s.y, 1e-9);
    }
}

TEST(HumanPrims, TimeZeroEqualsStartPoseTransform)
{
    const auto model = make_human_model(1.8, 0.3, 150, 4);
    const auto traj = time_parameterize({{2, 1}, {5, 3}}, 1.0, 0.1);
    const auto motion = trajectory_to_root_motion(traj, 0.1);
    const auto a = human_prims_at(model, motion, 0.0, 0.1);
    const auto b = transform_primitives(model.canonical, motion.front());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a[i].mean, b[i].mean);
        EXPECT_EQ(a[i].rotation.coeffs(), b[i].rotation.coeffs());
    }
}

TEST(HumanPrims, FootprintStaysInsideRadius)
{
    const auto model = make_human_model(1.8, 0.3, 300, 5);
    const HumanActor actor(model, time_parameterize(semicircle(3.0, 200), 1.4, 0.14), 0.1);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial)
    {
        const double t = dynsplat::testing::uniform(rng, 0.0, actor.trajectory.duration());
        const Vec2d root = actor.root_xy(t);
        for (const auto& g : actor.primitives(t))
            EXPECT_LE((g.mean.head<2>() - root).norm(), model.radius + 1e-6);
    }
}

TEST(HumanTrajectoryJson, RoundTripAndErrors)
{
    const auto traj = time_parameterize({{0, 0}, {2, 2}}, 1.0, 0.2);
    const auto back = trajectory_from_json(trajectory_to_json(traj));
    ASSERT_EQ(back.samples.size(), traj.samples.size());
    for (std::size_t i = 0; i < traj.samples.size(); ++i)
        EXPECT_DOUBLE_EQ(back.samples[i].x, traj.samples[i].x);
    EXPECT_THROW(trajectory_from_json(nlohmann::json::object()), FormatError);
    EXPECT_THROW(trajectory_from_json(nlohmann::json::parse("[[0,0,0,0],[0,1,1,0]]")), FormatError);
    EXPECT_THROW(trajectory_from_json(nlohmann::json::parse("[[0,0,0]]")), FormatError);
}

TEST(TimeParameterize, ConstantSpeedSpacing)
{
    const auto traj = time_parameterize(semicircle(2.0, 300), 1.5, 0.15);
    for (std::size_t i = 1; i + 1 < traj.samples.size(); ++i)
    {
        const double chord = (traj.samples[i].position() - traj.samples[i - 1].position()).norm();
        EXPECT_NEAR(chord, 0.15, 1e-9);
        EXPECT_NEAR(traj.samples[i].t - traj.samples[i - 1].t, 0.1, 1e-12);
    }
}

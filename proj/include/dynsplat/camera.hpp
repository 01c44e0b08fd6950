#pragma once

#include "dynsplat/types.hpp"

namespace dynsplat
{

/// Pinhole camera, OpenCV axes (x right, y down, z forward). `pose` maps world to camera.
struct CameraModel
{
    double fx = 128.0;
    double fy = 128.0;
    double cx = 128.0;
    double cy = 72.0;
    int width = 256;
    int height = 144;
    Pose3d pose = Pose3d::Identity();
    double near_plane = 0.05;
    double far_plane = 30.0;

    double hfov() const { return 2.0 * std::atan(width / (2.0 * fx)); }

    Vec3d to_camera(const Vec3d& world) const { return pose * world; }

    /// Inside the viewing frustum (image bounds, near and far planes).
    bool in_frustum(const Vec3d& world) const
    {
        const Vec3d c = to_camera(world);
        if (c.z() < near_plane || c.z() > far_plane)
            return false;
        const double u = fx * c.x() / c.z() + cx;
        const double v = fy * c.y() / c.z() + cy;
        return u >= 0.0 && u < width && v >= 0.0 && v < height;
    }

    void validate() const
    {
        if (!(fx > 0.0 && fy > 0.0) || !(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height))
            throw Error("invalid camera intrinsics");
    }
};

/// Forward-looking camera rigidly mounted on a planar robot at the given height.
inline CameraModel robot_camera(const Pose2d& robot, double mount_height, int width = 256, int height = 144,
                                double hfov_rad = kPi / 2.0)
{
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.fx = (width / 2.0) / std::tan(hfov_rad / 2.0);
    cam.fy = cam.fx;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    // camera axes in the robot body frame: z forward (+x body), x right (-y body), y down (-z body)
    Mat3d body_from_cam;
    body_from_cam << 0, 0, 1, -1, 0, 0, 0, -1, 0;
    const Pose3d world_from_body = make_pose(robot.x, robot.y, mount_height, robot.theta);
    Pose3d body_cam = Pose3d::Identity();
    body_cam.linear() = body_from_cam;
    cam.pose = (world_from_body * body_cam).inverse();
    return cam;
}

} // namespace dynsplat

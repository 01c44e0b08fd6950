#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dynsplat/camera.hpp"
#include "dynsplat/human.hpp"
#include "dynsplat/splat.hpp"

namespace dynsplat
{

struct Image
{
    int width = 0;
    int height = 0;
    std::vector<float> rgb;   ///< row-major, 3 floats per pixel
    std::vector<float> depth; ///< expected depth, filled on request

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.f) {}

    Eigen::Map<Eigen::Vector3f> pixel(int x, int y)
    {
        return Eigen::Map<Eigen::Vector3f>(rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x));
    }
    Eigen::Map<const Eigen::Vector3f> pixel(int x, int y) const
    {
        return Eigen::Map<const Eigen::Vector3f>(rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x));
    }
};

struct RenderOptions
{
    bool with_depth = false;
    int tile_size = 16;
    int threads = 0; ///< 0 picks std::thread::hardware_concurrency
};

inline constexpr double kDilation = 0.3;         ///< px^2 added to the projected covariance
inline constexpr double kTransmittanceStop = 1e-6; ///< compositing stops below this transmittance

/// A primitive after projection to the image plane.
template <typename Scalar>
struct Splat2D
{
    Vec2<Scalar> center;
    Mat2<Scalar> conic; ///< inverse of the 2D covariance
    Scalar depth;
    Scalar opacity;
    Vec3<Scalar> color;
    int x0, y0, x1, y1; ///< inclusive pixel bounds enclosing the 3-sigma ellipse
};

/// Project a primitive; returns false when behind the near plane or fully off-screen.
template <typename Scalar>
bool project_splat(const Gaussian<Scalar>& g, const CameraModel& cam, Splat2D<Scalar>& out)
{
    const Mat3<Scalar> W = cam.pose.linear().cast<Scalar>();
    const Vec3<Scalar> pc = W * g.mean + cam.pose.translation().cast<Scalar>();
    if (pc.z() < Scalar(cam.near_plane))
        return false;
    const Scalar fx = Scalar(cam.fx), fy = Scalar(cam.fy);
    const Scalar iz = Scalar(1) / pc.z();
    Eigen::Matrix<Scalar, 2, 3> J;
    J << fx * iz, Scalar(0), -fx * pc.x() * iz * iz, Scalar(0), fy * iz, -fy * pc.y() * iz * iz;
    const Mat3<Scalar> cov_cam = W * g.covariance() * W.transpose();
    Mat2<Scalar> cov2 = J * cov_cam * J.transpose();
    cov2(0, 0) += Scalar(kDilation);
    cov2(1, 1) += Scalar(kDilation);
    cov2(0, 1) = cov2(1, 0) = Scalar(0.5) * (cov2(0, 1) + cov2(1, 0));
    const Scalar det = cov2.determinant();
    if (!(det > Scalar(0)))
        return false;
    out.conic << cov2(1, 1) / det, -cov2(0, 1) / det, -cov2(1, 0) / det, cov2(0, 0) / det;
    out.center = Vec2<Scalar>(fx * pc.x() * iz + Scalar(cam.cx), fy * pc.y() * iz + Scalar(cam.cy));
    // axis-aligned box of the 3-sigma ellipse, widened by a pixel against rounding at its edge
    const Scalar rx = Scalar(3) * std::sqrt(cov2(0, 0)) + Scalar(1);
    const Scalar ry = Scalar(3) * std::sqrt(cov2(1, 1)) + Scalar(1);
    out.x0 = std::max(0, static_cast<int>(std::ceil(out.center.x() - rx)));
    out.y0 = std::max(0, static_cast<int>(std::ceil(out.center.y() - ry)));
    out.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(out.center.x() + rx)));
    out.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(out.center.y() + ry)));
    if (out.x0 > out.x1 || out.y0 > out.y1)
        return false;
    out.depth = pc.z();
    out.opacity = g.opacity;
    out.color = g.color;
    return true;
}

/// Gaussian falloff at pixel p, zero outside the 3-sigma ellipse.
template <typename Scalar>
Scalar splat_weight(const Splat2D<Scalar>& s, Scalar px, Scalar py)
{
    const Scalar dx = px - s.center.x();
    const Scalar dy = py - s.center.y();
    const Scalar m = s.conic(0, 0) * dx * dx + Scalar(2) * s.conic(0, 1) * dx * dy + s.conic(1, 1) * dy * dy;
    if (m > Scalar(9))
        return Scalar(0);
    return std::exp(Scalar(-0.5) * m);
}

/// Tile-based front-to-back splat rasterizer (single-precision fast path).
Image render(std::span<const GaussianPrimitive> prims, const CameraModel& camera, const Eigen::Vector3f& background,
             const RenderOptions& options = {});

/// Scene plus every human at time t.
Image render_observation(const SplatScene& scene, std::span<const HumanActor> humans, double t,
                         const CameraModel& camera, const Eigen::Vector3f& background, const RenderOptions& options = {});

void write_png(const Image& image, const std::filesystem::path& path);

/// Encode to an in-memory PNG byte string.
std::string encode_png(const Image& image);

} // namespace dynsplat

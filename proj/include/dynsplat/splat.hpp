#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dynsplat/types.hpp"

namespace dynsplat
{

/// One anisotropic 3D Gaussian. Scale holds the 1-sigma semi-axes in meters.
template <typename Scalar>
struct Gaussian
{
    Vec3<Scalar> mean = Vec3<Scalar>::Zero();
    Eigen::Quaternion<Scalar> rotation = Eigen::Quaternion<Scalar>::Identity(); // (w, x, y, z)
    Vec3<Scalar> scale = Vec3<Scalar>::Ones();
    Scalar opacity{1};
    Vec3<Scalar> color = Vec3<Scalar>::Constant(Scalar(0.5));

    /// Sigma = R diag(scale^2) R^T
    Mat3<Scalar> covariance() const
    {
        const Mat3<Scalar> R = rotation.toRotationMatrix();
        return R * scale.cwiseAbs2().asDiagonal() * R.transpose();
    }

    Mat3<Scalar> precision() const
    {
        const Mat3<Scalar> R = rotation.toRotationMatrix();
        return R * scale.cwiseAbs2().cwiseInverse().asDiagonal() * R.transpose();
    }

    template <typename Other>
    Gaussian<Other> cast() const
    {
        Gaussian<Other> g;
        g.mean = mean.template cast<Other>();
        g.rotation = rotation.template cast<Other>();
        g.scale = scale.template cast<Other>();
        g.opacity = static_cast<Other>(opacity);
        g.color = color.template cast<Other>();
        return g;
    }
};

using GaussianPrimitive = Gaussian<double>;
using Primitives = std::vector<GaussianPrimitive>;

/// Half extents of the axis-aligned box enclosing the 1-sigma ellipsoid.
template <typename Scalar>
Vec3<Scalar> ellipsoid_half_extents(const Gaussian<Scalar>& g)
{
    return g.covariance().diagonal().cwiseSqrt();
}

/// Rigidly move primitives: means by the pose, rotations left-multiplied by the pose rotation.
template <typename Scalar>
std::vector<Gaussian<Scalar>> transform_primitives(const std::vector<Gaussian<Scalar>>& prims,
                                                   const Eigen::Transform<Scalar, 3, Eigen::Isometry>& pose)
{
    const Eigen::Quaternion<Scalar> q(pose.linear());
    std::vector<Gaussian<Scalar>> out = prims;
    if (pose.matrix().isIdentity(Scalar(0)))
        return out;
    for (auto& g : out)
    {
        g.mean = pose * g.mean;
        g.rotation = (q * g.rotation).normalized();
    }
    return out;
}

/// Gravity-aligned (+z up) Gaussian scene in meters.
struct SplatScene
{
    std::string name;
    double ground_z = 0.0;
    Primitives primitives;
};

/// Load a binary little-endian 3DGS PLY. Only degree-0 color is used; f_rest_* are skipped.
/// When a `<stem>.meta.json` sidecar exists it supplies ground_z and name.
SplatScene load_scene(const std::filesystem::path& path);

/// Read only the primitives of a 3DGS PLY (no sidecar).
Primitives load_primitives(const std::filesystem::path& path);

/// Write primitives as 3DGS PLY (inverse activations), plus the meta sidecar.
void save_scene(const SplatScene& scene, const std::filesystem::path& path);
void save_primitives(const Primitives& prims, const std::filesystem::path& path);

std::filesystem::path meta_path_for(const std::filesystem::path& ply);

/// Validates primitive invariants, throwing FormatError with the offending index.
void validate_primitives(const Primitives& prims);

} // namespace dynsplat

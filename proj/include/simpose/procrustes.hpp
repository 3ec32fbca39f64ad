#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "simpose/types.hpp"

namespace simpose::eval {

using PoseMatrix = Eigen::Matrix<double, kEvalJointCount, 3>;

inline PoseMatrix to_matrix(const Pose3D& pose) {
    PoseMatrix m;
    for (int i = 0; i < kEvalJointCount; ++i) {
        const auto& j = pose.joints[static_cast<std::size_t>(i)];
        if (!std::isfinite(j.x) || !std::isfinite(j.y) || !std::isfinite(j.z))
            throw Error("pose contains non-finite joint");
        m(i, 0) = j.x;
        m(i, 1) = j.y;
        m(i, 2) = j.z;
    }
    return m;
}

struct AlignmentResult {
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    PoseMatrix aligned;      // scale * rotation * source + translation
    double residual_sq = 0;  // sum of squared distances to target, m^2
};

/// Closed-form least-squares similarity alignment (Umeyama/Kabsch): centers
/// both sets, decomposes the cross-covariance, flips the smallest singular
/// direction if needed so the rotation is proper, and recovers the scale
/// from the corrected singular values over the source variance. Reflections
/// are never produced. with_scale=false fixes scale at 1 (rigid mode).
inline AlignmentResult procrustes_align(const PoseMatrix& x, const PoseMatrix& y, bool with_scale = true) {
    const Eigen::RowVector3d mx = x.colwise().mean();
    const Eigen::RowVector3d my = y.colwise().mean();
    const PoseMatrix xc = x.rowwise() - mx;
    const PoseMatrix yc = y.rowwise() - my;

    const double var_x = xc.squaredNorm();
    if (var_x <= 0.0) throw Error("procrustes_align: degenerate source (zero variance)");

    const Eigen::Matrix3d cov = xc.transpose() * yc;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if ((v * u.transpose()).determinant() < 0.0) d(2) = -1.0;

    AlignmentResult res;
    res.rotation = v * d.asDiagonal() * u.transpose();
    res.scale = with_scale ? (svd.singularValues().dot(d) / var_x) : 1.0;
    res.translation = my.transpose() - res.scale * res.rotation * mx.transpose();
    res.aligned = (res.scale * (res.rotation * x.transpose())).transpose();
    res.aligned.rowwise() += res.translation.transpose();
    res.residual_sq = (res.aligned - y).squaredNorm();
    return res;
}

inline AlignmentResult procrustes_align(const Pose3D& source, const Pose3D& target, bool with_scale = true) {
    return procrustes_align(to_matrix(source), to_matrix(target), with_scale);
}

/// Mean per-joint position error in millimeters, no alignment.
inline double mpjpe(const PoseMatrix& p, const PoseMatrix& g) {
    double sum = 0.0;
    for (int i = 0; i < kEvalJointCount; ++i) sum += (p.row(i) - g.row(i)).norm();
    return sum / kEvalJointCount * 1000.0;
}

inline double mpjpe(const Pose3D& pred, const Pose3D& gt) { return mpjpe(to_matrix(pred), to_matrix(gt)); }

/// Procrustes-aligned MPJPE in millimeters.
inline double pa_mpjpe(const PoseMatrix& p, const PoseMatrix& g, bool with_scale = true) {
    const AlignmentResult res = procrustes_align(p, g, with_scale);
    double sum = 0.0;
    for (int i = 0; i < kEvalJointCount; ++i) sum += (res.aligned.row(i) - g.row(i)).norm();
    return sum / kEvalJointCount * 1000.0;
}

inline double pa_mpjpe(const Pose3D& pred, const Pose3D& gt, bool with_scale = true) {
    return pa_mpjpe(to_matrix(pred), to_matrix(gt), with_scale);
}

}  // namespace simpose::eval

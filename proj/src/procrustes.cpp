#include "mvmocap/procrustes.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include "mvmocap/error.hpp"

namespace mvmocap {

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.scale * (inv.rotation * translation);
  return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& inner) const {
  SimilarityTransform out;
  out.scale = scale * inner.scale;
  out.rotation = rotation * inner.rotation;
  out.translation = scale * (rotation * inner.translation) + translation;
  return out;
}

ProcrustesResult procrustes_align(std::span<const Eigen::Vector3d> source, std::span<const Eigen::Vector3d> target,
                                  const std::vector<bool>& valid, const ProcrustesOptions& options) {
  if (source.size() != target.size()) throw ValidationError("procrustes: source and target sizes differ");
  if (!valid.empty() && valid.size() != source.size()) throw ValidationError("procrustes: mask size mismatch");
  auto is_valid = [&](std::size_t i) { return valid.empty() || valid[i]; };

  std::size_t n = 0;
  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero(), mu_t = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!is_valid(i)) continue;
    mu_s += source[i];
    mu_t += target[i];
    ++n;
  }
  if (n < 3) throw AlignmentUndefined("procrustes: fewer than 3 valid correspondences");
  mu_s /= static_cast<double>(n);
  mu_t /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!is_valid(i)) continue;
    const Eigen::Vector3d s = source[i] - mu_s;
    const Eigen::Vector3d t = target[i] - mu_t;
    cov += t * s.transpose();
    src_scatter += s * s.transpose();
    var_s += s.squaredNorm();
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> shape(src_scatter);
  const auto ssv = shape.singularValues();
  if (!(ssv(0) > 0.0) || std::sqrt(ssv(1) / ssv(0)) < options.collinearity_tolerance) {
    throw AlignmentUndefined("procrustes: source points are collinear");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d(1.0, 1.0, 1.0);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2) = -1.0;

  ProcrustesResult result;
  auto& tf = result.transform;
  tf.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  tf.scale = options.with_scale ? svd.singularValues().dot(d) / var_s : 1.0;
  tf.translation = mu_t - tf.scale * (tf.rotation * mu_s);

  result.num_valid = n;
  result.aligned.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    result.aligned.push_back(tf.apply(source[i]));
    if (is_valid(i)) result.residual += (result.aligned.back() - target[i]).squaredNorm();
  }
  return result;
}

std::optional<ProcrustesResult> try_procrustes_align(std::span<const Eigen::Vector3d> source,
                                                     std::span<const Eigen::Vector3d> target,
                                                     const std::vector<bool>& valid,
                                                     const ProcrustesOptions& options) {
  try {
    return procrustes_align(source, target, valid, options);
  } catch (const AlignmentUndefined&) {
    return std::nullopt;
  }
}

}  // namespace mvmocap

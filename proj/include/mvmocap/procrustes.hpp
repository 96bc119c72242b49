#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mvmocap {

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale * (rotation * p) + translation; }
  SimilarityTransform inverse() const;
  SimilarityTransform compose(const SimilarityTransform& inner) const;  // this ∘ inner
};

class AlignmentUndefined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProcrustesResult {
  SimilarityTransform transform;
  std::vector<Eigen::Vector3d> aligned;  // transform applied to every source point
  double residual = 0.0;                 // sum of squared distances over valid pairs
  std::size_t num_valid = 0;
};

struct ProcrustesOptions {
  bool with_scale = true;
  // Second/first singular value ratio of the centered source below which
  // the configuration counts as collinear.
  double collinearity_tolerance = 1e-9;
};

// Least-squares similarity transform mapping source onto target over the
// valid correspondences (closed form, cross-covariance SVD with reflection
// guard). An empty mask means every pair is valid. Throws AlignmentUndefined
// for fewer than 3 valid pairs or a collinear source.
ProcrustesResult procrustes_align(std::span<const Eigen::Vector3d> source, std::span<const Eigen::Vector3d> target,
                                  const std::vector<bool>& valid = {}, const ProcrustesOptions& options = {});

std::optional<ProcrustesResult> try_procrustes_align(std::span<const Eigen::Vector3d> source,
                                                     std::span<const Eigen::Vector3d> target,
                                                     const std::vector<bool>& valid = {},
                                                     const ProcrustesOptions& options = {});

}  // namespace mvmocap

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "lpr/descriptor_store.hpp"
#include "lpr/error.hpp"
#include "lpr/mapvlm.hpp"

namespace lpr {

/// One retrieval hit.
struct Neighbor {
  std::uint32_t frame_id = 0;
  double distance = 0.0;
};

/// Database prepared for metric k-NN: every descriptor is pre-mapped to the
/// metric space z = T^T (x - mean) with T = W1*W2, where the learned metric
/// is plain Euclidean. Queries are mapped the same way at query time; the
/// dense metric matrix never materializes.
struct MetricIndex {
  Eigen::MatrixXd transformed;  // N x d2
  std::vector<std::uint32_t> frame_ids;
  PositionMatrix positions;
  Eigen::MatrixXd map;          // D x d2, the combined transform
  Eigen::VectorXd mean;         // D

  Eigen::Index size() const { return transformed.rows(); }
  Eigen::Index input_dim() const { return map.rows(); }
  Eigen::Index metric_dim() const { return transformed.cols(); }
};

/// Learned distance between two descriptors:
/// d(f_i, f_j) = |(W1*W2)^T (f_i - f_j)|_2, the Mahalanobis distance under
/// M = W1 W2 W2^T W1^T. Symmetric, non-negative, zero on equal inputs.
/// Throws ShapeMismatch if either vector length differs from model.dim().
double mahalanobis_distance(const Eigen::VectorXd& f_i, const Eigen::VectorXd& f_j,
                            const MetricModel& model);

/// Maps every descriptor of `set` through the model. Throws ShapeMismatch
/// if set.dim() != model.dim(). An empty set builds an empty index.
MetricIndex build_index(const DescriptorSet& set, const MetricModel& model);

/// The k nearest database entries to `query` (a raw descriptor of length
/// input_dim) under the learned metric, sorted by ascending distance with
/// ties broken by ascending frame id. Returns min(k, size) hits.
/// Throws ShapeMismatch on a wrong query length, Error if k < 1.
std::vector<Neighbor> query_knn(const MetricIndex& index,
                                const Eigen::VectorXd& query, int k);

}  // namespace lpr

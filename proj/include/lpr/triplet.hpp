#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lpr/error.hpp"
#include "lpr/mapvlm.hpp"

namespace lpr {

/// A query with candidate positives/negatives and a margin.
/// Both candidate lists must be non-empty to score.
struct TripletBatch {
  Eigen::VectorXd query;
  std::vector<Eigen::VectorXd> positives;
  std::vector<Eigen::VectorXd> negatives;
  double margin = 0.0;
};

/// Hardest-pair ranking loss under the learned metric:
///   L = margin + max_p d(query, p) - min_n d(query, n).
/// By default the literal signed value is returned (negative when the
/// hardest negative is beyond the hardest positive by more than the
/// margin); with hinge = true the loss is clamped at 0.
/// Throws EmptyList if either candidate list is empty, ShapeMismatch if any
/// vector length differs from model.dim().
double triplet_loss(const TripletBatch& batch, const MetricModel& model,
                    bool hinge = false);

/// Indices of the hardest candidates: (argmax_p d(query, p),
/// argmin_n d(query, n)), ties resolved to the lowest index.
/// Same errors as triplet_loss.
std::pair<std::size_t, std::size_t> mine_hardest(
    const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& positives,
    const std::vector<Eigen::VectorXd>& negatives, const MetricModel& model);

}  // namespace lpr

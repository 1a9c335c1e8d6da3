#include "lpr/triplet.hpp"

#include <algorithm>
#include <string>

namespace lpr {

namespace {

/// Distances from `query` to every candidate through the pre-combined map
/// T = W1*W2, shared across the batch so T is formed once.
std::vector<double> batch_distances(const Eigen::VectorXd& query,
                                    const std::vector<Eigen::VectorXd>& candidates,
                                    const Eigen::MatrixXd& map) {
  const Eigen::VectorXd mapped_query = map.transpose() * query;
  std::vector<double> distances;
  distances.reserve(candidates.size());
  for (const Eigen::VectorXd& candidate : candidates) {
    if (candidate.size() != map.rows()) {
      throw ShapeMismatch("candidate length " + std::to_string(candidate.size()) +
                          " does not match model dimension " +
                          std::to_string(map.rows()));
    }
    distances.push_back((map.transpose() * candidate - mapped_query).norm());
  }
  return distances;
}

}  // namespace

double triplet_loss(const TripletBatch& batch, const MetricModel& model, bool hinge) {
  if (batch.positives.empty() || batch.negatives.empty()) {
    throw EmptyList("both candidate lists must be non-empty");
  }
  if (batch.query.size() != model.dim()) {
    throw ShapeMismatch("query length " + std::to_string(batch.query.size()) +
                        " does not match model dimension " +
                        std::to_string(model.dim()));
  }

  const Eigen::MatrixXd map = model.transform();
  const std::vector<double> pos = batch_distances(batch.query, batch.positives, map);
  const std::vector<double> neg = batch_distances(batch.query, batch.negatives, map);
  const double hardest_pos = *std::max_element(pos.begin(), pos.end());
  const double hardest_neg = *std::min_element(neg.begin(), neg.end());

  const double loss = batch.margin + hardest_pos - hardest_neg;
  return hinge ? std::max(0.0, loss) : loss;
}

std::pair<std::size_t, std::size_t> mine_hardest(
    const Eigen::VectorXd& query, const std::vector<Eigen::VectorXd>& positives,
    const std::vector<Eigen::VectorXd>& negatives, const MetricModel& model) {
  if (positives.empty() || negatives.empty()) {
    throw EmptyList("both candidate lists must be non-empty");
  }
  if (query.size() != model.dim()) {
    throw ShapeMismatch("query length " + std::to_string(query.size()) +
                        " does not match model dimension " +
                        std::to_string(model.dim()));
  }

  const Eigen::MatrixXd map = model.transform();
  const std::vector<double> pos = batch_distances(query, positives, map);
  const std::vector<double> neg = batch_distances(query, negatives, map);
  // max/min_element keep the first extremum, so ties go to the lowest index.
  const auto hardest_pos = std::max_element(pos.begin(), pos.end()) - pos.begin();
  const auto hardest_neg = std::min_element(neg.begin(), neg.end()) - neg.begin();
  return {static_cast<std::size_t>(hardest_pos), static_cast<std::size_t>(hardest_neg)};
}

}  // namespace lpr

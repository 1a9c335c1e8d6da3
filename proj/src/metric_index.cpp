#include "lpr/metric_index.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace lpr {

double mahalanobis_distance(const Eigen::VectorXd& f_i, const Eigen::VectorXd& f_j,
                            const MetricModel& model) {
  if (f_i.size() != model.dim() || f_j.size() != model.dim()) {
    throw ShapeMismatch("descriptor lengths " + std::to_string(f_i.size()) + "/" +
                        std::to_string(f_j.size()) + " do not match model dimension " +
                        std::to_string(model.dim()));
  }
  // |T^T (f_i - f_j)| with T = W1*W2; the difference cancels the mean, and
  // staging through W1 then W2 avoids forming T (or the dense metric) at all.
  const Eigen::VectorXd diff = f_i - f_j;
  return (model.w2.transpose() * (model.w1.transpose() * diff)).norm();
}

MetricIndex build_index(const DescriptorSet& set, const MetricModel& model) {
  if (set.dim() != model.dim() && set.size() > 0) {
    throw ShapeMismatch("descriptor dimension " + std::to_string(set.dim()) +
                        " does not match model dimension " +
                        std::to_string(model.dim()));
  }

  MetricIndex index;
  index.map = model.transform();
  index.mean = model.mean;
  index.frame_ids = set.frame_ids;
  index.positions = set.positions;
  if (set.size() > 0) {
    index.transformed =
        (set.vectors.cast<double>().rowwise() - model.mean.transpose()) * index.map;
  } else {
    index.transformed.resize(0, index.map.cols());
  }
  return index;
}

std::vector<Neighbor> query_knn(const MetricIndex& index, const Eigen::VectorXd& query,
                                int k) {
  if (k < 1) {
    throw Error("k must be at least 1");
  }
  if (query.size() != index.input_dim()) {
    throw ShapeMismatch("query length " + std::to_string(query.size()) +
                        " does not match index dimension " +
                        std::to_string(index.input_dim()));
  }

  const Eigen::RowVectorXd mapped =
      (query - index.mean).transpose() * index.map;
  const Eigen::VectorXd distances =
      (index.transformed.rowwise() - mapped).rowwise().norm();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(index.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto closer = [&](Eigen::Index a, Eigen::Index b) {
    if (distances(a) != distances(b)) {
      return distances(a) < distances(b);
    }
    return index.frame_ids[static_cast<std::size_t>(a)] <
           index.frame_ids[static_cast<std::size_t>(b)];
  };
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                 order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), closer);

  std::vector<Neighbor> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const Eigen::Index row = order[i];
    hits.push_back({index.frame_ids[static_cast<std::size_t>(row)], distances(row)});
  }
  return hits;
}

}  // namespace lpr

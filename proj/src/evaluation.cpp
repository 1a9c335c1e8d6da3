#include "lpr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lpr {

namespace {

/// True when the ranked hits contain a positive within the first n entries.
bool hit_within(const std::vector<Neighbor>& hits,
                const std::vector<std::uint32_t>& positives, int n) {
  const std::size_t depth = std::min<std::size_t>(hits.size(),
                                                  static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < depth; ++i) {
    if (std::binary_search(positives.begin(), positives.end(), hits[i].frame_id)) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::size_t GroundTruth::num_evaluable() const {
  return static_cast<std::size_t>(
      std::count_if(positives.begin(), positives.end(),
                    [](const std::vector<std::uint32_t>& p) { return !p.empty(); }));
}

GroundTruth build_ground_truth(const PositionMatrix& query_positions,
                               const std::vector<std::uint32_t>& query_frames,
                               const PositionMatrix& db_positions,
                               const std::vector<std::uint32_t>& db_frames,
                               double gt_radius, int exclusion_frames,
                               bool same_sequence) {
  if (static_cast<Eigen::Index>(query_frames.size()) != query_positions.rows()) {
    throw ShapeMismatch("query frames/positions disagree");
  }
  if (static_cast<Eigen::Index>(db_frames.size()) != db_positions.rows()) {
    throw ShapeMismatch("database frames/positions disagree");
  }

  GroundTruth gt;
  gt.gt_radius = gt_radius;
  gt.exclusion_frames = exclusion_frames;
  gt.positives.resize(static_cast<std::size_t>(query_positions.rows()));
  const double radius_sq = gt_radius * gt_radius;

  for (Eigen::Index q = 0; q < query_positions.rows(); ++q) {
    auto& positives = gt.positives[static_cast<std::size_t>(q)];
    const double qx = query_positions(q, 0);
    const double qy = query_positions(q, 1);
    const auto q_frame =
        static_cast<std::int64_t>(query_frames[static_cast<std::size_t>(q)]);
    for (Eigen::Index d = 0; d < db_positions.rows(); ++d) {
      const auto d_frame =
          static_cast<std::int64_t>(db_frames[static_cast<std::size_t>(d)]);
      // On a single trajectory, recent frames are trivially close; keep them
      // out of the ground truth so retrieval cannot score on them.
      if (same_sequence && std::abs(d_frame - q_frame) <= exclusion_frames) {
        continue;
      }
      const double dx = db_positions(d, 0) - qx;
      const double dy = db_positions(d, 1) - qy;
      if (dx * dx + dy * dy <= radius_sq) {
        positives.push_back(db_frames[static_cast<std::size_t>(d)]);
      }
    }
    std::sort(positives.begin(), positives.end());
  }
  return gt;
}

double recall_at_n(const std::vector<std::vector<Neighbor>>& results,
                   const GroundTruth& gt, int n) {
  if (n < 1) {
    throw Error("n must be at least 1");
  }
  if (results.size() != gt.positives.size()) {
    throw ShapeMismatch("result count " + std::to_string(results.size()) +
                        " does not match query count " +
                        std::to_string(gt.positives.size()));
  }
  const std::size_t evaluable = gt.num_evaluable();
  if (evaluable == 0) {
    return 0.0;
  }
  std::size_t hits = 0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    if (!gt.positives[q].empty() && hit_within(results[q], gt.positives[q], n)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(evaluable);
}

double recall_at_top1_percent(const std::vector<std::vector<Neighbor>>& results,
                              const GroundTruth& gt, Eigen::Index db_size) {
  const auto budget = static_cast<int>(
      std::max<Eigen::Index>(1, (db_size + 99) / 100));  // ceil(size/100)
  return recall_at_n(results, gt, budget);
}

std::vector<std::pair<double, double>> precision_recall_curve(
    const std::vector<std::optional<Neighbor>>& top1, const GroundTruth& gt) {
  if (top1.size() != gt.positives.size()) {
    throw ShapeMismatch("top-1 count does not match query count");
  }

  // One (distance, correct) observation per answered query; sweeping the
  // acceptance threshold upward admits them in distance order.
  struct Observation {
    double distance;
    bool correct;
  };
  std::vector<Observation> observations;
  observations.reserve(top1.size());
  for (std::size_t q = 0; q < top1.size(); ++q) {
    if (!top1[q].has_value()) {
      continue;
    }
    const bool correct = std::binary_search(gt.positives[q].begin(),
                                            gt.positives[q].end(),
                                            top1[q]->frame_id);
    observations.push_back({top1[q]->distance, correct});
  }
  std::sort(observations.begin(), observations.end(),
            [](const Observation& a, const Observation& b) {
              return a.distance < b.distance;
            });

  const double evaluable = static_cast<double>(gt.num_evaluable());
  std::vector<std::pair<double, double>> curve;
  std::size_t true_positives = 0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (observations[i].correct) {
      ++true_positives;
    }
    // Emit one point per distinct threshold, after all ties are admitted.
    if (i + 1 < observations.size() &&
        observations[i + 1].distance == observations[i].distance) {
      continue;
    }
    const double predicted = static_cast<double>(i + 1);
    const double precision = static_cast<double>(true_positives) / predicted;
    const double recall =
        evaluable > 0.0 ? static_cast<double>(true_positives) / evaluable : 0.0;
    curve.emplace_back(precision, recall);
  }
  return curve;
}

double auc(const std::vector<std::pair<double, double>>& curve) {
  if (curve.empty()) {
    throw EmptyCurve("no points to integrate");
  }
  // Extend to recall 0 at the first precision, then trapezoid over recall.
  double area = 0.0;
  double prev_precision = curve.front().first;
  double prev_recall = 0.0;
  for (const auto& [precision, recall] : curve) {
    area += (recall - prev_recall) * 0.5 * (precision + prev_precision);
    prev_precision = precision;
    prev_recall = recall;
  }
  return area;
}

double f1_max(const std::vector<std::pair<double, double>>& curve) {
  if (curve.empty()) {
    throw EmptyCurve("no points to scan");
  }
  double best = 0.0;
  for (const auto& [precision, recall] : curve) {
    const double denom = precision + recall;
    if (denom > 0.0) {
      best = std::max(best, 2.0 * precision * recall / denom);
    }
  }
  return best;
}

EvalReport evaluate_results(const std::vector<std::vector<Neighbor>>& results,
                            const GroundTruth& gt, Eigen::Index db_size) {
  EvalReport report;
  for (const int n : {1, 5, 20}) {
    report.ar_at[n] = recall_at_n(results, gt, n);
  }
  report.recall_at_1 = report.ar_at.at(1);
  report.recall_at_1pct = recall_at_top1_percent(results, gt, db_size);

  std::vector<std::optional<Neighbor>> top1;
  top1.reserve(results.size());
  for (const auto& hits : results) {
    if (hits.empty()) {
      top1.emplace_back(std::nullopt);
    } else {
      top1.emplace_back(hits.front());
    }
  }
  report.pr_curve = precision_recall_curve(top1, gt);
  if (!report.pr_curve.empty()) {
    report.auc = auc(report.pr_curve);
    report.f1max = f1_max(report.pr_curve);
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char line[64];
  for (const auto& [n, value] : report.ar_at) {
    std::snprintf(line, sizeof(line), "ar@%d=%.6f\n", n, value);
    out << line;
  }
  std::snprintf(line, sizeof(line), "auc=%.6f\n", report.auc);
  out << line;
  std::snprintf(line, sizeof(line), "f1max=%.6f\n", report.f1max);
  out << line;
  std::snprintf(line, sizeof(line), "recall@1=%.6f\n", report.recall_at_1);
  out << line;
  std::snprintf(line, sizeof(line), "recall@1pct=%.6f\n", report.recall_at_1pct);
  out << line;
  return out.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& report_path,
                  const std::filesystem::path& csv_path) {
  {
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) {
      throw IoError("cannot open " + report_path.string() + " for writing");
    }
    out << format_report(report);
    out.flush();
    if (!out) {
      throw IoError("write failed on " + report_path.string());
    }
  }
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) {
    throw IoError("cannot open " + csv_path.string() + " for writing");
  }
  csv << "precision,recall\n";
  char line[64];
  for (const auto& [precision, recall] : report.pr_curve) {
    std::snprintf(line, sizeof(line), "%.9f,%.9f\n", precision, recall);
    csv << line;
  }
  csv.flush();
  if (!csv) {
    throw IoError("write failed on " + csv_path.string());
  }
}

}  // namespace lpr

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lpr/descriptor_store.hpp"
#include "lpr/error.hpp"
#include "lpr/metric_index.hpp"

namespace lpr {

/// Per-query ground truth: the database frame ids within gt_radius meters
/// of the query position (after any exclusion). A query with an empty
/// positive set is not evaluable for recall but still answers queries.
struct GroundTruth {
  std::vector<std::vector<std::uint32_t>> positives;  // per query, sorted
  double gt_radius = 10.0;
  int exclusion_frames = 100;

  std::size_t num_queries() const { return positives.size(); }
  std::size_t num_evaluable() const;
};

/// Builds ground truth from 3-D positions (planar xy distance <= gt_radius).
/// When same_sequence is true, database frames within exclusion_frames of
/// the query's own frame id (|db_frame - query_frame| <= exclusion_frames)
/// are excluded, so a trajectory does not match its immediate past.
/// Throws ShapeMismatch if positions/frames counts disagree.
GroundTruth build_ground_truth(const PositionMatrix& query_positions,
                               const std::vector<std::uint32_t>& query_frames,
                               const PositionMatrix& db_positions,
                               const std::vector<std::uint32_t>& db_frames,
                               double gt_radius, int exclusion_frames,
                               bool same_sequence);

/// Average recall at n: the fraction of evaluable queries whose top-n
/// results contain at least one positive. Returns 0 when nothing is
/// evaluable. Throws ShapeMismatch if results/gt counts disagree,
/// Error if n < 1.
double recall_at_n(const std::vector<std::vector<Neighbor>>& results,
                   const GroundTruth& gt, int n);

/// Recall where the retrieval budget is 1% of the database:
/// n = max(1, ceil(db_size / 100)).
double recall_at_top1_percent(const std::vector<std::vector<Neighbor>>& results,
                              const GroundTruth& gt, Eigen::Index db_size);

/// Precision/recall pairs from a distance-threshold sweep over each query's
/// top-1 result (absent for queries with an empty database). At threshold
/// tau, a query is predicted positive iff its top-1 distance <= tau; the
/// prediction is correct iff the top-1 frame id is in the query's positive
/// set. One curve point per distinct top-1 distance, in increasing-tau
/// order: precision = TP / predicted-positives, recall = TP / evaluable
/// queries (0 when a denominator is 0). Queries without positives still
/// count toward predicted positives, depressing precision.
std::vector<std::pair<double, double>> precision_recall_curve(
    const std::vector<std::optional<Neighbor>>& top1, const GroundTruth& gt);

/// Area under the precision(recall) curve by trapezoidal rule, with the
/// curve extended to recall 0 at its first precision value. Points must be
/// in the sweep order precision_recall_curve produces (recall
/// non-decreasing). Throws EmptyCurve on an empty curve.
double auc(const std::vector<std::pair<double, double>>& curve);

/// max over curve points of 2*p*r/(p+r), 0 where p+r = 0.
/// Throws EmptyCurve on an empty curve.
double f1_max(const std::vector<std::pair<double, double>>& curve);

/// All metrics of one evaluation run.
struct EvalReport {
  std::map<int, double> ar_at;  // average recall at selected n
  double auc = 0.0;
  double f1max = 0.0;
  double recall_at_1 = 0.0;
  double recall_at_1pct = 0.0;
  std::vector<std::pair<double, double>> pr_curve;  // (precision, recall)
};

/// Computes the standard report (AR at 1/5/20, AUC, F1max, recall at 1 and
/// at 1% of the database) from per-query ranked results.
EvalReport evaluate_results(const std::vector<std::vector<Neighbor>>& results,
                            const GroundTruth& gt, Eigen::Index db_size);

/// "key=value" lines, 6 decimal places, one metric per line.
std::string format_report(const EvalReport& report);

/// Writes format_report() to report_path and the PR curve to csv_path as
/// "precision,recall" rows. Throws IoError on write failure.
void write_report(const EvalReport& report, const std::filesystem::path& report_path,
                  const std::filesystem::path& csv_path);

}  // namespace lpr

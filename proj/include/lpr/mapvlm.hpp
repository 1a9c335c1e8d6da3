#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lpr/descriptor_store.hpp"
#include "lpr/error.hpp"

namespace lpr {

/// Hyper-parameters of the metric learning stage.
struct MapvlmConfig {
  int d1 = 256;            // variance-preserving reduction size
  int d2 = 256;            // discriminant subspace size, d2 <= d1
  int k_neighbor = 7;      // neighbor rank for adaptive bandwidths
  double reg_epsilon_scale = 1e-6;  // scatter regularization, relative to trace
  int min_class_size = 2;  // classes smaller than this are dropped before fitting
};

/// Learned Mahalanobis metric in factored form. The metric matrix is
/// M = W1 * W2 * W2^T * W1^T (never stored densely for retrieval); distances
/// use the equivalent map x -> (W1*W2)^T (x - mean).
struct MetricModel {
  Eigen::MatrixXd w1;                 // D x d1, orthonormal columns
  Eigen::MatrixXd w2;                 // d1 x d2
  Eigen::VectorXd mean;               // D, training mean
  Eigen::VectorXd pca_eigenvalues;    // d1, descending (empty if not tracked)
  Eigen::VectorXd lfda_eigenvalues;   // d2, descending (empty if not tracked)

  Eigen::Index dim() const { return w1.rows(); }
  Eigen::Index reduced_dim() const { return w1.cols(); }
  Eigen::Index metric_dim() const { return w2.cols(); }

  /// The combined map T = W1 * W2 (D x d2).
  Eigen::MatrixXd transform() const { return w1 * w2; }

  /// Dense D x D metric matrix T * T^T. For verification and tests only.
  Eigen::MatrixXd materialize_metric() const;

  /// Identity metric in D dimensions: distances reduce to Euclidean.
  static MetricModel identity(Eigen::Index d);
};

/// Summary statistics of a fit, for reporting.
struct FitInfo {
  int classes_used = 0;
  Eigen::Index samples_used = 0;
  Eigen::Index samples_dropped = 0;
  double total_variance = 0.0;  // trace of the training covariance
};

/// Mean and biased covariance C = (1/N) * sum (x - mean)(x - mean)^T of the
/// rows of x. Throws EmptySet if x has no rows.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> compute_covariance(const Eigen::MatrixXd& x);

/// Top-d1 eigenvectors of the symmetric matrix c, as columns ordered by
/// descending eigenvalue, each column sign-normalized so its largest-
/// magnitude entry is positive. Optionally reports the kept eigenvalues.
/// Throws NotSymmetric (asymmetry beyond 1e-8), ShapeMismatch (d1 out of
/// range), SolverFailure if the eigensolver fails.
Eigen::MatrixXd pca_projection(const Eigen::MatrixXd& c, int d1,
                               Eigen::VectorXd* eigenvalues = nullptr);

/// Centered reduction (x - mean) * w1, rows are reduced samples.
/// Throws ShapeMismatch on incompatible shapes.
Eigen::MatrixXd reduce(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w1,
                       const Eigen::VectorXd& mean);

/// Per-sample adaptive bandwidth: Euclidean distance from row i to its k-th
/// nearest neighbor within the same class (self excluded). Classes smaller
/// than k+1 fall back to the farthest same-class neighbor. Bandwidths are
/// floored at 1e-12. Throws ShapeMismatch (labels/rows mismatch),
/// DegenerateClass if any class has a single member, EmptySet on no rows.
Eigen::VectorXd adaptive_bandwidths(const Eigen::MatrixXd& x_red,
                                    const std::vector<std::int32_t>& labels,
                                    int k);

/// Heat-kernel affinities A(i,j) = exp(-|xi - xj|^2 / (sigma_i * sigma_j)),
/// split into a within-class matrix (entries where labels match, including
/// the diagonal) and a between-class matrix (labels differ). Both symmetric,
/// entries in [0, 1], and their sum carries the full kernel off-diagonally.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> affinity_matrices(
    const Eigen::MatrixXd& x_red, const std::vector<std::int32_t>& labels,
    const Eigen::VectorXd& sigma);

/// Weighted pairwise scatters
///   S = 1/2 * sum_ij A(i,j) (xi - xj)(xi - xj)^T
/// for the within- and between-class affinity matrices, computed via the
/// graph Laplacian identity S = X^T (D - A) X and symmetrized. Both results
/// are symmetric positive semi-definite.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> scatter_matrices(
    const Eigen::MatrixXd& x_red, const Eigen::MatrixXd& a_within,
    const Eigen::MatrixXd& a_between);

/// Top-d2 solutions of S_B w = lambda S_W w, solved on the regularized
/// S_W + eps*I with eps = reg_epsilon_scale * trace(S_W) / dim (or
/// reg_epsilon_scale itself if the trace is zero) via Cholesky reduction to
/// an ordinary symmetric problem. Returns (W2 with descending-eigenvalue
/// columns, eigenvalues); columns satisfy w^T (S_W + eps I) w = 1 and are
/// sign-normalized like pca_projection. Throws NotSymmetric, ShapeMismatch
/// (d2 out of range), SolverFailure if Cholesky fails after regularization.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> solve_generalized_eig(
    const Eigen::MatrixXd& s_between, const Eigen::MatrixXd& s_within, int d2,
    double reg_epsilon_scale);

/// Assembles a model from its parts, checking shape consistency
/// (ShapeMismatch otherwise). Warns on stderr if w2 is identically zero
/// (the metric collapses every distance to 0). Eigenvalue vectors may be
/// empty when not tracked.
MetricModel build_metric(Eigen::MatrixXd w1, Eigen::MatrixXd w2, Eigen::VectorXd mean,
                         Eigen::VectorXd lfda_eigenvalues = Eigen::VectorXd(),
                         Eigen::VectorXd pca_eigenvalues = Eigen::VectorXd());

/// Full fitting chain on a labeled descriptor set: drop classes smaller than
/// cfg.min_class_size, covariance -> variance-preserving reduction ->
/// adaptive bandwidths -> affinities -> scatters -> generalized
/// eigenproblem -> model. Deterministic: identical inputs give bit-identical
/// models. Throws InsufficientData (unlabeled set, or fewer than two classes
/// survive; message carries the class counts), ConfigError (invalid cfg),
/// plus anything the stages above throw. Warns on stderr when the surviving
/// sample count is below d1 + 1.
MetricModel fit(const DescriptorSet& set, const MapvlmConfig& cfg,
                FitInfo* info = nullptr);

/// Binary model container, magic "SPD1":
///   magic[4], D u32, d1 u32, d2 u32 (little-endian),
///   mean (D float64), W1 (D*d1 float64, row-major),
///   W2 (d1*d2 float64, row-major), eigenvalues (d2 float64).
/// Round-trips bit-exactly. Throws like the descriptor container.
MetricModel load_metric(const std::filesystem::path& path);
void save_metric(const MetricModel& model, const std::filesystem::path& path);

}  // namespace lpr

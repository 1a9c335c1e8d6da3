#include "lpr/mapvlm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace lpr {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'D', '1'};
constexpr double kSymmetryTolerance = 1e-8;
constexpr double kBandwidthFloor = 1e-12;

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw NotSymmetric(std::string(name) + " is not square: " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  const double asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > kSymmetryTolerance) {
    throw NotSymmetric(std::string(name) + " asymmetry " + std::to_string(asymmetry) +
                       " exceeds tolerance");
  }
}

/// Flips each column so its largest-magnitude entry is positive (first such
/// entry on ties). Makes eigenvector signs deterministic across runs.
void normalize_column_signs(Eigen::MatrixXd& m) {
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    Eigen::Index argmax = 0;
    m.col(col).cwiseAbs().maxCoeff(&argmax);
    if (m(argmax, col) < 0.0) {
      m.col(col) = -m.col(col);
    }
  }
}

std::map<std::int32_t, std::vector<Eigen::Index>> group_by_label(
    const std::vector<std::int32_t>& labels) {
  std::map<std::int32_t, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  return groups;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failed on " + path.string());
  }
  return std::move(buffer).str();
}

}  // namespace

Eigen::MatrixXd MetricModel::materialize_metric() const {
  const Eigen::MatrixXd t = transform();
  return t * t.transpose();
}

MetricModel MetricModel::identity(Eigen::Index d) {
  MetricModel model;
  model.w1 = Eigen::MatrixXd::Identity(d, d);
  model.w2 = Eigen::MatrixXd::Identity(d, d);
  model.mean = Eigen::VectorXd::Zero(d);
  model.pca_eigenvalues = Eigen::VectorXd::Ones(d);
  model.lfda_eigenvalues = Eigen::VectorXd::Ones(d);
  return model;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> compute_covariance(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) {
    throw EmptySet("cannot estimate statistics from zero samples");
  }
  const Eigen::VectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(x.rows());
  // Exact symmetry despite rounding; built as a fresh matrix to avoid
  // aliasing the transpose read with the write.
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  return {sym, mean};
}

Eigen::MatrixXd pca_projection(const Eigen::MatrixXd& c, int d1,
                               Eigen::VectorXd* eigenvalues) {
  require_symmetric(c, "covariance");
  if (d1 < 1 || d1 > c.rows()) {
    throw ShapeMismatch("cannot keep " + std::to_string(d1) + " directions of a " +
                        std::to_string(c.rows()) + "-dimensional covariance");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
  if (solver.info() != Eigen::Success) {
    throw SolverFailure("eigendecomposition did not converge");
  }

  // Eigen reports ascending eigenvalues; keep the top d1 in descending order.
  const Eigen::Index dim = c.rows();
  Eigen::MatrixXd w1(dim, d1);
  Eigen::VectorXd kept(d1);
  for (int j = 0; j < d1; ++j) {
    const Eigen::Index src = dim - 1 - j;
    w1.col(j) = solver.eigenvectors().col(src);
    kept(j) = solver.eigenvalues()(src);
  }
  normalize_column_signs(w1);
  if (eigenvalues != nullptr) {
    *eigenvalues = kept;
  }
  return w1;
}

Eigen::MatrixXd reduce(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w1,
                       const Eigen::VectorXd& mean) {
  if (x.cols() != w1.rows() || mean.size() != w1.rows()) {
    throw ShapeMismatch("reduction shapes disagree: samples have " +
                        std::to_string(x.cols()) + " dims, basis expects " +
                        std::to_string(w1.rows()) + ", mean has " +
                        std::to_string(mean.size()));
  }
  return (x.rowwise() - mean.transpose()) * w1;
}

Eigen::VectorXd adaptive_bandwidths(const Eigen::MatrixXd& x_red,
                                    const std::vector<std::int32_t>& labels,
                                    int k) {
  const Eigen::Index n = x_red.rows();
  if (n == 0) {
    throw EmptySet("no samples");
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw ShapeMismatch(std::to_string(labels.size()) + " labels for " +
                        std::to_string(n) + " samples");
  }
  if (k < 1) {
    throw Error("neighbor rank must be at least 1");
  }

  Eigen::VectorXd sigma(n);
  for (const auto& [label, members] : group_by_label(labels)) {
    if (members.size() < 2) {
      throw DegenerateClass("class " + std::to_string(label) +
                            " has a single member; no neighbor distance exists");
    }
    for (const Eigen::Index i : members) {
      std::vector<double> dists;
      dists.reserve(members.size() - 1);
      for (const Eigen::Index j : members) {
        if (j != i) {
          dists.push_back((x_red.row(i) - x_red.row(j)).norm());
        }
      }
      // k-th nearest same-class neighbor; fall back to the farthest when the
      // class is too small to have k neighbors.
      const std::size_t rank = std::min<std::size_t>(k, dists.size());
      std::nth_element(dists.begin(), dists.begin() + (rank - 1), dists.end());
      sigma(i) = std::max(dists[rank - 1], kBandwidthFloor);
    }
  }
  return sigma;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> affinity_matrices(
    const Eigen::MatrixXd& x_red, const std::vector<std::int32_t>& labels,
    const Eigen::VectorXd& sigma) {
  const Eigen::Index n = x_red.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n || sigma.size() != n) {
    throw ShapeMismatch("labels/bandwidths do not match the sample count");
  }

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    within(i, i) = 1.0;  // exp(0), same class as itself
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist_sq = (x_red.row(i) - x_red.row(j)).squaredNorm();
      const double affinity = std::exp(-dist_sq / (sigma(i) * sigma(j)));
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        within(i, j) = within(j, i) = affinity;
      } else {
        between(i, j) = between(j, i) = affinity;
      }
    }
  }
  return {within, between};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> scatter_matrices(
    const Eigen::MatrixXd& x_red, const Eigen::MatrixXd& a_within,
    const Eigen::MatrixXd& a_between) {
  const Eigen::Index n = x_red.rows();
  if (a_within.rows() != n || a_within.cols() != n || a_between.rows() != n ||
      a_between.cols() != n) {
    throw ShapeMismatch("affinity matrices do not match the sample count");
  }

  // 1/2 sum_ij A(i,j) (xi-xj)(xi-xj)^T == X^T (diag(A*1) - A) X,
  // the graph-Laplacian form; O(n^2 d) instead of O(n^2 d^2).
  const auto weighted_scatter = [&](const Eigen::MatrixXd& a) {
    Eigen::MatrixXd laplacian = -a;
    laplacian.diagonal() += a.rowwise().sum();
    Eigen::MatrixXd s = x_red.transpose() * laplacian * x_red;
    return Eigen::MatrixXd(0.5 * (s + s.transpose()));  // exact symmetry
  };
  return {weighted_scatter(a_within), weighted_scatter(a_between)};
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> solve_generalized_eig(
    const Eigen::MatrixXd& s_between, const Eigen::MatrixXd& s_within, int d2,
    double reg_epsilon_scale) {
  require_symmetric(s_between, "between-class scatter");
  require_symmetric(s_within, "within-class scatter");
  if (s_between.rows() != s_within.rows()) {
    throw ShapeMismatch("scatter sizes disagree");
  }
  const Eigen::Index dim = s_within.rows();
  if (d2 < 1 || d2 > dim) {
    throw ShapeMismatch("cannot extract " + std::to_string(d2) +
                        " directions from a " + std::to_string(dim) +
                        "-dimensional problem");
  }

  // Ridge keeps the Cholesky factor well defined when the within-class
  // scatter is rank deficient (guaranteed for few samples).
  const double trace = s_within.trace();
  const double epsilon = trace > 0.0
                             ? reg_epsilon_scale * trace / static_cast<double>(dim)
                             : reg_epsilon_scale;
  Eigen::MatrixXd regularized = s_within;
  regularized.diagonal().array() += epsilon;

  const Eigen::LLT<Eigen::MatrixXd> llt(regularized);
  if (llt.info() != Eigen::Success) {
    throw SolverFailure("within-class scatter is not positive definite even "
                        "after regularization");
  }
  const Eigen::MatrixXd l = llt.matrixL();

  // Reduce S_B w = lambda (S_W + eps I) w to the ordinary symmetric problem
  // (L^-1 S_B L^-T) y = lambda y with w = L^-T y.
  const Eigen::MatrixXd half = l.triangularView<Eigen::Lower>().solve(s_between);
  const Eigen::MatrixXd both =
      l.triangularView<Eigen::Lower>().solve(half.transpose());
  const Eigen::MatrixXd reduced = 0.5 * (both + both.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(reduced);
  if (solver.info() != Eigen::Success) {
    throw SolverFailure("eigendecomposition did not converge");
  }

  Eigen::MatrixXd y(dim, d2);
  Eigen::VectorXd values(d2);
  for (int j = 0; j < d2; ++j) {
    const Eigen::Index src = dim - 1 - j;  // descending eigenvalues
    y.col(j) = solver.eigenvectors().col(src);
    values(j) = solver.eigenvalues()(src);
  }
  // Unit y columns make w^T (S_W + eps I) w = 1 automatically.
  Eigen::MatrixXd w2 =
      l.transpose().triangularView<Eigen::Upper>().solve(y);
  normalize_column_signs(w2);
  return {w2, values};
}

MetricModel build_metric(Eigen::MatrixXd w1, Eigen::MatrixXd w2, Eigen::VectorXd mean,
                         Eigen::VectorXd lfda_eigenvalues,
                         Eigen::VectorXd pca_eigenvalues) {
  if (w1.cols() != w2.rows()) {
    throw ShapeMismatch("basis is " + std::to_string(w1.rows()) + "x" +
                        std::to_string(w1.cols()) + " but discriminant map expects " +
                        std::to_string(w2.rows()) + " inputs");
  }
  if (mean.size() != w1.rows()) {
    throw ShapeMismatch("mean length " + std::to_string(mean.size()) +
                        " does not match input dimension " +
                        std::to_string(w1.rows()));
  }
  if (lfda_eigenvalues.size() != 0 && lfda_eigenvalues.size() != w2.cols()) {
    throw ShapeMismatch("discriminant eigenvalue count does not match");
  }
  if (pca_eigenvalues.size() != 0 && pca_eigenvalues.size() != w1.cols()) {
    throw ShapeMismatch("variance eigenvalue count does not match");
  }
  if (w2.size() > 0 && w2.isZero(0.0)) {
    std::cerr << "warning: discriminant map is identically zero; every distance "
                 "under this metric collapses to 0\n";
  }

  MetricModel model;
  model.w1 = std::move(w1);
  model.w2 = std::move(w2);
  model.mean = std::move(mean);
  model.lfda_eigenvalues = std::move(lfda_eigenvalues);
  model.pca_eigenvalues = std::move(pca_eigenvalues);
  return model;
}

MetricModel fit(const DescriptorSet& set, const MapvlmConfig& cfg, FitInfo* info) {
  if (cfg.d1 < 1 || cfg.d2 < 1 || cfg.d2 > cfg.d1) {
    throw ConfigError("need 1 <= d2 <= d1, got d1=" + std::to_string(cfg.d1) +
                      " d2=" + std::to_string(cfg.d2));
  }
  if (cfg.d1 > set.dim()) {
    throw ConfigError("d1=" + std::to_string(cfg.d1) + " exceeds descriptor dimension " +
                      std::to_string(set.dim()));
  }
  if (cfg.min_class_size < 2) {
    throw ConfigError("min_class_size must be at least 2");
  }
  if (!set.has_labels()) {
    throw InsufficientData("descriptor set has no class labels");
  }
  if (static_cast<Eigen::Index>(set.labels.size()) != set.size()) {
    throw ShapeMismatch("label count does not match descriptor count");
  }

  // Drop classes too small for neighborhood statistics.
  const auto groups = group_by_label(set.labels);
  std::vector<Eigen::Index> keep;
  int classes_used = 0;
  for (const auto& [label, members] : groups) {
    if (members.size() >= static_cast<std::size_t>(cfg.min_class_size)) {
      keep.insert(keep.end(), members.begin(), members.end());
      ++classes_used;
    }
  }
  std::sort(keep.begin(), keep.end());  // preserve original sample order
  if (classes_used < 2) {
    throw InsufficientData(
        "need at least 2 classes with >= " + std::to_string(cfg.min_class_size) +
        " members; of " + std::to_string(groups.size()) + " classes only " +
        std::to_string(classes_used) + " qualify");
  }

  const auto n_eff = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd x(n_eff, set.dim());
  std::vector<std::int32_t> labels(keep.size());
  for (Eigen::Index i = 0; i < n_eff; ++i) {
    x.row(i) = set.vectors.row(keep[static_cast<std::size_t>(i)]).cast<double>();
    labels[static_cast<std::size_t>(i)] =
        set.labels[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])];
  }
  if (n_eff < static_cast<Eigen::Index>(cfg.d1) + 1) {
    std::cerr << "warning: fitting on " << n_eff << " samples with d1=" << cfg.d1
              << "; at least d1+1 samples are recommended\n";
  }

  const auto [cov, mean] = compute_covariance(x);
  Eigen::VectorXd pca_eigenvalues;
  const Eigen::MatrixXd w1 = pca_projection(cov, cfg.d1, &pca_eigenvalues);
  const Eigen::MatrixXd x_red = reduce(x, w1, mean);
  const Eigen::VectorXd sigma = adaptive_bandwidths(x_red, labels, cfg.k_neighbor);
  const auto [a_within, a_between] = affinity_matrices(x_red, labels, sigma);
  const auto [s_within, s_between] = scatter_matrices(x_red, a_within, a_between);
  auto [w2, lfda_eigenvalues] =
      solve_generalized_eig(s_between, s_within, cfg.d2, cfg.reg_epsilon_scale);

  if (info != nullptr) {
    info->classes_used = classes_used;
    info->samples_used = n_eff;
    info->samples_dropped = set.size() - n_eff;
    info->total_variance = cov.trace();
  }
  return build_metric(w1, std::move(w2), mean, std::move(lfda_eigenvalues),
                      std::move(pca_eigenvalues));
}

MetricModel load_metric(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 4) {
    throw TruncatedFile(path.string() + ": too short for a magic header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagic(path.string() + ": not a metric model container");
  }
  if (bytes.size() < 16) {
    throw TruncatedFile(path.string() + ": header cut off");
  }
  std::uint32_t dims[3];
  std::memcpy(dims, bytes.data() + 4, sizeof(dims));
  const std::uint64_t d = dims[0], d1 = dims[1], d2 = dims[2];
  const std::uint64_t expected =
      16 + sizeof(double) * (d + d * d1 + d1 * d2 + d2);
  if (bytes.size() != expected) {
    throw TruncatedFile(path.string() + ": payload is " +
                        std::to_string(bytes.size()) + " bytes, header declares " +
                        std::to_string(expected));
  }

  MetricModel model;
  model.mean.resize(static_cast<Eigen::Index>(d));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w1(
      static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d1));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w2(
      static_cast<Eigen::Index>(d1), static_cast<Eigen::Index>(d2));
  model.lfda_eigenvalues.resize(static_cast<Eigen::Index>(d2));

  const char* cursor = bytes.data() + 16;
  std::memcpy(model.mean.data(), cursor, d * sizeof(double));
  cursor += d * sizeof(double);
  std::memcpy(w1.data(), cursor, d * d1 * sizeof(double));
  cursor += d * d1 * sizeof(double);
  std::memcpy(w2.data(), cursor, d1 * d2 * sizeof(double));
  cursor += d1 * d2 * sizeof(double);
  std::memcpy(model.lfda_eigenvalues.data(), cursor, d2 * sizeof(double));
  model.w1 = w1;
  model.w2 = w2;
  return model;
}

void save_metric(const MetricModel& model, const std::filesystem::path& path) {
  Eigen::VectorXd eigenvalues = model.lfda_eigenvalues;
  if (eigenvalues.size() == 0) {
    eigenvalues = Eigen::VectorXd::Zero(model.metric_dim());
  }
  if (eigenvalues.size() != model.metric_dim()) {
    throw ShapeMismatch("eigenvalue count does not match the model");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(model.dim()),
                                 static_cast<std::uint32_t>(model.reduced_dim()),
                                 static_cast<std::uint32_t>(model.metric_dim())};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(model.mean.data()),
            static_cast<std::streamsize>(sizeof(double)) * model.mean.size());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      w1 = model.w1;
  out.write(reinterpret_cast<const char*>(w1.data()),
            static_cast<std::streamsize>(sizeof(double)) * w1.size());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      w2 = model.w2;
  out.write(reinterpret_cast<const char*>(w2.data()),
            static_cast<std::streamsize>(sizeof(double)) * w2.size());
  out.write(reinterpret_cast<const char*>(eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double)) * eigenvalues.size());
  out.flush();
  if (!out) {
    throw IoError("write failed on " + path.string());
  }
}

}  // namespace lpr

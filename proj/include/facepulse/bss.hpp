#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "facepulse/csv.hpp"
#include "facepulse/error.hpp"
#include "facepulse/stats.hpp"

namespace facepulse {

enum class BssMethod { pca, fastica, jade, shibbs };

inline constexpr BssMethod kAllMethods[] = {BssMethod::fastica, BssMethod::pca, BssMethod::jade, BssMethod::shibbs};

inline std::string_view to_string(BssMethod m) {
  switch (m) {
    case BssMethod::pca: return "PCA";
    case BssMethod::fastica: return "FastICA";
    case BssMethod::jade: return "JADE";
    case BssMethod::shibbs: return "SHIBBS";
  }
  return "PCA";
}

/// Case-insensitive method lookup ("jade", "JADE", "FastICA", ...).
inline std::optional<BssMethod> parse_method(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "pca") return BssMethod::pca;
  if (lower == "fastica") return BssMethod::fastica;
  if (lower == "jade") return BssMethod::jade;
  if (lower == "shibbs") return BssMethod::shibbs;
  return std::nullopt;
}

/// Extracted sources, one row per component.
struct ComponentSet {
  Eigen::MatrixXd components;  // K x T'
  BssMethod method = BssMethod::pca;
  double sample_rate = 1.0;
  bool normalized = false;
  Eigen::MatrixXd unmixing;  // K x N, applied to centered data; empty when loaded from CSV
  Eigen::VectorXd mean;      // length N
  bool low_confidence = false;

  Eigen::Index size() const noexcept { return components.rows(); }
  Eigen::Index samples() const noexcept { return components.cols(); }

  std::vector<double> row(Eigen::Index k) const {
    std::vector<double> r(static_cast<std::size_t>(components.cols()));
    for (Eigen::Index t = 0; t < components.cols(); ++t) r[static_cast<std::size_t>(t)] = components(k, t);
    return r;
  }
};

struct WhiteningTransform {
  Eigen::VectorXd mean;    // length N
  Eigen::MatrixXd matrix;  // K x N

  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const {
    return matrix * (data.colwise() - mean);
  }
};

/// Raised when an iterative separation does not converge; carries the last unmixing estimate (K x N).
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::MatrixXd last_unmixing)
      : Error(what), last_unmixing_(std::move(last_unmixing)) {}
  const Eigen::MatrixXd& last_unmixing() const noexcept { return last_unmixing_; }

 private:
  Eigen::MatrixXd last_unmixing_;
};

namespace detail {

inline void require_finite_matrix(const Eigen::MatrixXd& data, Eigen::Index k) {
  if (k < 1) throw InvalidInput("number of components must be >= 1");
  if (data.rows() < k) throw RankDeficiency(static_cast<std::size_t>(k), static_cast<std::size_t>(data.rows()));
  if (data.cols() < 2) throw InvalidInput("need at least two samples");
  if (!data.allFinite()) throw InvalidInput("data contains non-finite values");
}

/// Eigenpairs of the sample covariance (1/T normalization), sorted by descending eigenvalue.
struct CovarianceEigen {
  Eigen::VectorXd mean;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns
  Eigen::MatrixXd centered;
};

inline CovarianceEigen covariance_eigen(const Eigen::MatrixXd& data) {
  CovarianceEigen out;
  out.mean = data.rowwise().mean();
  out.centered = data.colwise() - out.mean;
  const double t = static_cast<double>(data.cols());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(data.rows(), data.rows());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(out.centered, 1.0 / t);
  cov = cov.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
  const Eigen::Index n = data.rows();
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

inline Eigen::Index numerical_rank(const Eigen::VectorXd& descending_values) {
  if (descending_values.size() == 0 || !(descending_values(0) > 0)) return 0;
  const double tol = descending_values(0) * 1e-10;
  Eigen::Index r = 0;
  while (r < descending_values.size() && descending_values(r) > tol) ++r;
  return r;
}

/// Flips each row so that its largest-magnitude entry is positive.
inline void canonical_row_signs(Eigen::MatrixXd& rows, Eigen::MatrixXd* companion = nullptr) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::Index arg = 0;
    rows.row(i).cwiseAbs().maxCoeff(&arg);
    if (rows(i, arg) < 0) {
      rows.row(i) *= -1.0;
      if (companion) companion->row(i) *= -1.0;
    }
  }
}

/// Symmetric decorrelation W <- (W W^T)^{-1/2} W.
inline Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace detail

/// Centers `data` (N x T) and projects onto the top-k principal axes scaled to unit variance.
inline std::pair<Eigen::MatrixXd, WhiteningTransform> whiten(const Eigen::MatrixXd& data, Eigen::Index k) {
  detail::require_finite_matrix(data, k);
  auto ce = detail::covariance_eigen(data);
  const auto rank = detail::numerical_rank(ce.values);
  if (rank < k) throw RankDeficiency(static_cast<std::size_t>(k), static_cast<std::size_t>(rank));
  WhiteningTransform tr;
  tr.mean = ce.mean;
  tr.matrix = ce.vectors.leftCols(k).transpose();
  detail::canonical_row_signs(tr.matrix);
  for (Eigen::Index i = 0; i < k; ++i) tr.matrix.row(i) /= std::sqrt(ce.values(i));
  Eigen::MatrixXd white = tr.matrix * ce.centered;
  return {std::move(white), std::move(tr)};
}

/// Sample covariance with 1/T normalization (rows are variables).
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.colwise() - x.rowwise().mean();
  return c * c.transpose() / static_cast<double>(x.cols());
}

/// Projections onto the top-k covariance eigenvectors, descending eigenvalue order.
inline ComponentSet pca_components(const Eigen::MatrixXd& data, Eigen::Index k, double sample_rate = 1.0) {
  detail::require_finite_matrix(data, k);
  auto ce = detail::covariance_eigen(data);
  const auto rank = detail::numerical_rank(ce.values);
  if (rank < k) throw RankDeficiency(static_cast<std::size_t>(k), static_cast<std::size_t>(rank));
  ComponentSet cs;
  cs.method = BssMethod::pca;
  cs.sample_rate = sample_rate;
  cs.unmixing = ce.vectors.leftCols(k).transpose();
  detail::canonical_row_signs(cs.unmixing);
  cs.mean = ce.mean;
  cs.components = cs.unmixing * ce.centered;
  return cs;
}

/// Rescales every component to zero mean and unit variance (unmixing rows scaled to match).
inline ComponentSet normalize_components(ComponentSet cs) {
  for (Eigen::Index k = 0; k < cs.size(); ++k) {
    const double m = cs.components.row(k).mean();
    cs.components.row(k).array() -= m;
    const double sd = std::sqrt(cs.components.row(k).squaredNorm() / static_cast<double>(cs.samples()));
    if (sd > 0) {
      cs.components.row(k) /= sd;
      if (cs.unmixing.rows() == cs.size()) cs.unmixing.row(k) /= sd;
    }
  }
  cs.normalized = true;
  return cs;
}

/// Orders ICA outputs by descending |excess kurtosis| and fixes signs; flags Gaussian-looking results.
inline void finalize_ica(ComponentSet& cs) {
  const Eigen::Index k = cs.size();
  std::vector<double> kurt(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto r = cs.row(i);
    kurt[static_cast<std::size_t>(i)] = std::abs(stats::excess_kurtosis(r));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return kurt[static_cast<std::size_t>(a)] > kurt[static_cast<std::size_t>(b)];
  });
  Eigen::MatrixXd comps(k, cs.samples()), unmix(k, cs.unmixing.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    comps.row(i) = cs.components.row(order[static_cast<std::size_t>(i)]);
    unmix.row(i) = cs.unmixing.row(order[static_cast<std::size_t>(i)]);
  }
  detail::canonical_row_signs(unmix, &comps);
  cs.components = std::move(comps);
  cs.unmixing = std::move(unmix);

  // Four standard errors of the Gaussian excess-kurtosis estimate.
  const double gaussian_band = 4.0 * std::sqrt(24.0 / static_cast<double>(cs.samples()));
  cs.low_confidence = std::all_of(kurt.begin(), kurt.end(), [&](double v) { return v < gaussian_band; });
}

/// Amari performance index of P = W * A, normalized to [0, 1]; 0 iff P is a scaled permutation.
inline double amari_index(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols() || p.rows() < 2) throw InvalidInput("amari index needs a square matrix of size >= 2");
  const Eigen::MatrixXd a = p.cwiseAbs();
  const double k = static_cast<double>(p.rows());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) acc += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a.col(j).sum() / a.col(j).maxCoeff() - 1.0;
  return acc / (2.0 * k * (k - 1.0));
}

inline double max_abs_correlation(const Eigen::MatrixXd& rows) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j) {
      const Eigen::VectorXd a = rows.row(i).transpose(), b = rows.row(j).transpose();
      worst = std::max(worst, std::abs(stats::pearson({a.data(), static_cast<std::size_t>(a.size())},
                                                      {b.data(), static_cast<std::size_t>(b.size())})));
    }
  return worst;
}

// ComponentSet CSV:
//   # method=<name> fps=<float>
//   t,c0,c1,...
//   <time seconds>,<K floats>

inline std::string format_components(const ComponentSet& cs) {
  std::ostringstream out;
  out << "# method=" << to_string(cs.method) << " fps=" << csv::format_double(cs.sample_rate) << "\n";
  out << "t";
  for (Eigen::Index k = 0; k < cs.size(); ++k) out << ",c" << k;
  out << "\n";
  for (Eigen::Index t = 0; t < cs.samples(); ++t) {
    out << csv::format_double(static_cast<double>(t) / cs.sample_rate);
    for (Eigen::Index k = 0; k < cs.size(); ++k) out << "," << csv::format_double(cs.components(k, t));
    out << "\n";
  }
  return out.str();
}

inline ComponentSet parse_components(const std::vector<std::string>& lines) {
  if (lines.size() < 3) throw ParseError("component file needs headers and at least one sample");
  const auto header = csv::parse_comment_header(lines[0], 1);
  ComponentSet cs;
  const auto mit = header.find("method");
  if (mit == header.end()) throw ParseError("missing method in header", 1);
  const auto method = parse_method(mit->second);
  if (!method) throw ParseError("unknown method '" + mit->second + "'", 1);
  cs.method = *method;
  const auto fit = header.find("fps");
  if (fit == header.end()) throw ParseError("missing fps in header", 1);
  cs.sample_rate = csv::parse_double(fit->second, 1);
  if (!(cs.sample_rate > 0)) throw ParseError("fps must be positive", 1);

  const auto cols = csv::split(lines[1]);
  if (cols.size() < 2 || cols[0] != "t") throw ParseError("column header must be 't,c0,...'", 2);
  for (std::size_t j = 1; j < cols.size(); ++j)
    if (cols[j] != "c" + std::to_string(j - 1)) throw ParseError("unexpected column '" + std::string(cols[j]) + "'", 2);
  const auto k = static_cast<Eigen::Index>(cols.size() - 1);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto fields = csv::split(lines[i]);
    if (static_cast<Eigen::Index>(fields.size()) != k + 1) throw ParseError("wrong number of fields", i + 1);
    std::vector<double> r(static_cast<std::size_t>(k));
    csv::parse_double(fields[0], i + 1);
    for (Eigen::Index j = 0; j < k; ++j) r[static_cast<std::size_t>(j)] = csv::parse_double(fields[j + 1], i + 1);
    rows.push_back(std::move(r));
  }
  cs.components.resize(k, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (Eigen::Index j = 0; j < k; ++j) cs.components(j, static_cast<Eigen::Index>(t)) = rows[t][static_cast<std::size_t>(j)];
  return cs;
}

}  // namespace facepulse

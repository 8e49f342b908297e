#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "facepulse/error.hpp"

namespace facepulse {

struct Eigentriple {
  double singular_value = 0.0;
  std::vector<double> left;   // length L
  std::vector<double> right;  // length N - L + 1, unit norm (zero when singular_value == 0)
};

struct SsaDecomposition {
  std::size_t window_length = 0;
  std::size_t series_length = 0;
  std::vector<Eigentriple> eigentriples;  // descending singular value

  std::size_t lagged_vectors() const noexcept { return series_length - window_length + 1; }

  double energy() const {
    double e = 0.0;
    for (const auto& t : eigentriples) e += t.singular_value * t.singular_value;
    return e;
  }
};

/// Default embedding window: min(N / 4, 2 s of samples), at least 2.
inline std::size_t default_ssa_window(std::size_t n, double sample_rate) {
  const auto two_seconds = static_cast<std::size_t>(std::lround(2.0 * sample_rate));
  return std::max<std::size_t>(2, std::min(n / 4, two_seconds));
}

/// Hankel embedding + SVD. Singular triples come from the lag-covariance eigenvectors U,
/// with X^T u carrying both the singular value (its norm) and the right vector (its direction).
inline SsaDecomposition ssa_decompose(std::span<const double> series, std::size_t window_length) {
  const std::size_t n = series.size();
  const std::size_t l = window_length;
  if (n < 3) throw InvalidInput("SSA needs a series of length > 2");
  if (l < 2 || l > n - 1) throw InvalidInput("SSA window length must satisfy 2 <= L <= N-1");
  bool nonzero = false;
  for (double v : series) {
    if (!std::isfinite(v)) throw InvalidInput("SSA series contains non-finite values");
    nonzero = nonzero || v != 0.0;
  }
  if (!nonzero) throw InvalidInput("SSA series must be a non-zero real series");

  const std::size_t k = n - l + 1;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < l; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = series[i + j];

  Eigen::MatrixXd lag = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  lag.selfadjointView<Eigen::Lower>().rankUpdate(x);
  lag = lag.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lag);
  if (es.info() != Eigen::Success) throw Error("SSA eigendecomposition failed");
  const Eigen::MatrixXd proj = x.transpose() * es.eigenvectors();  // K x L

  SsaDecomposition dec;
  dec.window_length = l;
  dec.series_length = n;
  dec.eigentriples.resize(l);
  for (std::size_t i = 0; i < l; ++i) {
    auto& t = dec.eigentriples[i];
    const auto col = static_cast<Eigen::Index>(i);
    t.singular_value = proj.col(col).norm();
    t.left.assign(es.eigenvectors().col(col).data(), es.eigenvectors().col(col).data() + l);
    t.right.assign(k, 0.0);
    if (t.singular_value > 0)
      for (std::size_t j = 0; j < k; ++j) t.right[j] = proj(static_cast<Eigen::Index>(j), col) / t.singular_value;
  }
  std::stable_sort(dec.eigentriples.begin(), dec.eigentriples.end(),
                   [](const Eigentriple& a, const Eigentriple& b) { return a.singular_value > b.singular_value; });
  return dec;
}

/// Sum of the selected elementary matrices (0-based indices), Hankelized back to a series.
inline std::vector<double> ssa_reconstruct(const SsaDecomposition& dec, std::span<const std::size_t> group) {
  if (group.empty()) throw InvalidInput("SSA reconstruction group must be non-empty");
  for (auto g : group)
    if (g >= dec.eigentriples.size()) throw InvalidInput("SSA eigentriple index out of range");
  const std::size_t l = dec.window_length, k = dec.lagged_vectors(), n = dec.series_length;
  std::vector<double> sum(n, 0.0);
  for (auto g : group) {
    const auto& t = dec.eigentriples[g];
    for (std::size_t j = 0; j < k; ++j) {
      const double vj = t.singular_value * t.right[j];
      for (std::size_t i = 0; i < l; ++i) sum[i + j] += t.left[i] * vj;
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t lo = s + 1 > k ? s + 1 - k : 0;
    const std::size_t hi = std::min(s, l - 1);
    sum[s] /= static_cast<double>(hi - lo + 1);
  }
  return sum;
}

/// Reconstruction from the leading `count` eigentriples.
inline std::vector<double> ssa_smooth(std::span<const double> series, std::size_t window_length, std::size_t count) {
  const auto dec = ssa_decompose(series, window_length);
  std::vector<std::size_t> group(std::min(count, dec.eigentriples.size()));
  std::iota(group.begin(), group.end(), 0);
  return ssa_reconstruct(dec, group);
}

/// Fraction of trajectory-matrix energy carried by the leading `count` eigentriples.
inline double leading_energy_fraction(const SsaDecomposition& dec, std::size_t count) {
  const double total = dec.energy();
  if (total == 0) return 0.0;
  double lead = 0.0;
  for (std::size_t i = 0; i < std::min(count, dec.eigentriples.size()); ++i)
    lead += dec.eigentriples[i].singular_value * dec.eigentriples[i].singular_value;
  return lead / total;
}

}  // namespace facepulse

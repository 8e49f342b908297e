#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "facepulse/error.hpp"
#include "facepulse/trajectories.hpp"

namespace facepulse {

/// Natural cubic spline through unit-spaced knots (x = 0, 1, ..., n-1).
class NaturalCubicSpline {
 public:
  static constexpr std::size_t kMinKnots = 3;

  explicit NaturalCubicSpline(std::span<const double> y) : y_(y.begin(), y.end()), m_(y.size(), 0.0) {
    const std::size_t n = y_.size();
    if (n < kMinKnots) throw InvalidInput("cubic spline needs at least " + std::to_string(kMinKnots) + " samples");
    for (double v : y_)
      if (!std::isfinite(v)) throw InvalidInput("cubic spline input contains non-finite values");

    // Interior second derivatives: M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]), M[0] = M[n-1] = 0.
    const std::size_t k = n - 2;
    std::vector<double> diag(k, 4.0), rhs(k);
    for (std::size_t i = 0; i < k; ++i) rhs[i] = 6.0 * (y_[i + 2] - 2.0 * y_[i + 1] + y_[i]);
    for (std::size_t i = 1; i < k; ++i) {
      const double w = 1.0 / diag[i - 1];
      diag[i] -= w;
      rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i >= 1; --i) m_[i] = (rhs[i - 1] - m_[i + 1]) / diag[i - 1];
  }

  std::size_t knots() const noexcept { return y_.size(); }

  /// Evaluates at x = segment + frac, frac in [0, 1]; avoids re-deriving the segment from a rounded x.
  double at(std::size_t segment, double frac) const noexcept {
    if (segment >= y_.size() - 1) return y_.back();
    const double b = frac, a = 1.0 - frac;
    return a * y_[segment] + b * y_[segment + 1] +
           ((a * a * a - a) * m_[segment] + (b * b * b - b) * m_[segment + 1]) / 6.0;
  }

  double operator()(double x) const noexcept {
    if (x <= 0) return y_.front();
    const auto seg = static_cast<std::size_t>(std::floor(x));
    return at(seg, x - static_cast<double>(seg));
  }

  const std::vector<double>& second_derivatives() const noexcept { return m_; }

 private:
  std::vector<double> y_;
  std::vector<double> m_;
};

/// Resamples `y` onto (n-1)*factor + 1 uniformly spaced points spanning the same range.
inline std::vector<double> spline_resample(std::span<const double> y, int factor) {
  if (factor < 1) throw InvalidInput("interpolation factor must be >= 1");
  NaturalCubicSpline s(y);
  const std::size_t n = y.size();
  const auto f = static_cast<std::size_t>(factor);
  std::vector<double> out((n - 1) * f + 1);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::size_t seg = j / f;
    if (j % f == 0) {
      out[j] = y[seg];
    } else {
      out[j] = s.at(seg, static_cast<double>(j % f) / static_cast<double>(f));
    }
  }
  return out;
}

/// Row-wise natural-spline resampling; sample rate is multiplied by `factor`.
inline FeatureTrajectories cubic_spline_resample(const FeatureTrajectories& traj, int factor) {
  require_origin(traj, Origin::raw, "cubic_spline_resample");
  if (factor < 1) throw InvalidInput("interpolation factor must be >= 1");
  const Eigen::Index n = traj.samples();
  const Eigen::Index out_n = (n - 1) * factor + 1;
  Eigen::MatrixXd out(traj.features(), out_n);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index f = 0; f < traj.features(); ++f) {
    for (Eigen::Index t = 0; t < n; ++t) row[static_cast<std::size_t>(t)] = traj.data()(f, t);
    const auto r = spline_resample(row, factor);
    for (Eigen::Index t = 0; t < out_n; ++t) out(f, t) = r[static_cast<std::size_t>(t)];
  }
  return traj.advance(std::move(out), traj.sample_rate() * factor, Origin::interpolated);
}

}  // namespace facepulse

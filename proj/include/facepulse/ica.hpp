#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "facepulse/bss.hpp"
#include "facepulse/random.hpp"

namespace facepulse {

enum class Contrast { logcosh, exp, cube };

struct FastIcaOptions {
  std::uint64_t seed = 20190417;
  int max_iter = 400;
  double tol = 1e-5;
  Contrast contrast = Contrast::logcosh;
  double alpha = 1.0;  // log-cosh scale
  /// Return the last iterate (flagged low-confidence) instead of throwing when max_iter is reached.
  bool accept_unconverged = false;
};

struct JadeOptions {
  double threshold = 1e-6;  // radians
  int max_sweeps = 100;
};

struct ShibbsOptions {
  /// Rotation threshold in radians for the inner sweeps and the outer pass test; 0 selects 0.01 / sqrt(T).
  double threshold = 0.0;
  int max_sweeps = 100;
  int max_passes = 100;
  bool accept_unconverged = false;
};

/// Symmetric FastICA fixed-point iteration on whitened data (K x T). Returns the K x K rotation.
/// `converged` (optional) reports whether the tolerance was met; otherwise a ConvergenceError is
/// thrown unless `opt.accept_unconverged` is set.
inline Eigen::MatrixXd fastica_rotation(const Eigen::MatrixXd& z, const FastIcaOptions& opt,
                                        const Eigen::MatrixXd& whitening, bool* converged = nullptr) {
  const Eigen::Index k = z.rows();
  const double t = static_cast<double>(z.cols());
  detail::SeededNormal normal(opt.seed);
  Eigen::MatrixXd w(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) w(i, j) = normal();
  w = detail::symmetric_decorrelation(w);

  Eigen::MatrixXd g(k, z.cols());
  Eigen::VectorXd gprime_mean(k);
  for (int it = 0; it < opt.max_iter; ++it) {
    const Eigen::MatrixXd y = w * z;
    for (Eigen::Index i = 0; i < k; ++i) {
      double acc = 0.0;
      for (Eigen::Index s = 0; s < z.cols(); ++s) {
        const double u = y(i, s);
        switch (opt.contrast) {
          case Contrast::logcosh: {
            const double th = std::tanh(opt.alpha * u);
            g(i, s) = th;
            acc += opt.alpha * (1.0 - th * th);
            break;
          }
          case Contrast::exp: {
            const double e = std::exp(-0.5 * u * u);
            g(i, s) = u * e;
            acc += (1.0 - u * u) * e;
            break;
          }
          case Contrast::cube:
            g(i, s) = u * u * u;
            acc += 3.0 * u * u;
            break;
        }
      }
      gprime_mean(i) = acc / t;
    }
    Eigen::MatrixXd next = g * z.transpose() / t - gprime_mean.asDiagonal() * w;
    next = detail::symmetric_decorrelation(next);
    const double lim = ((next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(next);
    if (lim < opt.tol) {
      if (converged) *converged = true;
      return w;
    }
  }
  if (converged) *converged = false;
  if (opt.accept_unconverged) return w;
  throw ConvergenceError("FastICA did not converge after " + std::to_string(opt.max_iter) + " iterations",
                         w * whitening);
}

inline ComponentSet fastica_components(const Eigen::MatrixXd& data, Eigen::Index k, const FastIcaOptions& opt = {},
                                       double sample_rate = 1.0) {
  auto [z, tr] = whiten(data, k);
  bool converged = false;
  const Eigen::MatrixXd rot = fastica_rotation(z, opt, tr.matrix, &converged);
  ComponentSet cs;
  cs.method = BssMethod::fastica;
  cs.sample_rate = sample_rate;
  cs.unmixing = rot * tr.matrix;
  cs.mean = tr.mean;
  cs.components = rot * z;
  finalize_ica(cs);
  cs.low_confidence = cs.low_confidence || !converged;
  return cs;
}

/// Fourth-order cumulant slices of whitened data (K x T).
///
/// With `pairs` the full parallel set of K(K+1)/2 matrices is built (diagonal slices Q_pp and
/// sqrt(2)-weighted off-diagonal slices Q_pq); otherwise only the K diagonal slices.
inline std::vector<Eigen::MatrixXd> cumulant_matrices(const Eigen::MatrixXd& x, bool pairs = true) {
  const Eigen::Index k = x.rows();
  const double t = static_cast<double>(x.cols());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k, k);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(pairs ? k * (k + 1) / 2 : k));
  for (Eigen::Index p = 0; p < k; ++p) {
    const Eigen::ArrayXd xp = x.row(p).transpose().array();
    {
      const Eigen::MatrixXd weighted = x * (xp * xp).matrix().asDiagonal();
      Eigen::MatrixXd q = weighted * x.transpose() / t - id;
      q(p, p) -= 2.0;
      out.push_back(0.5 * (q + q.transpose()));
    }
    if (!pairs) continue;
    for (Eigen::Index r = 0; r < p; ++r) {
      const Eigen::ArrayXd xpr = xp * x.row(r).transpose().array();
      const Eigen::MatrixXd weighted = x * xpr.matrix().asDiagonal();
      Eigen::MatrixXd q = weighted * x.transpose() / t;
      q(p, r) -= 1.0;
      q(r, p) -= 1.0;
      out.push_back(std::numbers::sqrt2 * 0.5 * (q + q.transpose()));
    }
  }
  return out;
}

/// Sum of squared off-diagonal entries over a set of square matrices.
inline double off_diagonal_energy(const std::vector<Eigen::MatrixXd>& mats) {
  double acc = 0.0;
  for (const auto& m : mats) acc += m.squaredNorm() - m.diagonal().squaredNorm();
  return acc;
}

struct JointDiagonalization {
  Eigen::MatrixXd rotation;  // V: columns are the joint eigenvectors
  int sweeps = 0;
  bool converged = false;
  double largest_angle = 0.0;              // largest |theta| applied in the final sweep
  std::vector<double> objective_history;   // off-diagonal energy before the first and after every sweep
};

/// Jacobi (Givens) joint approximate diagonalization. `mats` are rotated in place.
inline JointDiagonalization joint_diagonalize(std::vector<Eigen::MatrixXd>& mats, double threshold, int max_sweeps) {
  JointDiagonalization res;
  const Eigen::Index k = mats.empty() ? 0 : mats.front().rows();
  res.rotation = Eigen::MatrixXd::Identity(k, k);
  res.objective_history.push_back(off_diagonal_energy(mats));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    double largest = 0.0;
    for (Eigen::Index p = 0; p + 1 < k; ++p)
      for (Eigen::Index q = p + 1; q < k; ++q) {
        double g11 = 0, g12 = 0, g22 = 0;
        for (const auto& m : mats) {
          const double h1 = m(p, p) - m(q, q);
          const double h2 = m(p, q) + m(q, p);
          g11 += h1 * h1;
          g12 += h1 * h2;
          g22 += h2 * h2;
        }
        const double ton = g11 - g22;
        const double toff = 2.0 * g12;
        const double theta = 0.5 * std::atan2(toff, ton + std::sqrt(ton * ton + toff * toff));
        largest = std::max(largest, std::abs(theta));
        if (std::abs(theta) <= threshold) continue;
        rotated = true;
        const double c = std::cos(theta), s = std::sin(theta);
        for (Eigen::Index i = 0; i < k; ++i) {
          const double vp = res.rotation(i, p), vq = res.rotation(i, q);
          res.rotation(i, p) = c * vp + s * vq;
          res.rotation(i, q) = -s * vp + c * vq;
        }
        for (auto& m : mats) {
          for (Eigen::Index j = 0; j < k; ++j) {
            const double mp = m(p, j), mq = m(q, j);
            m(p, j) = c * mp + s * mq;
            m(q, j) = -s * mp + c * mq;
          }
          for (Eigen::Index i = 0; i < k; ++i) {
            const double mp = m(i, p), mq = m(i, q);
            m(i, p) = c * mp + s * mq;
            m(i, q) = -s * mp + c * mq;
          }
        }
      }
    res.sweeps = sweep + 1;
    res.largest_angle = largest;
    res.objective_history.push_back(off_diagonal_energy(mats));
    if (!rotated) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// JADE: whiten, build the full cumulant set once, jointly diagonalize, rotate.
inline ComponentSet jade_components(const Eigen::MatrixXd& data, Eigen::Index k, const JadeOptions& opt = {},
                                    double sample_rate = 1.0) {
  auto [z, tr] = whiten(data, k);
  auto mats = cumulant_matrices(z, true);
  const auto jd = joint_diagonalize(mats, opt.threshold, opt.max_sweeps);
  if (!jd.converged)
    throw ConvergenceError("JADE joint diagonalization did not converge after " + std::to_string(opt.max_sweeps) +
                               " sweeps",
                           jd.rotation.transpose() * tr.matrix);
  ComponentSet cs;
  cs.method = BssMethod::jade;
  cs.sample_rate = sample_rate;
  cs.unmixing = jd.rotation.transpose() * tr.matrix;
  cs.mean = tr.mean;
  cs.components = jd.rotation.transpose() * z;
  finalize_ica(cs);
  return cs;
}

/// SHIBBS: repeatedly re-estimate only the K diagonal cumulant slices from the currently rotated
/// data, jointly diagonalize them, and rotate the data, until a pass needs no rotation.
inline ComponentSet shibbs_components(const Eigen::MatrixXd& data, Eigen::Index k, const ShibbsOptions& opt = {},
                                      double sample_rate = 1.0) {
  auto [z, tr] = whiten(data, k);
  const double threshold = opt.threshold > 0 ? opt.threshold : 0.01 / std::sqrt(static_cast<double>(z.cols()));
  Eigen::MatrixXd total = Eigen::MatrixXd::Identity(k, k);
  bool converged = false;
  for (int pass = 0; pass < opt.max_passes; ++pass) {
    auto mats = cumulant_matrices(z, false);
    const auto jd = joint_diagonalize(mats, threshold, opt.max_sweeps);
    if (jd.sweeps == 1 && jd.converged) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd vt = jd.rotation.transpose();
    z = vt * z;
    total = vt * total;
  }
  if (!converged && !opt.accept_unconverged)
    throw ConvergenceError("SHIBBS did not converge after " + std::to_string(opt.max_passes) + " passes",
                           total * tr.matrix);
  ComponentSet cs;
  cs.method = BssMethod::shibbs;
  cs.sample_rate = sample_rate;
  cs.unmixing = total * tr.matrix;
  cs.mean = tr.mean;
  cs.components = std::move(z);
  finalize_ica(cs);
  cs.low_confidence = cs.low_confidence || !converged;
  return cs;
}

struct BssOptions {
  Eigen::Index n_components = 5;
  FastIcaOptions fastica;
  JadeOptions jade;
  ShibbsOptions shibbs;
};

inline ComponentSet extract_components(const Eigen::MatrixXd& data, BssMethod method, const BssOptions& opt,
                                       double sample_rate = 1.0) {
  switch (method) {
    case BssMethod::pca: return pca_components(data, opt.n_components, sample_rate);
    case BssMethod::fastica: return fastica_components(data, opt.n_components, opt.fastica, sample_rate);
    case BssMethod::jade: return jade_components(data, opt.n_components, opt.jade, sample_rate);
    case BssMethod::shibbs: return shibbs_components(data, opt.n_components, opt.shibbs, sample_rate);
  }
  throw InvalidInput("unknown separation method");
}

}  // namespace facepulse

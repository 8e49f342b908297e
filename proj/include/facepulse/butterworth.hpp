#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "facepulse/error.hpp"
#include "facepulse/trajectories.hpp"

namespace facepulse {

struct BandPassSpec {
  double low_hz = 0.75;
  double high_hz = 5.0;
  int order = 5;

  void validate(double sample_rate) const {
    if (order < 1) throw InvalidInput("band-pass order must be >= 1");
    if (!(low_hz > 0)) throw InvalidInput("band-pass low edge must be > 0 Hz");
    if (!(low_hz < high_hz)) throw InvalidInput("band-pass low edge must be below the high edge");
    if (!(high_hz < sample_rate / 2)) throw InvalidInput("band-pass high edge must be below Nyquist");
  }
};

/// One biquad, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

namespace detail {

using cplx = std::complex<double>;

inline double biquad_dc_gain(const Biquad& s) { return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); }

}  // namespace detail

/// Digital Butterworth band-pass as cascaded second-order sections.
///
/// Analog low-pass prototype -> low-pass to band-pass -> bilinear transform with pre-warped edges.
/// The 2*order zeros sit at z = +1 and z = -1, so every section has numerator gain * (1, 0, -1).
inline std::vector<Biquad> design_butterworth_bandpass(const BandPassSpec& spec, double sample_rate) {
  using detail::cplx;
  spec.validate(sample_rate);
  const int n = spec.order;
  const double fs2 = 2.0 * sample_rate;
  const double wl = fs2 * std::tan(std::numbers::pi * spec.low_hz / sample_rate);
  const double wh = fs2 * std::tan(std::numbers::pi * spec.high_hz / sample_rate);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(2 * n));
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n));
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0sq);
    poles.push_back(half + root);
    poles.push_back(half - root);
  }

  // Analog gain bw^n; bilinear gain over n zeros at s = 0 and 2n poles.
  cplx gain = std::pow(bw, n);
  for (int k = 0; k < n; ++k) gain *= fs2;
  std::vector<cplx> zpoles;
  zpoles.reserve(poles.size());
  for (const cplx& p : poles) {
    gain /= (fs2 - p);
    zpoles.push_back((fs2 + p) / (fs2 - p));
  }

  // Pair conjugates; leftover real poles pair with each other.
  std::vector<cplx> upper;
  std::vector<double> real;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p))) {
      real.push_back(p.real());
    } else if (p.imag() > 0) {
      upper.push_back(p);
    }
  }
  std::sort(upper.begin(), upper.end(), [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
  std::sort(real.begin(), real.end());
  if (real.size() % 2 != 0 || upper.size() * 2 + real.size() != zpoles.size())
    throw Error("butterworth design: unexpected pole layout");

  std::vector<Biquad> sos;
  for (std::size_t i = 0; i < real.size(); i += 2)
    sos.push_back({1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  for (const cplx& p : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});

  const double g = gain.real();
  sos.front().b0 *= g;
  sos.front().b1 *= g;
  sos.front().b2 *= g;
  return sos;
}

/// Magnitude of the cascade's frequency response at `freq_hz`.
inline double frequency_response(const std::vector<Biquad>& sos, double freq_hz, double sample_rate) {
  using detail::cplx;
  const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const auto& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

/// Causal cascade filtering (direct form II transposed) with optional per-section initial state.
inline void sos_filter_inplace(const std::vector<Biquad>& sos, std::vector<double>& x,
                               const std::vector<std::array<double, 2>>* zi = nullptr) {
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    double z1 = zi ? (*zi)[k][0] : 0.0;
    double z2 = zi ? (*zi)[k][1] : 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

/// Steady-state section states for a unit-step input (scaled by the input's first value by the caller).
inline std::vector<std::array<double, 2>> sos_step_state(const std::vector<Biquad>& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    const double g = detail::biquad_dc_gain(s);
    const double z2 = scale * (s.b2 - s.a2 * g);
    const double z1 = scale * (s.b1 + s.b2 - (s.a1 + s.a2) * g);
    zi[k] = {z1, z2};
    scale *= g;
  }
  return zi;
}

/// Forward-backward (zero-phase) cascade filtering with odd-reflection padding.
inline std::vector<double> sos_filtfilt(const std::vector<Biquad>& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t ntaps = 2 * sos.size() + 1;
  const std::size_t pad = std::min<std::size_t>(3 * ntaps, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto step = sos_step_state(sos);
  auto scaled = [&](double v) {
    auto zi = step;
    for (auto& z : zi) {
      z[0] *= v;
      z[1] *= v;
    }
    return zi;
  };

  auto zi = scaled(ext.front());
  sos_filter_inplace(sos, ext, &zi);
  std::reverse(ext.begin(), ext.end());
  zi = scaled(ext.front());
  sos_filter_inplace(sos, ext, &zi);
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

/// Zero-phase Butterworth band-pass applied independently to each feature row.
inline FeatureTrajectories butterworth_bandpass(const FeatureTrajectories& traj, const BandPassSpec& spec) {
  require_origin(traj, Origin::stable, "butterworth_bandpass");
  const auto sos = design_butterworth_bandpass(spec, traj.sample_rate());
  Eigen::MatrixXd out(traj.features(), traj.samples());
  std::vector<double> row(static_cast<std::size_t>(traj.samples()));
  for (Eigen::Index f = 0; f < traj.features(); ++f) {
    for (Eigen::Index t = 0; t < traj.samples(); ++t) row[static_cast<std::size_t>(t)] = traj.data()(f, t);
    const auto y = sos_filtfilt(sos, row);
    for (Eigen::Index t = 0; t < traj.samples(); ++t) out(f, t) = y[static_cast<std::size_t>(t)];
  }
  return traj.advance(std::move(out), traj.sample_rate(), Origin::filtered);
}

}  // namespace facepulse

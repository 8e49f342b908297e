#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "facepulse/random.hpp"
#include "facepulse/trajectories.hpp"

namespace facepulse::synthetic {

enum class PulseShape {
  sine,
  cardiac,  // fundamental plus decaying harmonics: sharp upstroke, slower return
};

/// Zero-mean periodic pulse waveform with unit amplitude of the fundamental.
inline double pulse_wave(PulseShape shape, double phase_radians) {
  if (shape == PulseShape::sine) return std::sin(phase_radians);
  return std::sin(phase_radians) + 0.5 * std::sin(2.0 * phase_radians + 0.6) +
         0.25 * std::sin(3.0 * phase_radians + 1.2);
}

/// Head-motion trajectories: a cardiac source and a respiration source mixed into every feature,
/// plus per-feature Gaussian noise at a fixed signal-to-noise ratio.
struct TrajectorySpec {
  std::size_t features = 40;
  double duration_seconds = 20.0;
  double fps = 25.0;
  double pulse_hz = 1.2;
  double respiration_hz = 0.3;
  double pulse_amplitude = 0.4;        // pixels
  double respiration_amplitude = 1.0;  // pixels
  double snr_db = 10.0;
  PulseShape shape = PulseShape::sine;
  std::uint64_t seed = 1;
};

inline FeatureTrajectories make_trajectories(const TrajectorySpec& spec) {
  detail::SeededNormal rng(spec.seed);
  const auto frames = static_cast<Eigen::Index>(std::llround(spec.duration_seconds * spec.fps));
  const double pulse_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double resp_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Eigen::MatrixXd data(static_cast<Eigen::Index>(spec.features), frames);
  const double noise_ratio = std::pow(10.0, -spec.snr_db / 10.0);
  for (Eigen::Index f = 0; f < data.rows(); ++f) {
    const double base = rng.uniform(100.0, 400.0);
    const double wp = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double wr = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double ap = wp * spec.pulse_amplitude, ar = wr * spec.respiration_amplitude;
    const double shape_power = spec.shape == PulseShape::sine ? 0.5 : 0.5 * (1.0 + 0.25 + 0.0625);
    const double signal_power = shape_power * ap * ap + 0.5 * ar * ar;
    const double noise_sd = std::sqrt(signal_power * noise_ratio);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const double time = static_cast<double>(t) / spec.fps;
      data(f, t) = base + ap * pulse_wave(spec.shape, 2.0 * std::numbers::pi * spec.pulse_hz * time + pulse_phase) +
                   ar * std::sin(2.0 * std::numbers::pi * spec.respiration_hz * time + resp_phase) +
                   noise_sd * rng();
    }
  }
  return FeatureTrajectories(std::move(data), spec.fps, Origin::raw);
}

/// ECG-like record: narrow R spikes at `rate_hz` over Gaussian baseline noise and a slow wander.
struct EcgSpec {
  double rate_hz = 1.2;
  double duration_seconds = 20.0;
  double sample_rate = 250.0;
  double spike_amplitude = 1.0;
  double noise_sd = 0.05;
  std::uint64_t seed = 1;
};

inline std::vector<double> make_ecg(const EcgSpec& spec) {
  detail::SeededNormal rng(spec.seed);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_seconds * spec.sample_rate));
  std::vector<double> x(n);
  const double first = rng.uniform(0.1, 0.5) / spec.rate_hz;
  const double width = 0.012;  // seconds
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    double v = 0.2 * std::sin(2.0 * std::numbers::pi * 0.25 * t) + spec.noise_sd * rng();
    const double since = t - first;
    if (since > -0.1) {
      const double beat = std::round(since * spec.rate_hz) / spec.rate_hz;
      const double d = since - beat;
      v += spec.spike_amplitude * std::exp(-0.5 * (d / width) * (d / width));
    }
    x[i] = v;
  }
  return x;
}

}  // namespace facepulse::synthetic

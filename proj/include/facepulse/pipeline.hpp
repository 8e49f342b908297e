#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "facepulse/bss.hpp"
#include "facepulse/butterworth.hpp"
#include "facepulse/ica.hpp"
#include "facepulse/pulse.hpp"
#include "facepulse/spline.hpp"
#include "facepulse/ssa.hpp"
#include "facepulse/stability.hpp"
#include "facepulse/trajectories.hpp"

namespace facepulse {

struct PatternConfig {
  std::vector<double> anchors_seconds{2.0, 8.0, 16.0};
  double window_seconds = 1.0;
};

struct PeakConfig {
  double threshold_quantile = 0.4;
  double min_separation_seconds = 0.33;
  // the cost curve has one sharp maximum per beat; its minima are broad, multi-dip valleys
  PeakPolarity polarity = PeakPolarity::maxima;
  double min_prominence_fraction = 0.25;  // of the curve's distance range
};

struct BadComponentConfig {
  BadComponentMode mode = BadComponentMode::intent;
  double tolerance = 0.0;
};

struct SelectionConfig {
  SkewnessMode skewness_mode = SkewnessMode::absolute;
  std::size_t min_peaks = 3;
};

struct SsaConfig {
  bool enabled = false;
  std::size_t window_length = 0;  // 0 = min(N/4, 2 s)
  std::size_t components = 3;
};

/// Every tunable of the estimator.
///
/// Iterative separators keep their last iterate when they run out of iterations: the whitened
/// subspace of real recordings usually contains Gaussian directions on which ICA has no fixed point.
struct PipelineConfig {
  PipelineConfig() {
    bss.fastica.accept_unconverged = true;
    bss.shibbs.accept_unconverged = true;
  }

  BandPassSpec band{};
  int interpolation_factor = 10;
  BssMethod method = BssMethod::jade;
  BssOptions bss{};
  PatternConfig pattern{};
  std::size_t mdtw_step = 5;
  PeakConfig peaks{};
  BadComponentConfig bad_component{};
  PeakCountMode n_p_mode = PeakCountMode::intervals;
  SelectionConfig selection{};
  SsaConfig ssa{};
};

struct PulseEstimate {
  double bpm = 0.0;
  std::size_t selected_component = 0;
  PeakSet peaks;
  std::vector<std::optional<double>> per_component_skewness;
  std::vector<bool> bad_flags;
  std::vector<std::size_t> peak_counts;
  double t1 = 0.0;
  double t2 = 0.0;
  std::size_t n_p = 0;
  double sample_rate = 0.0;
  BssMethod method = BssMethod::jade;
};

/// Intermediate products kept for plotting and diagnostics.
struct PipelineTrace {
  std::size_t features_in = 0;
  std::size_t features_stable = 0;
  ComponentSet components;
  std::vector<MotionPattern> patterns;
  std::vector<MatchCurve> curves;
  std::vector<PeakSet> peak_sets;
  std::vector<double> ssa_leading_energy;  // per component, leading-triple energy fraction
};

namespace detail {

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const EstimationFailed& e) {
    throw StageError(stage, e.what(), true);
  } catch (const ConvergenceError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const RankDeficiency& e) {
    throw StageError(stage, e.what(), true);
  } catch (const Error& e) {
    throw StageError(stage, e.what(), false);
  }
}

}  // namespace detail

/// Filtered feature matrix: resample -> stability rejection -> band-pass.
inline FeatureTrajectories preprocess(const FeatureTrajectories& raw, const PipelineConfig& cfg,
                                      PipelineTrace* trace = nullptr) {
  require_origin(raw, Origin::raw, "estimate_pulse");
  auto interp = detail::run_stage("interpolate", [&] { return cubic_spline_resample(raw, cfg.interpolation_factor); });
  auto stable = detail::run_stage("stability",
                                  [&] { return remove_unstable_features(interp, cfg.interpolation_factor); });
  if (trace) {
    trace->features_in = static_cast<std::size_t>(raw.features());
    trace->features_stable = static_cast<std::size_t>(stable.features());
  }
  return detail::run_stage("bandpass", [&] { return butterworth_bandpass(stable, cfg.band); });
}

/// Peak detection, bad-component flags, selection and rate on already extracted components.
inline PulseEstimate estimate_from_components(const ComponentSet& raw_components, const PipelineConfig& cfg,
                                              PipelineTrace* trace = nullptr) {
  ComponentSet cs = raw_components.normalized ? raw_components : normalize_components(raw_components);
  const double fs = cs.sample_rate;

  if (cfg.ssa.enabled) {
    detail::run_stage("ssa", [&] {
      for (Eigen::Index k = 0; k < cs.size(); ++k) {
        const auto row = cs.row(k);
        const std::size_t l = cfg.ssa.window_length ? cfg.ssa.window_length : default_ssa_window(row.size(), fs);
        const auto dec = ssa_decompose(row, l);
        std::vector<std::size_t> group(std::min(cfg.ssa.components, dec.eigentriples.size()));
        std::iota(group.begin(), group.end(), 0);
        const auto smooth = ssa_reconstruct(dec, group);
        for (Eigen::Index t = 0; t < cs.samples(); ++t) cs.components(k, t) = smooth[static_cast<std::size_t>(t)];
        if (trace) trace->ssa_leading_energy.push_back(leading_energy_fraction(dec, cfg.ssa.components));
      }
      cs.normalized = false;
      cs = normalize_components(cs);
      return 0;
    });
  }

  const auto k_count = static_cast<std::size_t>(cs.size());
  const std::size_t min_sep = seconds_to_samples(cfg.peaks.min_separation_seconds, fs);
  std::vector<PeakSet> peak_sets(k_count);
  std::vector<bool> bad(k_count);
  std::vector<MotionPattern> patterns(k_count);
  std::vector<MatchCurve> curves(k_count);

  detail::run_stage("peaks", [&] {
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto row = cs.row(static_cast<Eigen::Index>(k));
      bad[k] = is_bad_component(row, cfg.bad_component.mode, cfg.bad_component.tolerance);
      patterns[k] = extract_pattern(row, fs, cfg.pattern.anchors_seconds, cfg.pattern.window_seconds, k);
      curves[k] = mdtw(row, patterns[k].samples, cfg.mdtw_step);
      const double thr = quantile_threshold(curves[k], cfg.peaks.threshold_quantile, cfg.peaks.polarity);
      const auto [lo, hi] = std::minmax_element(curves[k].distances.begin(), curves[k].distances.end());
      const double prom = cfg.peaks.min_prominence_fraction * (*hi - *lo);
      peak_sets[k] = detect_peaks(curves[k], thr, min_sep, cfg.peaks.polarity, prom);
    }
    return 0;
  });

  const auto sel = detail::run_stage("selection", [&] {
    return select_optimal_component(peak_sets, bad, cfg.selection.skewness_mode, cfg.selection.min_peaks);
  });
  const auto rate = detail::run_stage("pulse_rate", [&] { return pulse_rate(peak_sets[sel.index], fs, cfg.n_p_mode); });

  PulseEstimate est;
  est.bpm = rate.bpm;
  est.selected_component = sel.index;
  est.peaks = peak_sets[sel.index];
  est.per_component_skewness = sel.skewness;
  est.bad_flags = bad;
  for (const auto& p : peak_sets) est.peak_counts.push_back(p.size());
  est.t1 = rate.t1;
  est.t2 = rate.t2;
  est.n_p = rate.n_p;
  est.sample_rate = fs;
  est.method = cs.method;

  if (trace) {
    trace->components = std::move(cs);
    trace->patterns = std::move(patterns);
    trace->curves = std::move(curves);
    trace->peak_sets = std::move(peak_sets);
  }
  return est;
}

inline ComponentSet separate(const FeatureTrajectories& filtered, BssMethod method, const PipelineConfig& cfg) {
  return detail::run_stage("separation", [&] {
    return extract_components(filtered.data(), method, cfg.bss, filtered.sample_rate());
  });
}

/// Full chain from raw trajectories to a heart-rate estimate.
inline PulseEstimate estimate_pulse(const FeatureTrajectories& raw, BssMethod method, const PipelineConfig& cfg,
                                    PipelineTrace* trace = nullptr) {
  const auto filtered = preprocess(raw, cfg, trace);
  const auto cs = separate(filtered, method, cfg);
  return estimate_from_components(cs, cfg, trace);
}

inline PulseEstimate estimate_pulse(const FeatureTrajectories& raw, const PipelineConfig& cfg,
                                    PipelineTrace* trace = nullptr) {
  return estimate_pulse(raw, cfg.method, cfg, trace);
}

}  // namespace facepulse

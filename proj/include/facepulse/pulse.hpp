#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facepulse/error.hpp"
#include "facepulse/stats.hpp"

namespace facepulse {

// ---------------------------------------------------------------------------
// Motion of interest

struct MotionPattern {
  std::vector<double> samples;
  std::size_t source_component = 0;
  std::vector<double> anchor_seconds;
  std::vector<std::size_t> anchor_indices;

  std::size_t size() const noexcept { return samples.size(); }
};

inline std::size_t seconds_to_samples(double seconds, double sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

/// Element-wise mean of equal-length windows starting at each anchor time.
inline MotionPattern extract_pattern(std::span<const double> component, double sample_rate,
                                     std::span<const double> anchors_seconds, double window_seconds,
                                     std::size_t source_component = 0) {
  if (anchors_seconds.empty()) throw InvalidInput("at least one pattern anchor is required");
  if (!(sample_rate > 0)) throw InvalidInput("sample rate must be positive");
  const std::size_t w = seconds_to_samples(window_seconds, sample_rate);
  if (w < 2) throw InvalidInput("pattern window must span at least two samples");

  MotionPattern p;
  p.source_component = source_component;
  p.samples.assign(w, 0.0);
  for (double a : anchors_seconds) {
    if (a < 0) throw InvalidInput("pattern anchors must be non-negative");
    const std::size_t start = seconds_to_samples(a, sample_rate);
    if (start + w > component.size())
      throw InvalidInput("pattern anchor at " + std::to_string(a) + " s with a " + std::to_string(window_seconds) +
                         " s window exceeds the component length (" +
                         std::to_string(static_cast<double>(component.size()) / sample_rate) + " s)");
    p.anchor_seconds.push_back(a);
    p.anchor_indices.push_back(start);
    for (std::size_t i = 0; i < w; ++i) p.samples[i] += component[start + i];
  }
  for (double& v : p.samples) v /= static_cast<double>(anchors_seconds.size());
  return p;
}

// ---------------------------------------------------------------------------
// Bad-component rule

enum class BadComponentMode {
  intent,   // max > 3 sigma + tau or min < -3 sigma - tau
  literal,  // |int(min + 3 sigma)| > 0 or |int(max - 3 sigma)| > 0, truncating toward zero
};

inline bool is_bad_component(std::span<const double> component, BadComponentMode mode = BadComponentMode::intent,
                             double tolerance = 0.0) {
  if (component.empty()) return true;
  const auto [mn_it, mx_it] = std::minmax_element(component.begin(), component.end());
  const double sigma = stats::stddev(component);
  const double band = 3.0 * sigma;
  if (mode == BadComponentMode::literal)
    return std::abs(std::trunc(*mn_it + band)) > 0 || std::abs(std::trunc(*mx_it - band)) > 0;
  return *mx_it > band + tolerance || *mn_it < -band - tolerance;
}

// ---------------------------------------------------------------------------
// Dynamic time warping

/// Classical DTW with |a_i - b_j| local cost, steps (1,0), (0,1), (1,1), no band.
inline double dtw_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("dtw_distance: sequences must be non-empty");
  const std::size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, inf), cur(m, inf);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double cost = std::abs(a[i] - b[j]);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = inf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

struct MatchCurve {
  std::vector<std::size_t> positions;  // window starts
  std::vector<double> distances;
  std::size_t step = 1;
  std::size_t window = 0;
};

/// Slides the pattern over the component with a fixed stride, recording the DTW cost per window.
inline MatchCurve mdtw(std::span<const double> component, std::span<const double> pattern, std::size_t step) {
  if (step < 1) throw InvalidInput("mdtw step must be >= 1");
  if (pattern.empty()) throw InvalidInput("mdtw pattern must be non-empty");
  if (pattern.size() > component.size()) throw InvalidInput("mdtw pattern is longer than the component");
  MatchCurve c;
  c.step = step;
  c.window = pattern.size();
  for (std::size_t start = 0; start + pattern.size() <= component.size(); start += step) {
    c.positions.push_back(start);
    c.distances.push_back(dtw_distance(pattern, component.subspan(start, pattern.size())));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Peak detection on the match curve

enum class PeakPolarity { minima, maxima };

struct PeakSet {
  std::vector<std::size_t> peak_indices;  // component sample indices, strictly increasing
  double threshold_used = 0.0;

  std::size_t size() const noexcept { return peak_indices.size(); }
};

/// Topographic prominence of the extremum at `i` in `v` (extrema are minima of `v`): depth below the
/// higher of the two bases, each base being the highest point before `v` drops under v[i] again.
inline double prominence_at(const std::vector<double>& v, std::size_t i) {
  double left = v[i], right = v[i];
  for (std::size_t j = i; j-- > 0;) {
    if (v[j] < v[i]) break;
    left = std::max(left, v[j]);
  }
  for (std::size_t j = i + 1; j < v.size(); ++j) {
    if (v[j] < v[i]) break;
    right = std::max(right, v[j]);
  }
  return std::min(left, right) - v[i];
}

/// Local extrema of the curve's distances that pass `threshold` (<= for minima, >= for maxima), at least
/// `min_separation` samples apart. Positions are reported at window centers (start + window / 2).
/// Plateaus count once, at their first index; separation conflicts keep the more extreme value, then
/// the earlier one. `min_prominence` (in distance units, 0 = off) drops shallow ripples.
inline PeakSet detect_peaks(const MatchCurve& curve, double threshold, std::size_t min_separation,
                            PeakPolarity polarity = PeakPolarity::minima, double min_prominence = 0.0) {
  if (curve.distances.empty()) throw InvalidInput("detect_peaks: empty match curve");
  const auto& d = curve.distances;
  const double sign = polarity == PeakPolarity::minima ? 1.0 : -1.0;
  std::vector<double> flipped(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) flipped[k] = sign * d[k];  // extrema become minima
  auto v = [&](std::size_t k) { return flipped[k]; };

  struct Candidate {
    std::size_t curve_index;
    double value;
  };
  std::vector<Candidate> cands;
  std::size_t i = 1;
  while (i + 1 < d.size()) {
    std::size_t end = i;
    while (end + 1 < d.size() && d[end + 1] == d[i]) ++end;
    if (end + 1 >= d.size()) break;
    if (v(i - 1) > v(i) && v(end + 1) > v(end) && v(i) <= sign * threshold &&
        (min_prominence <= 0 || prominence_at(flipped, i) >= min_prominence))
      cands.push_back({i, d[i]});
    i = end + 1;
  }

  std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return sign * a.value < sign * b.value;
    return a.curve_index < b.curve_index;
  });
  const std::size_t offset = curve.window / 2;
  std::vector<std::size_t> accepted;
  for (const auto& c : cands) {
    const std::size_t pos = curve.positions[c.curve_index] + offset;
    const bool clash = std::any_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return (a > pos ? a - pos : pos - a) < min_separation;
    });
    if (!clash) accepted.push_back(pos);
  }
  std::sort(accepted.begin(), accepted.end());
  return PeakSet{std::move(accepted), threshold};
}

/// Threshold from a quantile of the curve's distances; for maxima the (1 - q) quantile is used so
/// `q` keeps the same meaning (fraction of the most extreme values admitted).
inline double quantile_threshold(const MatchCurve& curve, double q, PeakPolarity polarity) {
  return stats::quantile(curve.distances, polarity == PeakPolarity::minima ? q : 1.0 - q);
}

// ---------------------------------------------------------------------------
// Component selection and rate

/// Third central moment with 1/m normalization, m = number of differences.
inline double skewness(std::span<const double> diffs) {
  if (diffs.empty()) throw InvalidInput("skewness of an empty difference vector");
  const double m = stats::mean(diffs);
  double acc = 0.0;
  for (double d : diffs) acc += (d - m) * (d - m) * (d - m);
  return acc / static_cast<double>(diffs.size());
}

inline std::vector<double> adjacent_differences(std::span<const std::size_t> peaks) {
  std::vector<double> out;
  for (std::size_t i = 1; i < peaks.size(); ++i)
    out.push_back(static_cast<double>(peaks[i]) - static_cast<double>(peaks[i - 1]));
  return out;
}

enum class SkewnessMode { absolute, signed_minimum };

struct Selection {
  std::size_t index = 0;
  std::vector<std::optional<double>> skewness;  // empty when the component is ineligible
  std::vector<bool> eligible;
};

/// Picks the non-bad component (with at least `min_peaks` peaks) whose inter-peak differences have
/// the smallest skewness; ties go to the lower index.
inline Selection select_optimal_component(std::span<const PeakSet> peak_sets, const std::vector<bool>& bad_flags,
                                          SkewnessMode mode = SkewnessMode::absolute, std::size_t min_peaks = 3) {
  if (bad_flags.size() != peak_sets.size()) throw InvalidInput("bad-flag count must match the number of components");
  Selection sel;
  sel.skewness.resize(peak_sets.size());
  sel.eligible.assign(peak_sets.size(), false);
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t k = 0; k < peak_sets.size(); ++k) {
    if (peak_sets[k].size() >= 2) sel.skewness[k] = skewness(adjacent_differences(peak_sets[k].peak_indices));
    if (bad_flags[k] || peak_sets[k].size() < std::max<std::size_t>(min_peaks, 2)) continue;
    sel.eligible[k] = true;
    const double score = mode == SkewnessMode::absolute ? std::abs(*sel.skewness[k]) : *sel.skewness[k];
    if (!best || score < best_score) {
      best = k;
      best_score = score;
    }
  }
  if (!best) throw EstimationFailed("no eligible component: every component is bad or has fewer than " +
                                    std::to_string(min_peaks) + " peaks");
  sel.index = *best;
  return sel;
}

enum class PeakCountMode {
  intervals,  // N_p = peaks - 1
  literal,    // N_p = peaks
};

struct PulseRate {
  double bpm = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  std::size_t n_p = 0;
};

/// bpm = 60 / (t2 - t1) * N_p with t1, t2 the first and last peak times.
inline PulseRate pulse_rate(const PeakSet& peaks, double sample_rate, PeakCountMode mode = PeakCountMode::intervals) {
  if (peaks.size() < 2) throw EstimationFailed("pulse rate needs at least two peaks");
  if (!(sample_rate > 0)) throw InvalidInput("sample rate must be positive");
  PulseRate r;
  r.t1 = static_cast<double>(peaks.peak_indices.front()) / sample_rate;
  r.t2 = static_cast<double>(peaks.peak_indices.back()) / sample_rate;
  r.n_p = mode == PeakCountMode::intervals ? peaks.size() - 1 : peaks.size();
  r.bpm = 60.0 / (r.t2 - r.t1) * static_cast<double>(r.n_p);
  return r;
}

}  // namespace facepulse

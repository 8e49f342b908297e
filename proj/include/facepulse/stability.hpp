#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "facepulse/error.hpp"
#include "facepulse/trajectories.hpp"

namespace facepulse {

/// Largest |x[t + stride] - x[t]| along each row, rounded to the nearest pixel.
inline std::vector<long> rounded_max_displacements(const Eigen::MatrixXd& data, Eigen::Index frame_stride = 1) {
  if (frame_stride < 1) throw InvalidInput("frame stride must be >= 1");
  std::vector<long> out(static_cast<std::size_t>(data.rows()), 0);
  for (Eigen::Index f = 0; f < data.rows(); ++f) {
    double m = 0.0;
    for (Eigen::Index t = 0; t + frame_stride < data.cols(); t += frame_stride)
      m = std::max(m, std::abs(data(f, t + frame_stride) - data(f, t)));
    out[static_cast<std::size_t>(f)] = std::lround(m);
  }
  return out;
}

/// Most frequent value; ties resolve to the smallest value.
inline long mode_of(const std::vector<long>& values) {
  if (values.empty()) throw InvalidInput("mode of empty set");
  std::map<long, std::size_t> hist;
  for (long v : values) ++hist[v];
  long best = hist.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [v, c] : hist)
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  return best;
}

/// Indices of the features kept by the stability criterion (rounded max displacement <= mode).
inline std::vector<Eigen::Index> stable_feature_indices(const Eigen::MatrixXd& data, Eigen::Index frame_stride = 1) {
  const auto maxima = rounded_max_displacements(data, frame_stride);
  const long mode = mode_of(maxima);
  std::vector<Eigen::Index> keep;
  for (std::size_t f = 0; f < maxima.size(); ++f)
    if (maxima[f] <= mode) keep.push_back(static_cast<Eigen::Index>(f));
  return keep;
}

/// Drops features whose largest frame-to-frame jump exceeds the mode of all features' jumps.
///
/// `frame_stride` is the number of samples between original video frames; pass the interpolation
/// factor so displacements are measured frame to frame rather than between interpolated samples.
inline FeatureTrajectories remove_unstable_features(const FeatureTrajectories& traj, Eigen::Index frame_stride = 1) {
  require_origin(traj, Origin::interpolated, "remove_unstable_features");
  const auto keep = stable_feature_indices(traj.data(), frame_stride);
  if (keep.empty())
    throw EstimationFailed("stability rejection discarded every feature; relax the criterion");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), traj.samples());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = traj.data().row(keep[i]);
  return traj.advance(std::move(out), traj.sample_rate(), Origin::stable);
}

}  // namespace facepulse

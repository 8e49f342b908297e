#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "facepulse/csv.hpp"
#include "facepulse/error.hpp"

namespace facepulse {

/// Processing stage of a trajectory matrix. Stages only move forward.
enum class Origin { raw = 0, interpolated = 1, stable = 2, filtered = 3 };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::raw: return "raw";
    case Origin::interpolated: return "interpolated";
    case Origin::stable: return "stable";
    case Origin::filtered: return "filtered";
  }
  return "raw";
}

inline std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "raw") return Origin::raw;
  if (s == "interpolated") return Origin::interpolated;
  if (s == "stable") return Origin::stable;
  if (s == "filtered") return Origin::filtered;
  return std::nullopt;
}

/// F x T matrix of vertical feature positions (pixels), one row per tracked feature.
class FeatureTrajectories {
 public:
  FeatureTrajectories(Eigen::MatrixXd data, double sample_rate, Origin origin = Origin::raw)
      : data_(std::move(data)), sample_rate_(sample_rate), origin_(origin) {
    if (data_.rows() < 1) throw InvalidInput("trajectories need at least one feature");
    if (data_.cols() < 2) throw InvalidInput("trajectories need at least two samples");
    if (!(sample_rate_ > 0) || !std::isfinite(sample_rate_)) throw InvalidInput("sample rate must be positive");
    if (!data_.allFinite()) throw InvalidInput("trajectories contain non-finite values");
  }

  const Eigen::MatrixXd& data() const noexcept { return data_; }
  double sample_rate() const noexcept { return sample_rate_; }
  Origin origin() const noexcept { return origin_; }
  Eigen::Index features() const noexcept { return data_.rows(); }
  Eigen::Index samples() const noexcept { return data_.cols(); }
  double duration() const noexcept { return static_cast<double>(samples() - 1) / sample_rate_; }

  /// Returns a copy with new data at a later stage; throws if `next` is not after the current stage.
  FeatureTrajectories advance(Eigen::MatrixXd next_data, double next_rate, Origin next) const {
    if (static_cast<int>(next) <= static_cast<int>(origin_))
      throw InvalidInput("origin cannot move from " + std::string(to_string(origin_)) + " to " +
                         std::string(to_string(next)));
    return FeatureTrajectories(std::move(next_data), next_rate, next);
  }

  friend bool operator==(const FeatureTrajectories&, const FeatureTrajectories&) = default;

 private:
  Eigen::MatrixXd data_;
  double sample_rate_;
  Origin origin_;
};

inline void require_origin(const FeatureTrajectories& t, Origin expected, std::string_view op) {
  if (t.origin() != expected)
    throw InvalidInput(std::string(op) + " expects " + std::string(to_string(expected)) + " trajectories, got " +
                       std::string(to_string(t.origin())));
}

// Trajectory CSV:
//   # fps=<float> origin=<raw|interpolated|stable|filtered>
//   frame,f0,f1,...
//   <frame index>,<F floats>

inline FeatureTrajectories parse_trajectories(const std::vector<std::string>& lines) {
  if (lines.size() < 2) throw ParseError("trajectory file needs a comment header and a column header");
  const auto header = csv::parse_comment_header(lines[0], 1);
  const auto fps_it = header.find("fps");
  if (fps_it == header.end()) throw ParseError("missing fps in header", 1);
  const double fps = csv::parse_double(fps_it->second, 1);
  if (!(fps > 0)) throw ParseError("fps must be positive", 1);
  Origin origin = Origin::raw;
  if (auto it = header.find("origin"); it != header.end()) {
    auto o = parse_origin(it->second);
    if (!o) throw ParseError("unknown origin '" + it->second + "'", 1);
    origin = *o;
  }

  const auto cols = csv::split(lines[1]);
  if (cols.size() < 2 || cols[0] != "frame") throw ParseError("column header must be 'frame,f0,...'", 2);
  for (std::size_t j = 1; j < cols.size(); ++j)
    if (cols[j] != "f" + std::to_string(j - 1))
      throw ParseError("column " + std::to_string(j) + " must be named f" + std::to_string(j - 1), 2);
  const auto n_features = static_cast<Eigen::Index>(cols.size() - 1);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto fields = csv::split(lines[i]);
    if (static_cast<Eigen::Index>(fields.size()) != n_features + 1)
      throw ParseError("expected " + std::to_string(n_features + 1) + " fields, got " + std::to_string(fields.size()),
                       i + 1);
    std::vector<double> r(fields.size() - 1);
    csv::parse_double(fields[0], i + 1);
    for (std::size_t j = 1; j < fields.size(); ++j) r[j - 1] = csv::parse_double(fields[j], i + 1);
    rows.push_back(std::move(r));
  }
  if (rows.size() < 2) throw ParseError("trajectory file needs at least two frames");

  Eigen::MatrixXd data(n_features, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (Eigen::Index f = 0; f < n_features; ++f) data(f, static_cast<Eigen::Index>(t)) = rows[t][f];
  return FeatureTrajectories(std::move(data), fps, origin);
}

inline FeatureTrajectories read_trajectories(const std::filesystem::path& path) {
  return parse_trajectories(csv::read_lines(path));
}

inline std::string format_trajectories(const FeatureTrajectories& t) {
  std::ostringstream out;
  out << "# fps=" << csv::format_double(t.sample_rate()) << " origin=" << to_string(t.origin()) << "\n";
  out << "frame";
  for (Eigen::Index f = 0; f < t.features(); ++f) out << ",f" << f;
  out << "\n";
  for (Eigen::Index s = 0; s < t.samples(); ++s) {
    out << s;
    for (Eigen::Index f = 0; f < t.features(); ++f) out << "," << csv::format_double(t.data()(f, s));
    out << "\n";
  }
  return out.str();
}

inline void write_trajectories(const std::filesystem::path& path, const FeatureTrajectories& t) {
  csv::write_atomic(path, format_trajectories(t));
}

}  // namespace facepulse

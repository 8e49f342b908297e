#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "facepulse/bss.hpp"
#include "facepulse/csv.hpp"
#include "facepulse/pulse.hpp"

namespace facepulse {

// ---------------------------------------------------------------------------
// Plot artifacts

/// Match curve of one component with its detected peaks.
struct MatchCurveArtifact {
  MatchCurve curve;
  double sample_rate = 1.0;
  std::size_t component = 0;
  double threshold = 0.0;
  std::vector<std::size_t> peak_indices;  // component samples (window centers)
};

/// Selected component with the peaks used for the rate.
struct PeakTraceArtifact {
  std::vector<double> values;
  double sample_rate = 1.0;
  std::size_t component = 0;
  BssMethod method = BssMethod::jade;
  double bpm = 0.0;
  std::vector<std::size_t> peak_indices;
};

namespace detail {

inline const std::string& header_value(const std::map<std::string, std::string>& h, const std::string& key) {
  const auto it = h.find(key);
  if (it == h.end()) throw ParseError("missing '" + key + "' in header", 1);
  return it->second;
}

inline std::size_t parse_index(std::string_view s, std::size_t line) {
  const double v = csv::parse_double(s, line);
  if (v < 0 || v != std::floor(v)) throw ParseError("expected a non-negative integer", line);
  return static_cast<std::size_t>(v);
}

inline void expect_columns(const std::string& line, const char* expected) {
  if (csv::trim(line) != expected) throw ParseError(std::string("column header must be '") + expected + "'", 2);
}

inline bool is_flag(std::string_view s, std::size_t line) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError("flag column must be 0 or 1", line);
}

}  // namespace detail

inline std::string format_match_curve(const MatchCurveArtifact& a) {
  std::ostringstream out;
  out << "# kind=match-curve fps=" << csv::format_double(a.sample_rate) << " component=" << a.component
      << " step=" << a.curve.step << " window=" << a.curve.window
      << " threshold=" << csv::format_double(a.threshold) << "\n";
  out << "position,distance,peak\n";
  const std::size_t off = a.curve.window / 2;
  for (std::size_t i = 0; i < a.curve.positions.size(); ++i) {
    const bool peak = std::binary_search(a.peak_indices.begin(), a.peak_indices.end(), a.curve.positions[i] + off);
    out << a.curve.positions[i] << "," << csv::format_double(a.curve.distances[i]) << "," << (peak ? 1 : 0) << "\n";
  }
  return out.str();
}

inline MatchCurveArtifact parse_match_curve(const std::vector<std::string>& lines) {
  if (lines.size() < 3) throw ParseError("match-curve file needs headers and at least one row");
  const auto h = csv::parse_comment_header(lines[0], 1);
  if (detail::header_value(h, "kind") != "match-curve") throw ParseError("not a match-curve artifact", 1);
  MatchCurveArtifact a;
  a.sample_rate = csv::parse_double(detail::header_value(h, "fps"), 1);
  if (!(a.sample_rate > 0)) throw ParseError("fps must be positive", 1);
  a.component = detail::parse_index(detail::header_value(h, "component"), 1);
  a.curve.step = detail::parse_index(detail::header_value(h, "step"), 1);
  a.curve.window = detail::parse_index(detail::header_value(h, "window"), 1);
  a.threshold = csv::parse_double(detail::header_value(h, "threshold"), 1);
  detail::expect_columns(lines[1], "position,distance,peak");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 3) throw ParseError("wrong number of fields", i + 1);
    const auto pos = detail::parse_index(f[0], i + 1);
    if (!a.curve.positions.empty() && pos <= a.curve.positions.back())
      throw ParseError("positions must be strictly increasing", i + 1);
    a.curve.positions.push_back(pos);
    a.curve.distances.push_back(csv::parse_double(f[1], i + 1));
    if (detail::is_flag(f[2], i + 1)) a.peak_indices.push_back(pos + a.curve.window / 2);
  }
  if (a.curve.positions.empty()) throw ParseError("match-curve file has no rows");
  return a;
}

inline std::string format_peak_trace(const PeakTraceArtifact& a) {
  std::ostringstream out;
  out << "# kind=peaks method=" << to_string(a.method) << " fps=" << csv::format_double(a.sample_rate)
      << " component=" << a.component << " bpm=" << csv::format_double(a.bpm) << "\n";
  out << "t,value,peak\n";
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool peak = std::binary_search(a.peak_indices.begin(), a.peak_indices.end(), i);
    out << csv::format_double(static_cast<double>(i) / a.sample_rate) << "," << csv::format_double(a.values[i]) << ","
        << (peak ? 1 : 0) << "\n";
  }
  return out.str();
}

inline PeakTraceArtifact parse_peak_trace(const std::vector<std::string>& lines) {
  if (lines.size() < 3) throw ParseError("peak file needs headers and at least one row");
  const auto h = csv::parse_comment_header(lines[0], 1);
  if (detail::header_value(h, "kind") != "peaks") throw ParseError("not a peaks artifact", 1);
  PeakTraceArtifact a;
  const auto m = parse_method(detail::header_value(h, "method"));
  if (!m) throw ParseError("unknown method", 1);
  a.method = *m;
  a.sample_rate = csv::parse_double(detail::header_value(h, "fps"), 1);
  if (!(a.sample_rate > 0)) throw ParseError("fps must be positive", 1);
  a.component = detail::parse_index(detail::header_value(h, "component"), 1);
  a.bpm = csv::parse_double(detail::header_value(h, "bpm"), 1);
  detail::expect_columns(lines[1], "t,value,peak");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 3) throw ParseError("wrong number of fields", i + 1);
    csv::parse_double(f[0], i + 1);
    a.values.push_back(csv::parse_double(f[1], i + 1));
    if (detail::is_flag(f[2], i + 1)) a.peak_indices.push_back(a.values.size() - 1);
  }
  return a;
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotMarkers {
  std::vector<double> x;
  std::vector<double> y;
  bool numbered = false;
};

struct PlotPanel {
  std::string title;
  std::vector<PlotSeries> series;
  PlotMarkers markers;
  std::optional<double> hline;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

}  // namespace detail

/// Vertically stacked line panels sharing one x label.
inline std::string render_svg(const std::vector<PlotPanel>& panels, const std::string& xlabel) {
  constexpr double width = 900, panel_h = 180, left = 70, right = 20, top = 30, gap = 40;
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  const double height = top + static_cast<double>(panels.size()) * (panel_h + gap) + 20;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double y0 = top + static_cast<double>(p) * (panel_h + gap);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : panel.series) {
      for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
      for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
    if (panel.hline) ymin = std::min(ymin, *panel.hline), ymax = std::max(ymax, *panel.hline);
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pw = width - left - right;
    auto sx = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double v) { return y0 + panel_h - (v - ymin) / (ymax - ymin) * panel_h; };

    out << "<text x=\"" << left << "\" y=\"" << y0 - 8 << "\" font-weight=\"bold\">" << detail::svg_escape(panel.title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << panel_h
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << detail::fmt(ymax)
        << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << y0 + panel_h << "\" text-anchor=\"end\">" << detail::fmt(ymin)
        << "</text>\n";
    out << "<text x=\"" << left << "\" y=\"" << y0 + panel_h + 14 << "\">" << detail::fmt(xmin) << "</text>\n";
    out << "<text x=\"" << left + pw << "\" y=\"" << y0 + panel_h + 14 << "\" text-anchor=\"end\">"
        << detail::fmt(xmax) << " " << detail::svg_escape(xlabel) << "</text>\n";
    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const auto& ser = panel.series[s];
      out << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[s % 6] << "\" points=\"";
      for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i)
        out << detail::fmt(sx(ser.x[i])) << "," << detail::fmt(sy(ser.y[i])) << " ";
      out << "\"><title>" << detail::svg_escape(ser.label) << "</title></polyline>\n";
    }
    if (panel.hline)
      out << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << sy(*panel.hline) << "\" y2=\""
          << sy(*panel.hline) << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t i = 0; i < panel.markers.x.size(); ++i) {
      const double cx = sx(panel.markers.x[i]), cy = sy(panel.markers.y[i]);
      out << "<circle class=\"peak\" cx=\"" << detail::fmt(cx) << "\" cy=\"" << detail::fmt(cy)
          << "\" r=\"3.5\" fill=\"red\"/>\n";
      if (panel.markers.numbered)
        out << "<text x=\"" << detail::fmt(cx) << "\" y=\"" << detail::fmt(cy - 6)
            << "\" text-anchor=\"middle\" fill=\"red\">" << i + 1 << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

struct PlotOutput {
  std::string svg;
  std::string csv;
};

inline PlotOutput plot_components(const ComponentSet& cs) {
  std::vector<PlotPanel> panels;
  std::vector<double> t(static_cast<std::size_t>(cs.samples()));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / cs.sample_rate;
  for (Eigen::Index k = 0; k < cs.size(); ++k) {
    PlotPanel p;
    p.title = std::string(to_string(cs.method)) + " component " + std::to_string(k);
    p.series.push_back({"c" + std::to_string(k), t, cs.row(k)});
    panels.push_back(std::move(p));
  }
  return {render_svg(panels, "s"), format_components(cs)};
}

inline PlotOutput plot_match_curve(const MatchCurveArtifact& a) {
  PlotPanel p;
  p.title = "match curve, component " + std::to_string(a.component);
  const std::size_t off = a.curve.window / 2;
  PlotSeries s{"distance", {}, a.curve.distances};
  for (auto pos : a.curve.positions) s.x.push_back(static_cast<double>(pos + off) / a.sample_rate);
  std::ostringstream csv_out;
  csv_out << "center_seconds,distance,peak\n";
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const bool peak = std::binary_search(a.peak_indices.begin(), a.peak_indices.end(), a.curve.positions[i] + off);
    if (peak) {
      p.markers.x.push_back(s.x[i]);
      p.markers.y.push_back(a.curve.distances[i]);
    }
    csv_out << csv::format_double(s.x[i]) << "," << csv::format_double(a.curve.distances[i]) << "," << (peak ? 1 : 0)
            << "\n";
  }
  p.series.push_back(std::move(s));
  p.hline = a.threshold;
  return {render_svg({p}, "s"), csv_out.str()};
}

inline PlotOutput plot_peaks(const PeakTraceArtifact& a) {
  PlotPanel p;
  p.title = std::string(to_string(a.method)) + " component " + std::to_string(a.component) + ", " +
            detail::fmt(a.bpm) + " bpm";
  PlotSeries s{"component", {}, a.values};
  for (std::size_t i = 0; i < a.values.size(); ++i) s.x.push_back(static_cast<double>(i) / a.sample_rate);
  std::ostringstream csv_out;
  csv_out << "peak,sample,t,value\n";
  for (std::size_t j = 0; j < a.peak_indices.size(); ++j) {
    const auto i = a.peak_indices[j];
    if (i >= a.values.size()) throw InvalidInput("peak index beyond the component length");
    p.markers.x.push_back(s.x[i]);
    p.markers.y.push_back(a.values[i]);
    csv_out << j + 1 << "," << i << "," << csv::format_double(s.x[i]) << "," << csv::format_double(a.values[i]) << "\n";
  }
  p.markers.numbered = true;
  p.series.push_back(std::move(s));
  return {render_svg({p}, "s"), csv_out.str()};
}

}  // namespace facepulse

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <regex>
#include <sstream>

#include "facepulse/plot.hpp"

using namespace facepulse;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<double> circle_cx(const std::string& svg) {
  static const std::regex re(R"re(<circle class="peak" cx="([-0-9.e]+)")re");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back(std::stod((*it)[1]));
  return out;
}

PeakTraceArtifact trace() {
  PeakTraceArtifact a;
  a.sample_rate = 50;
  a.component = 2;
  a.method = BssMethod::shibbs;
  a.bpm = 72;
  for (int i = 0; i < 500; ++i) a.values.push_back(std::sin(2 * std::numbers::pi * 1.2 * i / 50.0));
  a.peak_indices = {10, 52, 94, 135, 177};
  return a;
}

MatchCurveArtifact match() {
  MatchCurveArtifact a;
  a.sample_rate = 250;
  a.component = 1;
  a.curve.step = 5;
  a.curve.window = 250;
  for (std::size_t i = 0; i < 60; ++i) {
    a.curve.positions.push_back(i * 5);
    a.curve.distances.push_back(10 + std::cos(static_cast<double>(i) / 3.0));
  }
  a.threshold = 10.5;
  a.peak_indices = {125, 125 + 95, 125 + 190};
  return a;
}

}  // namespace

TEST(PlotArtifacts, PeakTraceRoundTrip) {
  const auto a = trace();
  const auto b = parse_peak_trace(lines_of(format_peak_trace(a)));
  EXPECT_EQ(b.values.size(), a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_EQ(b.values[i], a.values[i]);
  EXPECT_EQ(b.peak_indices, a.peak_indices);
  EXPECT_EQ(b.method, a.method);
  EXPECT_EQ(b.component, 2u);
  EXPECT_EQ(b.bpm, 72.0);
  EXPECT_EQ(b.sample_rate, 50.0);
}

TEST(PlotArtifacts, MatchCurveRoundTrip) {
  const auto a = match();
  const auto b = parse_match_curve(lines_of(format_match_curve(a)));
  EXPECT_EQ(b.curve.positions, a.curve.positions);
  EXPECT_EQ(b.curve.distances, a.curve.distances);
  EXPECT_EQ(b.curve.step, 5u);
  EXPECT_EQ(b.curve.window, 250u);
  EXPECT_EQ(b.peak_indices, a.peak_indices);
  EXPECT_EQ(b.threshold, 10.5);
}

TEST(PlotArtifacts, MalformedFilesAreParseErrors) {
  EXPECT_THROW(parse_peak_trace({"# kind=peaks"}), ParseError);
  auto lines = lines_of(format_peak_trace(trace()));
  lines[1] = "t,value";
  EXPECT_THROW(parse_peak_trace(lines), ParseError);
  lines = lines_of(format_peak_trace(trace()));
  lines[5] = "0.1,0.2,7";
  EXPECT_THROW(parse_peak_trace(lines), ParseError);
  lines = lines_of(format_match_curve(match()));
  lines[0] = "# kind=match-curve fps=250";
  EXPECT_THROW(parse_match_curve(lines), ParseError);
}

TEST(Plot, PeakMarkersSitOnThePeakSamples) {
  const auto a = trace();
  const auto out = plot_peaks(a);
  const auto cx = circle_cx(out.svg);
  ASSERT_EQ(cx.size(), a.peak_indices.size());
  // plot area spans x in [70, 880] for t in [0, (n-1)/fs]
  const double tmax = static_cast<double>(a.values.size() - 1) / a.sample_rate;
  for (std::size_t j = 0; j < cx.size(); ++j) {
    const double t = static_cast<double>(a.peak_indices[j]) / a.sample_rate;
    EXPECT_NEAR(cx[j], 70 + t / tmax * 810, 0.01);
  }
  const auto rows = lines_of(out.csv);
  ASSERT_EQ(rows.size(), a.peak_indices.size() + 1);
  EXPECT_EQ(rows[0], "peak,sample,t,value");
  for (std::size_t j = 0; j < a.peak_indices.size(); ++j) {
    const auto f = csv::split(rows[j + 1]);
    EXPECT_EQ(std::stoul(std::string(f[0])), j + 1);
    EXPECT_EQ(std::stoul(std::string(f[1])), a.peak_indices[j]);
    EXPECT_EQ(std::stod(std::string(f[3])), a.values[a.peak_indices[j]]);
  }
  EXPECT_NE(out.svg.find(">5</text>"), std::string::npos);
}

TEST(Plot, MatchCurveMarkersAtPeakWindows) {
  const auto a = match();
  const auto out = plot_match_curve(a);
  EXPECT_EQ(circle_cx(out.svg).size(), 3u);
  std::size_t flagged = 0;
  for (const auto& l : lines_of(out.csv))
    if (l.size() > 2 && l.substr(l.size() - 2) == ",1") ++flagged;
  EXPECT_EQ(flagged, 3u);
  EXPECT_NE(out.svg.find("stroke-dasharray"), std::string::npos);
}

TEST(Plot, PeakBeyondTraceRejected) {
  auto a = trace();
  a.peak_indices.push_back(500);
  EXPECT_THROW(plot_peaks(a), InvalidInput);
}

TEST(Plot, ComponentsOnePanelEach) {
  ComponentSet cs;
  cs.components = Eigen::MatrixXd::Random(3, 100);
  cs.sample_rate = 10;
  cs.method = BssMethod::jade;
  const auto out = plot_components(cs);
  std::size_t panels = 0;
  for (std::size_t pos = 0; (pos = out.svg.find("<polyline", pos)) != std::string::npos; ++pos) ++panels;
  EXPECT_EQ(panels, 3u);
  EXPECT_NE(out.svg.find("JADE component 2"), std::string::npos);
}

TEST(Plot, TitlesAreEscaped) {
  PlotPanel p;
  p.title = "a<b & c";
  const auto svg = render_svg({p}, "s");
  EXPECT_NE(svg.find("a&lt;b &amp; c"), std::string::npos);
}

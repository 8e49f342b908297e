#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "facepulse/butterworth.hpp"
#include "facepulse/random.hpp"
#include "facepulse/spline.hpp"
#include "facepulse/stability.hpp"
#include "facepulse/trajectories.hpp"

using namespace facepulse;

namespace {

FeatureTrajectories raw_rows(std::initializer_list<std::vector<double>> rows, double fs = 25.0) {
  const auto n = static_cast<Eigen::Index>(rows.begin()->size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), n);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    for (Eigen::Index t = 0; t < n; ++t) m(r, t) = row[static_cast<std::size_t>(t)];
    ++r;
  }
  return FeatureTrajectories(m, fs, Origin::raw);
}

// Natural spline through (i, y_i) by a dense solve of the full coefficient system:
// unknowns a_i, b_i, c_i, d_i per segment, s_i(x) = a + b u + c u^2 + d u^3 with u = x - i.
std::vector<Eigen::Vector4d> dense_natural_spline(const std::vector<double>& y) {
  const int n = static_cast<int>(y.size()) - 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4 * n);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    a(row, 4 * i) = 1;  // s_i(0) = y_i
    rhs(row++) = y[static_cast<std::size_t>(i)];
    for (int p = 0; p < 4; ++p) a(row, 4 * i + p) = 1;  // s_i(1) = y_{i+1}
    rhs(row++) = y[static_cast<std::size_t>(i + 1)];
  }
  for (int i = 0; i + 1 < n; ++i) {
    a(row, 4 * i + 1) = 1, a(row, 4 * i + 2) = 2, a(row, 4 * i + 3) = 3, a(row, 4 * (i + 1) + 1) = -1;
    ++row;
    a(row, 4 * i + 2) = 2, a(row, 4 * i + 3) = 6, a(row, 4 * (i + 1) + 2) = -2;
    ++row;
  }
  a(row++, 2) = 2;
  a(row, 4 * (n - 1) + 2) = 2, a(row, 4 * (n - 1) + 3) = 6;
  const Eigen::VectorXd c = a.fullPivLu().solve(rhs);
  std::vector<Eigen::Vector4d> out;
  for (int i = 0; i < n; ++i) out.emplace_back(c.segment<4>(4 * i));
  return out;
}

// Single-bin DFT amplitude of x at frequency f.
double dft_amplitude(const std::vector<double>& x, double f, double fs) {
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

std::vector<double> sine(double f, double fs, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

FeatureTrajectories stable_rows(const std::vector<std::vector<double>>& rows, double fs) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t t = 0; t < rows[r].size(); ++t) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = rows[r][t];
  return FeatureTrajectories(m, fs, Origin::stable);
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectories

TEST(Trajectories, RejectsEmptyShortAndNonFinite) {
  EXPECT_THROW(FeatureTrajectories(Eigen::MatrixXd(0, 5), 25.0), InvalidInput);
  EXPECT_THROW(FeatureTrajectories(Eigen::MatrixXd::Zero(2, 1), 25.0), InvalidInput);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  m(1, 2) = std::nan("");
  EXPECT_THROW(FeatureTrajectories(m, 25.0), InvalidInput);
  EXPECT_THROW(FeatureTrajectories(Eigen::MatrixXd::Zero(2, 3), 0.0), InvalidInput);
}

TEST(Trajectories, OriginOnlyMovesForward) {
  const auto t = raw_rows({{1, 2, 3}});
  const auto s = t.advance(t.data(), 25.0, Origin::stable);
  EXPECT_EQ(s.origin(), Origin::stable);
  EXPECT_THROW(s.advance(s.data(), 25.0, Origin::interpolated), InvalidInput);
  EXPECT_THROW(s.advance(s.data(), 25.0, Origin::stable), InvalidInput);
}

TEST(Trajectories, CsvRoundTripIsExact) {
  detail::SeededNormal rng(3);
  Eigen::MatrixXd m(3, 7);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 200 + 50 * rng();
  const FeatureTrajectories t(m, 29.97, Origin::raw);
  const auto text = format_trajectories(t);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  EXPECT_EQ(lines[0], "# fps=29.97 origin=raw");
  EXPECT_EQ(lines[1], "frame,f0,f1,f2");
  EXPECT_EQ(parse_trajectories(lines), t);
}

TEST(Trajectories, ParseErrorsNameTheLine) {
  std::vector<std::string> lines{"# fps=25 origin=raw", "frame,f0,f1", "0,1,2", "1,3,oops"};
  try {
    parse_trajectories(lines);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_trajectories({"# fps=25 origin=raw", "frame,f0", "0,1", "1,"}), ParseError);
  EXPECT_THROW(parse_trajectories({"# origin=raw", "frame,f0", "0,1", "1,2"}), ParseError);
  EXPECT_THROW(parse_trajectories({"# fps=25 origin=sideways", "frame,f0", "0,1", "1,2"}), ParseError);
  EXPECT_THROW(parse_trajectories({"# fps=25 origin=raw", "frame,f0", "0,1", "1,nan"}), ParseError);
}

// ---------------------------------------------------------------------------
// Spline resampling

TEST(SplineResample, LinearRowIsReproducedExactly) {
  const auto out = cubic_spline_resample(raw_rows({{0, 1, 2}}), 10);
  ASSERT_EQ(out.samples(), 21);
  EXPECT_EQ(out.origin(), Origin::interpolated);
  EXPECT_DOUBLE_EQ(out.sample_rate(), 250.0);
  for (Eigen::Index j = 0; j < 21; ++j) EXPECT_NEAR(out.data()(0, j), 0.1 * static_cast<double>(j), 1e-15);
}

TEST(SplineResample, FactorOneIsIdentity) {
  const auto in = raw_rows({{3, 1, 4, 1, 5}, {9, 2, 6, 5, 3}});
  const auto out = cubic_spline_resample(in, 1);
  EXPECT_EQ(out.origin(), Origin::interpolated);
  EXPECT_EQ(out.data(), in.data());
}

TEST(SplineResample, MatchesDenseNaturalSplineOnCubic) {
  std::vector<double> y;
  for (int i = 0; i < 5; ++i) y.push_back(std::pow(i, 3));
  const auto coef = dense_natural_spline(y);
  const NaturalCubicSpline s(y);
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const double u = 0.5;
    const double expect = coef[i](0) + coef[i](1) * u + coef[i](2) * u * u + coef[i](3) * u * u * u;
    EXPECT_NEAR(s(static_cast<double>(i) + u), expect, 1e-9);
  }
  const auto r = spline_resample(y, 2);
  for (std::size_t i = 0; i < coef.size(); ++i)
    EXPECT_NEAR(r[2 * i + 1], coef[i](0) + coef[i](1) * 0.5 + coef[i](2) * 0.25 + coef[i](3) * 0.125, 1e-9);
}

TEST(SplineResample, PreservesEndpointsAndKnots) {
  detail::SeededNormal rng(11);
  std::vector<double> y(40);
  for (auto& v : y) v = rng();
  const auto r = spline_resample(y, 7);
  ASSERT_EQ(r.size(), 39u * 7 + 1);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(r[7 * i], y[i]);
}

TEST(SplineResample, RejectsBadInput) {
  EXPECT_THROW(cubic_spline_resample(raw_rows({{1, 2}}), 10), InvalidInput);
  EXPECT_THROW(cubic_spline_resample(raw_rows({{1, 2, 3}}), 0), InvalidInput);
  const auto t = raw_rows({{1, 2, 3}});
  EXPECT_THROW(cubic_spline_resample(t.advance(t.data(), 25, Origin::interpolated), 2), InvalidInput);
}

// ---------------------------------------------------------------------------
// Stability rejection

TEST(Stability, ConstantFeaturesAllRetained) {
  const FeatureTrajectories t(Eigen::MatrixXd::Constant(4, 10, 7.0), 250, Origin::interpolated);
  const auto s = remove_unstable_features(t);
  EXPECT_EQ(s.features(), 4);
  EXPECT_EQ(s.origin(), Origin::stable);
}

TEST(Stability, DiscardsFeaturesAboveTheMode) {
  // rounded maxima 1,1,1,2,3 -> mode 1
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 3);
  const double jumps[] = {1.2, 0.9, 1.4, 2.1, 2.6};
  for (int f = 0; f < 5; ++f) m(f, 1) = jumps[f];
  EXPECT_EQ(rounded_max_displacements(m), (std::vector<long>{1, 1, 1, 2, 3}));
  EXPECT_EQ(mode_of({1, 1, 1, 2, 3}), 1);
  const auto s = remove_unstable_features(FeatureTrajectories(m, 250, Origin::interpolated));
  ASSERT_EQ(s.features(), 3);
  EXPECT_DOUBLE_EQ(s.data()(2, 1), 1.4);
}

TEST(Stability, SingleFeatureRetained) {
  Eigen::MatrixXd m(1, 4);
  m << 0, 5, -3, 8;
  EXPECT_EQ(remove_unstable_features(FeatureTrajectories(m, 250, Origin::interpolated)).features(), 1);
}

TEST(Stability, ModeTiesGoToSmallestValue) {
  EXPECT_EQ(mode_of({3, 3, 1, 1, 2}), 1);
  EXPECT_EQ(mode_of({5}), 5);
}

TEST(Stability, IsIdempotent) {
  detail::SeededNormal rng(5);
  Eigen::MatrixXd m(30, 50);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 3 * rng();
  const auto once = remove_unstable_features(FeatureTrajectories(m, 250, Origin::interpolated));
  const auto twice = remove_unstable_features(FeatureTrajectories(once.data(), 250, Origin::interpolated));
  EXPECT_EQ(once.data(), twice.data());
}

TEST(Stability, StrideMeasuresFrameToFrame) {
  Eigen::MatrixXd m(1, 5);
  m << 0, 0.9, 1.8, 2.7, 3.6;  // 0.9 per sample, 1.8 per two samples
  EXPECT_EQ(rounded_max_displacements(m, 1)[0], 1);
  EXPECT_EQ(rounded_max_displacements(m, 2)[0], 2);
}

// ---------------------------------------------------------------------------
// Band-pass

TEST(BandPass, MagnitudeMatchesReferenceDesign) {
  // |H| of the 5th-order 0.75-5 Hz design at 250 Hz, frozen from an independent reference implementation
  const std::pair<double, double> ref[] = {
      {0.1, 1.8967438980695005e-05}, {0.5, 0.08226828041034832}, {0.75, 0.7071067811863756},
      {1.5, 0.9999997364100172},     {3.0, 0.9999308917637497},  {5.0, 0.7071067811865464},
      {10.0, 0.01644321227216803},   {50.0, 2.1751171374096696e-06}};
  const auto sos = design_butterworth_bandpass(BandPassSpec{}, 250.0);
  EXPECT_EQ(sos.size(), 5u);
  for (const auto& [f, mag] : ref) EXPECT_NEAR(frequency_response(sos, f, 250.0), mag, 1e-9 * std::max(1.0, mag)) << f;
}

TEST(BandPass, ZeroInZeroOut) {
  const auto out = butterworth_bandpass(stable_rows({std::vector<double>(600, 0.0)}, 250), BandPassSpec{});
  EXPECT_EQ(out.origin(), Origin::filtered);
  EXPECT_TRUE(out.data().isZero(0.0));
}

TEST(BandPass, PassbandSineKeepsAmplitude) {
  const double fs = 250;
  const auto x = sine(1.5, fs, 5000);
  const auto y = butterworth_bandpass(stable_rows({x}, fs), BandPassSpec{});
  // 3000 samples = 18 whole periods
  std::vector<double> mid(y.data().row(0).data() + 1000, y.data().row(0).data() + 4000);
  const double a = dft_amplitude(mid, 1.5, fs);
  EXPECT_GE(a, 0.95);
  EXPECT_LE(a, 1.0 + 1e-6);
}

TEST(BandPass, LowFrequencyAttenuated) {
  const double fs = 250;
  const auto x = sine(0.1, fs, 25000);
  const auto y = butterworth_bandpass(stable_rows({x}, fs), BandPassSpec{});
  std::vector<double> mid(y.data().row(0).data() + 5000, y.data().row(0).data() + 20000);
  EXPECT_LT(dft_amplitude(mid, 0.1, fs), 0.1);
}

TEST(BandPass, ZeroPhaseLag) {
  const double fs = 250;
  const auto x = sine(2.0, fs, 3000, 0.3);
  const auto y = butterworth_bandpass(stable_rows({x}, fs), BandPassSpec{});
  int best_lag = 0;
  double best = -1e300;
  for (int lag = -20; lag <= 20; ++lag) {
    double acc = 0;
    for (int i = 500; i < 2500; ++i) acc += x[static_cast<std::size_t>(i)] * y.data()(0, i + lag);
    if (acc > best) best = acc, best_lag = lag;
  }
  EXPECT_EQ(best_lag, 0);
}

TEST(BandPass, IsLinear) {
  detail::SeededNormal rng(9);
  std::vector<double> a(800), b(800), c(800);
  for (std::size_t i = 0; i < 800; ++i) {
    a[i] = rng();
    b[i] = rng();
    c[i] = 2.5 * a[i] - 0.75 * b[i];
  }
  const auto y = butterworth_bandpass(stable_rows({a, b, c}, 250), BandPassSpec{});
  const Eigen::VectorXd combo = 2.5 * y.data().row(0) - 0.75 * y.data().row(1);
  EXPECT_LE((y.data().row(2).transpose() - combo).norm(), 1e-9 * combo.norm());
}

TEST(BandPass, RejectsInvalidSpec) {
  const auto t = stable_rows({std::vector<double>(600, 1.0)}, 250);
  EXPECT_THROW(butterworth_bandpass(t, BandPassSpec{0.75, 125.0, 5}), InvalidInput);
  EXPECT_THROW(butterworth_bandpass(t, BandPassSpec{5.0, 0.75, 5}), InvalidInput);
  EXPECT_THROW(butterworth_bandpass(t, BandPassSpec{0.75, 5.0, 0}), InvalidInput);
  EXPECT_THROW(butterworth_bandpass(FeatureTrajectories(t.data(), 250, Origin::raw), BandPassSpec{}), InvalidInput);
}

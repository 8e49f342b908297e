#include <gtest/gtest.h>

#include "facepulse/pipeline.hpp"
#include "facepulse/synthetic.hpp"

using namespace facepulse;

namespace {

FeatureTrajectories synthetic_subject(std::uint64_t seed, double pulse_hz = 1.2) {
  synthetic::TrajectorySpec spec;
  spec.seed = seed;
  spec.pulse_hz = pulse_hz;
  return synthetic::make_trajectories(spec);
}

}  // namespace

TEST(Pipeline, RecoversSyntheticRate) {
  const auto est = estimate_pulse(synthetic_subject(3), PipelineConfig{});
  EXPECT_NEAR(est.bpm, 72.0, 3.0);
  EXPECT_EQ(est.sample_rate, 250.0);
  EXPECT_EQ(est.bad_flags.size(), 5u);
  EXPECT_EQ(est.peak_counts.size(), 5u);
  EXPECT_GE(est.peaks.size(), 3u);
  EXPECT_EQ(est.n_p, est.peaks.size() - 1);
  EXPECT_FALSE(est.bad_flags[est.selected_component]);
}

TEST(Pipeline, TracksADifferentRate) {
  const auto est = estimate_pulse(synthetic_subject(4, 1.5), PipelineConfig{});
  EXPECT_NEAR(est.bpm, 90.0, 3.0);
}

TEST(Pipeline, DeterministicAcrossRuns) {
  const auto raw = synthetic_subject(5);
  for (auto m : {BssMethod::pca, BssMethod::jade, BssMethod::fastica, BssMethod::shibbs}) {
    const auto a = estimate_pulse(raw, m, PipelineConfig{});
    const auto b = estimate_pulse(raw, m, PipelineConfig{});
    EXPECT_EQ(a.bpm, b.bpm) << to_string(m);
    EXPECT_EQ(a.peaks.peak_indices, b.peaks.peak_indices);
    EXPECT_EQ(a.selected_component, b.selected_component);
  }
}

TEST(Pipeline, TraceKeepsIntermediates) {
  PipelineTrace trace;
  const auto est = estimate_pulse(synthetic_subject(6), PipelineConfig{}, &trace);
  EXPECT_EQ(trace.features_in, 40u);
  EXPECT_LE(trace.features_stable, trace.features_in);
  EXPECT_GE(trace.features_stable, 5u);
  EXPECT_EQ(trace.components.size(), 5);
  EXPECT_TRUE(trace.components.normalized);
  ASSERT_EQ(trace.curves.size(), 5u);
  EXPECT_EQ(trace.patterns[0].size(), 250u);
  EXPECT_EQ(trace.peak_sets[est.selected_component].peak_indices, est.peaks.peak_indices);
}

TEST(Pipeline, SsaSmoothingRunsAndStaysClose) {
  PipelineConfig cfg;
  cfg.ssa.enabled = true;
  PipelineTrace trace;
  const auto est = estimate_pulse(synthetic_subject(7), cfg, &trace);
  EXPECT_NEAR(est.bpm, 72.0, 3.0);
  ASSERT_EQ(trace.ssa_leading_energy.size(), 5u);
  for (double e : trace.ssa_leading_energy) {
    EXPECT_GT(e, 0.0);
    EXPECT_LE(e, 1.0 + 1e-12);
  }
}

TEST(Pipeline, ProcessedInputIsRejected) {
  const auto raw = synthetic_subject(8);
  const FeatureTrajectories filtered(raw.data(), raw.sample_rate(), Origin::filtered);
  EXPECT_THROW(estimate_pulse(filtered, PipelineConfig{}), InvalidInput);
}

TEST(Pipeline, TooFewStableFeaturesIsAStageError) {
  synthetic::TrajectorySpec spec;
  spec.features = 3;
  try {
    estimate_pulse(synthetic::make_trajectories(spec), PipelineConfig{});
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "separation");
    EXPECT_TRUE(e.estimation_failure());
  }
}

TEST(Pipeline, RecordShorterThanPatternAnchors) {
  synthetic::TrajectorySpec spec;
  spec.duration_seconds = 12;
  try {
    estimate_pulse(synthetic::make_trajectories(spec), PipelineConfig{});
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "peaks");
    EXPECT_FALSE(e.estimation_failure());
  }
}

TEST(Pipeline, FlatTrajectoriesFailToEstimate) {
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(20, 500, 100.0);
  const FeatureTrajectories raw(flat, 25.0);
  EXPECT_THROW(estimate_pulse(raw, PipelineConfig{}), StageError);
}

TEST(Pipeline, BandAboveNyquistIsADataError) {
  PipelineConfig cfg;
  cfg.interpolation_factor = 1;
  cfg.band.high_hz = 20.0;
  try {
    estimate_pulse(synthetic_subject(9), cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "bandpass");
    EXPECT_FALSE(e.estimation_failure());
  }
}

#include <gtest/gtest.h>

#include <fstream>

#include "facepulse/config.hpp"

using namespace facepulse;

namespace {

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, Defaults) {
  const PipelineConfig c;
  EXPECT_EQ(c.band.low_hz, 0.75);
  EXPECT_EQ(c.band.high_hz, 5.0);
  EXPECT_EQ(c.band.order, 5);
  EXPECT_EQ(c.interpolation_factor, 10);
  EXPECT_EQ(c.method, BssMethod::jade);
  EXPECT_EQ(c.bss.n_components, 5);
  EXPECT_EQ(c.pattern.anchors_seconds, (std::vector<double>{2, 8, 16}));
  EXPECT_EQ(c.pattern.window_seconds, 1.0);
  EXPECT_EQ(c.mdtw_step, 5u);
  EXPECT_EQ(c.peaks.min_separation_seconds, 0.33);
  EXPECT_EQ(c.bad_component.mode, BadComponentMode::intent);
  EXPECT_EQ(c.n_p_mode, PeakCountMode::intervals);
  EXPECT_EQ(c.selection.skewness_mode, SkewnessMode::absolute);
  EXPECT_FALSE(c.ssa.enabled);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, EmptyObjectKeepsDefaults) {
  EXPECT_EQ(format_config(parse_config("{}")), format_config(PipelineConfig{}));
}

TEST(Config, RoundTrip) {
  PipelineConfig c;
  c.method = BssMethod::shibbs;
  c.band.high_hz = 4.0;
  c.pattern.anchors_seconds = {1, 3};
  c.peaks.polarity = PeakPolarity::minima;
  c.bad_component.mode = BadComponentMode::literal;
  c.n_p_mode = PeakCountMode::literal;
  c.selection.skewness_mode = SkewnessMode::signed_minimum;
  c.bss.fastica.contrast = Contrast::cube;
  c.ssa.enabled = true;
  c.ssa.window_length = 40;
  const auto text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text)), text);
}

TEST(Config, PartialOverlay) {
  const auto c = parse_config(R"({"band": {"high_hz": 4.5}, "peaks": {"polarity": "minima"}})");
  EXPECT_EQ(c.band.high_hz, 4.5);
  EXPECT_EQ(c.band.low_hz, 0.75);
  EXPECT_EQ(c.peaks.polarity, PeakPolarity::minima);
  EXPECT_EQ(c.peaks.threshold_quantile, PipelineConfig{}.peaks.threshold_quantile);
}

TEST(Config, MethodNamesAreCaseInsensitive) {
  EXPECT_EQ(parse_config(R"({"method": "FastICA"})").method, BssMethod::fastica);
  EXPECT_EQ(parse_config(R"({"method": "pca"})").method, BssMethod::pca);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(key_of(R"({"band": {"low_hz": -1}})"), "band.low_hz");
  EXPECT_EQ(key_of(R"({"band": {"low_hz": 6}})"), "band.high_hz");
  EXPECT_EQ(key_of(R"({"band": {"order": 0}})"), "band.order");
  EXPECT_EQ(key_of(R"({"interpolation_factor": 0})"), "interpolation_factor");
  EXPECT_EQ(key_of(R"({"method": "ica"})"), "method");
  EXPECT_EQ(key_of(R"({"bss": {"n_components": 0}})"), "bss.n_components");
  EXPECT_EQ(key_of(R"({"bss": {"fastica": {"contrast": "tanh"}}})"), "bss.fastica.contrast");
  EXPECT_EQ(key_of(R"({"pattern": {"anchors_seconds": []}})"), "pattern.anchors_seconds");
  EXPECT_EQ(key_of(R"({"pattern": {"anchors_seconds": [1, "x"]}})"), "pattern.anchors_seconds");
  EXPECT_EQ(key_of(R"({"mdtw_step": 0})"), "mdtw_step");
  EXPECT_EQ(key_of(R"({"peaks": {"threshold_quantile": 1.5}})"), "peaks.threshold_quantile");
  EXPECT_EQ(key_of(R"({"peaks": {"polarity": "up"}})"), "peaks.polarity");
  EXPECT_EQ(key_of(R"({"selection": {"min_peaks": 1}})"), "selection.min_peaks");
  EXPECT_EQ(key_of(R"({"ssa": {"window_length": 1}})"), "ssa.window_length");
}

TEST(Config, UnknownAndMistypedKeys) {
  EXPECT_EQ(key_of(R"({"bandd": {}})"), "bandd");
  EXPECT_EQ(key_of(R"({"peaks": {"quantile": 0.3}})"), "peaks.quantile");
  EXPECT_EQ(key_of(R"({"mdtw_step": "five"})"), "mdtw_step");
  EXPECT_EQ(key_of(R"({"ssa": {"enabled": 1}})"), "ssa.enabled");
}

TEST(Config, MalformedJsonIsAParseError) {
  EXPECT_THROW(parse_config("{"), ParseError);
}

TEST(Config, NyquistCheckNeedsTheRate) {
  PipelineConfig c;
  c.band.high_hz = 20;
  EXPECT_NO_THROW(validate_config(c));
  EXPECT_NO_THROW(validate_config_for(c, 250.0));
  try {
    validate_config_for(c, 25.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "band.high_hz");
  }
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "facepulse_cfg_test.json";
  {
    std::ofstream out(path);
    out << R"({"mdtw_step": 3})";
  }
  EXPECT_EQ(load_config(path.string()).mdtw_step, 3u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path.string()), InvalidInput);
}

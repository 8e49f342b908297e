#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "facepulse/error.hpp"
#include "facepulse/pipeline.hpp"

namespace facepulse {

namespace detail {

using json = nlohmann::json;

inline std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError(join_key(prefix, k), "unknown key");
}

template <class T>
void read_number(const json& obj, const std::string& prefix, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  const auto name = join_key(prefix, key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(name, "expected true or false");
    out = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(name, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<long long>() < 0) throw ConfigError(name, "must be non-negative");
    }
    out = v.get<T>();
  } else {
    if (!v.is_number()) throw ConfigError(name, "expected a number");
    out = v.get<T>();
    if (!std::isfinite(out)) throw ConfigError(name, "must be finite");
  }
}

inline std::string read_string(const json& obj, const std::string& prefix, const char* key, const std::string& def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_string()) throw ConfigError(join_key(prefix, key), "expected a string");
  return obj.at(key).get<std::string>();
}

template <class E>
E read_enum(const json& obj, const std::string& prefix, const char* key, E current,
            std::initializer_list<std::pair<const char*, E>> names) {
  const std::string cur_name = [&] {
    for (const auto& [n, e] : names)
      if (e == current) return std::string(n);
    return std::string();
  }();
  const auto s = read_string(obj, prefix, key, cur_name);
  for (const auto& [n, e] : names)
    if (s == n) return e;
  std::string allowed;
  for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : "|") + std::string(n);
  throw ConfigError(join_key(prefix, key), "must be one of " + allowed);
}

inline const json& sub(const json& obj, const char* key) {
  static const json empty = json::object();
  return obj.contains(key) ? obj.at(key) : empty;
}

inline constexpr std::pair<const char*, Contrast> kContrasts[] = {
    {"logcosh", Contrast::logcosh}, {"exp", Contrast::exp}, {"cube", Contrast::cube}};

}  // namespace detail

inline std::string to_string(PeakPolarity p) { return p == PeakPolarity::minima ? "minima" : "maxima"; }
inline std::string to_string(BadComponentMode m) { return m == BadComponentMode::intent ? "intent" : "literal"; }
inline std::string to_string(PeakCountMode m) { return m == PeakCountMode::intervals ? "intervals" : "literal"; }
inline std::string to_string(SkewnessMode m) { return m == SkewnessMode::absolute ? "absolute" : "signed"; }
inline std::string to_string(Contrast c) {
  for (const auto& [n, e] : detail::kContrasts)
    if (e == c) return n;
  return "logcosh";
}

/// Range checks that do not depend on the input's sample rate. Throws ConfigError naming the key.
inline void validate_config(const PipelineConfig& c) {
  if (!(c.band.low_hz > 0)) throw ConfigError("band.low_hz", "must be > 0");
  if (!(c.band.high_hz > c.band.low_hz)) throw ConfigError("band.high_hz", "must exceed band.low_hz");
  if (c.band.order < 1 || c.band.order > 20) throw ConfigError("band.order", "must be in [1, 20]");
  if (c.interpolation_factor < 1 || c.interpolation_factor > 100)
    throw ConfigError("interpolation_factor", "must be in [1, 100]");
  if (c.bss.n_components < 1) throw ConfigError("bss.n_components", "must be >= 1");
  if (c.bss.fastica.max_iter < 1) throw ConfigError("bss.fastica.max_iter", "must be >= 1");
  if (!(c.bss.fastica.tol > 0)) throw ConfigError("bss.fastica.tolerance", "must be > 0");
  if (!(c.bss.fastica.alpha >= 1 && c.bss.fastica.alpha <= 2)) throw ConfigError("bss.fastica.alpha", "must be in [1, 2]");
  if (!(c.bss.jade.threshold > 0)) throw ConfigError("bss.jade.threshold", "must be > 0");
  if (c.bss.jade.max_sweeps < 1) throw ConfigError("bss.jade.max_sweeps", "must be >= 1");
  if (!(c.bss.shibbs.threshold >= 0)) throw ConfigError("bss.shibbs.threshold", "must be >= 0 (0 = automatic)");
  if (c.bss.shibbs.max_sweeps < 1) throw ConfigError("bss.shibbs.max_sweeps", "must be >= 1");
  if (c.bss.shibbs.max_passes < 1) throw ConfigError("bss.shibbs.max_passes", "must be >= 1");
  if (c.pattern.anchors_seconds.empty()) throw ConfigError("pattern.anchors_seconds", "needs at least one anchor");
  for (double a : c.pattern.anchors_seconds)
    if (!(a >= 0)) throw ConfigError("pattern.anchors_seconds", "anchors must be >= 0");
  if (!(c.pattern.window_seconds > 0)) throw ConfigError("pattern.window_seconds", "must be > 0");
  if (c.mdtw_step < 1) throw ConfigError("mdtw_step", "must be >= 1");
  if (!(c.peaks.threshold_quantile > 0 && c.peaks.threshold_quantile <= 1))
    throw ConfigError("peaks.threshold_quantile", "must be in (0, 1]");
  if (!(c.peaks.min_separation_seconds >= 0)) throw ConfigError("peaks.min_separation_seconds", "must be >= 0");
  if (!(c.peaks.min_prominence_fraction >= 0 && c.peaks.min_prominence_fraction < 1))
    throw ConfigError("peaks.min_prominence_fraction", "must be in [0, 1)");
  if (!(c.bad_component.tolerance >= 0)) throw ConfigError("bad_component.tolerance", "must be >= 0");
  if (c.selection.min_peaks < 2) throw ConfigError("selection.min_peaks", "must be >= 2");
  if (c.ssa.window_length == 1) throw ConfigError("ssa.window_length", "must be 0 (automatic) or >= 2");
  if (c.ssa.components < 1) throw ConfigError("ssa.components", "must be >= 1");
}

/// Checks that need the trajectory sample rate (band edge against Nyquist, anchors within the record).
inline void validate_config_for(const PipelineConfig& c, double sample_rate) {
  validate_config(c);
  if (!(c.band.high_hz < sample_rate / 2))
    throw ConfigError("band.high_hz", "must be below Nyquist (" + std::to_string(sample_rate / 2) + " Hz)");
}

/// Overlays the keys present in `j` onto `base`; unknown keys and out-of-range values raise ConfigError.
inline PipelineConfig merge_config(PipelineConfig c, const nlohmann::json& j) {
  using detail::read_enum;
  using detail::read_number;
  using detail::sub;
  detail::reject_unknown(j, "", {"band", "interpolation_factor", "method", "bss", "pattern", "mdtw_step", "peaks",
                                 "bad_component", "n_p_mode", "selection", "ssa"});
  {
    const auto& b = sub(j, "band");
    detail::reject_unknown(b, "band", {"low_hz", "high_hz", "order"});
    read_number(b, "band", "low_hz", c.band.low_hz);
    read_number(b, "band", "high_hz", c.band.high_hz);
    read_number(b, "band", "order", c.band.order);
  }
  read_number(j, "", "interpolation_factor", c.interpolation_factor);
  if (j.contains("method")) {
    const auto s = detail::read_string(j, "", "method", "");
    const auto m = parse_method(s);
    if (!m) throw ConfigError("method", "must be one of PCA|FastICA|JADE|SHIBBS");
    c.method = *m;
  }
  {
    const auto& b = sub(j, "bss");
    detail::reject_unknown(b, "bss", {"n_components", "fastica", "jade", "shibbs"});
    read_number(b, "bss", "n_components", c.bss.n_components);
    const auto& f = sub(b, "fastica");
    detail::reject_unknown(f, "bss.fastica", {"seed", "max_iter", "tolerance", "contrast", "alpha", "accept_unconverged"});
    read_number(f, "bss.fastica", "seed", c.bss.fastica.seed);
    read_number(f, "bss.fastica", "max_iter", c.bss.fastica.max_iter);
    read_number(f, "bss.fastica", "tolerance", c.bss.fastica.tol);
    c.bss.fastica.contrast = read_enum(f, "bss.fastica", "contrast", c.bss.fastica.contrast,
                                       {detail::kContrasts[0], detail::kContrasts[1], detail::kContrasts[2]});
    read_number(f, "bss.fastica", "alpha", c.bss.fastica.alpha);
    read_number(f, "bss.fastica", "accept_unconverged", c.bss.fastica.accept_unconverged);
    const auto& jd = sub(b, "jade");
    detail::reject_unknown(jd, "bss.jade", {"threshold", "max_sweeps"});
    read_number(jd, "bss.jade", "threshold", c.bss.jade.threshold);
    read_number(jd, "bss.jade", "max_sweeps", c.bss.jade.max_sweeps);
    const auto& s = sub(b, "shibbs");
    detail::reject_unknown(s, "bss.shibbs", {"threshold", "max_sweeps", "max_passes", "accept_unconverged"});
    read_number(s, "bss.shibbs", "threshold", c.bss.shibbs.threshold);
    read_number(s, "bss.shibbs", "max_sweeps", c.bss.shibbs.max_sweeps);
    read_number(s, "bss.shibbs", "max_passes", c.bss.shibbs.max_passes);
    read_number(s, "bss.shibbs", "accept_unconverged", c.bss.shibbs.accept_unconverged);
  }
  {
    const auto& p = sub(j, "pattern");
    detail::reject_unknown(p, "pattern", {"anchors_seconds", "window_seconds"});
    if (p.contains("anchors_seconds")) {
      const auto& a = p.at("anchors_seconds");
      if (!a.is_array()) throw ConfigError("pattern.anchors_seconds", "expected an array of numbers");
      c.pattern.anchors_seconds.clear();
      for (const auto& v : a) {
        if (!v.is_number()) throw ConfigError("pattern.anchors_seconds", "expected an array of numbers");
        c.pattern.anchors_seconds.push_back(v.get<double>());
      }
    }
    read_number(p, "pattern", "window_seconds", c.pattern.window_seconds);
  }
  read_number(j, "", "mdtw_step", c.mdtw_step);
  {
    const auto& p = sub(j, "peaks");
    detail::reject_unknown(p, "peaks", {"threshold_quantile", "min_separation_seconds", "polarity", "min_prominence_fraction"});
    read_number(p, "peaks", "threshold_quantile", c.peaks.threshold_quantile);
    read_number(p, "peaks", "min_separation_seconds", c.peaks.min_separation_seconds);
    c.peaks.polarity = read_enum(p, "peaks", "polarity", c.peaks.polarity,
                                 {{"minima", PeakPolarity::minima}, {"maxima", PeakPolarity::maxima}});
    read_number(p, "peaks", "min_prominence_fraction", c.peaks.min_prominence_fraction);
  }
  {
    const auto& b = sub(j, "bad_component");
    detail::reject_unknown(b, "bad_component", {"mode", "tolerance"});
    c.bad_component.mode = read_enum(b, "bad_component", "mode", c.bad_component.mode,
                                     {{"intent", BadComponentMode::intent}, {"literal", BadComponentMode::literal}});
    read_number(b, "bad_component", "tolerance", c.bad_component.tolerance);
  }
  c.n_p_mode = read_enum(j, "", "n_p_mode", c.n_p_mode,
                         {{"intervals", PeakCountMode::intervals}, {"literal", PeakCountMode::literal}});
  {
    const auto& s = sub(j, "selection");
    detail::reject_unknown(s, "selection", {"skewness_mode", "min_peaks"});
    c.selection.skewness_mode = read_enum(s, "selection", "skewness_mode", c.selection.skewness_mode,
                                          {{"absolute", SkewnessMode::absolute}, {"signed", SkewnessMode::signed_minimum}});
    read_number(s, "selection", "min_peaks", c.selection.min_peaks);
  }
  {
    const auto& s = sub(j, "ssa");
    detail::reject_unknown(s, "ssa", {"enabled", "window_length", "components"});
    read_number(s, "ssa", "enabled", c.ssa.enabled);
    read_number(s, "ssa", "window_length", c.ssa.window_length);
    read_number(s, "ssa", "components", c.ssa.components);
  }
  validate_config(c);
  return c;
}

inline PipelineConfig parse_config(const std::string& text, const PipelineConfig& base = PipelineConfig{}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  return merge_config(base, j);
}

inline PipelineConfig load_config(const std::string& path, const PipelineConfig& base = PipelineConfig{}) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

/// Complete effective configuration; feeding it back through parse_config reproduces `c`.
inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["band"] = {{"low_hz", c.band.low_hz}, {"high_hz", c.band.high_hz}, {"order", c.band.order}};
  j["interpolation_factor"] = c.interpolation_factor;
  j["method"] = std::string(to_string(c.method));
  j["bss"] = {
      {"n_components", c.bss.n_components},
      {"fastica",
       {{"seed", c.bss.fastica.seed},
        {"max_iter", c.bss.fastica.max_iter},
        {"tolerance", c.bss.fastica.tol},
        {"contrast", to_string(c.bss.fastica.contrast)},
        {"alpha", c.bss.fastica.alpha},
        {"accept_unconverged", c.bss.fastica.accept_unconverged}}},
      {"jade", {{"threshold", c.bss.jade.threshold}, {"max_sweeps", c.bss.jade.max_sweeps}}},
      {"shibbs",
       {{"threshold", c.bss.shibbs.threshold},
        {"max_sweeps", c.bss.shibbs.max_sweeps},
        {"max_passes", c.bss.shibbs.max_passes},
        {"accept_unconverged", c.bss.shibbs.accept_unconverged}}}};
  j["pattern"] = {{"anchors_seconds", c.pattern.anchors_seconds}, {"window_seconds", c.pattern.window_seconds}};
  j["mdtw_step"] = c.mdtw_step;
  j["peaks"] = {{"threshold_quantile", c.peaks.threshold_quantile},
                {"min_separation_seconds", c.peaks.min_separation_seconds},
                {"polarity", to_string(c.peaks.polarity)},
                {"min_prominence_fraction", c.peaks.min_prominence_fraction}};
  j["bad_component"] = {{"mode", to_string(c.bad_component.mode)}, {"tolerance", c.bad_component.tolerance}};
  j["n_p_mode"] = to_string(c.n_p_mode);
  j["selection"] = {{"skewness_mode", to_string(c.selection.skewness_mode)}, {"min_peaks", c.selection.min_peaks}};
  j["ssa"] = {{"enabled", c.ssa.enabled}, {"window_length", c.ssa.window_length}, {"components", c.ssa.components}};
  return j;
}

inline std::string format_config(const PipelineConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace facepulse

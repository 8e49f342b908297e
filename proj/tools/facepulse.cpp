#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "facepulse/facepulse.hpp"

namespace fs = std::filesystem;
using namespace facepulse;

namespace {

enum Exit { ok = 0, usage = 1, data_error = 2, estimation_failure = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `a.b.c=value` -> {"a":{"b":{"c":value}}}; value parsed as JSON, falling back to a string.
nlohmann::json override_patch(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json patch = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const auto start = dot == std::string::npos ? 0 : dot + 1;
    patch = nlohmann::json{{key.substr(start, end - start), patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  return patch;
}

PipelineConfig effective_config(const std::string& path, const std::vector<std::string>& sets,
                                const std::string& method) {
  nlohmann::json j = path.empty() ? nlohmann::json::object() : [&] {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("config '" + path + "' is not valid JSON: " + e.what());
    }
  }();
  for (const auto& s : sets) j.merge_patch(override_patch(s));
  if (!method.empty()) j["method"] = method;
  return merge_config(PipelineConfig{}, j);
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  csv::write_atomic(path, content);
}

void write_artifacts(const fs::path& dir, const PulseEstimate& est, const PipelineTrace& trace,
                     const PipelineConfig& cfg) {
  fs::create_directories(dir);
  write_file(dir / "config.json", format_config(cfg));
  write_file(dir / "components.csv", format_components(trace.components));
  for (std::size_t k = 0; k < trace.curves.size(); ++k) {
    MatchCurveArtifact a{trace.curves[k], est.sample_rate, k, trace.peak_sets[k].threshold_used,
                         trace.peak_sets[k].peak_indices};
    write_file(dir / ("match_curve_c" + std::to_string(k) + ".csv"), format_match_curve(a));
  }
  PeakTraceArtifact p{trace.components.row(static_cast<Eigen::Index>(est.selected_component)), est.sample_rate,
                      est.selected_component, est.method, est.bpm, est.peaks.peak_indices};
  write_file(dir / "peaks.csv", format_peak_trace(p));
}

int cmd_estimate(const std::string& input, const std::string& config, const std::vector<std::string>& sets,
                 const std::string& method, const std::string& out, const std::string& artifacts,
                 const std::string& subject) {
  const auto cfg = effective_config(config, sets, method);
  const auto raw = read_trajectories(input);
  validate_config_for(cfg, raw.sample_rate() * cfg.interpolation_factor);
  PipelineTrace trace;
  const auto est = estimate_pulse(raw, cfg, &trace);
  const std::string name = subject.empty() ? fs::path(input).stem().string() : subject;
  if (!out.empty()) write_file(out, format_estimate(name, est));
  if (!artifacts.empty()) write_artifacts(artifacts, est, trace, cfg);
  std::cout << csv::format_double(est.bpm) << "\n";
  std::cerr << to_string(est.method) << ": component " << est.selected_component << ", " << est.peaks.size()
            << " peaks\n";
  return ok;
}

int cmd_evaluate(const std::string& dataset, const std::string& config, const std::vector<std::string>& sets,
                 const std::vector<std::string>& method_names, const std::string& out, int timing_runs,
                 const std::string& ref_table, const std::string& ref_rmse) {
  const auto cfg = effective_config(config, sets, "");
  std::vector<BssMethod> methods;
  for (const auto& n : method_names) {
    const auto m = parse_method(n);
    if (!m) throw UsageError("unknown method '" + n + "'");
    methods.push_back(*m);
  }
  if (methods.empty()) methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
  if (ref_table.empty() != ref_rmse.empty())
    throw UsageError("--reference-table and --reference-rmse must be given together");

  BenchmarkOptions opt;
  opt.timing_runs = timing_runs;
  const auto rep = run_benchmark(dataset, methods, cfg, opt);
  const fs::path dir(out);
  fs::create_directories(dir);
  write_file(dir / "config.json", format_config(cfg));
  write_file(dir / "report.csv", format_report(rep));
  write_file(dir / "rmse.csv", format_rmse(rep.rmse));
  write_file(dir / "timing.csv", format_timing(rep.timing));
  if (!ref_table.empty()) {
    const auto table = parse_reference_table(csv::read_lines(ref_table));
    const auto stated = parse_stated_rmse(csv::read_lines(ref_rmse));
    write_file(dir / "reference_rmse.csv", rmse_discrepancy_note(table, stated));
  }

  std::size_t good = 0;
  for (const auto& r : rep.rows) good += r.estimate.has_value();
  std::cout << "estimates: " << good << "/" << rep.rows.size() << "\n";
  for (const auto& r : rep.rmse)
    std::cout << to_string(r.method) << " " << r.condition << " rmse="
              << (r.rmse ? csv::format_double(*r.rmse) : std::string("n/a")) << " n=" << r.n << "\n";
  return ok;
}

int cmd_plot(const std::string& artifact, const std::string& kind, const std::string& out) {
  const auto lines = csv::read_lines(artifact);
  PlotOutput p;
  if (kind == "components") p = plot_components(parse_components(lines));
  else if (kind == "match-curve") p = plot_match_curve(parse_match_curve(lines));
  else if (kind == "peaks") p = plot_peaks(parse_peak_trace(lines));
  else throw UsageError("unknown plot kind '" + kind + "' (components|match-curve|peaks)");
  fs::path svg(out);
  if (svg.extension() != ".svg") svg += ".svg";
  fs::path table = svg;
  table.replace_extension(".csv");
  write_file(svg, p.svg);
  write_file(table, p.csv);
  std::cout << svg.string() << "\n" << table.string() << "\n";
  return ok;
}

int cmd_track_ingest(const std::string& input, bool allow_any_origin) {
  const auto t = read_trajectories(input);
  if (!allow_any_origin) require_origin(t, Origin::raw, "track-ingest");
  std::cout << "features=" << t.features() << " frames=" << t.samples() << " fps=" << csv::format_double(t.sample_rate())
            << " duration=" << csv::format_double(t.duration()) << " origin=" << to_string(t.origin()) << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heart rate from facial feature-point motion"};
  app.require_subcommand(1);

  std::string input, config, method, out, artifacts, subject, kind;
  std::vector<std::string> sets, methods;
  std::string ref_table, ref_rmse;
  int timing_runs = 3;
  bool any_origin = false;

  auto* est = app.add_subcommand("estimate", "Estimate bpm from a trajectory CSV");
  est->add_option("trajectories", input, "Trajectory CSV (origin=raw)")->required();
  est->add_option("-c,--config", config, "JSON config file");
  est->add_option("--set", sets, "Override a config key, e.g. --set peaks.threshold_quantile=0.3");
  est->add_option("-m,--method", method, "PCA, FastICA, JADE or SHIBBS");
  est->add_option("-o,--out", out, "Write the estimate CSV here");
  est->add_option("--artifacts", artifacts, "Directory for components, match curves and peaks");
  est->add_option("--subject", subject, "Subject name in the CSV row (default: file stem)");

  auto* ev = app.add_subcommand("evaluate", "Run every method on a dataset directory");
  ev->add_option("dataset", input, "<dir>/<subject>/<condition>/{trajectories.csv,ecg.txt}")->required();
  ev->add_option("-o,--out", out, "Report directory")->required();
  ev->add_option("-c,--config", config, "JSON config file");
  ev->add_option("--set", sets, "Override a config key");
  ev->add_option("--methods", methods, "Subset of methods (default: all four)")->delimiter(',');
  ev->add_option("--timing-runs", timing_runs, "Repetitions for the extraction timer")->check(CLI::PositiveNumber);
  ev->add_option("--reference-table", ref_table, "Per-subject reference bpm table");
  ev->add_option("--reference-rmse", ref_rmse, "Stated RMSE per method and condition");

  auto* pl = app.add_subcommand("plot", "Render an artifact as SVG plus CSV");
  pl->add_option("artifact", input, "components.csv, match_curve_c<k>.csv or peaks.csv")->required();
  pl->add_option("-k,--kind", kind, "components | match-curve | peaks")->required();
  pl->add_option("-o,--out", out, "Output path (.svg; the .csv goes alongside)")->required();

  auto* ti = app.add_subcommand("track-ingest", "Validate a trajectory CSV from the tracker");
  ti->add_option("trajectories", input, "Trajectory CSV")->required();
  ti->add_flag("--any-origin", any_origin, "Accept non-raw origins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*est) return cmd_estimate(input, config, sets, method, out, artifacts, subject);
    if (*ev) return cmd_evaluate(input, config, sets, methods, out, timing_runs, ref_table, ref_rmse);
    if (*pl) return cmd_plot(input, kind, out);
    if (*ti) return cmd_track_ingest(input, any_origin);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return usage;
  } catch (const StageError& e) {
    std::cerr << (e.estimation_failure() ? "estimation failed: " : "error: ") << e.what() << "\n";
    return e.estimation_failure() ? estimation_failure : data_error;
  } catch (const EstimationFailed& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return estimation_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return data_error;
  }
  return usage;
}

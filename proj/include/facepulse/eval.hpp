#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "facepulse/butterworth.hpp"
#include "facepulse/csv.hpp"
#include "facepulse/pipeline.hpp"
#include "facepulse/stats.hpp"

namespace facepulse {

// ---------------------------------------------------------------------------
// ECG ground truth

struct EcgRecord {
  std::vector<double> samples;
  double sample_rate = 250.0;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

class GroundTruthUnavailable : public Error {
 public:
  using Error::Error;
};

inline void validate_ecg(const EcgRecord& ecg) {
  if (!(ecg.sample_rate > 0)) throw InvalidInput("ECG sample rate must be positive");
  if (ecg.duration() < 2.0) throw InvalidInput("ECG record must span at least 2 s");
  for (double v : ecg.samples)
    if (!std::isfinite(v)) throw InvalidInput("ECG record contains non-finite values");
}

/// One amplitude per line; blank lines are skipped.
inline EcgRecord parse_ecg(const std::vector<std::string>& lines, double sample_rate = 250.0) {
  EcgRecord r;
  r.sample_rate = sample_rate;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = csv::trim(lines[i]);
    if (s.empty()) continue;
    r.samples.push_back(csv::parse_double(s, i + 1));
  }
  return r;
}

inline EcgRecord read_ecg(const std::filesystem::path& path, double sample_rate = 250.0) {
  return parse_ecg(csv::read_lines(path), sample_rate);
}

struct RPeakOptions {
  BandPassSpec band{5.0, 20.0, 2};
  double window_seconds = 2.0;  // rolling quantile window
  double quantile = 0.98;
  double fraction = 0.5;        // of the rolling quantile
  double refractory_seconds = 0.25;
};

/// R-peak sample indices: band-pass, rectify, keep local maxima above a fraction of the rolling
/// quantile, then enforce the refractory gap largest-first.
inline std::vector<std::size_t> detect_r_peaks(const EcgRecord& ecg, const RPeakOptions& opt = {}) {
  validate_ecg(ecg);
  const double fs = ecg.sample_rate;
  BandPassSpec band = opt.band;
  band.high_hz = std::min(band.high_hz, 0.45 * fs);
  band.validate(fs);
  const auto sos = design_butterworth_bandpass(band, fs);
  auto env = sos_filtfilt(sos, ecg.samples);
  for (double& v : env) v = std::abs(v);

  const std::size_t n = env.size();
  const auto half = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.window_seconds * fs / 2)));
  // rolling quantile evaluated on a coarse grid (every quarter window) and held in between
  const std::size_t stride = std::max<std::size_t>(1, half / 2);
  std::vector<double> thr(n, 0.0);
  std::vector<double> buf;
  for (std::size_t c = 0; c < n; c += stride) {
    const std::size_t lo = c > half ? c - half : 0, hi = std::min(n, c + half + 1);
    buf.assign(env.begin() + static_cast<std::ptrdiff_t>(lo), env.begin() + static_cast<std::ptrdiff_t>(hi));
    const double q = opt.fraction * stats::quantile(buf, opt.quantile);
    for (std::size_t i = c; i < std::min(n, c + stride); ++i) thr[i] = q;
  }

  std::vector<std::size_t> cands;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (env[i] > 0 && env[i] > thr[i] && env[i] >= env[i - 1] && env[i] > env[i + 1]) cands.push_back(i);
  std::stable_sort(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) { return env[a] > env[b]; });
  const auto gap = static_cast<std::size_t>(std::lround(opt.refractory_seconds * fs));
  std::vector<std::size_t> peaks;
  for (auto c : cands)
    if (std::none_of(peaks.begin(), peaks.end(), [&](std::size_t p) { return (p > c ? p - c : c - p) < gap; }))
      peaks.push_back(c);
  std::sort(peaks.begin(), peaks.end());
  return peaks;
}

/// Heart rate over the full record with the same interval convention as the estimator.
inline double ecg_ground_truth_bpm(const EcgRecord& ecg, const RPeakOptions& opt = {}) {
  const auto peaks = detect_r_peaks(ecg, opt);
  if (peaks.size() < 2)
    throw GroundTruthUnavailable("found " + std::to_string(peaks.size()) + " R-peaks; need at least 2");
  return pulse_rate(PeakSet{peaks, 0.0}, ecg.sample_rate, PeakCountMode::intervals).bpm;
}

inline double rmse(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) throw InvalidInput("rmse: length mismatch");
  if (estimates.empty()) throw InvalidInput("rmse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) acc += (estimates[i] - truth[i]) * (estimates[i] - truth[i]);
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

// ---------------------------------------------------------------------------
// Benchmark

struct DatasetCase {
  std::string subject;
  std::string condition;
  std::filesystem::path trajectories;
  std::filesystem::path ecg;
};

/// `<dir>/<subject>/<condition>/{trajectories.csv,ecg.txt}`, sorted by subject then condition.
inline std::vector<DatasetCase> discover_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InvalidInput("dataset directory '" + dir.string() + "' does not exist");
  std::vector<DatasetCase> cases;
  for (const auto& s : fs::directory_iterator(dir)) {
    if (!s.is_directory()) continue;
    for (const auto& c : fs::directory_iterator(s.path())) {
      if (!c.is_directory()) continue;
      cases.push_back({s.path().filename().string(), c.path().filename().string(), c.path() / "trajectories.csv",
                       c.path() / "ecg.txt"});
    }
  }
  if (cases.empty()) throw InvalidInput("dataset directory '" + dir.string() + "' has no <subject>/<condition> entries");
  std::sort(cases.begin(), cases.end(), [](const DatasetCase& a, const DatasetCase& b) {
    return std::tie(a.subject, a.condition) < std::tie(b.subject, b.condition);
  });
  return cases;
}

struct ReportRow {
  std::string subject;
  std::string condition;
  BssMethod method = BssMethod::jade;
  std::optional<PulseEstimate> estimate;
  std::optional<double> gt_bpm;
  std::string status = "ok";

  std::optional<double> error() const {
    if (!estimate || !gt_bpm) return std::nullopt;
    return estimate->bpm - *gt_bpm;
  }
};

struct RmseRow {
  BssMethod method = BssMethod::jade;
  std::string condition;
  std::optional<double> rmse;
  std::size_t n = 0;
};

struct TimingRow {
  BssMethod method = BssMethod::jade;
  std::string subject;
  std::string condition;
  double seconds = 0.0;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  std::vector<RmseRow> rmse;
  std::vector<TimingRow> timing;
  std::size_t n_components = 5;
};

struct BenchmarkOptions {
  int timing_runs = 3;
  double ecg_sample_rate = 250.0;
};

/// RMSE per (method, condition) over rows that have both an estimate and a ground truth.
inline std::vector<RmseRow> aggregate_rmse(const std::vector<ReportRow>& rows) {
  std::map<std::pair<int, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : rows) {
    auto& g = groups[{static_cast<int>(r.method), r.condition}];
    if (r.error()) {
      g.first.push_back(r.estimate->bpm);
      g.second.push_back(*r.gt_bpm);
    }
  }
  std::vector<RmseRow> out;
  for (const auto& [key, g] : groups) {
    RmseRow row;
    row.method = static_cast<BssMethod>(key.first);
    row.condition = key.second;
    row.n = g.first.size();
    if (row.n) row.rmse = rmse(g.first, g.second);
    out.push_back(row);
  }
  return out;
}

/// Runs every method on every case; failures become report rows and the run continues.
/// Timing covers component extraction only (median of `timing_runs`).
inline EvaluationReport run_benchmark(const std::filesystem::path& dir, std::span<const BssMethod> methods,
                                      const PipelineConfig& cfg, const BenchmarkOptions& opt = {}) {
  const auto cases = discover_dataset(dir);
  EvaluationReport rep;
  rep.n_components = static_cast<std::size_t>(cfg.bss.n_components);
  for (const auto& c : cases) {
    std::optional<double> gt;
    std::string gt_status;
    try {
      gt = ecg_ground_truth_bpm(read_ecg(c.ecg, opt.ecg_sample_rate));
    } catch (const std::exception& e) {
      gt_status = std::string("gt_unavailable: ") + e.what();
    }

    std::optional<FeatureTrajectories> filtered;
    std::string data_status;
    try {
      filtered = preprocess(read_trajectories(c.trajectories), cfg);
    } catch (const StageError& e) {
      data_status = (e.estimation_failure() ? "estimation_failed: " : "data_error: ") + std::string(e.what());
    } catch (const std::exception& e) {
      data_status = std::string("data_error: ") + e.what();
    }

    for (auto m : methods) {
      ReportRow row{c.subject, c.condition, m, std::nullopt, gt, "ok"};
      if (!filtered) {
        row.status = data_status;
        rep.rows.push_back(std::move(row));
        continue;
      }
      try {
        std::vector<double> times;
        ComponentSet cs;
        for (int run = 0; run < std::max(1, opt.timing_runs); ++run) {
          const auto t0 = std::chrono::steady_clock::now();
          auto out = separate(*filtered, m, cfg);
          times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
          if (run == 0) cs = std::move(out);
        }
        rep.timing.push_back({m, c.subject, c.condition, stats::median(times)});
        row.estimate = estimate_from_components(cs, cfg);
        if (!gt) row.status = gt_status;
      } catch (const StageError& e) {
        row.status = (e.estimation_failure() ? "estimation_failed: " : "data_error: ") + std::string(e.what());
      }
      rep.rows.push_back(std::move(row));
    }
  }
  rep.rmse = aggregate_rmse(rep.rows);
  return rep;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

inline std::string opt_field(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

inline std::string quote_status(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else if (ch == '\n' || ch == '\r') out += ' ';
    else out += ch;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string estimate_header(std::size_t n_components) {
  std::string h = "subject,method,bpm,selected_component,n_peaks,t1,t2";
  for (std::size_t k = 0; k < n_components; ++k) h += ",skew_c" + std::to_string(k);
  for (std::size_t k = 0; k < n_components; ++k) h += ",bad_c" + std::to_string(k);
  return h;
}

/// Estimate fields after `subject,method`; missing components are left empty.
inline std::string estimate_fields(const std::optional<PulseEstimate>& e, std::size_t n_components) {
  std::ostringstream out;
  if (e) {
    out << csv::format_double(e->bpm) << "," << e->selected_component << "," << e->peaks.size() << ","
        << csv::format_double(e->t1) << "," << csv::format_double(e->t2);
  } else {
    out << ",,,,";
  }
  for (std::size_t k = 0; k < n_components; ++k)
    out << "," << (e && k < e->per_component_skewness.size() ? detail::opt_field(e->per_component_skewness[k]) : "");
  for (std::size_t k = 0; k < n_components; ++k)
    out << "," << (e && k < e->bad_flags.size() ? (e->bad_flags[k] ? "1" : "0") : "");
  return out.str();
}

inline std::string format_estimate(const std::string& subject, const PulseEstimate& e) {
  const auto k = e.bad_flags.size();
  return estimate_header(k) + "\n" + subject + "," + std::string(to_string(e.method)) + "," + estimate_fields(e, k) +
         "\n";
}

inline std::string format_report(const EvaluationReport& rep) {
  std::ostringstream out;
  const auto k = rep.n_components;
  // condition is not part of the per-estimate row; it follows the subject here so rows stay unique
  std::string h = estimate_header(k);
  h.replace(0, std::string("subject").size(), "subject,condition");
  out << h << ",gt_bpm,error,status\n";
  for (const auto& r : rep.rows)
    out << r.subject << "," << r.condition << "," << to_string(r.method) << "," << estimate_fields(r.estimate, k)
        << "," << detail::opt_field(r.gt_bpm) << "," << detail::opt_field(r.error()) << ","
        << detail::quote_status(r.status) << "\n";
  return out.str();
}

inline std::string format_rmse(const std::vector<RmseRow>& rows) {
  std::ostringstream out;
  out << "method,condition,rmse,n\n";
  for (const auto& r : rows)
    out << to_string(r.method) << "," << r.condition << "," << detail::opt_field(r.rmse) << "," << r.n << "\n";
  return out.str();
}

inline std::string format_timing(const std::vector<TimingRow>& rows) {
  std::ostringstream out;
  out << "method,subject,condition,seconds\n";
  for (const auto& r : rows)
    out << to_string(r.method) << "," << r.subject << "," << r.condition << "," << csv::format_double(r.seconds)
        << "\n";
  return out.str();
}

/// Recomputes every RMSE from the report rows; false if any stored aggregate disagrees.
inline bool report_consistent(const EvaluationReport& rep, double tol = 1e-12) {
  const auto again = aggregate_rmse(rep.rows);
  if (again.size() != rep.rmse.size()) return false;
  for (std::size_t i = 0; i < again.size(); ++i) {
    const auto& a = again[i];
    const auto& b = rep.rmse[i];
    if (a.method != b.method || a.condition != b.condition || a.n != b.n || a.rmse.has_value() != b.rmse.has_value())
      return false;
    if (a.rmse && std::abs(*a.rmse - *b.rmse) > tol) return false;
  }
  for (const auto& t : rep.timing)
    if (!(t.seconds >= 0)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Reference-table comparison

/// Per-subject bpm table: `subject,condition,<method columns...>,GT`.
struct ReferenceTable {
  std::vector<std::string> methods;
  struct Row {
    std::string subject;
    std::string condition;
    std::map<std::string, double> bpm;
    double gt = 0.0;
  };
  std::vector<Row> rows;
};

inline ReferenceTable parse_reference_table(const std::vector<std::string>& lines) {
  if (lines.empty()) throw ParseError("empty table");
  const auto head = csv::split(lines[0]);
  if (head.size() < 4 || head[0] != "subject" || head[1] != "condition" || head.back() != "GT")
    throw ParseError("header must be 'subject,condition,<methods...>,GT'", 1);
  ReferenceTable t;
  for (std::size_t j = 2; j + 1 < head.size(); ++j) t.methods.emplace_back(head[j]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != head.size()) throw ParseError("wrong number of fields", i + 1);
    ReferenceTable::Row r{std::string(f[0]), std::string(f[1]), {}, csv::parse_double(f.back(), i + 1)};
    for (std::size_t j = 0; j < t.methods.size(); ++j) r.bpm[t.methods[j]] = csv::parse_double(f[j + 2], i + 1);
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline double reference_table_rmse(const ReferenceTable& t, const std::string& method, const std::string& condition) {
  std::vector<double> est, gt;
  for (const auto& r : t.rows) {
    if (r.condition != condition) continue;
    const auto it = r.bpm.find(method);
    if (it == r.bpm.end()) throw InvalidInput("method '" + method + "' not in table");
    est.push_back(it->second);
    gt.push_back(r.gt);
  }
  if (est.empty()) throw InvalidInput("condition '" + condition + "' not in table");
  return rmse(est, gt);
}

/// `method,condition,rmse` as stated alongside a reference table.
inline std::map<std::pair<std::string, std::string>, double> parse_stated_rmse(const std::vector<std::string>& lines) {
  if (lines.empty() || csv::trim(lines[0]) != "method,condition,rmse")
    throw ParseError("header must be 'method,condition,rmse'", 1);
  std::map<std::pair<std::string, std::string>, double> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 3) throw ParseError("wrong number of fields", i + 1);
    out[{std::string(f[0]), std::string(f[1])}] = csv::parse_double(f[2], i + 1);
  }
  return out;
}

/// Text note comparing RMSE recomputed from the per-subject table with the stated aggregate.
inline std::string rmse_discrepancy_note(const ReferenceTable& t,
                                         const std::map<std::pair<std::string, std::string>, double>& stated) {
  std::ostringstream out;
  out << "method,condition,recomputed_rmse,stated_rmse,difference\n";
  for (const auto& [key, value] : stated) {
    const double mine = reference_table_rmse(t, key.first, key.second);
    out << key.first << "," << key.second << "," << csv::format_double(std::round(mine * 1e4) / 1e4) << ","
        << csv::format_double(value) << "," << csv::format_double(std::round((mine - value) * 1e4) / 1e4) << "\n";
  }
  out << "# recomputed = sqrt(mean((bpm - GT)^2)) over the per-subject rows; the stated aggregates are not\n"
         "# reproduced by this formula (procedure unknown).\n";
  return out.str();
}

}  // namespace facepulse

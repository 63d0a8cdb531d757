#include "auditod/report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "auditod/error.hpp"
#include "auditod/rng.hpp"

namespace auditod {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

char letter_from_json(const json& j, const char* field) {
  if (!j.is_string() || j.get<std::string>().size() != 1) {
    config_error(std::string(field) + ": expected a single-letter string");
  }
  return j.get<std::string>()[0];
}

template <class F>
auto in_stage(const char* stage, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_context(std::string("stage ") + stage);
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DetectorConfig resolved_config(const DetectorSpec& spec, std::uint64_t master) {
  return resolve_config({spec.kind, spec.params, detector_seed(master, spec.name)});
}

json params_json(const ParamMap& params) {
  json j = json::object();
  for (const auto& [k, v] : params) j[k] = to_json(v);
  return j;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string fnv1a_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  char out[32];
  std::snprintf(out, sizeof out, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::uint64_t detector_seed(std::uint64_t master, const std::string& name) {
  return derive_seed(master, name);
}

std::string scores_header(const std::vector<std::string>& names) {
  std::string h = "id";
  for (const auto& n : names) h += "," + n + "_raw," + n + "_norm," + n + "_ordering," + n + "_ranking";
  return h;
}

// --- configuration -------------------------------------------------------

std::vector<ParamValue> default_grid(DetectorKind kind) {
  using I = std::int64_t;
  auto ints = [](std::initializer_list<I> v) {
    std::vector<ParamValue> out;
    for (auto x : v) out.emplace_back(x);
    return out;
  };
  switch (kind) {
    case DetectorKind::Hbos: return ints({5, 10, 15, 20, 50, 100});
    case DetectorKind::Pca: return ints({0, 1, 2, 3, 4, 5, 6, 7});
    case DetectorKind::Mcd: {
      std::vector<ParamValue> out;
      for (double f : {0.0, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) out.emplace_back(f);
      return out;
    }
    case DetectorKind::Knn:
    case DetectorKind::Lof: return ints({1, 3, 5, 10, 20, 30, 40, 50});
    case DetectorKind::Cblof: return ints({2, 5, 10});
    case DetectorKind::Autoencoder:
      return {std::vector<I>{64, 32, 32, 64}, std::vector<I>{32, 16, 16, 32}};
    case DetectorKind::IsolationForest: return ints({50, 100, 200, 300, 400, 500});
  }
  return {};
}

RunConfig RunConfig::with_default_detectors() {
  RunConfig c;
  for (auto kind : kAllDetectors) {
    c.detectors.push_back({std::string(to_string(kind)), kind, default_params(kind), default_grid(kind)});
  }
  return c;
}

void RunConfig::validate() const {
  mapping.validate();
  if (features.empty()) config_error("features: at least one feature letter is required");
  std::set<char> seen_letters;
  for (char f : features) {
    if (f < 'A' || f > 'J') config_error(std::string("features: unknown letter ") + f);
    if (!seen_letters.insert(f).second) config_error(std::string("features: duplicate letter ") + f);
  }
  if (detectors.empty()) config_error("detectors: at least one detector must be enabled");
  if (top_k < 1) config_error("top_k must be >= 1");
  if (jobs < 1) config_error("jobs must be >= 1");
  std::set<std::string> names;
  for (const auto& d : detectors) {
    if (d.name.empty()) config_error("detector name must not be empty");
    if (d.name.find_first_of(",\"\n") != std::string::npos) config_error("detector name '" + d.name + "' has CSV metacharacters");
    if (!names.insert(d.name).second) config_error("duplicate detector name '" + d.name + "'");
    resolve_config({d.kind, d.params, 0});
    for (const auto& v : d.grid) {
      auto params = d.params;
      params[std::string(primary_param(d.kind))] = v;
      resolve_config({d.kind, params, 0});
    }
  }
}

void RunConfig::restrict_detectors(const std::vector<std::string>& wanted) {
  std::vector<DetectorSpec> kept;
  for (const auto& d : detectors) {
    const bool hit = std::any_of(wanted.begin(), wanted.end(), [&](const std::string& w) {
      return w == d.name || parse_detector_kind(w) == d.kind;
    });
    if (hit) kept.push_back(d);
  }
  for (const auto& w : wanted) {
    const bool known = std::any_of(detectors.begin(), detectors.end(), [&](const DetectorSpec& d) {
      return w == d.name || parse_detector_kind(w) == d.kind;
    });
    if (!known) config_error("--detectors: '" + w + "' matches no configured detector");
  }
  detectors = std::move(kept);
}

json to_json(const ParamValue& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

ParamValue param_from_json(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<std::int64_t> out;
    for (const auto& e : j) {
      if (!e.is_number_integer()) config_error("parameter lists must hold integers");
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }
  config_error("unsupported parameter value " + j.dump());
}

json to_json(const RunConfig& c) {
  json mapping;
  mapping["id_column"] = c.mapping.id_column;
  for (const auto& [letter, header] : c.mapping.original) mapping["original"][std::string(1, letter)] = header;
  for (const auto& [letter, f] : c.mapping.derived_formulas) {
    mapping["derived_formulas"][std::string(1, letter)] =
        json::array({std::string(1, f.lhs), std::string(1, f.rhs), std::string(1, f.sign)});
  }
  mapping["derived_sources"] = json::object();
  for (const auto& [letter, header] : c.mapping.derived_sources) {
    mapping["derived_sources"][std::string(1, letter)] = header;
  }
  json detectors = json::array();
  for (const auto& d : c.detectors) {
    json grid = json::array();
    for (const auto& v : d.grid) grid.push_back(to_json(v));
    detectors.push_back({{"name", d.name}, {"kind", std::string(to_string(d.kind))},
                         {"params", params_json(d.params)}, {"grid", grid}});
  }
  json features = json::array();
  for (char f : c.features) features.push_back(std::string(1, f));
  return {{"input", c.input.string()},
          {"column_mapping", mapping},
          {"features", features},
          {"detectors", detectors},
          {"seed", c.seed},
          {"top_k", c.top_k},
          {"output_dir", c.output_dir.string()},
          {"jobs", c.jobs}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known{"input", "column_mapping", "features", "detectors",
                                           "seed",  "top_k",          "output_dir", "jobs"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) config_error("unknown config field '" + key + "'");
  }
  RunConfig c = j.contains("detectors") ? RunConfig{} : RunConfig::with_default_detectors();
  try {
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("top_k")) {
      const auto k = j.at("top_k").get<std::int64_t>();
      if (k < 1) config_error("top_k must be >= 1");
      c.top_k = static_cast<std::size_t>(k);
    }
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    if (j.contains("features")) {
      c.features.clear();
      for (const auto& f : j.at("features")) c.features.push_back(letter_from_json(f, "features"));
    }
    if (j.contains("column_mapping")) {
      const auto& m = j.at("column_mapping");
      if (m.contains("id_column")) c.mapping.id_column = m.at("id_column").get<std::string>();
      if (m.contains("original")) {
        for (const auto& [letter, header] : m.at("original").items()) {
          if (letter.size() != 1) config_error("column_mapping.original: bad letter '" + letter + "'");
          c.mapping.original[letter[0]] = header.get<std::string>();
        }
      }
      if (m.contains("derived_formulas")) {
        for (const auto& [letter, f] : m.at("derived_formulas").items()) {
          if (letter.size() != 1 || !f.is_array() || f.size() != 3) {
            config_error("column_mapping.derived_formulas: expected \"H\": [\"A\", \"D\", \"-\"]");
          }
          c.mapping.derived_formulas[letter[0]] = {letter_from_json(f[0], "derived_formulas"),
                                                   letter_from_json(f[1], "derived_formulas"),
                                                   letter_from_json(f[2], "derived_formulas")};
        }
      }
      if (m.contains("derived_sources")) {
        for (const auto& [letter, header] : m.at("derived_sources").items()) {
          if (letter.size() != 1) config_error("column_mapping.derived_sources: bad letter '" + letter + "'");
          c.mapping.derived_sources[letter[0]] = header.get<std::string>();
        }
      }
    }
    if (j.contains("detectors")) {
      for (const auto& d : j.at("detectors")) {
        DetectorSpec spec;
        const auto kind_name = d.at("kind").get<std::string>();
        const auto kind = parse_detector_kind(kind_name);
        if (!kind) config_error("unknown detector kind '" + kind_name + "'");
        spec.kind = *kind;
        spec.name = d.contains("name") ? d.at("name").get<std::string>() : kind_name;
        if (d.contains("params")) {
          for (const auto& [name, value] : d.at("params").items()) spec.params[name] = param_from_json(value);
        }
        if (d.contains("grid")) {
          for (const auto& v : d.at("grid")) spec.grid.push_back(param_from_json(v));
        } else {
          spec.grid = default_grid(spec.kind);
        }
        c.detectors.push_back(std::move(spec));
      }
    }
  } catch (const json::exception& e) {
    config_error(std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error("cannot parse " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

// --- pipeline ------------------------------------------------------------

FeatureFrame load_frame(const RunConfig& config) {
  auto table = in_stage("ingest", [&] { return ingest_csv(config.input, config.mapping); });
  table = in_stage("derive", [&] { return compute_derived(table, config.mapping); });
  table = in_stage("select", [&] { return select_features(table, config.mapping, config.features); });
  table = in_stage("impute", [&] { return impute_mean(table); });
  return in_stage("scale", [&] { return minmax_scale(table, table.ids); });
}

RunReport evaluate_frame(const FeatureFrame& frame, const RunConfig& config) {
  config.validate();
  if (config.top_k > frame.rows()) {
    config_error("top_k " + std::to_string(config.top_k) + " exceeds record count " + std::to_string(frame.rows()));
  }
  RunReport report;
  report.config = config;
  const std::size_t count = config.detectors.size();
  report.runs.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& spec = config.detectors[i];
    report.runs[i].name = spec.name;
    report.runs[i].config = resolved_config(spec, config.seed);
    report.config.detectors[i].params = report.runs[i].config.params;
  }

  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        auto& run = report.runs[i];
        run.raw = run_detector(frame, run.config);
        run.raw.detector = run.name;
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, config.jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      throw e.with_context("stage detect (" + report.runs[i].name + ")");
    }
  }

  std::vector<ScoreVector> normalized;
  std::vector<RankTable> tables;
  for (auto& run : report.runs) {
    run.normalized = normalize_scores(run.raw);
    run.table = make_rank_table(run.normalized);
    normalized.push_back(run.normalized);
    tables.push_back(run.table);
  }
  report.summary = in_stage("fuse", [&] { return summarize(normalized, tables, config.top_k); });
  return report;
}

namespace {

json build_report_json(const RunReport& r, const FeatureFrame& frame) {
  json detectors = json::array();
  for (const auto& run : r.runs) {
    detectors.push_back({{"name", run.name},
                         {"kind", std::string(to_string(run.config.kind))},
                         {"params", params_json(run.config.params)},
                         {"seed", run.config.seed},
                         {"rank_table", {{"file", "scores.csv"},
                                         {"columns", json::array({run.name + "_raw", run.name + "_norm",
                                                                  run.name + "_ordering", run.name + "_ranking"})}}}});
  }
  const std::size_t k = r.config.top_k;
  json by_score = json::array();
  for (std::size_t i = 0; i < k; ++i) {
    by_score.push_back({{"id", r.summary.rows[i].id}, {"avg_norm_score", r.summary.rows[i].avg_norm_score}});
  }
  auto rank_rows = r.summary.rows;
  std::stable_sort(rank_rows.begin(), rank_rows.end(), [](const EnsembleRow& a, const EnsembleRow& b) {
    if (a.one_minus_avg_rank != b.one_minus_avg_rank) return a.one_minus_avg_rank > b.one_minus_avg_rank;
    return a.id < b.id;
  });
  json by_rank = json::array();
  for (std::size_t i = 0; i < k; ++i) {
    by_rank.push_back({{"id", rank_rows[i].id}, {"one_minus_avg_rank", rank_rows[i].one_minus_avg_rank}});
  }
  auto freq_rows = r.summary.rows;
  std::stable_sort(freq_rows.begin(), freq_rows.end(), [](const EnsembleRow& a, const EnsembleRow& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.id < b.id;
  });
  json by_freq = json::array();
  for (std::size_t i = 0; i < std::min(k, freq_rows.size()) && freq_rows[i].frequency > 0; ++i) {
    by_freq.push_back({{"id", freq_rows[i].id}, {"frequency", freq_rows[i].frequency}});
  }
  json features = json::array();
  for (const auto& c : frame.columns()) features.push_back(c);
  return {{"config", to_json(r.config)},
          {"records", frame.rows()},
          {"features", features},
          {"detectors", detectors},
          {"ensemble", {{"file", "ensemble.csv"}, {"k", r.summary.k}, {"detector_count", r.summary.detector_count}}},
          {"shortlist", {{"avg_norm_score", by_score}, {"one_minus_avg_rank", by_rank}, {"frequency", by_freq}}},
          {"outputs", json::array({"scores.csv", "ensemble.csv", "report.json", "freq_chart.csv", "score_line.csv",
                                   "rank_line.csv"})},
          {"provenance", {{"generated_at", r.generated_at}, {"seed", r.config.seed}, {"input_digest", r.input_digest}}}};
}

void write_run_outputs(const RunReport& r) {
  const fs::path dir = r.config.output_dir;
  fs::create_directories(dir);
  std::vector<std::string> names;
  for (const auto& run : r.runs) names.push_back(run.name);

  // Row positions keyed by id for each detector.
  std::map<RecordId, std::size_t> row_of;
  const auto& ids = r.runs.front().raw.ids;
  for (std::size_t i = 0; i < ids.size(); ++i) row_of[ids[i]] = i;

  {
    auto out = open_output(dir / "scores.csv");
    out << scores_header(names) << '\n';
    for (const auto& row : r.summary.rows) {
      const std::size_t i = row_of.at(row.id);
      out << csv_quote(row.id);
      for (const auto& run : r.runs) {
        const auto& t = run.table.rows[i];
        out << ',' << format_double(run.raw.scores[i]) << ',' << format_double(t.norm_score) << ','
            << t.ordering << ',' << format_double(t.ranking);
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "ensemble.csv");
    out << kEnsembleHeader << '\n';
    for (const auto& row : r.summary.rows) {
      out << csv_quote(row.id) << ',' << format_double(row.avg_norm_score) << ','
          << format_double(row.one_minus_avg_rank) << ',' << row.frequency << '\n';
    }
  }
  {
    auto rows = r.summary.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const EnsembleRow& a, const EnsembleRow& b) {
      if (a.frequency != b.frequency) return a.frequency > b.frequency;
      return a.id < b.id;
    });
    auto out = open_output(dir / "freq_chart.csv");
    out << kFreqChartHeader << '\n';
    for (const auto& row : rows) {
      if (row.frequency == 0) break;
      out << csv_quote(row.id) << ',' << row.frequency << '\n';
    }
  }
  {
    auto out = open_output(dir / "score_line.csv");
    out << kScoreLineHeader << '\n';
    for (std::size_t i = 0; i < r.summary.rows.size(); ++i) {
      out << i + 1 << ',' << format_double(r.summary.rows[i].avg_norm_score) << '\n';
    }
  }
  {
    std::vector<double> values;
    for (const auto& row : r.summary.rows) values.push_back(row.one_minus_avg_rank);
    std::sort(values.begin(), values.end(), std::greater<>());
    auto out = open_output(dir / "rank_line.csv");
    out << kRankLineHeader << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << format_double(values[i]) << '\n';
  }
  {
    auto out = open_output(dir / "report.json");
    out << r.json.dump(2) << '\n';
  }
}

}  // namespace

RunReport cmd_run(const RunConfig& config) {
  config.validate();
  const FeatureFrame frame = load_frame(config);
  RunReport report = evaluate_frame(frame, config);
  report.input_digest = fnv1a_digest(config.input);
  report.generated_at = utc_timestamp();
  report.json = build_report_json(report, frame);
  write_run_outputs(report);
  return report;
}

TuneOutput cmd_tune(const RunConfig& config, const fs::path& labels_path) {
  config.validate();
  const FeatureFrame frame = load_frame(config);
  const LabelSet labels = in_stage("labels", [&] { return read_labels(labels_path); });
  if (labels.positives.empty()) throw Error(ErrorCode::EmptyLabels, labels_path.string());
  check_labels_known(labels, frame.ids());

  TuneOutput result;
  for (const auto& spec : config.detectors) {
    auto base = spec.params;
    base.erase(std::string(primary_param(spec.kind)));
    const auto grid = spec.grid.empty() ? default_grid(spec.kind) : spec.grid;
    auto sweep_result = in_stage("tune", [&] {
      return sweep(frame, spec.kind, grid, labels, detector_seed(config.seed, spec.name), base);
    });
    result.sweeps.push_back(std::move(sweep_result));
    result.names.push_back(spec.name);
  }

  fs::create_directories(config.output_dir);
  for (std::size_t i = 0; i < result.sweeps.size(); ++i) {
    auto out = open_output(config.output_dir / ("tune_" + result.names[i] + ".csv"));
    out << kTuneHeader << '\n';
    for (const auto& point : result.sweeps[i].grid) {
      out << csv_quote(format_param(point.value)) << ',' << format_double(point.correction_rate) << '\n';
    }
  }
  auto out = open_output(config.output_dir / "tune_summary.csv");
  out << kTuneSummaryHeader << '\n';
  for (std::size_t i = 0; i < result.sweeps.size(); ++i) {
    const auto& s = result.sweeps[i];
    std::string grid = s.param + ": [";
    for (std::size_t g = 0; g < s.grid.size(); ++g) grid += (g ? ", " : "") + format_param(s.grid[g].value);
    grid += "]";
    out << csv_quote(result.names[i]) << ',' << s.param << ',' << csv_quote(grid) << ','
        << csv_quote(format_param(s.best)) << ',' << format_double(100.0 * s.best_rate) << '\n';
  }
  return result;
}

SynthOutput cmd_synth(const SyntheticSpec& spec, const fs::path& output_dir) {
  spec.validate();
  if (spec.p < kOriginalLetters.size() || spec.p > kOriginalLetters.size() + kDerivedLetters.size()) {
    config_error("synthetic CSV export supports 7 to 10 features");
  }
  const SyntheticData data = generate_synthetic(spec);
  RunConfig config = RunConfig::with_default_detectors();
  config.features.clear();
  for (std::size_t j = 0; j < spec.p; ++j) {
    const char letter = static_cast<char>('A' + j);
    config.features.push_back(letter);
    if (j >= kOriginalLetters.size()) config.mapping.derived_sources[letter] = derived_column_name(letter);
  }

  fs::create_directories(output_dir);
  SynthOutput out{output_dir / "synthetic.csv", output_dir / "labels.txt", output_dir / "synthetic_config.json"};
  {
    auto csv = open_output(out.csv);
    csv << config.mapping.id_column;
    for (char letter : config.features) csv << ',' << config.mapping.header_for(letter);
    csv << '\n';
    const auto& x = data.frame.values();
    for (std::size_t r = 0; r < data.frame.rows(); ++r) {
      csv << data.frame.ids()[r];
      for (Eigen::Index c = 0; c < x.cols(); ++c) csv << ',' << format_double(x(r, c));
      csv << '\n';
    }
  }
  write_labels(out.labels, data.labels);
  config.input = out.csv;
  config.output_dir = output_dir / "run";
  config.seed = spec.seed;
  auto cfg = open_output(out.config);
  cfg << to_json(config).dump(2) << '\n';
  return out;
}

EvalOutput cmd_eval(const std::vector<fs::path>& score_files, const fs::path& labels_path, std::size_t k,
                    const fs::path& output_dir) {
  if (score_files.empty()) config_error("eval needs at least one scores file");
  if (k == 0) config_error("k must be >= 1");
  const LabelSet labels = read_labels(labels_path);
  if (labels.positives.empty()) throw Error(ErrorCode::EmptyLabels, labels_path.string());

  std::vector<RecordId> ids;
  std::vector<ScoreVector> scorers;
  for (const auto& path : score_files) {
    const CsvDocument doc = read_csv(path);
    if (doc.header.empty()) throw Error(ErrorCode::MalformedCsv, path.string() + ": empty header");
    std::vector<RecordId> file_ids;
    for (const auto& row : doc.rows) file_ids.push_back(row[0]);
    check_unique_ids(file_ids);
    if (ids.empty()) {
      ids = file_ids;
    } else if (std::set<RecordId>(ids.begin(), ids.end()) != std::set<RecordId>(file_ids.begin(), file_ids.end())) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ": record ids differ from the first scores file");
    }
    std::map<RecordId, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
    for (std::size_t c = 1; c < doc.header.size(); ++c) {
      const auto& name = doc.header[c];
      if (name.ends_with("_norm") || name.ends_with("_ordering") || name.ends_with("_ranking")) continue;
      ScoreVector v{name.ends_with("_raw") ? name.substr(0, name.size() - 4) : name, ids,
                    std::vector<double>(ids.size()), false};
      for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const Cell value = parse_currency(doc.rows[r][c]);
        if (!value) throw Error(ErrorCode::MalformedCsv, path.string() + ": non-numeric score in column " + name);
        v.scores[pos.at(doc.rows[r][0])] = *value;
      }
      scorers.push_back(std::move(v));
    }
  }
  check_labels_known(labels, ids);

  EvalOutput result;
  std::size_t top = k;
  if (k > ids.size()) {
    top = ids.size();
    result.warnings.push_back("k=" + std::to_string(k) + " exceeds record count; clamped to " +
                              std::to_string(top));
  }
  json per = json::object();
  for (const auto& s : scorers) {
    const auto m = precision_recall_f1(top_flagged(s, top), labels);
    if (m.empty_flagged) result.warnings.push_back(s.detector + ": empty flagged set, precision set to 0");
    per[s.detector] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                       {"roc_auc", roc_auc(s, labels)}};
  }
  result.metrics = {{"k", top}, {"records", ids.size()}, {"labels", labels.positives.size()},
                    {"scorers", per}, {"warnings", result.warnings}};
  fs::create_directories(output_dir);
  auto out = open_output(output_dir / "metrics.json");
  out << result.metrics.dump(2) << '\n';
  return result;
}

}  // namespace auditod

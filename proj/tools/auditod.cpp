// auditod: outlier screening for award-level spending extracts.
//
//   auditod run   --config cfg.json [--input x.csv] [--out-dir dir] [--seed N] [--top-k K] [--jobs J]
//   auditod tune  --config cfg.json --labels labels.txt
//   auditod synth --out-dir dir [--seed N] [--n-inliers N] [--n-anomalies M] [--features P] [--shift S]
//   auditod eval  --scores out/scores.csv [--scores out/ensemble.csv] --labels labels.txt --top-k K

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "auditod/error.hpp"
#include "auditod/report.hpp"

namespace {

using namespace auditod;

struct CommonFlags {
  std::string config;
  std::string input;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_k;
  std::optional<int> jobs;
  std::string detectors;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--input", f.input, "CSV extract (overrides config)");
  cmd->add_option("--out-dir", f.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", f.seed, "Master RNG seed");
  cmd->add_option("--top-k", f.top_k, "Records per top-k list");
  cmd->add_option("--jobs", f.jobs, "Detectors run concurrently");
  cmd->add_option("--detectors", f.detectors, "Comma-separated detector kinds or names to run");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig::with_default_detectors() : load_run_config(f.config);
  if (!f.input.empty()) c.input = f.input;
  if (!f.out_dir.empty()) c.output_dir = f.out_dir;
  if (f.seed) c.seed = *f.seed;
  if (f.top_k) c.top_k = *f.top_k;
  if (f.jobs) c.jobs = *f.jobs;
  if (!f.detectors.empty()) {
    std::vector<std::string> names;
    std::stringstream ss(f.detectors);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) names.push_back(item);
    }
    c.restrict_detectors(names);
  }
  if (c.input.empty()) throw Error(ErrorCode::InvalidConfig, "no input CSV (use --input or config \"input\")");
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised outlier screening for award-level spending records"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Score every record and write ranked reports");
  add_common(run, run_flags);

  CommonFlags tune_flags;
  std::string tune_labels;
  auto* tune = app.add_subcommand("tune", "Sweep hyperparameter grids against pseudo-labels");
  add_common(tune, tune_flags);
  tune->add_option("--labels", tune_labels, "Pseudo-label file, one record id per line")->required();

  SyntheticSpec synth_spec;
  std::string synth_out = "synthetic";
  auto* synth = app.add_subcommand("synth", "Write a planted-anomaly fixture");
  synth->add_option("--out-dir", synth_out, "Output directory");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("--n-inliers", synth_spec.n_inliers, "Inlier count");
  synth->add_option("--n-anomalies", synth_spec.n_anomalies, "Planted anomaly count");
  synth->add_option("--features", synth_spec.p, "Feature count (7-10)");
  synth->add_option("--shift", synth_spec.shift, "Anomaly displacement in column ranges");

  std::vector<std::string> eval_scores;
  std::string eval_labels;
  std::size_t eval_k = 5;
  std::string eval_out = ".";
  auto* eval = app.add_subcommand("eval", "Precision/recall/F1 at top-k and ROC-AUC per score column");
  eval->add_option("--scores", eval_scores, "scores.csv or ensemble.csv (repeatable)")->required();
  eval->add_option("--labels", eval_labels, "Label file")->required();
  eval->add_option("--top-k", eval_k, "Flagged-set size");
  eval->add_option("--out-dir", eval_out, "Directory for metrics.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto report = cmd_run(resolve(run_flags));
      std::cout << "scored " << report.summary.rows.size() << " records with " << report.runs.size()
                << " detectors -> " << report.config.output_dir.string() << '\n';
      for (std::size_t i = 0; i < std::min<std::size_t>(report.config.top_k, report.summary.rows.size()); ++i) {
        const auto& row = report.summary.rows[i];
        std::cout << "  " << i + 1 << ". " << row.id << "  avg=" << format_double(row.avg_norm_score)
                  << "  freq=" << row.frequency << '\n';
      }
    } else if (*tune) {
      const auto config = resolve(tune_flags);
      const auto result = cmd_tune(config, tune_labels);
      for (std::size_t i = 0; i < result.sweeps.size(); ++i) {
        const auto& s = result.sweeps[i];
        std::cout << result.names[i] << ": best " << s.param << " = " << format_param(s.best) << " ("
                  << format_double(100.0 * s.best_rate) << "%)\n";
      }
    } else if (*synth) {
      const auto out = cmd_synth(synth_spec, synth_out);
      std::cout << "wrote " << out.csv.string() << ", " << out.labels.string() << ", " << out.config.string()
                << '\n';
    } else if (*eval) {
      std::vector<std::filesystem::path> files(eval_scores.begin(), eval_scores.end());
      const auto out = cmd_eval(files, eval_labels, eval_k, eval_out);
      for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << out.metrics.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_status(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

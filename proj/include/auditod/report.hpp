#pragma once
// Run configuration, the run/tune/synth/eval commands and their file formats.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "auditod/core_data.hpp"
#include "auditod/detectors.hpp"
#include "auditod/fusion.hpp"
#include "auditod/tuning.hpp"

namespace auditod {

struct DetectorSpec {
  std::string name;  // unique label used in output columns; defaults to the kind
  DetectorKind kind = DetectorKind::Hbos;
  ParamMap params;
  std::vector<ParamValue> grid;  // values of primary_param(kind) for `tune`
};

struct RunConfig {
  std::filesystem::path input;
  ColumnMapping mapping = ColumnMapping::usaspending_defaults();
  std::vector<char> features{'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J'};
  std::vector<DetectorSpec> detectors;
  std::uint64_t seed = 0;
  std::size_t top_k = 5;
  std::filesystem::path output_dir = "out";
  int jobs = 1;

  // All eight detectors with default parameters and grids.
  static RunConfig with_default_detectors();

  // Throws InvalidConfig. Performs no I/O.
  void validate() const;

  // Keeps only detectors whose kind or name is listed.
  void restrict_detectors(const std::vector<std::string>& names);
};

// Parameter grid searched for each kind when the config gives none.
std::vector<ParamValue> default_grid(DetectorKind kind);

nlohmann::json to_json(const ParamValue& value);
ParamValue param_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
// Missing fields take defaults; a missing "detectors" key means all eight.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Seed of one detector run derived from the master seed and its name.
std::uint64_t detector_seed(std::uint64_t master, const std::string& name);

// ingest -> derive -> select -> impute -> scale.
FeatureFrame load_frame(const RunConfig& config);

struct DetectorRun {
  std::string name;
  DetectorConfig config;  // resolved parameters and derived seed
  ScoreVector raw;
  ScoreVector normalized;
  RankTable table;
};

struct RunReport {
  RunConfig config;
  std::vector<DetectorRun> runs;
  EnsembleSummary summary;
  std::string input_digest;
  std::string generated_at;
  nlohmann::json json;
};

// Runs all detectors on a prepared frame and fuses the results.
RunReport evaluate_frame(const FeatureFrame& frame, const RunConfig& config);

RunReport cmd_run(const RunConfig& config);

struct TuneOutput {
  std::vector<SweepResult> sweeps;
  std::vector<std::string> names;
};
TuneOutput cmd_tune(const RunConfig& config, const std::filesystem::path& labels_path);

struct SynthOutput {
  std::filesystem::path csv;
  std::filesystem::path labels;
  std::filesystem::path config;
};
SynthOutput cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& output_dir);

struct EvalOutput {
  nlohmann::json metrics;
  std::vector<std::string> warnings;
};
EvalOutput cmd_eval(const std::vector<std::filesystem::path>& score_files,
                    const std::filesystem::path& labels_path, std::size_t k,
                    const std::filesystem::path& output_dir);

// Shared serialization helpers.
std::string format_double(double value);  // 17 significant digits
std::string fnv1a_digest(const std::filesystem::path& path);

inline constexpr const char* kEnsembleHeader = "id,avg_norm_score,one_minus_avg_rank,frequency";
inline constexpr const char* kFreqChartHeader = "award_id,frequency";
inline constexpr const char* kScoreLineHeader = "order_index,avg_norm_score";
inline constexpr const char* kRankLineHeader = "order_index,one_minus_avg_rank";
inline constexpr const char* kTuneHeader = "param_value,correction_rate";
inline constexpr const char* kTuneSummaryHeader =
    "method,hyperparameter,grid,best_parameter,prediction_correction_rate_pct";

// "id" then <name>_raw,<name>_norm,<name>_ordering,<name>_ranking per detector.
std::string scores_header(const std::vector<std::string>& detector_names);

}  // namespace auditod

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geonet/datasets.hpp"

namespace geonet::experiment {

enum class ExperimentKind { F2is, Classify, Geomcheck };

std::string_view experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

inline constexpr std::size_t kF2isDefaultBatch = 30;
inline constexpr std::size_t kClassifyDefaultBatch = 100;
inline constexpr std::size_t kF2isDefaultIterations = 3000;
inline constexpr std::size_t kClassifyDefaultIterations = 5000;

/// Everything needed to reproduce one run. Read from a flat `key = value`
/// file; `#` starts a comment. Zero batch/iterations mean "experiment
/// default". See README.md for the key list.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::F2is;
  std::uint64_t seed = 0;
  bool deterministic = false;

  double lr = 1e-3;
  std::size_t batch = 0;
  std::size_t iterations = 0;
  /// Hidden layer widths; empty means the experiment's default architecture.
  std::vector<std::size_t> hidden;
  /// Loss curve sampling period in iterations.
  std::size_t curve_every = 100;

  // f2is
  datasets::F2isParams f2is;
  std::string pole = "train_pca";    // train_pca | frechet
  std::string framework = "tangent";  // baseline | tangent

  // classify
  std::string loss = "ce";
  double lambda = 1.0;
  std::size_t train_limit = 10000;
  std::size_t test_limit = 2000;
  /// Directory holding the IDX files; empty means $DATA_DIR.
  std::string data_dir;
  datasets::GaussianClassesParams synthetic;
  std::size_t synthetic_test_per_class = 100;

  // geomcheck
  bool plant_fault = false;

  std::size_t effective_batch() const;
  std::size_t effective_iterations() const;
  std::vector<std::size_t> effective_hidden() const;
};

/// Applies one `key = value` setting. Unknown keys and unparsable values
/// throw ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
/// Accepts "key=value".
void apply_override(ExperimentConfig& config, std::string_view assignment);

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Every setting as (key, value) strings; feeding them back through
/// apply_setting reproduces the config.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct MetricsRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  /// Deterministic results only; these are what reproducibility compares.
  std::vector<std::pair<std::string, double>> scalars;
  /// (iteration, mean minibatch loss)
  std::vector<std::pair<std::size_t, double>> loss_curve;
  std::vector<std::string> per_sample_columns;
  std::vector<std::vector<double>> per_sample;
  std::vector<SuiteResult> suites;
  double wall_clock_seconds = 0.0;
  bool passed = true;

  std::optional<double> scalar(std::string_view name) const;
};

MetricsRecord run_f2is(const ExperimentConfig& config);
MetricsRecord run_classify(const ExperimentConfig& config);
MetricsRecord run_geomcheck(const ExperimentConfig& config);
MetricsRecord run_experiment(const ExperimentConfig& config);

/// metrics.json layout:
///   { "experiment", "seed", "config": {key: string}, "scalars": {name: number},
///     "loss_curve": [[iteration, loss]], "suites": [{name, cases, max_residual,
///     tolerance, passed}], "passed", "timing": {"wall_clock_seconds"} }
std::string metrics_to_json(const MetricsRecord& record);
/// Header row from per_sample_columns, then one row per sample.
std::string per_sample_csv(const MetricsRecord& record);
/// Creates `dir` if needed and writes metrics.json and per_sample.csv.
void write_outputs(const MetricsRecord& record, const std::filesystem::path& dir);

}  // namespace geonet::experiment

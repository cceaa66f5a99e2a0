// geonet f2is|classify|geomcheck --config <path> [--seed N] [--out <dir>] [--deterministic] [--set key=value]...

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "geonet/experiment.hpp"

namespace ex = geonet::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Manifold-valued regression and classification experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool deterministic = false;
  std::vector<std::string> overrides;

  for (const char* name : {"f2is", "classify", "geomcheck"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "directory for metrics.json and per_sample.csv");
    sub->add_flag("--deterministic", deterministic, "single-threaded, bitwise reproducible run");
    sub->add_option("--set", overrides, "extra key=value overrides, applied after the config file");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    ex::ExperimentConfig config;
    config.experiment = ex::parse_experiment_kind(name);
    if (!config_path.empty()) config = ex::load_config(config_path, config);
    // the subcommand wins over an `experiment =` line in the file
    config.experiment = ex::parse_experiment_kind(name);
    for (const auto& o : overrides) ex::apply_override(config, o);
    if (seed) config.seed = *seed;
    if (deterministic) config.deterministic = true;

    const ex::MetricsRecord record = ex::run_experiment(config);
    ex::write_outputs(record, out_dir);

    for (const auto& [key, value] : record.scalars) std::cout << key << " = " << value << '\n';
    for (const auto& s : record.suites) {
      std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << "  cases=" << s.cases
                << "  max_residual=" << s.max_residual << "  tol=" << s.tolerance << '\n';
    }
    std::cout << "wall_clock_seconds = " << record.wall_clock_seconds << '\n';
    return record.passed ? 0 : 1;
  } catch (const geonet::GeoError& e) {
    std::cerr << "geonet: " << geonet::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "geonet: " << e.what() << '\n';
    return 2;
  }
}

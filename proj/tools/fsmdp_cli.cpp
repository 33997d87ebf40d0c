#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsmdp/config.hpp"
#include "fsmdp/harness.hpp"
#include "fsmdp/oracle_suite.hpp"

int main(int argc, char** argv) {
  CLI::App app{"UCRL planning and learning on factored-state MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it normalized");
  validate->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Run every seed and write traces and a summary");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  int workers = 0;
  std::string output;
  run->add_option("--workers", workers, "Parallel seeds (overrides the config)")->check(CLI::PositiveNumber);
  run->add_option("--output", output, "Output directory (overrides the config)");

  auto* bound = app.add_subcommand("bound", "Write the regret bound at each T");
  bound->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  std::vector<double> grid;
  std::string bound_out;
  bound->add_option("--t-grid", grid, "Total step counts T")->required()->expected(1, -1);
  bound->add_option("--out", bound_out, "CSV path (stdout if omitted)");

  auto* suite = app.add_subcommand("oracle-suite", "Cross-check optimized components against brute force");
  std::uint64_t suite_seed = 1;
  suite->add_option("--seed", suite_seed, "Instance seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto cfg = fsmdp::load_config(config_path);
      std::cout << fsmdp::serialize_config(cfg).dump(2) << "\n";
      return 0;
    }
    if (*run) {
      auto cfg = fsmdp::load_config(config_path);
      if (workers > 0) cfg.workers = workers;
      if (!output.empty()) cfg.output_dir = output;
      const auto summary = fsmdp::run_benchmark(cfg, &std::cerr);
      std::cout << summary.to_json().dump(2) << "\n";
      return summary.all_ok ? 0 : 1;
    }
    if (*bound) {
      const auto cfg = fsmdp::load_config(config_path);
      if (bound_out.empty()) {
        fsmdp::write_bound_curve(cfg, grid, std::cout);
      } else {
        std::ofstream out(bound_out);
        if (!out) throw std::runtime_error("cannot open " + bound_out);
        fsmdp::write_bound_curve(cfg, grid, out);
      }
      return 0;
    }
    if (*suite) {
      bool ok = true;
      for (const auto& r : fsmdp::run_oracle_suite(suite_seed, std::cout)) ok = ok && r.pass;
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

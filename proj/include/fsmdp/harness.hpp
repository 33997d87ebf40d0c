#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsmdp/config.hpp"

namespace fsmdp {

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::uint64_t episodes = 0;
  double final_cumulative_regret = 0.0;
  std::optional<double> final_bound;
  /// Cumulative regret <= bound at every power-of-two episode.
  bool checkpoints_below_bound = true;
  std::uint64_t checkpoints = 0;
  std::uint64_t checkpoints_passed = 0;
  bool exact_regret = false;
  std::optional<double> coverage_rate;
};

struct BenchmarkSummary {
  std::vector<SeedOutcome> seeds;
  /// Passed checkpoints over all checkpoints of successful seeds.
  double fraction_below_bound = 0.0;
  bool all_ok = false;

  nlohmann::json to_json() const;
};

/// Output directory with FSMDP_OUTPUT_ROOT prefixed when the configured one is relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Runs every seed, writing seed_<s>.csv, periodic seed_<s>.snapshot.json and
/// summary.json under the output directory. Seeds with a snapshot resume from
/// it. A failing seed is recorded and does not stop the others.
BenchmarkSummary run_benchmark(const ExperimentConfig& config, std::ostream* log = nullptr);

struct CsvTraceRow {
  std::uint64_t k = 0;
  double realized_reward = 0.0;
  double regret = 0.0;
  bool proxy = false;
  double cumulative_regret = 0.0;
  std::optional<double> bound;
};

std::vector<CsvTraceRow> read_trace_csv(const std::filesystem::path& path);

/// Bound at each T (total steps) as a two-column CSV.
void write_bound_curve(const ExperimentConfig& config, const std::vector<double>& T, std::ostream& out);

}  // namespace fsmdp

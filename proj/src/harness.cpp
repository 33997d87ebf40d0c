#include "fsmdp/harness.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "fsmdp/learner.hpp"

namespace fsmdp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTraceMagic = "# fsmdp-regret-trace v1";
constexpr const char* kTraceHeader = "k,realized_reward,regret,proxy,cumulative_regret,bound";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_line(const TraceRow& r) {
  std::string s = std::to_string(r.k) + "," + fmt(r.realized_reward) + "," + fmt(r.regret) + "," +
                  (r.proxy ? "1" : "0") + "," + fmt(r.cumulative_regret) + ",";
  if (r.bound) s += fmt(*r.bound);
  return s;
}

bool power_of_two(std::uint64_t k) { return k && !(k & (k - 1)); }

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Keeps the header and the rows with k <= episodes.
void truncate_trace(const fs::path& path, std::uint64_t episodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("snapshot exists but " + path.string() + " is missing");
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#' || line[0] == 'k') {
      kept += line + "\n";
      continue;
    }
    if (std::stoull(line.substr(0, line.find(','))) <= episodes) kept += line + "\n";
  }
  in.close();
  write_atomic(path, kept);
}

SeedOutcome summarize_seed(std::uint64_t seed, const fs::path& csv, std::uint64_t K) {
  SeedOutcome o;
  o.seed = seed;
  const auto rows = read_trace_csv(csv);
  if (rows.size() != K) throw std::runtime_error("trace has " + std::to_string(rows.size()) + " rows, expected " +
                                                 std::to_string(K));
  o.episodes = rows.size();
  o.final_cumulative_regret = rows.back().cumulative_regret;
  o.final_bound = rows.back().bound;
  o.exact_regret = !rows.back().proxy;
  for (const auto& r : rows) {
    if (!power_of_two(r.k) || !r.bound) continue;
    ++o.checkpoints;
    if (r.cumulative_regret <= *r.bound) ++o.checkpoints_passed;
  }
  o.checkpoints_below_bound = o.checkpoints_passed == o.checkpoints;
  o.ok = true;
  return o;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, const Experiment& ex, std::uint64_t seed, const fs::path& dir) {
  const fs::path csv = dir / ("seed_" + std::to_string(seed) + ".csv");
  const fs::path snap_path = dir / ("seed_" + std::to_string(seed) + ".snapshot.json");

  const bool resumed = fs::exists(snap_path);
  std::ofstream planner_trace;
  auto options = learner_options(cfg);
  if (cfg.rho_weighted_objective) options.planner.rho_weighting = ex.env->initial();
  if (cfg.planner_trace) {
    planner_trace.open(dir / ("seed_" + std::to_string(seed) + ".planner.jsonl"),
                       resumed ? std::ios::app : std::ios::trunc);
    options.planner.trace = &planner_trace;
  }
  Learner learner(*ex.env, ex.structure, options, seed);

  std::uint64_t covered = 0;
  if (resumed) {
    std::ifstream in(snap_path);
    const json snap = json::parse(in);
    learner.restore(snap.at("learner"));
    covered = snap.value("covered", std::uint64_t{0});
    truncate_trace(csv, learner.next_episode() - 1);
  }

  std::ofstream out(csv, resumed ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + csv.string());
  if (!resumed) out << kTraceMagic << "\n" << kTraceHeader << "\n" << std::flush;

  auto checkpoint = [&] {
    json snap{{"learner", learner.snapshot()}, {"covered", covered}};
    write_atomic(snap_path, snap.dump());
  };
  while (learner.next_episode() <= cfg.K) {
    const auto row = learner.step_episode();
    if (row.model_covered) ++covered;
    out << csv_line(row) << "\n" << std::flush;
    if (row.k % cfg.checkpoint_every == 0 || row.k == cfg.K) checkpoint();
  }
  out.close();

  auto o = summarize_seed(seed, csv, cfg.K);
  if (cfg.track_coverage) o.coverage_rate = static_cast<double>(covered) / static_cast<double>(cfg.K);
  return o;
}

}  // namespace

json BenchmarkSummary::to_json() const {
  json seeds_json = json::array();
  for (const auto& s : seeds) {
    json j{{"seed", s.seed}, {"ok", s.ok}};
    if (!s.ok) {
      j["error"] = s.error;
    } else {
      j["episodes"] = s.episodes;
      j["final_cumulative_regret"] = s.final_cumulative_regret;
      j["final_bound"] = s.final_bound ? json(*s.final_bound) : json(nullptr);
      j["checkpoints"] = s.checkpoints;
      j["checkpoints_passed"] = s.checkpoints_passed;
      j["checkpoints_below_bound"] = s.checkpoints_below_bound;
      j["exact_regret"] = s.exact_regret;
      j["coverage_rate"] = s.coverage_rate ? json(*s.coverage_rate) : json(nullptr);
    }
    seeds_json.push_back(std::move(j));
  }
  return {{"seeds", seeds_json}, {"fraction_below_bound", fraction_below_bound}, {"all_ok", all_ok}};
}

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  if (dir.is_relative())
    if (const char* root = std::getenv("FSMDP_OUTPUT_ROOT"); root && *root) dir = fs::path(root) / dir;
  return dir;
}

std::vector<CsvTraceRow> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceMagic) throw std::runtime_error(path.string() + ": not a regret trace");
  if (!std::getline(in, line) || line != kTraceHeader) throw std::runtime_error(path.string() + ": bad header");
  std::vector<CsvTraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() == 5) f.emplace_back();
    if (f.size() != 6) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    CsvTraceRow r;
    r.k = std::stoull(f[0]);
    r.realized_reward = std::stod(f[1]);
    r.regret = std::stod(f[2]);
    r.proxy = f[3] == "1";
    r.cumulative_regret = std::stod(f[4]);
    if (!f[5].empty()) r.bound = std::stod(f[5]);
    rows.push_back(r);
  }
  return rows;
}

BenchmarkSummary run_benchmark(const ExperimentConfig& cfg, std::ostream* log) {
  const Experiment ex = build_experiment(cfg);
  const fs::path dir = resolve_output_dir(cfg);
  fs::create_directories(dir);

  BenchmarkSummary summary;
  summary.seeds.resize(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      const auto seed = cfg.seeds[i];
      try {
        summary.seeds[i] = run_seed(cfg, ex, seed, dir);
      } catch (const std::exception& e) {
        summary.seeds[i].seed = seed;
        summary.seeds[i].ok = false;
        summary.seeds[i].error = e.what();
      }
      if (log) {
        std::lock_guard lock(log_mu);
        const auto& s = summary.seeds[i];
        *log << "seed " << seed << ": "
             << (s.ok ? "cumulative regret " + fmt(s.final_cumulative_regret) : "FAILED " + s.error) << "\n";
      }
    }
  };
  const int n = std::max(1, std::min<int>(cfg.workers, static_cast<int>(cfg.seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::uint64_t total = 0, passed = 0;
  summary.all_ok = true;
  for (const auto& s : summary.seeds) {
    summary.all_ok = summary.all_ok && s.ok;
    if (!s.ok) continue;
    total += s.checkpoints;
    passed += s.checkpoints_passed;
  }
  summary.fraction_below_bound = total ? static_cast<double>(passed) / static_cast<double>(total) : 0.0;
  write_atomic(dir / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

void write_bound_curve(const ExperimentConfig& cfg, const std::vector<double>& T, std::ostream& out) {
  const Experiment ex = build_experiment(cfg);
  const auto p = bound_params(*ex.structure, cfg.W);
  out << "# fsmdp-bound-curve v1\nT,bound\n";
  for (const double t : T) {
    if (!(t > 0)) throw ConfigError("bound grid values must be positive");
    out << fmt(t) << "," << fmt(theoretical_bound(p, t / p.tau, cfg.delta)) << "\n";
  }
}

}  // namespace fsmdp

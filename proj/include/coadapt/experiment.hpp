#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "coadapt/agents.hpp"
#include "coadapt/environment.hpp"
#include "coadapt/interface_learning.hpp"
#include "coadapt/simulated_human.hpp"

namespace coadapt {

struct ExperimentConfig {
  EnvConfig env;
  std::vector<Algorithm> algorithms = all_algorithms();
  int interactions = 1000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  AgentSettings agent;
  // "auto" picks default_human_structure() per algorithm.
  std::string human_structure = "auto";
  HumanConfig human;
  int smoothing_window = 25;
  int last_window = 100;
  std::string output_dir = "results";

  // Full-scale grid sizes for an environment: Treasure 5 x 1000 with a
  // last-100 window, Highway 10 x 350 with a last-50 window.
  static ExperimentConfig defaults_for(EnvKind kind);
  // 3 seeds x 300 interactions.
  void apply_quick_profile();
  HumanStructure human_structure_for(Algorithm a) const;
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Missing fields take their defaults (environment-specific ones included).
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Hash of everything that determines a run's numbers for one algorithm,
// excluding the seed list and output location.
std::string config_hash(const ExperimentConfig& config, Algorithm algorithm);

struct RunRecord {
  std::string environment;
  Algorithm algorithm = Algorithm::kLimit;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<double> metrics;
  std::vector<TrainStats> losses;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string failure;
  std::vector<BayesLogRow> bayes_log;
};

// Called after each interaction has been scored, adapted and trained on.
using SessionObserver = std::function<void(int interaction, const InterfaceAgent&,
                                           const SimulatedHuman&)>;

// Builds the pretrained simulated human a run with `algorithm` is paired with.
SimulatedHuman make_simulated_human(const ExperimentConfig& config,
                                    const Environment& env, Algorithm algorithm,
                                    std::uint64_t seed);

RunRecord run_session(const ExperimentConfig& config, Algorithm algorithm,
                      std::uint64_t seed, const SessionObserver& observer = {});

// Plays one interaction of `agent` with `human`: T steps of signal, action,
// transition. Every tuple is passed to agent.record().
Episode play_interaction(const Environment& env, InterfaceAgent& agent,
                         const SimulatedHuman& human, std::mt19937_64& env_rng,
                         std::int64_t interaction);

// Per-interaction metric/loss CSV. Byte-stable for identical records.
std::string metrics_csv(const RunRecord& record);
RunRecord parse_metrics_csv(const std::string& text);

// Writes <dir>/<env>/<algorithm>/seed_<seed>.csv plus a JSON sidecar (and a
// Bayes observation log for Bayes runs).
std::filesystem::path write_run(const RunRecord& record,
                                const std::filesystem::path& dir);
std::vector<RunRecord> read_runs(const std::filesystem::path& dir);

struct Summary {
  std::string environment;
  Algorithm algorithm = Algorithm::kLimit;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> smoothed;
  // Mean over the last `last_window` interactions, one entry per seed.
  std::vector<double> seed_window_means;
  double window_mean = 0.0;
  int last_window = 0;
  int smoothing_window = 0;
};

// All records must share environment, algorithm, config hash and length.
Summary aggregate(const std::vector<RunRecord>& records, int smoothing_window,
                  int last_window);
// Groups records into cells and aggregates each.
std::vector<Summary> aggregate_all(const std::vector<RunRecord>& records,
                                   int smoothing_window, int last_window);

struct Comparison {
  std::string environment;
  Algorithm a = Algorithm::kOursC;
  Algorithm b = Algorithm::kLimit;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double p_value = 1.0;
};

// One-sided rank-sum test that `a` has lower last-window means than `b`.
// Throws UsageError("insufficient seeds") with fewer than 3 seeds each.
Comparison compare(const Summary& a, const Summary& b);

// Per-cell CSVs, a comparison table against ours-c, one SVG per environment
// and a metadata JSON describing smoothing and error bands.
std::vector<std::filesystem::path> emit_outputs(const std::vector<Summary>& summaries,
                                                const std::filesystem::path& dir);

std::string summary_csv(const Summary& summary);
std::string plot_svg(const std::vector<Summary>& summaries,
                     const std::string& environment);

}  // namespace coadapt

// Command-line entry point: run experiment grids, aggregate and compare
// results, render plots, and serve live sessions.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "coadapt/experiment.hpp"
#include "coadapt/format.hpp"
#include "coadapt/session_service.hpp"

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace coadapt;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

fs::path resolve_output(const std::string& cli_out, const std::string& config_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* root = std::getenv("COADAPT_OUTPUT_ROOT")) {
    return fs::path(root) / config_out;
  }
  return config_out;
}

struct Windows {
  int smoothing = 25;
  int last = 100;
};

Windows windows_for(const fs::path& dir, int smoothing, int last) {
  Windows w;
  const fs::path config_path = dir / "config.json";
  if (fs::exists(config_path)) {
    const ExperimentConfig config = load_config(config_path);
    w.smoothing = config.smoothing_window;
    w.last = config.last_window;
  }
  if (smoothing > 0) w.smoothing = smoothing;
  if (last > 0) w.last = last;
  return w;
}

int run_command(const std::string& config_path, bool quick, const std::string& seeds,
                const std::string& out, const std::string& env_name,
                const std::vector<std::string>& algorithms, int interactions) {
  ExperimentConfig config;
  if (!config_path.empty()) {
    config = load_config(config_path);
  } else {
    config = ExperimentConfig::defaults_for(
        env_kind_from_string(env_name.empty() ? "treasure" : env_name));
  }
  if (quick) config.apply_quick_profile();
  if (!seeds.empty()) config.seeds = parse_seeds(seeds);
  if (interactions >= 0) config.interactions = interactions;
  if (!algorithms.empty()) {
    config.algorithms.clear();
    for (const auto& a : algorithms) config.algorithms.push_back(algorithm_from_string(a));
  }
  config.validate();
  const fs::path dir = resolve_output(out, config.output_dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << to_json(config).dump(2) << '\n';
  }
  int failures = 0;
  for (Algorithm algorithm : config.algorithms) {
    for (std::uint64_t seed : config.seeds) {
      std::cerr << "[run] " << to_string(config.env.kind) << ' ' << to_string(algorithm)
                << " seed " << seed << " ... " << std::flush;
      const RunRecord record = run_session(config, algorithm, seed);
      const fs::path csv = write_run(record, dir);
      double tail = 0.0;
      const std::size_t window =
          std::min<std::size_t>(config.last_window, record.metrics.size());
      for (std::size_t i = record.metrics.size() - window; i < record.metrics.size(); ++i) {
        tail += record.metrics[i];
      }
      std::cerr << (record.failed ? "FAILED (" + record.failure + ") " : std::string())
                << "last-" << window << " mean "
                << (window ? tail / static_cast<double>(window) : 0.0) << " ("
                << record.wall_seconds << " s) -> " << csv.string() << '\n';
      failures += record.failed ? 1 : 0;
    }
  }
  return failures == 0 ? 0 : 2;
}

int aggregate_command(const fs::path& in, int smoothing, int last) {
  const Windows w = windows_for(in, smoothing, last);
  const auto summaries = aggregate_all(read_runs(in), w.smoothing, w.last);
  for (const auto& path : emit_outputs(summaries, in / "summary")) {
    std::cout << path.string() << '\n';
  }
  for (const auto& s : summaries) {
    std::cout << s.environment << ' ' << to_string(s.algorithm) << ": last-"
              << s.last_window << " mean " << s.window_mean << " over "
              << s.seeds.size() << " seeds\n";
  }
  return 0;
}

int compare_command(const fs::path& in, const std::string& a, const std::string& b,
                    const std::string& env, int last) {
  const Windows w = windows_for(in, 0, last);
  const auto summaries = aggregate_all(read_runs(in), w.smoothing, w.last);
  const Summary* sa = nullptr;
  const Summary* sb = nullptr;
  for (const auto& s : summaries) {
    if (!env.empty() && s.environment != env) continue;
    if (to_string(s.algorithm) == a) sa = &s;
    if (to_string(s.algorithm) == b) sb = &s;
  }
  if (!sa || !sb) {
    std::cerr << "missing results for " << (!sa ? a : b) << '\n';
    return 1;
  }
  const Comparison c = compare(*sa, *sb);
  std::cout << c.environment << ": " << a << " mean " << c.mean_a << " vs " << b
            << " mean " << c.mean_b << ", one-sided rank-sum p = "
            << format_double(c.p_value) << '\n';
  return 0;
}

int plot_command(const fs::path& in) {
  const Windows w = windows_for(in, 0, 0);
  const auto summaries = aggregate_all(read_runs(in), w.smoothing, w.last);
  std::set<std::string> envs;
  for (const auto& s : summaries) envs.insert(s.environment);
  fs::create_directories(in / "summary");
  for (const auto& env : envs) {
    const fs::path path = in / "summary" / (env + ".svg");
    std::ofstream(path) << plot_svg(summaries, env);
    std::cout << path.string() << '\n';
  }
  return 0;
}

int serve_command(const std::string& host, int port, std::uint64_t seed) {
  SessionService service(seed);
  httplib::Server server;
  service.register_routes(server);
  std::cerr << "listening on http://" << host << ':' << port << '\n';
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive robot-to-human signaling interfaces"};
  app.require_subcommand(1);

  std::string config_path, seeds, out, env_name;
  std::vector<std::string> algorithms;
  bool quick = false;
  int interactions = -1;
  auto* run = app.add_subcommand("run", "Run an (algorithm x seed) grid");
  run->add_option("--config", config_path, "JSON config file");
  run->add_flag("--quick", quick, "3 seeds x 300 interactions");
  run->add_option("--seeds", seeds, "Comma-separated seeds");
  run->add_option("--out", out, "Output directory");
  run->add_option("--env", env_name, "treasure | highway (without --config)");
  run->add_option("--algorithms", algorithms, "Subset of algorithms");
  run->add_option("--interactions", interactions, "Interactions per run");

  std::string in_dir;
  int smoothing = 0, last = 0;
  auto* aggregate = app.add_subcommand("aggregate", "Summarize a results directory");
  aggregate->add_option("--in", in_dir, "Results directory")->required();
  aggregate->add_option("--smoothing", smoothing, "Moving-average window");
  aggregate->add_option("--last-window", last, "Final window for comparisons");

  std::string a = "ours-c", b = "limit", compare_env;
  auto* compare_cmd = app.add_subcommand("compare", "Rank-sum test between algorithms");
  compare_cmd->add_option("--in", in_dir, "Results directory")->required();
  compare_cmd->add_option("--a", a, "Algorithm expected to be lower");
  compare_cmd->add_option("--b", b, "Reference algorithm");
  compare_cmd->add_option("--env", compare_env, "Environment filter");
  compare_cmd->add_option("--last-window", last, "Final window");

  auto* plot = app.add_subcommand("plot", "Render SVG curves");
  plot->add_option("--in", in_dir, "Results directory")->required();

  std::string host = "127.0.0.1";
  int port = 8733;
  std::uint64_t seed = 0;
  auto* serve = app.add_subcommand("serve", "Serve live sessions over HTTP");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--seed", seed, "Base seed for sessions");

  auto* defaults = app.add_subcommand("defaults", "Print the default config");
  defaults->add_option("--env", env_name, "treasure | highway");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return run_command(config_path, quick, seeds, out, env_name, algorithms,
                         interactions);
    }
    if (*aggregate) return aggregate_command(in_dir, smoothing, last);
    if (*compare_cmd) return compare_command(in_dir, a, b, compare_env, last);
    if (*plot) return plot_command(in_dir);
    if (*serve) return serve_command(host, port, seed);
    if (*defaults) {
      const auto config = ExperimentConfig::defaults_for(
          env_kind_from_string(env_name.empty() ? "treasure" : env_name));
      std::cout << to_json(config).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "coadapt/experiment.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "coadapt/format.hpp"
#include "coadapt/stats.hpp"

namespace coadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed and stream.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kEnvStream = 1, kHumanStream, kTeacherStream, kAgentStream };

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

// -------------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::defaults_for(EnvKind kind) {
  ExperimentConfig c;
  c.env.kind = kind;
  if (kind == EnvKind::kTreasure) {
    c.env.dimension = 3;
    c.interactions = 1000;
    c.seeds = {0, 1, 2, 3, 4};
    c.last_window = 100;
  } else {
    c.interactions = 350;
    c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    c.last_window = 50;
  }
  return c;
}

void ExperimentConfig::apply_quick_profile() {
  interactions = 300;
  seeds = {0, 1, 2};
  last_window = std::min(last_window, 50);
}

HumanStructure ExperimentConfig::human_structure_for(Algorithm a) const {
  if (human_structure == "auto") return default_human_structure(a);
  const HumanStructure s = human_structure_from_string(human_structure);
  const auto own = own_structure(a);
  if (own && *own == s) {
    throw UsageError("algorithm " + to_string(a) +
                     " cannot be evaluated against a human pretrained on its own "
                     "structure (" + human_structure + ")");
  }
  return s;
}

void ExperimentConfig::validate() const {
  if (interactions < 0) throw UsageError("interactions must be non-negative");
  if (algorithms.empty()) throw UsageError("no algorithms configured");
  if (smoothing_window < 1 || last_window < 1) {
    throw UsageError("windows must be at least 1");
  }
  agent.weights.validate();
  if (env.kind == EnvKind::kTreasure && env.dimension < 1) {
    throw UsageError("treasure dimension must be at least 1");
  }
  for (Algorithm a : algorithms) (void)human_structure_for(a);
}

json to_json(const ExperimentConfig& c) {
  json algorithms = json::array();
  for (Algorithm a : c.algorithms) algorithms.push_back(to_string(a));
  const auto& w = c.agent.weights;
  const auto& s = c.agent.schedule;
  const auto& b = c.agent.bayes;
  return {
      {"environment", to_string(c.env.kind)},
      {"dimension", c.env.dimension},
      {"algorithms", algorithms},
      {"interactions", c.interactions},
      {"seeds", c.seeds},
      {"lambda1", w.lambda1},
      {"lambda2", w.lambda2},
      {"lambda3", w.lambda3},
      {"gamma", w.gamma},
      {"rollout_k", w.k},
      {"network",
       {{"policy_hidden", c.agent.sizes.policy_hidden},
        {"human_model_hidden", c.agent.sizes.human_hidden},
        {"decoder_hidden", c.agent.sizes.decoder_hidden}}},
      {"training",
       {{"gradient_steps", s.gradient_steps},
        {"batch_size", s.batch_size},
        {"learning_rate", s.learning_rate},
        {"buffer_capacity", s.buffer_capacity},
        {"prior_pretrain_steps", s.prior_pretrain_steps}}},
      {"bayes",
       {{"length_scale", b.length_scale},
        {"noise", b.noise},
        {"restarts", b.restarts},
        {"local_steps", b.local_steps},
        {"initial_random", b.initial_random},
        {"max_history", b.max_history},
        {"box", b.box}}},
      {"human",
       {{"structure", c.human_structure},
        {"hidden", c.human.hidden},
        {"adaptation_rate", c.human.adaptation_rate},
        {"adaptation_steps", c.human.adaptation_steps},
        {"pretrain_episodes", c.human.pretrain_episodes},
        {"pretrain_steps_per_episode", c.human.pretrain_steps_per_episode},
        {"pretrain_rate", c.human.pretrain_rate}}},
      {"smoothing_window", c.smoothing_window},
      {"last_window", c.last_window},
      {"output_dir", c.output_dir},
  };
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  const EnvKind kind =
      env_kind_from_string(j.value("environment", std::string("treasure")));
  ExperimentConfig c = ExperimentConfig::defaults_for(kind);
  read_opt(j, "dimension", c.env.dimension);
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& name : j.at("algorithms")) {
      c.algorithms.push_back(algorithm_from_string(name.get<std::string>()));
    }
  }
  read_opt(j, "interactions", c.interactions);
  read_opt(j, "seeds", c.seeds);
  auto& w = c.agent.weights;
  read_opt(j, "lambda1", w.lambda1);
  read_opt(j, "lambda2", w.lambda2);
  read_opt(j, "lambda3", w.lambda3);
  read_opt(j, "gamma", w.gamma);
  read_opt(j, "rollout_k", w.k);
  if (j.contains("network")) {
    const json& n = j.at("network");
    read_opt(n, "policy_hidden", c.agent.sizes.policy_hidden);
    read_opt(n, "human_model_hidden", c.agent.sizes.human_hidden);
    read_opt(n, "decoder_hidden", c.agent.sizes.decoder_hidden);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    auto& s = c.agent.schedule;
    read_opt(t, "gradient_steps", s.gradient_steps);
    read_opt(t, "batch_size", s.batch_size);
    read_opt(t, "learning_rate", s.learning_rate);
    read_opt(t, "buffer_capacity", s.buffer_capacity);
    read_opt(t, "prior_pretrain_steps", s.prior_pretrain_steps);
  }
  if (j.contains("bayes")) {
    const json& bj = j.at("bayes");
    auto& b = c.agent.bayes;
    read_opt(bj, "length_scale", b.length_scale);
    read_opt(bj, "noise", b.noise);
    read_opt(bj, "restarts", b.restarts);
    read_opt(bj, "local_steps", b.local_steps);
    read_opt(bj, "initial_random", b.initial_random);
    read_opt(bj, "max_history", b.max_history);
    read_opt(bj, "box", b.box);
  }
  if (j.contains("human")) {
    const json& h = j.at("human");
    read_opt(h, "structure", c.human_structure);
    read_opt(h, "hidden", c.human.hidden);
    read_opt(h, "adaptation_rate", c.human.adaptation_rate);
    read_opt(h, "adaptation_steps", c.human.adaptation_steps);
    read_opt(h, "pretrain_episodes", c.human.pretrain_episodes);
    read_opt(h, "pretrain_steps_per_episode", c.human.pretrain_steps_per_episode);
    read_opt(h, "pretrain_rate", c.human.pretrain_rate);
  }
  read_opt(j, "smoothing_window", c.smoothing_window);
  read_opt(j, "last_window", c.last_window);
  read_opt(j, "output_dir", c.output_dir);
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(json::parse(read_file(path)));
}

std::string config_hash(const ExperimentConfig& config, Algorithm algorithm) {
  json j = to_json(config);
  j.erase("seeds");
  j.erase("output_dir");
  j.erase("algorithms");
  j.erase("smoothing_window");
  j.erase("last_window");
  j["algorithm"] = to_string(algorithm);
  j["human"]["structure"] = to_string(config.human_structure_for(algorithm));
  return fnv1a_hex(j.dump());
}

// ------------------------------------------------------------------ sessions

SimulatedHuman make_simulated_human(const ExperimentConfig& config,
                                    const Environment& env, Algorithm algorithm,
                                    std::uint64_t seed) {
  SimulatedHuman human(env, config.human, mix_seed(seed, kHumanStream));
  const SignalFn teacher = make_teacher(
      config.human_structure_for(algorithm), env, config.agent.sizes,
      config.agent.schedule, config.agent.weights.gamma,
      mix_seed(seed, kTeacherStream));
  human.pretrain(teacher, config.human.pretrain_episodes);
  return human;
}

Episode play_interaction(const Environment& env, InterfaceAgent& agent,
                         const SimulatedHuman& human, std::mt19937_64& env_rng,
                         std::int64_t interaction) {
  auto [s, theta] = env.reset(env_rng);
  Episode episode;
  episode.theta = theta;
  episode.steps.reserve(env.horizon());
  for (int t = 0; t < env.horizon(); ++t) {
    Step step;
    step.s = s;
    step.x = agent.signal(s, theta);
    step.a = human.act(step.x, s);
    step.robot = env.robot_action(theta, s);
    step.next = env.transition(s, step.a, step.robot);
    agent.record({step.s, step.a, step.x, theta, interaction, t});
    s = step.next;
    episode.steps.push_back(std::move(step));
  }
  return episode;
}

RunRecord run_session(const ExperimentConfig& config, Algorithm algorithm,
                      std::uint64_t seed, const SessionObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  const auto env = make_environment(config.env);
  RunRecord record;
  record.environment = env->name();
  record.algorithm = algorithm;
  record.seed = seed;
  record.config_hash = config_hash(config, algorithm);

  try {
    SimulatedHuman human = make_simulated_human(config, *env, algorithm, seed);
    auto agent = make_agent(algorithm, *env, config.agent, mix_seed(seed, kAgentStream));
    std::mt19937_64 env_rng(mix_seed(seed, kEnvStream));
    for (int i = 0; i < config.interactions; ++i) {
      const Episode episode = play_interaction(*env, *agent, human, env_rng, i);
      const double metric = env->metric(episode);
      human.adapt(episode, episode.theta);
      const TrainStats stats = agent->finish_interaction(episode, metric);
      record.metrics.push_back(metric);
      record.losses.push_back(stats);
      if (observer) observer(i, *agent, human);
    }
    if (auto* bayes = dynamic_cast<BayesAgent*>(agent.get())) {
      record.bayes_log = bayes->log();
    }
  } catch (const TrainingError& e) {
    record.failed = true;
    record.failure = e.what();
  }
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

// ------------------------------------------------------------------- records

std::string metrics_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "interaction,metric,prior_loss,policy_loss,decoder_loss,total_loss,train_steps\n";
  for (std::size_t i = 0; i < record.metrics.size(); ++i) {
    const TrainStats stats = i < record.losses.size() ? record.losses[i] : TrainStats{};
    out << i << ',' << format_double(record.metrics[i]) << ','
        << format_double(stats.prior) << ',' << format_double(stats.policy) << ','
        << format_double(stats.decoder) << ',' << format_double(stats.total) << ','
        << stats.steps << '\n';
  }
  return out.str();
}

RunRecord parse_metrics_csv(const std::string& text) {
  RunRecord record;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("malformed metrics row: " + line);
    record.metrics.push_back(std::stod(cells[1]));
    TrainStats stats;
    stats.prior = std::stod(cells[2]);
    stats.policy = std::stod(cells[3]);
    stats.decoder = std::stod(cells[4]);
    stats.total = std::stod(cells[5]);
    stats.steps = std::stoi(cells[6]);
    stats.skipped = stats.steps == 0;
    record.losses.push_back(stats);
  }
  return record;
}

fs::path write_run(const RunRecord& record, const fs::path& dir) {
  const fs::path cell = dir / record.environment / to_string(record.algorithm);
  const std::string stem = "seed_" + std::to_string(record.seed);
  const fs::path csv = cell / (stem + ".csv");
  write_file(csv, metrics_csv(record));
  json meta = {{"environment", record.environment},
               {"algorithm", to_string(record.algorithm)},
               {"seed", record.seed},
               {"config_hash", record.config_hash},
               {"interactions", record.metrics.size()},
               {"wall_seconds", record.wall_seconds},
               {"failed", record.failed},
               {"failure", record.failure}};
  write_file(cell / (stem + ".json"), meta.dump(2) + "\n");
  if (record.algorithm == Algorithm::kBayes) {
    write_file(cell / (stem + "_bayes.csv"), bayes_log_csv(record.bayes_log));
  }
  return csv;
}

std::vector<RunRecord> read_runs(const fs::path& dir) {
  std::vector<fs::path> sidecars;
  if (!fs::exists(dir)) throw std::runtime_error("no such directory: " + dir.string());
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("seed_", 0) == 0 &&
        entry.path().extension() == ".json") {
      sidecars.push_back(entry.path());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<RunRecord> records;
  for (const auto& path : sidecars) {
    const json meta = json::parse(read_file(path));
    fs::path csv = path;
    csv.replace_extension(".csv");
    RunRecord record = parse_metrics_csv(read_file(csv));
    record.environment = meta.at("environment").get<std::string>();
    record.algorithm = algorithm_from_string(meta.at("algorithm").get<std::string>());
    record.seed = meta.at("seed").get<std::uint64_t>();
    record.config_hash = meta.at("config_hash").get<std::string>();
    record.wall_seconds = meta.value("wall_seconds", 0.0);
    record.failed = meta.value("failed", false);
    record.failure = meta.value("failure", std::string());
    records.push_back(std::move(record));
  }
  return records;
}

// --------------------------------------------------------------- aggregation

Summary aggregate(const std::vector<RunRecord>& records, int smoothing_window,
                  int last_window) {
  if (records.empty()) throw UsageError("aggregate needs at least one record");
  const RunRecord& first = records.front();
  for (const auto& r : records) {
    if (r.environment != first.environment || r.algorithm != first.algorithm ||
        r.config_hash != first.config_hash ||
        r.metrics.size() != first.metrics.size()) {
      throw UsageError("aggregate: records in a cell come from different configs");
    }
  }
  Summary s;
  s.environment = first.environment;
  s.algorithm = first.algorithm;
  s.config_hash = first.config_hash;
  s.last_window = last_window;
  s.smoothing_window = smoothing_window;
  const std::size_t length = first.metrics.size();
  for (const auto& r : records) s.seeds.push_back(r.seed);
  for (std::size_t i = 0; i < length; ++i) {
    std::vector<double> column;
    column.reserve(records.size());
    for (const auto& r : records) column.push_back(r.metrics[i]);
    s.mean.push_back(mean(column));
    s.stddev.push_back(sample_std(column));
  }
  s.smoothed = moving_average(s.mean, smoothing_window);
  const std::size_t window = std::min<std::size_t>(last_window, length);
  for (const auto& r : records) {
    std::vector<double> tail(r.metrics.end() - window, r.metrics.end());
    s.seed_window_means.push_back(mean(tail));
  }
  s.window_mean = mean(s.seed_window_means);
  return s;
}

std::vector<Summary> aggregate_all(const std::vector<RunRecord>& records,
                                   int smoothing_window, int last_window) {
  std::map<std::pair<std::string, std::string>, std::vector<RunRecord>> cells;
  for (const auto& r : records) {
    cells[{r.environment, to_string(r.algorithm)}].push_back(r);
  }
  std::vector<Summary> out;
  for (auto& [key, cell] : cells) {
    std::sort(cell.begin(), cell.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.seed < b.seed; });
    out.push_back(aggregate(cell, smoothing_window, last_window));
  }
  return out;
}

Comparison compare(const Summary& a, const Summary& b) {
  if (a.seed_window_means.size() < 3 || b.seed_window_means.size() < 3) {
    throw UsageError("insufficient seeds");
  }
  Comparison c;
  c.environment = a.environment;
  c.a = a.algorithm;
  c.b = b.algorithm;
  c.mean_a = a.window_mean;
  c.mean_b = b.window_mean;
  c.p_value = mann_whitney_less(a.seed_window_means, b.seed_window_means);
  return c;
}

// ------------------------------------------------------------------- outputs

std::string summary_csv(const Summary& s) {
  std::ostringstream out;
  out << "interaction,mean,std,smoothed\n";
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    out << i << ',' << format_double(s.mean[i]) << ',' << format_double(s.stddev[i])
        << ',' << format_double(s.smoothed[i]) << '\n';
  }
  return out.str();
}

namespace {

const char* curve_color(Algorithm a) {
  switch (a) {
    case Algorithm::kBayes: return "#7f7f7f";
    case Algorithm::kProp: return "#9467bd";
    case Algorithm::kConv: return "#8c564b";
    case Algorithm::kLimit: return "#1f77b4";
    case Algorithm::kOursP: return "#ff7f0e";
    case Algorithm::kOursC: return "#d62728";
  }
  return "#000000";
}

std::string fixed(double v) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(2);
  ss << v;
  return ss.str();
}

}  // namespace

std::string plot_svg(const std::vector<Summary>& summaries,
                     const std::string& environment) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 140,
                   kTop = 30, kBottom = 50;
  std::vector<const Summary*> cells;
  double y_max = 0.0;
  std::size_t x_max = 1;
  for (const auto& s : summaries) {
    if (s.environment != environment) continue;
    cells.push_back(&s);
    for (double v : s.smoothed) y_max = std::max(y_max, v);
    x_max = std::max(x_max, s.smoothed.size());
  }
  if (y_max <= 0.0) y_max = 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) {
    return kLeft + plot_w * static_cast<double>(i) / std::max<double>(1.0, x_max - 1.0);
  };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n"
      << "  <text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << environment << " (moving average)</text>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
      << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "  <text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
      << "interaction</text>\n"
      << "  <text x=\"" << kLeft - 8 << "\" y=\"" << kTop + 4
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
      << fixed(y_max) << "</text>\n"
      << "  <text x=\"" << kLeft - 8 << "\" y=\"" << kTop + plot_h
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">0</text>\n";
  int legend_row = 0;
  for (const Summary* s : cells) {
    out << "  <polyline fill=\"none\" stroke=\"" << curve_color(s->algorithm)
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s->smoothed.size(); ++i) {
      if (i) out << ' ';
      out << fixed(px(i)) << ',' << fixed(py(s->smoothed[i]));
    }
    out << "\"/>\n";
    const double ly = kTop + 14.0 * legend_row++;
    out << "  <text x=\"" << kLeft + plot_w + 10 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << curve_color(s->algorithm) << "\">" << to_string(s->algorithm)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<fs::path> emit_outputs(const std::vector<Summary>& summaries,
                                   const fs::path& dir) {
  std::vector<fs::path> written;
  std::set<std::string> environments;
  for (const auto& s : summaries) {
    const fs::path path = dir / (s.environment + "_" + to_string(s.algorithm) + ".csv");
    write_file(path, summary_csv(s));
    written.push_back(path);
    environments.insert(s.environment);
  }

  std::ostringstream table;
  table << "environment,algorithm_a,algorithm_b,window_mean_a,window_mean_b,p_value\n";
  for (const auto& env : environments) {
    const Summary* ours = nullptr;
    for (const auto& s : summaries) {
      if (s.environment == env && s.algorithm == Algorithm::kOursC) ours = &s;
    }
    if (!ours) continue;
    for (const auto& s : summaries) {
      if (s.environment != env || &s == ours) continue;
      std::string p = "insufficient seeds";
      if (ours->seed_window_means.size() >= 3 && s.seed_window_means.size() >= 3) {
        p = format_double(compare(*ours, s).p_value);
      }
      table << env << ",ours-c," << to_string(s.algorithm) << ','
            << format_double(ours->window_mean) << ',' << format_double(s.window_mean)
            << ',' << p << '\n';
    }
  }
  const fs::path table_path = dir / "comparison.csv";
  write_file(table_path, table.str());
  written.push_back(table_path);

  for (const auto& env : environments) {
    const fs::path svg = dir / (env + ".svg");
    write_file(svg, plot_svg(summaries, env));
    written.push_back(svg);
  }

  json meta = json::object();
  meta["smoothing"] = "trailing moving average of the per-interaction seed mean";
  meta["error_band"] = "sample standard deviation across seeds (std column)";
  meta["test"] = "one-sided Mann-Whitney U on per-seed last-window means";
  json cells = json::array();
  for (const auto& s : summaries) {
    cells.push_back({{"environment", s.environment},
                     {"algorithm", to_string(s.algorithm)},
                     {"config_hash", s.config_hash},
                     {"seeds", s.seeds},
                     {"smoothing_window", s.smoothing_window},
                     {"last_window", s.last_window},
                     {"window_mean", s.window_mean}});
  }
  meta["cells"] = cells;
  const fs::path meta_path = dir / "metadata.json";
  write_file(meta_path, meta.dump(2) + "\n");
  written.push_back(meta_path);
  return written;
}

}  // namespace coadapt

#include "coadapt/session_service.hpp"

#include <cmath>
#include <sstream>

#include "httplib.h"

namespace coadapt {

using nlohmann::json;

SessionSeeds session_seeds(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x5e55U};
  std::mt19937_64 rng(seq);
  SessionSeeds s;
  s.agent = rng();
  s.env = rng();
  s.algorithm_choice = rng();
  return s;
}

ExperimentConfig live_config(EnvKind kind) {
  ExperimentConfig config = ExperimentConfig::defaults_for(kind);
  if (kind == EnvKind::kTreasure) config.env.dimension = 2;
  return config;
}

// ------------------------------------------------------------- LiveSession

LiveSession::LiveSession(std::string id, ExperimentConfig config,
                         Algorithm algorithm, std::uint64_t seed)
    : id_(std::move(id)),
      config_(std::move(config)),
      algorithm_(algorithm),
      config_hash_(config_hash(config_, algorithm)),
      env_(make_environment(config_.env)),
      env_rng_(session_seeds(seed).env) {
  agent_ = make_agent(algorithm_, *env_, config_.agent, session_seeds(seed).agent);
  begin_interaction();
}

void LiveSession::begin_interaction() {
  auto [s, theta] = env_->reset(env_rng_);
  state_ = std::move(s);
  theta_ = std::move(theta);
  t_ = 0;
  done_ = false;
  episode_ = Episode{theta_, {}};
  pending_log_.clear();
  signal_ = agent_->signal(state_, theta_);
}

json LiveSession::observation() const {
  return {{"session_id", id_},
          {"environment", env_->name()},
          {"state", vector_to_json(state_)},
          {"signal", vector_to_json(signal_)},
          {"t", t_},
          {"horizon", env_->horizon()},
          {"interaction", interaction_},
          {"done", done_}};
}

json LiveSession::step(const json& body) {
  if (done_) throw ServiceError(409, "interaction finished; must reset");
  if (!body.is_object() || !body.contains("action")) {
    throw ServiceError(400, "body must be an object with an 'action' array");
  }
  const json& raw = body.at("action");
  std::vector<double> values;
  if (raw.is_number()) {
    values.push_back(raw.get<double>());
  } else if (raw.is_array()) {
    for (const auto& v : raw) {
      if (!v.is_number()) throw ServiceError(400, "action entries must be numbers");
      values.push_back(v.get<double>());
    }
  } else {
    throw ServiceError(400, "action must be a number or an array of numbers");
  }
  if (static_cast<int>(values.size()) != env_->action_dim()) {
    throw ServiceError(400, "action must have " + std::to_string(env_->action_dim()) +
                                " components");
  }
  Action action = Eigen::Map<const Vector>(values.data(), values.size());
  if (!action.allFinite()) throw ServiceError(400, "action must be finite");
  const double bound = env_->action_bound();
  const bool clamped = (action.array().abs() > bound).any();
  action = action.cwiseMax(-bound).cwiseMin(bound);

  Step step;
  step.s = state_;
  step.a = action;
  step.x = signal_;
  step.robot = env_->robot_action(theta_, state_);
  step.next = env_->transition(state_, action, step.robot);
  InteractionTuple tuple{step.s, step.a, step.x, theta_, interaction_, t_};
  agent_->record(tuple);
  pending_log_.push_back(std::move(tuple));
  state_ = step.next;
  episode_.steps.push_back(std::move(step));
  ++t_;

  json response;
  if (t_ == env_->horizon()) {
    done_ = true;
    const double metric = env_->metric(episode_);
    agent_->finish_interaction(episode_, metric);
    metrics_.push_back(metric);
    completed_log_.insert(completed_log_.end(), pending_log_.begin(),
                          pending_log_.end());
    pending_log_.clear();
    signal_ = agent_->signal(state_, theta_);
    response = observation();
    response["metric"] = metric;
    response["theta"] = vector_to_json(theta_);
  } else {
    signal_ = agent_->signal(state_, theta_);
    response = observation();
  }
  if (clamped) response["notice"] = "action clamped to [-" + std::to_string(bound) +
                                    ", " + std::to_string(bound) + "]";
  return response;
}

json LiveSession::reset_interaction() {
  if (!done_) throw ServiceError(409, "interaction still in progress");
  ++interaction_;
  begin_interaction();
  return observation();
}

json LiveSession::metrics() const {
  return {{"session_id", id_},
          {"environment", env_->name()},
          {"algorithm", to_string(algorithm_)},
          {"config_hash", config_hash_},
          {"interaction", interaction_},
          {"metrics", metrics_}};
}

std::string LiveSession::log_jsonl() const {
  std::ostringstream out;
  for (const auto& tuple : completed_log_) out << to_json_line(tuple).dump() << '\n';
  return out.str();
}

// ----------------------------------------------------------- SessionService

json SessionService::create_session(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "body must be a JSON object");
  EnvKind kind;
  try {
    kind = env_kind_from_string(body.value("environment", std::string()));
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }
  ExperimentConfig config = live_config(kind);
  if (body.contains("config")) {
    json merged = to_json(config);
    merged.merge_patch(body.at("config"));
    merged["environment"] = to_string(kind);
    try {
      config = config_from_json(merged);
    } catch (const std::exception& e) {
      throw ServiceError(400, std::string("invalid config: ") + e.what());
    }
  }

  std::string id;
  std::uint64_t seed;
  {
    std::unique_lock lock(sessions_mutex_);
    const std::uint64_t n = next_id_++;
    id = "s" + std::to_string(n);
    seed = body.contains("seed") ? body.at("seed").get<std::uint64_t>()
                                 : base_seed_ + n;
  }
  Algorithm algorithm;
  if (body.contains("algorithm") && !body.at("algorithm").is_null()) {
    try {
      algorithm = algorithm_from_string(body.at("algorithm").get<std::string>());
    } catch (const std::exception& e) {
      throw ServiceError(400, e.what());
    }
  } else {
    // Participants are not told which algorithm they face.
    std::mt19937_64 rng(session_seeds(seed).algorithm_choice);
    std::uniform_int_distribution<std::size_t> pick(0, all_algorithms().size() - 1);
    algorithm = all_algorithms()[pick(rng)];
  }

  auto session = std::make_shared<LiveSession>(id, std::move(config), algorithm, seed);
  json response = session->observation();
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, std::move(session));
  }
  return response;
}

std::shared_ptr<LiveSession> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "no session '" + id + "'");
  return it->second;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

json SessionService::step(const std::string& id, const json& body) {
  auto session = find(id);
  std::lock_guard lock(session->mutex());
  return session->step(body);
}

json SessionService::reset_interaction(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex());
  return session->reset_interaction();
}

json SessionService::session_metrics(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex());
  return session->metrics();
}

std::string SessionService::session_log(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex());
  return session->log_jsonl();
}

namespace {

template <typename Fn>
void respond(httplib::Response& res, Fn&& fn) {
  try {
    json body = fn();
    res.status = 200;
    res.set_content(body.dump(), "application/json");
  } catch (const ServiceError& e) {
    res.status = e.status();
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  } catch (const json::exception& e) {
    res.status = 400;
    res.set_content(json{{"error", std::string("malformed JSON: ") + e.what()}}.dump(),
                    "application/json");
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

void SessionService::register_routes(httplib::Server& server) {
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return create_session(parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/step)",
              [this](const httplib::Request& req, httplib::Response& res) {
                respond(res, [&] { return step(req.matches[1], parse_body(req)); });
              });
  server.Post(R"(/sessions/([^/]+)/reset)",
              [this](const httplib::Request& req, httplib::Response& res) {
                respond(res, [&] { return reset_interaction(req.matches[1]); });
              });
  server.Get(R"(/sessions/([^/]+)/metrics)",
             [this](const httplib::Request& req, httplib::Response& res) {
               respond(res, [&] { return session_metrics(req.matches[1]); });
             });
  server.Get(R"(/sessions/([^/]+)/log)",
             [this](const httplib::Request& req, httplib::Response& res) {
               try {
                 res.set_content(session_log(req.matches[1]), "application/x-ndjson");
               } catch (const ServiceError& e) {
                 res.status = e.status();
                 res.set_content(json{{"error", e.what()}}.dump(), "application/json");
               }
             });
}

}  // namespace coadapt

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "coadapt/agents.hpp"
#include "coadapt/environment.hpp"
#include "coadapt/experiment.hpp"

namespace httplib {
class Server;
}

namespace coadapt {

// Error carrying an HTTP status for the service layer.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Seeds a live session derives from its base seed. An in-process replay
// with the same values reproduces the session exactly.
struct SessionSeeds {
  std::uint64_t agent = 0;
  std::uint64_t env = 0;
  std::uint64_t algorithm_choice = 0;
};
SessionSeeds session_seeds(std::uint64_t seed);

// Live-session configuration for an environment: Treasure is 2-D.
ExperimentConfig live_config(EnvKind kind);

class LiveSession {
 public:
  LiveSession(std::string id, ExperimentConfig config, Algorithm algorithm,
              std::uint64_t seed);

  nlohmann::json observation() const;
  nlohmann::json step(const nlohmann::json& body);
  nlohmann::json reset_interaction();
  nlohmann::json metrics() const;
  // Tuples of completed interactions, one JSON object per line.
  std::string log_jsonl() const;

  const std::string& id() const { return id_; }
  Algorithm algorithm() const { return algorithm_; }
  const InterfaceAgent& agent() const { return *agent_; }
  std::mutex& mutex() { return mutex_; }

 private:
  void begin_interaction();

  std::string id_;
  ExperimentConfig config_;
  Algorithm algorithm_;
  std::string config_hash_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<InterfaceAgent> agent_;
  std::mt19937_64 env_rng_;
  std::int64_t interaction_ = 0;
  int t_ = 0;
  bool done_ = false;
  State state_;
  HiddenInfo theta_;
  Signal signal_;
  Episode episode_;
  std::vector<double> metrics_;
  std::vector<InteractionTuple> completed_log_;
  std::vector<InteractionTuple> pending_log_;
  std::mutex mutex_;
};

// Owns live sessions. Creation and lookup are thread-safe; each session's
// requests are serialized on that session's own mutex.
class SessionService {
 public:
  explicit SessionService(std::uint64_t base_seed = 0) : base_seed_(base_seed) {}

  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json step(const std::string& id, const nlohmann::json& body);
  nlohmann::json reset_interaction(const std::string& id);
  nlohmann::json session_metrics(const std::string& id);
  std::string session_log(const std::string& id);

  std::shared_ptr<LiveSession> find(const std::string& id) const;
  std::size_t session_count() const;

  // Registers the JSON endpoints on `server`.
  void register_routes(httplib::Server& server);

 private:
  std::uint64_t base_seed_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace coadapt

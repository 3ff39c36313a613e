#pragma once

// Live annotation sessions behind an HTTP+JSON facade.
//
// Endpoints (all bodies JSON, errors as {"error", "detail"}):
//   POST /sessions                 create a session, returns the init batch
//   GET  /sessions/{id}/batch      pending items with |decision value|
//   POST /sessions/{id}/labels     {"labels": [{"index", "label"}]}
//   GET  /sessions/{id}/status     progress, PA, agreements, stopped_at
//   GET  /sessions/{id}/export     labeled LIBSVM, model text, trace lines
//   GET  /health
//
// Every session lives in <state_dir>/<id>/ as dataset.svm (+ texts.json) and
// an append-only events.jsonl; sessions are rebuilt from the log on start.

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "alsvm/active_learner.hpp"

namespace httplib {
class Server;
}

namespace alsvm {

struct ServiceResponse {
  int status = 200;
  /// Serialized JSON.
  std::string body;
};

struct ServiceOptions {
  std::filesystem::path state_dir = "alsvm-state";
  /// Defaults for settings a POST /sessions body leaves out. Unset sizes
  /// scale with the pool (AlConfig::defaults_for).
  std::optional<std::size_t> init_size;
  std::optional<std::size_t> batch_size;
  std::vector<double> pa_grid = AlConfig{}.pa_grid;
  double c_minus = 1.0;
  StopConfig stop;
  bool halt_on_stop = true;
  /// Retrain on a worker thread; false trains inside the label request.
  bool background_training = true;
};

enum class Lifecycle { AwaitingLabels, Training, Stopped, Completed };

const char* to_string(Lifecycle lifecycle) noexcept;

class AnnotationService {
 public:
  /// Creates `state_dir` if needed and replays every session found there.
  /// Sessions whose log cannot be replayed are skipped and listed in
  /// `replay_errors()`.
  explicit AnnotationService(ServiceOptions options);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  ServiceResponse create_session(std::string_view body);
  ServiceResponse get_batch(const std::string& id);
  ServiceResponse submit_labels(const std::string& id, std::string_view body);
  ServiceResponse get_status(const std::string& id);
  ServiceResponse export_session(const std::string& id);
  ServiceResponse health() const;

  /// Blocks until no retraining is in flight for `id` (all sessions if empty).
  void wait_idle(const std::string& id = {});

  std::vector<std::string> session_ids() const;
  const std::vector<std::string>& replay_errors() const noexcept { return replay_errors_; }
  const ServiceOptions& options() const noexcept { return options_; }

  struct Session;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void start_training(const std::shared_ptr<Session>& s, std::unique_lock<std::mutex>& lock);
  void load_sessions();

  ServiceOptions options_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::vector<std::string> replay_errors_;
};

/// Registers the endpoints on `server`; `ui_dir`, when given, is served at /.
void mount(httplib::Server& server, AnnotationService& service,
           const std::optional<std::filesystem::path>& ui_dir = std::nullopt);

}  // namespace alsvm

#include "alsvm/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "alsvm/errors.hpp"

namespace alsvm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Bad request content that deserves a specific status code.
struct RequestError : std::runtime_error {
  RequestError(int status, std::string error, const std::string& detail)
      : std::runtime_error(detail), status(status), error(std::move(error)) {}
  int status;
  std::string error;
};

ServiceResponse reply(int status, const json& body) { return {status, body.dump()}; }

ServiceResponse error_reply(int status, const std::string& error, const std::string& detail) {
  return reply(status, json{{"error", error}, {"detail", detail}});
}

ServiceResponse not_found(const std::string& id) {
  return error_reply(404, "not_found", "no session '" + id + "'");
}

json parse_body(std::string_view body) {
  try {
    auto j = json::parse(body.begin(), body.end());
    if (!j.is_object()) throw RequestError(400, "bad_request", "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw RequestError(400, "bad_request", std::string("malformed JSON: ") + e.what());
  }
}

std::string new_session_id() {
  static std::mutex m;
  static std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

std::string feature_text(const SparseVector& x) {
  std::string out;
  for (const auto& f : x) {
    if (!out.empty()) out += ' ';
    out += std::to_string(f.index + 1) + ':';
    std::ostringstream v;
    v << f.value;
    out += v.str();
  }
  return out;
}

// Session settings as stored in the "created" event.
struct SessionSettings {
  AlConfig al;
  StopConfig stop;
  Strategy strategy = Strategy::ClosestInitPa;

  json to_json() const {
    return {{"init_size", al.init_size},
            {"batch_size", al.batch_size},
            {"pa_grid", al.pa_grid},
            {"include_class_ratio", al.include_class_ratio},
            {"pa_cv_folds", al.pa_cv_folds},
            {"c_minus", al.c_minus},
            {"tolerance", al.tolerance},
            {"seed", al.seed},
            {"halt_on_stop", al.halt_on_stop},
            {"stop_set_size", stop.stop_set_size},
            {"stop_threshold", stop.agreement_threshold},
            {"stop_window", stop.window},
            {"stop_seed", stop.seed},
            {"strategy", to_string(strategy)}};
  }
};

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw RequestError(422, "invalid_config", std::string("field '") + key + "' has the wrong type");
  }
}

SessionSettings settings_from(const json& j, const ServiceOptions& opt, std::size_t pool_size) {
  SessionSettings s;
  const AlConfig scaled = AlConfig::defaults_for(pool_size);
  s.al.init_size = field_or(j, "init_size", opt.init_size.value_or(scaled.init_size));
  s.al.batch_size = field_or(j, "batch_size", opt.batch_size.value_or(scaled.batch_size));
  s.al.pa_grid = field_or(j, "pa_grid", opt.pa_grid);
  s.al.include_class_ratio = field_or(j, "include_class_ratio", s.al.include_class_ratio);
  s.al.pa_cv_folds = field_or(j, "pa_cv_folds", s.al.pa_cv_folds);
  s.al.c_minus = field_or(j, "c_minus", opt.c_minus);
  s.al.tolerance = field_or(j, "tolerance", s.al.tolerance);
  s.al.seed = field_or<std::uint64_t>(j, "seed", 0);
  s.al.halt_on_stop = field_or(j, "halt_on_stop", opt.halt_on_stop);
  s.stop = opt.stop;
  s.stop.stop_set_size = field_or(j, "stop_set_size", s.stop.stop_set_size);
  s.stop.agreement_threshold = field_or(j, "stop_threshold", s.stop.agreement_threshold);
  s.stop.window = field_or(j, "stop_window", s.stop.window);
  s.stop.seed = field_or(j, "stop_seed", s.al.seed);
  const auto strategy = field_or<std::string>(j, "strategy", "AL");
  if (strategy == "AL") s.strategy = Strategy::ClosestInitPa;
  else if (strategy == "Random") s.strategy = Strategy::Random;
  else throw RequestError(422, "invalid_config", "strategy must be \"AL\" or \"Random\"");
  try {
    s.al.validate();
    s.stop.validate();
  } catch (const std::invalid_argument& e) {
    throw RequestError(422, "invalid_config", e.what());
  }
  if (s.al.init_size > pool_size)
    throw RequestError(422, "invalid_config", "init_size " + std::to_string(s.al.init_size) +
                                                  " exceeds pool size " + std::to_string(pool_size));
  return s;
}

using Submission = std::vector<std::pair<Index, int>>;

}  // namespace

const char* to_string(Lifecycle lifecycle) noexcept {
  switch (lifecycle) {
    case Lifecycle::AwaitingLabels: return "awaiting_labels";
    case Lifecycle::Training: return "training";
    case Lifecycle::Stopped: return "stopped";
    case Lifecycle::Completed: return "completed";
  }
  return "unknown";
}

struct AnnotationService::Session {
  std::string id;
  fs::path dir;
  std::unique_ptr<Dataset> pool;
  SessionSettings settings;
  std::unique_ptr<ActiveLearner> learner;
  std::ofstream log;
  std::size_t submissions = 0;
  Submission last_submission;
  bool training = false;
  std::optional<std::string> failure;
  std::thread worker;
  std::mutex mutex;
  std::condition_variable idle;

  Lifecycle lifecycle() const {
    if (training) return Lifecycle::Training;
    if (failure) return Lifecycle::Completed;
    switch (learner->phase()) {
      case ActiveLearner::Phase::AwaitingLabels: return Lifecycle::AwaitingLabels;
      case ActiveLearner::Phase::ReadyToTrain: return Lifecycle::Training;
      case ActiveLearner::Phase::Stopped: return Lifecycle::Stopped;
      case ActiveLearner::Phase::Completed: return Lifecycle::Completed;
    }
    return Lifecycle::Completed;
  }

  void append(const json& event) {
    log << event.dump() << '\n';
    log.flush();
    if (!log) throw std::runtime_error("failed to write event log in " + dir.string());
  }

  // Events describing what `after` did beyond `records`.
  void log_progress(const std::vector<IterationRecord>& records, const ActiveLearner& after) {
    for (const auto& rec : records) {
      json e = {{"event", "model_trained"},
                {"iteration", rec.iteration},
                {"labeled_count", rec.labeled_count},
                {"pa", rec.pa},
                {"agreement", rec.agreement ? json(*rec.agreement) : json(nullptr)},
                {"stop_signal", rec.stop_signal}};
      append(e);
    }
    switch (after.phase()) {
      case ActiveLearner::Phase::AwaitingLabels:
        append({{"event", "batch_issued"},
                  {"iteration", after.iteration()},
                  {"indices", after.current_batch()}});
        break;
      case ActiveLearner::Phase::Stopped:
        append({{"event", "stopped"}, {"stopped_at", *after.trace().stopped_at}});
        break;
      case ActiveLearner::Phase::Completed:
        append({{"event", "completed"}});
        break;
      case ActiveLearner::Phase::ReadyToTrain:
        break;
    }
  }
};

namespace {

using Session = AnnotationService::Session;

// Trains until labels are needed again. Returns the trained iterations.
std::vector<IterationRecord> train_pending(ActiveLearner& learner) {
  std::vector<IterationRecord> out;
  while (learner.phase() == ActiveLearner::Phase::ReadyToTrain)
    if (auto rec = learner.advance()) out.push_back(*rec);
  return out;
}

json items_of(const Session& s) {
  json items = json::array();
  if (s.training) return items;
  const SvmModel* model = s.learner->model();
  for (Index i : s.learner->pending()) {
    const auto& x = (*s.pool)[i].features;
    json item = {{"index", i},
                 {"text", s.pool->has_texts() ? std::string(s.pool->text(i)) : feature_text(x)},
                 {"abs_decision_value", model ? json(std::abs(decision_value(*model, x))) : json(nullptr)}};
    items.push_back(std::move(item));
  }
  return items;
}

json batch_json(const Session& s) {
  json items = items_of(s);
  json pending = json::array();
  for (const auto& it : items) pending.push_back(it["index"]);
  const auto lc = s.lifecycle();
  return {{"session_id", s.id},
          {"lifecycle", to_string(lc)},
          {"iteration", s.learner->iteration()},
          {"stopped", lc == Lifecycle::Stopped},
          {"pending", pending},
          {"items", items}};
}

}  // namespace

// --- service ----------------------------------------------------------------------

AnnotationService::AnnotationService(ServiceOptions options) : options_(std::move(options)) {
  fs::create_directories(options_.state_dir);
  load_sessions();
}

AnnotationService::~AnnotationService() {
  std::lock_guard lock(sessions_mutex_);
  for (auto& [id, s] : sessions_)
    if (s->worker.joinable()) s->worker.join();
}

std::shared_ptr<AnnotationService::Session> AnnotationService::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> AnnotationService::session_ids() const {
  std::lock_guard lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void AnnotationService::wait_idle(const std::string& id) {
  std::vector<std::shared_ptr<Session>> targets;
  if (id.empty()) {
    std::lock_guard lock(sessions_mutex_);
    for (const auto& [k, s] : sessions_) targets.push_back(s);
  } else if (auto s = find(id)) {
    targets.push_back(s);
  }
  for (const auto& s : targets) {
    std::unique_lock lock(s->mutex);
    s->idle.wait(lock, [&] { return !s->training; });
  }
}

void AnnotationService::start_training(const std::shared_ptr<Session>& s,
                                       std::unique_lock<std::mutex>& lock) {
  s->training = true;
  if (s->worker.joinable()) s->worker.join();
  auto copy = std::make_unique<ActiveLearner>(*s->learner);

  auto work = [s](std::unique_ptr<ActiveLearner> learner, std::unique_lock<std::mutex>& held) {
    std::vector<IterationRecord> records;
    std::optional<std::string> failure;
    held.unlock();
    try {
      records = train_pending(*learner);
    } catch (const std::exception& e) {
      failure = e.what();
    }
    held.lock();
    if (failure) {
      s->failure = failure;
      s->append({{"event", "failed"}, {"detail", *failure}});
    } else {
      s->log_progress(records, *learner);
      s->learner = std::move(learner);
    }
    s->training = false;
    s->idle.notify_all();
  };

  if (!options_.background_training) {
    work(std::move(copy), lock);
    return;
  }
  s->worker = std::thread([s, work, learner = std::move(copy)]() mutable {
    std::unique_lock held(s->mutex);
    try {
      work(std::move(learner), held);
    } catch (...) {
      s->training = false;
      s->idle.notify_all();
    }
  });
}

ServiceResponse AnnotationService::create_session(std::string_view body) {
  try {
    const json req = parse_body(body);
    Dataset data;
    try {
      if (req.contains("data") && req["data"].is_string()) {
        data = parse_libsvm(req["data"].get<std::string>());
      } else if (req.contains("data_path") && req["data_path"].is_string()) {
        const auto path = req["data_path"].get<std::string>();
        std::ifstream in(path);
        if (!in) throw RequestError(422, "invalid_data", "cannot read " + path);
        data = parse_libsvm(in);
      } else {
        throw RequestError(422, "invalid_data", "provide \"data\" (LIBSVM text) or \"data_path\"");
      }
    } catch (const ParseError& e) {
      return reply(422, json{{"error", "invalid_data"}, {"detail", e.what()}, {"line", e.line()}});
    }
    if (data.empty()) throw RequestError(422, "invalid_data", "dataset is empty");
    std::vector<std::string> texts;
    if (req.contains("texts")) {
      texts = field_or<std::vector<std::string>>(req, "texts", {});
      if (texts.size() != data.size())
        throw RequestError(422, "invalid_data", "texts must have one entry per instance");
      data = Dataset(std::vector<LabeledInstance>(data.instances().begin(), data.instances().end()),
                     data.dimension(), texts);
    }
    const auto settings = settings_from(req, options_, data.size());

    auto s = std::make_shared<Session>();
    do {
      s->id = new_session_id();
    } while (find(s->id) || fs::exists(options_.state_dir / s->id));
    s->dir = options_.state_dir / s->id;
    s->pool = std::make_unique<Dataset>(std::move(data));
    s->settings = settings;
    s->learner = std::make_unique<ActiveLearner>(*s->pool, settings.al, settings.stop, settings.strategy);

    fs::create_directories(s->dir);
    {
      std::ofstream out(s->dir / "dataset.svm");
      write_libsvm(out, *s->pool);
      if (!out) throw std::runtime_error("failed to write " + (s->dir / "dataset.svm").string());
    }
    if (s->pool->has_texts()) {
      std::ofstream out(s->dir / "texts.json");
      out << json(texts).dump() << '\n';
    }
    s->log.open(s->dir / "events.jsonl", std::ios::app);
    s->append({{"event", "created"},
               {"session_id", s->id},
               {"pool_size", s->pool->size()},
               {"dimension", s->pool->dimension()},
               {"config", settings.to_json()}});
    s->append({{"event", "batch_issued"}, {"iteration", 0}, {"indices", s->learner->current_batch()}});

    json out = batch_json(*s);
    out["pool_size"] = s->pool->size();
    out["config"] = settings.to_json();
    {
      std::lock_guard lock(sessions_mutex_);
      sessions_[s->id] = s;
    }
    return reply(201, out);
  } catch (const RequestError& e) {
    return error_reply(e.status, e.error, e.what());
  } catch (const std::invalid_argument& e) {
    return error_reply(422, "invalid_data", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

ServiceResponse AnnotationService::get_batch(const std::string& id) {
  auto s = find(id);
  if (!s) return not_found(id);
  std::lock_guard lock(s->mutex);
  return reply(200, batch_json(*s));
}

ServiceResponse AnnotationService::submit_labels(const std::string& id, std::string_view body) {
  auto s = find(id);
  if (!s) return not_found(id);
  try {
    const json req = parse_body(body);
    if (!req.contains("labels") || !req["labels"].is_array())
      throw RequestError(422, "invalid_labels", "\"labels\" must be an array of {index, label}");
    Submission sub;
    for (const auto& item : req["labels"]) {
      if (!item.is_object() || !item.contains("index") || !item.contains("label") ||
          !item["index"].is_number_integer() || !item["label"].is_number_integer())
        throw RequestError(422, "invalid_labels", "each entry needs integer \"index\" and \"label\"");
      const auto idx = item["index"].get<long long>();
      const auto lab = item["label"].get<int>();
      if (lab != 1 && lab != -1) throw RequestError(422, "invalid_labels", "labels must be +1 or -1");
      if (idx < 0) throw RequestError(409, "not_pending", "index " + std::to_string(idx) + " is not pending");
      sub.emplace_back(static_cast<Index>(idx), lab);
    }
    if (sub.empty()) throw RequestError(422, "invalid_labels", "no labels submitted");
    std::sort(sub.begin(), sub.end());
    for (std::size_t k = 1; k < sub.size(); ++k)
      if (sub[k].first == sub[k - 1].first)
        throw RequestError(422, "invalid_labels", "index " + std::to_string(sub[k].first) + " given twice");

    std::unique_lock lock(s->mutex);
    if (sub == s->last_submission) {
      json out = batch_json(*s);
      out["accepted"] = 0;
      out["duplicate"] = true;
      return reply(200, out);
    }
    for (const auto& [i, y] : sub)
      if (s->training || s->failure || !s->learner->awaiting(i))
        throw RequestError(409, "not_pending", "index " + std::to_string(i) + " is not pending");

    ++s->submissions;
    for (const auto& [i, y] : sub)
      s->append({{"event", "label_received"}, {"submission", s->submissions}, {"index", i}, {"label", y}});
    for (const auto& [i, y] : sub) s->learner->provide_label(i, label_from_int(y));
    s->last_submission = sub;

    if (s->learner->phase() == ActiveLearner::Phase::ReadyToTrain) start_training(s, lock);
    json out = batch_json(*s);
    out["accepted"] = sub.size();
    out["duplicate"] = false;
    out["labeled_count"] = s->learner->pool_state().labeled_count();
    return reply(200, out);
  } catch (const RequestError& e) {
    return error_reply(e.status, e.error, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

ServiceResponse AnnotationService::get_status(const std::string& id) {
  auto s = find(id);
  if (!s) return not_found(id);
  std::lock_guard lock(s->mutex);
  const auto& learner = *s->learner;
  const auto& st = learner.pool_state();
  const auto& trace = learner.trace();
  json agreements = json::array();
  for (double a : learner.stopping().recent_agreements()) agreements.push_back(a);
  json out = {
      {"session_id", s->id},
      {"lifecycle", to_string(s->lifecycle())},
      {"labeled_count", st.labeled_count()},
      {"pool_size", st.pool_size()},
      {"percent_labeled", 100.0 * static_cast<double>(st.labeled_count()) / static_cast<double>(st.pool_size())},
      {"pa", trace.pa ? json(*trace.pa) : json(nullptr)},
      {"pa_fallback", trace.pa_fallback},
      {"agreements", agreements},
      {"agreement_threshold", learner.stop_config().agreement_threshold},
      {"stop_window", learner.stop_config().window},
      {"stopped_at", trace.stopped_at ? json(*trace.stopped_at) : json(nullptr)},
      {"iteration", learner.iteration()},
      {"pending_count", s->training ? 0 : learner.pending().size()},
      {"halt_on_stop", learner.config().halt_on_stop}};
  if (s->failure) out["error"] = *s->failure;
  return reply(200, out);
}

ServiceResponse AnnotationService::export_session(const std::string& id) {
  auto s = find(id);
  if (!s) return not_found(id);
  std::lock_guard lock(s->mutex);
  const auto& st = s->learner->pool_state();
  const auto indices = st.labeled_sorted();
  std::vector<LabeledInstance> rows;
  rows.reserve(indices.size());
  for (Index i : indices) rows.push_back({(*s->pool)[i].features, *st.label_of(i)});
  const Dataset labeled(std::move(rows), s->pool->dimension());
  json model = nullptr;
  if (const SvmModel* m = s->learner->model()) {
    std::ostringstream ms;
    write_model(ms, *m);
    model = ms.str();
  }
  json out = {{"session_id", s->id},
              {"labeled_count", indices.size()},
              {"indices", indices},
              {"libsvm", to_libsvm(labeled)},
              {"model", model},
              {"trace", trace_to_string(s->learner->trace())}};
  return reply(200, out);
}

ServiceResponse AnnotationService::health() const {
  std::lock_guard lock(sessions_mutex_);
  return reply(200, json{{"status", "ok"},
                         {"service", "alsvm-annotation"},
                         {"version", "1.0.0"},
                         {"sessions", sessions_.size()},
                         {"state_dir", options_.state_dir.string()}});
}

// --- replay -----------------------------------------------------------------------

void AnnotationService::load_sessions() {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(options_.state_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "events.jsonl")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());

  for (const auto& dir : dirs) {
    try {
      auto s = std::make_shared<Session>();
      s->dir = dir;
      std::ifstream events(dir / "events.jsonl");
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(events, line)) {
        ++line_no;
        if (line.empty()) continue;
        json e;
        try {
          e = json::parse(line);
        } catch (const json::parse_error&) {
          // a torn final write is expected after a crash
          if (events.peek() == std::char_traits<char>::eof()) break;
          throw ParseError(line_no, "unreadable event");
        }
        const auto kind = e.at("event").get<std::string>();
        if (kind == "created") {
          s->id = e.at("session_id").get<std::string>();
          std::ifstream data(dir / "dataset.svm");
          Dataset pool = parse_libsvm(data);
          if (fs::exists(dir / "texts.json")) {
            std::ifstream tf(dir / "texts.json");
            const auto texts = json::parse(tf).get<std::vector<std::string>>();
            pool = Dataset(std::vector<LabeledInstance>(pool.instances().begin(), pool.instances().end()),
                           pool.dimension(), texts);
          }
          s->pool = std::make_unique<Dataset>(std::move(pool));
          const json& c = e.at("config");
          s->settings.al.init_size = c.at("init_size");
          s->settings.al.batch_size = c.at("batch_size");
          s->settings.al.pa_grid = c.at("pa_grid").get<std::vector<double>>();
          s->settings.al.include_class_ratio = c.at("include_class_ratio");
          s->settings.al.pa_cv_folds = c.at("pa_cv_folds");
          s->settings.al.c_minus = c.at("c_minus");
          s->settings.al.tolerance = c.at("tolerance");
          s->settings.al.seed = c.at("seed");
          s->settings.al.halt_on_stop = c.at("halt_on_stop");
          s->settings.stop.stop_set_size = c.at("stop_set_size");
          s->settings.stop.agreement_threshold = c.at("stop_threshold");
          s->settings.stop.window = c.at("stop_window");
          s->settings.stop.seed = c.at("stop_seed");
          s->settings.strategy = c.at("strategy") == "Random" ? Strategy::Random : Strategy::ClosestInitPa;
          s->learner = std::make_unique<ActiveLearner>(*s->pool, s->settings.al, s->settings.stop,
                                                       s->settings.strategy);
        } else if (kind == "label_received") {
          if (!s->learner) throw ParseError(line_no, "label before session creation");
          const std::size_t sub = e.at("submission");
          if (sub != s->submissions) {
            s->submissions = sub;
            s->last_submission.clear();
          }
          const Index i = e.at("index");
          const int y = e.at("label");
          s->last_submission.emplace_back(i, y);
          s->learner->provide_label(i, label_from_int(y));
          if (!s->failure) {
            try {
              train_pending(*s->learner);
            } catch (const InitError& err) {
              s->failure = err.what();
            } catch (const TrainingError& err) {
              s->failure = err.what();
            }
          }
        } else if (kind == "failed") {
          s->failure = e.at("detail").get<std::string>();
        }
      }
      if (!s->learner) throw std::runtime_error("no creation event");
      std::sort(s->last_submission.begin(), s->last_submission.end());
      // labels logged before a crash mid-training
      if (!s->failure) {
        const bool was_ready = s->learner->phase() == ActiveLearner::Phase::ReadyToTrain;
        const auto records = train_pending(*s->learner);
        s->log.open(dir / "events.jsonl", std::ios::app);
        if (was_ready) s->log_progress(records, *s->learner);
      } else {
        s->log.open(dir / "events.jsonl", std::ios::app);
      }
      sessions_[s->id] = s;
    } catch (const std::exception& e) {
      replay_errors_.push_back(dir.filename().string() + ": " + e.what());
    }
  }
}

// --- HTTP -------------------------------------------------------------------------

void mount(httplib::Server& server, AnnotationService& service,
           const std::optional<fs::path>& ui_dir) {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/sessions", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.create_session(req.body));
  });
  server.Get(R"(/sessions/([^/]+)/batch)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_batch(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/labels)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.submit_labels(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([^/]+)/status)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_status(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/export)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.export_session(req.matches[1]));
  });
  server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  if (ui_dir) server.set_mount_point("/", ui_dir->string());

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string error = res.status == 404 ? "not_found" : "http_error";
    res.set_content(json{{"error", error}, {"detail", req.method + " " + req.path}}.dump(), "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string detail = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      detail = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", "internal"}, {"detail", detail}}.dump(), "application/json");
  });
}

}  // namespace alsvm

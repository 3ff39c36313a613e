// alsvm: simulate | synth | prep | serve
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "alsvm/errors.hpp"
#include "alsvm/harness.hpp"
#include "alsvm/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

namespace fs = std::filesystem;
using namespace alsvm;

namespace {

// Accepts reals in (lo, hi].
CLI::Validator half_open(double lo, double hi) {
  return CLI::Validator(
      [lo, hi](std::string& v) -> std::string {
        double r = 0.0;
        if (!CLI::detail::lexical_cast(v, r) || !(r > lo && r <= hi))
          return "must lie in (" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
        return {};
      },
      "(" + std::to_string(lo) + "," + std::to_string(hi) + "]");
}

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by simulate and serve.
struct LoopFlags {
  std::optional<std::size_t> init_size;
  std::optional<std::size_t> batch_size;
  std::vector<double> pa_grid = AlConfig{}.pa_grid;
  double c_minus = 1.0;
  double stop_threshold = StopConfig{}.agreement_threshold;
  std::size_t stop_window = StopConfig{}.window;
  std::size_t stop_set_size = StopConfig{}.stop_set_size;

  void attach(CLI::App& cmd) {
    cmd.add_option("--init-size", init_size, "Initial labeled set size (default: max(50, 1% of pool))")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--batch-size", batch_size, "Instances queried per iteration (default: max(10, 1% of pool))")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--pa-grid", pa_grid, "PA candidates, comma separated")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--c-minus", c_minus, "Cost of negative-class slack")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--stop-threshold", stop_threshold, "Kappa each windowed agreement must reach")
        ->check(half_open(0.0, 1.0))
        ->capture_default_str();
    cmd.add_option("--stop-window", stop_window, "Consecutive agreements required to stop")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--stop-set-size", stop_set_size, "Size of the stop set")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  StopConfig stop_config() const {
    StopConfig s;
    s.agreement_threshold = stop_threshold;
    s.window = stop_window;
    s.stop_set_size = stop_set_size;
    return s;
  }
};

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return parse_libsvm(in);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

fs::path with_seed(const fs::path& path, std::uint64_t seed) {
  fs::path out = path;
  out.replace_filename(path.stem().string() + "_seed" + std::to_string(seed) + path.extension().string());
  return out;
}

// --- simulate -------------------------------------------------------------------

struct SimulateFlags {
  std::string data;
  std::string out = "curves.csv";
  std::string trace;
  std::vector<double> checkpoints = {20, 30, 40, 100};
  std::vector<std::uint64_t> seeds = {0};
  std::size_t folds = 10;
  std::size_t threads = 0;
  LoopFlags loop;
};

int cmd_simulate(const SimulateFlags& f) {
  const Dataset data = load_libsvm(f.data);
  if (data.empty()) throw DataError(f.data + ": dataset is empty");

  ExperimentConfig cfg;
  cfg.init_size = f.loop.init_size;
  cfg.batch_size = f.loop.batch_size;
  cfg.al.pa_grid = f.loop.pa_grid;
  cfg.al.c_minus = f.loop.c_minus;
  cfg.stop = f.loop.stop_config();
  cfg.checkpoints = f.checkpoints;
  cfg.folds = f.folds;
  cfg.threads = f.threads;

  const bool suffix = f.seeds.size() > 1;
  for (std::uint64_t seed : f.seeds) {
    cfg.seed = seed;
    ExperimentResult result;
    try {
      result = run_experiment(data, cfg);
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (result.folds_used() == 0) throw DataError("every fold was skipped");

    const fs::path out_path = suffix ? with_seed(f.out, seed) : fs::path(f.out);
    {
      auto out = open_out(out_path);
      write_curves(out, result.al, result.random);
    }
    if (!f.trace.empty()) {
      auto out = open_out(suffix ? with_seed(f.trace, seed) : fs::path(f.trace));
      write_traces(out, result);
    }

    std::printf("seed %llu: %zu/%zu folds -> %s\n", static_cast<unsigned long long>(seed), result.folds_used(),
                result.folds.size(), out_path.string().c_str());
    for (std::size_t r = 0; r < result.al.rows.size(); ++r)
      std::printf("  %-14s labels %6zu  F(AL) %.4f  F(Random) %.4f\n", result.al.rows[r].checkpoint.c_str(),
                  result.al.rows[r].labels_used, result.al.rows[r].metrics.f1, result.random.rows[r].metrics.f1);
  }
  return 0;
}

// --- synth ----------------------------------------------------------------------

int cmd_synth(const SynthConfig& sc, const std::string& out_path) {
  const Dataset data = generate_synthetic(sc);
  auto out = open_out(out_path);
  write_libsvm(out, data);
  std::printf("%zu instances (%zu positive), %zu features -> %s\n", data.size(),
              count_positives(data.instances()), data.dimension(), out_path.c_str());
  return 0;
}

// --- prep -----------------------------------------------------------------------

int cmd_prep(const std::string& corpus_path, const std::string& out_path, std::string vocab_path,
             int min_count) {
  std::ifstream in(corpus_path);
  if (!in) throw DataError("cannot open '" + corpus_path + "'");
  Corpus corpus;
  try {
    corpus = parse_corpus(in);
  } catch (const ParseError& e) {
    throw DataError(corpus_path + ": " + e.what());
  }
  const Vocabulary vocab = build_vocabulary(corpus.docs, min_count);
  std::vector<LabeledInstance> rows;
  rows.reserve(corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i)
    rows.push_back({vectorize(corpus.docs[i], vocab), corpus.labels[i]});
  const Dataset data(std::move(rows), vocab.size());

  if (vocab_path.empty()) vocab_path = out_path + ".vocab";
  {
    auto out = open_out(out_path);
    write_libsvm(out, data);
  }
  {
    auto out = open_out(vocab_path);
    vocab.write(out);
  }
  std::printf("%zu documents, %zu vocabulary entries -> %s, %s\n", data.size(), vocab.size(), out_path.c_str(),
              vocab_path.c_str());
  return 0;
}

// --- serve ----------------------------------------------------------------------

httplib::Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const LoopFlags& loop, const std::string& host, int port, const std::string& state_dir,
              bool halt_on_stop, const std::string& ui_dir) {
  ServiceOptions opt;
  opt.state_dir = state_dir;
  opt.init_size = loop.init_size;
  opt.batch_size = loop.batch_size;
  opt.pa_grid = loop.pa_grid;
  opt.c_minus = loop.c_minus;
  opt.stop = loop.stop_config();
  opt.halt_on_stop = halt_on_stop;

  AnnotationService service(opt);
  for (const auto& e : service.replay_errors()) std::cerr << "warning: session not restored: " << e << '\n';

  httplib::Server server;
  std::optional<fs::path> ui;
  if (!ui_dir.empty()) {
    if (!fs::is_directory(ui_dir)) throw DataError("UI directory '" + ui_dir + "' does not exist");
    ui = ui_dir;
  }
  mount(server, service, ui);
  // SO_REUSEADDR only: a second server on a busy port must fail to bind
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  if (!server.bind_to_port(host, port)) throw DataError("cannot listen on " + host + ":" + std::to_string(port));

  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("serving on http://%s:%d (state in %s, %zu sessions restored)\n", host.c_str(), port,
              state_dir.c_str(), service.session_ids().size());
  std::fflush(stdout);
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning with class-weighted linear SVMs"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "10-fold AL vs Random experiment with a simulated oracle");
  simulate->add_option("--data", sim.data, "LIBSVM pool")->required();
  simulate->add_option("--out", sim.out, "Curve CSV (suffixed _seed<N> with several seeds)")->capture_default_str();
  simulate->add_option("--trace", sim.trace, "Per-iteration JSON lines for every run");
  simulate->add_option("--checkpoints", sim.checkpoints, "Percentages of the pool")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();
  simulate->add_option("--seeds", sim.seeds, "Experiment seeds, comma separated")->delimiter(',');
  simulate->add_option("--folds", sim.folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)")->capture_default_str();
  sim.loop.attach(*simulate);

  SynthConfig sc;
  std::string synth_out = "synthetic.svm";
  auto* synth = app.add_subcommand("synth", "Write a synthetic imbalanced LIBSVM dataset");
  synth->add_option("--out", synth_out, "Output LIBSVM file")->capture_default_str();
  synth->add_option("--n", sc.n, "Instances")->check(CLI::Range(10, 100000000))->capture_default_str();
  synth->add_option("--dim", sc.dim, "Features")->check(CLI::Range(2, 100000000))->capture_default_str();
  synth->add_option("--positive-rate", sc.positive_rate, "Fraction of positives, in (0, 1)")
      ->check(CLI::Validator(
          [](std::string& v) -> std::string {
            double r = 0.0;
            if (!CLI::detail::lexical_cast(v, r) || !(r > 0.0 && r < 1.0))
              return "must lie strictly between 0 and 1";
            return {};
          },
          "(0,1)"))
      ->capture_default_str();
  synth->add_option("--separation", sc.class_separation, "Class separation (0: indistinguishable)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--density", sc.feature_density, "Mean feature density, in (0, 1]")
      ->check(half_open(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--seed", sc.seed, "Random seed")->capture_default_str();

  std::string corpus_path, prep_out = "corpus.svm", vocab_path;
  int min_count = 3;
  auto* prep = app.add_subcommand("prep", "Tokenized corpus to binary bag-of-words LIBSVM");
  prep->add_option("--data", corpus_path, "Corpus: one document per line, label first")->required();
  prep->add_option("--out", prep_out, "Output LIBSVM file")->capture_default_str();
  prep->add_option("--vocab", vocab_path, "Vocabulary file (default: <out>.vocab)");
  prep->add_option("--min-count", min_count, "Minimum token frequency")->check(CLI::PositiveNumber)->capture_default_str();

  LoopFlags serve_loop;
  std::string host = "127.0.0.1", state_dir = "alsvm-state", ui_dir;
  int port = 8080;
  bool halt_on_stop = true;
  auto* serve = app.add_subcommand("serve", "Annotation service over HTTP");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535))->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--state-dir", state_dir, "Session storage directory")->capture_default_str();
  serve->add_option("--ui-dir", ui_dir, "Static UI assets served at /");
  serve->add_flag("--halt-on-stop,!--no-halt-on-stop", halt_on_stop,
                  "Stop querying once the stopping rule fires (--halt-on-stop=false to continue)")
      ->capture_default_str();
  serve_loop.attach(*serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*synth) return cmd_synth(sc, synth_out);
    if (*prep) return cmd_prep(corpus_path, prep_out, vocab_path, min_count);
    if (*serve) return cmd_serve(serve_loop, host, port, state_dir, halt_on_stop, ui_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

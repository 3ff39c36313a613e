#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("alsvm-cli-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const std::string& stderr_file = "/dev/null") {
  const std::string cmd = std::string(ALSVM_CLI) + " " + args + " >/dev/null 2>" + stderr_file;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text, const std::string& prefix = "") {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);)
    if (line.rfind(prefix, 0) == 0) ++n;
  return n;
}

int free_port() {
  const int sock = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  bind(sock, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  getsockname(sock, reinterpret_cast<sockaddr*>(&addr), &len);
  close(sock);
  return ntohs(addr.sin_port);
}

// Background `alsvm serve`; stopped with SIGTERM.
struct Server {
  int port;
  std::string pid_file;
  Server(const TempDir& dir, const std::string& args) : port(free_port()), pid_file(dir / "serve.pid") {
    const std::string cmd = std::string(ALSVM_CLI) + " serve --port " + std::to_string(port) + " " + args +
                            " >/dev/null 2>&1 & echo $! > " + pid_file;
    REQUIRE(std::system(cmd.c_str()) == 0);
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(1);
    client.set_read_timeout(5);
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (auto r = client.Get("/health"); r && r->status == 200) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    FAIL("server did not come up");
  }
  ~Server() {
    const int pid = std::stoi(slurp(pid_file));
    kill(pid, SIGTERM);
    for (int attempt = 0; attempt < 100 && kill(pid, 0) == 0; ++attempt)
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
};

}  // namespace

TEST_CASE("synth") {
  TempDir dir;
  REQUIRE(run_cli("synth --out " + (dir / "a.svm")) == 0);
  REQUIRE(run_cli("synth --out " + (dir / "b.svm")) == 0);
  const auto a = slurp(dir / "a.svm");
  CHECK(count_lines(a) == 1000);
  CHECK(count_lines(a, "+1 ") == 176);
  CHECK(a == slurp(dir / "b.svm"));
  CHECK(run_cli("synth --positive-rate 1.5 --out " + (dir / "c.svm")) == 2);
  CHECK(run_cli("synth --positive-rate 0 --out " + (dir / "c.svm")) == 2);
  CHECK_FALSE(fs::exists(dir / "c.svm"));
  CHECK(run_cli("synth --no-such-flag") == 2);
  CHECK(run_cli("") == 2);
}

TEST_CASE("simulate writes table-shaped, deterministic CSVs") {
  TempDir dir;
  REQUIRE(run_cli("synth --n 300 --seed 3 --out " + (dir / "pool.svm")) == 0);
  const std::string base = "simulate --data " + (dir / "pool.svm") + " --folds 5 --checkpoints 20,30,40,100";
  REQUIRE(run_cli(base + " --out " + (dir / "a.csv") + " --trace " + (dir / "a.jsonl")) == 0);
  REQUIRE(run_cli(base + " --out " + (dir / "b.csv")) == 0);
  const auto a = slurp(dir / "a.csv");
  CHECK(count_lines(a) == 11);
  CHECK(a.rfind("checkpoint,labels_used,strategy,precision,recall,f1,auto_stop\n", 0) == 0);
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(count_lines(slurp(dir / "a.jsonl"), "{\"fold\":") > 10);

  REQUIRE(run_cli(base + " --seeds 1,2,3 --out " + (dir / "s.csv")) == 0);
  for (int s = 1; s <= 3; ++s) CHECK(fs::exists(dir / ("s_seed" + std::to_string(s) + ".csv")));
  CHECK_FALSE(fs::exists(dir / "s.csv"));
  CHECK(slurp(dir / "s_seed1.csv") != slurp(dir / "s_seed2.csv"));

  CHECK(run_cli("simulate --data " + (dir / "missing.svm"), dir / "err.txt") == 1);
  CHECK(slurp(dir / "err.txt").find("missing.svm") != std::string::npos);
  CHECK(run_cli("simulate --data " + (dir / "pool.svm") + " --checkpoints 150") == 2);
  CHECK(run_cli("simulate") == 2);

  std::ofstream(dir / "bad.svm") << "+1 1:1\n-1 0:1\n";
  CHECK(run_cli("simulate --data " + (dir / "bad.svm"), dir / "err2.txt") == 1);
  CHECK(slurp(dir / "err2.txt").find("line 2") != std::string::npos);
}

TEST_CASE("prep") {
  TempDir dir;
  std::ofstream(dir / "c.txt") << "+1 kinase binds kinase protein\n-1 protein complex kinase\n+1 binds kinase x\n";
  REQUIRE(run_cli("prep --data " + (dir / "c.txt") + " --out " + (dir / "c.svm")) == 0);
  const auto svm = slurp(dir / "c.svm");
  CHECK(count_lines(svm) == 3);
  // default minimum count 3 keeps only "kinase"
  CHECK(slurp(dir / "c.svm.vocab") == "kinase\n");
  CHECK(svm == "+1 1:1\n-1 1:1\n+1 1:1\n");

  REQUIRE(run_cli("prep --min-count 2 --data " + (dir / "c.txt") + " --out " + (dir / "d.svm") + " --vocab " +
                  (dir / "d.vocab")) == 0);
  CHECK(slurp(dir / "d.vocab") == "kinase\nbinds\nprotein\n");

  std::ofstream(dir / "bad.txt") << "+1 a b\nmaybe c d\n";
  CHECK(run_cli("prep --data " + (dir / "bad.txt") + " --out " + (dir / "bad.svm"), dir / "err.txt") == 1);
  CHECK(slurp(dir / "err.txt").find("line 2") != std::string::npos);

  std::ofstream(dir / "empty.txt").close();
  CHECK(run_cli("prep --data " + (dir / "empty.txt") + " --out " + (dir / "empty.svm")) == 0);
  CHECK(fs::file_size(dir / "empty.svm") == 0);
  CHECK(fs::file_size(dir / "empty.svm.vocab") == 0);
  CHECK(run_cli("prep --data " + (dir / "c.txt") + " --min-count 0") == 2);
}

TEST_CASE("serve recovers sessions after a restart") {
  TempDir dir;
  REQUIRE(run_cli("synth --n 120 --seed 4 --out " + (dir / "pool.svm")) == 0);
  const std::string state = "--state-dir " + (dir / "state");
  std::string id, status_before;
  {
    Server server(dir, state);
    httplib::Client client("127.0.0.1", server.port);
    const json health = json::parse(client.Get("/health")->body);
    CHECK(health["status"] == "ok");
    CHECK(health.contains("version"));

    auto created = client.Post("/sessions", json{{"data_path", dir / "pool.svm"}, {"init_size", 10}}.dump(),
                               "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const json body = json::parse(created->body);
    id = body["session_id"];
    CHECK(body["config"]["halt_on_stop"] == true);
    json labels = json::array();
    for (const auto& i : body["pending"]) labels.push_back({{"index", i}, {"label", i.get<int>() % 3 == 0 ? 1 : -1}});
    labels.erase(labels.end() - 3, labels.end());
    REQUIRE(client.Post("/sessions/" + id + "/labels", json{{"labels", labels}}.dump(), "application/json")->status == 200);
    status_before = client.Get("/sessions/" + id + "/status")->body;

    // a second server on the same port fails
    CHECK(run_cli("serve --port " + std::to_string(server.port) + " --state-dir " + (dir / "other")) == 1);
  }
  {
    Server server(dir, state + " --halt-on-stop=false");
    httplib::Client client("127.0.0.1", server.port);
    auto status = client.Get("/sessions/" + id + "/status");
    REQUIRE(status);
    CHECK(status->status == 200);
    CHECK(status->body == status_before);
    CHECK(json::parse(status->body)["labeled_count"] == 7);

    auto created = client.Post("/sessions", json{{"data_path", dir / "pool.svm"}}.dump(), "application/json");
    REQUIRE(created);
    CHECK(json::parse(created->body)["config"]["halt_on_stop"] == false);
  }
}

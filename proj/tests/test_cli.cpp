#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is discarded.
Run emocov(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(EMOCOV_CLI) + "' " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One small synthetic dataset shared by every test case.
struct Workspace {
  fs::path dir;
  fs::path manifest;
  Workspace() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("emocov_cli_" + std::to_string(rd()));
    fs::create_directories(dir);
    manifest = dir / "data" / "manifest.json";
    const Run r = emocov("synth -q --out '" + (dir / "data").string() +
                         "' --subjects 3 --reps 1 --duration 1.5 --noise 0 --variability 0");
    if (r.status != 0) throw std::runtime_error("synth failed");
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("synth writes a manifest and one file per sequence") {
  CHECK(fs::exists(ws().manifest));
  CHECK(fs::exists(ws().dir / "data" / "s03_sadness_r1.csv"));
  const std::string header = slurp(ws().dir / "data" / "s01_anger_r1.csv").substr(0, 14);
  CHECK(header == "j0_x,j0_y,j0_z");
}

TEST_CASE("crossval reports are byte-identical across runs and thread counts") {
  const auto& w = ws();
  const std::string base = "crossval -q --manifest " + w.q(w.manifest);
  const Run a = emocov(base + " --out " + w.q(w.dir / "a.json"));
  const Run b = emocov(base + " --out " + w.q(w.dir / "b.json"));
  const Run c = emocov(base + " --parallel 3 --out " + w.q(w.dir / "c.json"));
  REQUIRE(a.status == 0);
  CHECK(b.status == 0);
  CHECK(c.status == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  CHECK(slurp(w.dir / "a.json") == slurp(w.dir / "b.json"));
  CHECK(slurp(w.dir / "a.json") == slurp(w.dir / "c.json"));
  CHECK(a.out.find("Average accuracy is 100.00%") != std::string::npos);

  const Run knn = emocov(base + " --mode knn --k 1 --metric frobenius");
  CHECK(knn.status == 0);
  CHECK(knn.out.find("mode=knn metric=frobenius") != std::string::npos);
}

TEST_CASE("train then classify recovers the label of a clean sequence") {
  const auto& w = ws();
  REQUIRE(emocov("extract -q --manifest " + w.q(w.manifest) + " --out " +
                 w.q(w.dir / "d.json"))
              .status == 0);
  REQUIRE(emocov("train -q --descriptors " + w.q(w.dir / "d.json") + " --out " +
                 w.q(w.dir / "m.json"))
              .status == 0);
  const Run one = emocov("classify -q --model " + w.q(w.dir / "m.json") + " --sequence " +
                         w.q(w.dir / "data" / "s02_fear_r1.csv"));
  CHECK(one.status == 0);
  CHECK(one.out == "s02_fear_r1\tfear\n");

  REQUIRE(emocov("train -q --manifest " + w.q(w.manifest) + " --out " +
                 w.q(w.dir / "m2.json"))
              .status == 0);
  CHECK(slurp(w.dir / "m.json") == slurp(w.dir / "m2.json"));

  const Run all = emocov("classify -q --model " + w.q(w.dir / "m.json") + " --manifest " +
                         w.q(w.manifest));
  CHECK(all.status == 0);
  CHECK(all.out.find("s01_joy_r1\tjoy\tjoy\n") != std::string::npos);
}

TEST_CASE("windowing and epsilon flags") {
  const auto& w = ws();
  const std::string base = "crossval -q --manifest " + w.q(w.manifest);
  CHECK(emocov(base + " --window-start 10 --window-len 60").status == 0);
  CHECK(emocov(base + " --epsilon 1e-4").status == 0);
  CHECK(emocov(base, "EMOCOV_EPSILON=1e-4").status == 0);
  CHECK(emocov(base + " --window-start 170 --window-len 60").status == 2);
}

TEST_CASE("exit status taxonomy") {
  const auto& w = ws();
  const std::string base = "crossval -q --manifest " + w.q(w.manifest);
  // Usage errors.
  CHECK(emocov("").status == 1);
  CHECK(emocov("frobnicate").status == 1);
  CHECK(emocov(base + " --k 3").status == 1);
  CHECK(emocov(base + " --mode knn --k 0").status == 1);
  CHECK(emocov(base + " --metric stein").status == 1);
  CHECK(emocov(base + " --window-len 1").status == 1);
  CHECK(emocov(base + " --epsilon -1").status == 1);
  CHECK(emocov(base, "EMOCOV_EPSILON=abc").status == 1);
  CHECK(emocov("train -q --out x.json").status == 1);
  CHECK(emocov("--help").status == 0);

  // Data errors.
  CHECK(emocov("crossval -q --manifest " + w.q(w.dir / "nope.json")).status == 2);
  CHECK(emocov(base + " --mode knn --k 1000").status == 2);

  // Numeric failure: a model whose prototype is not positive definite.
  std::ofstream(w.dir / "bad_model.json")
      << R"({"schema_version":1,"kind":"prototype_model","metric":"lerm","labels":["joy"],)"
      << R"("dim":1,"features":{"n_joints":43,"torso_joints":[0,1,2,3],"epsilon":null},)"
      << R"("prototypes":[{"label":"joy","matrix":{"dim":1,"lower":[-1.0]}}]})";
  CHECK(emocov("classify -q --model " + w.q(w.dir / "bad_model.json") + " --sequence " +
               w.q(w.dir / "data" / "s01_joy_r1.csv"))
            .status == 3);
}

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   1 metric axioms        5 invariance              9 report shape
//   2 log/exp round trip   6 end-to-end synthetic LOSO
//   3 mean optimality      7 aggregation oracle
//   4 hand oracle          8 CLI determinism

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emocov/classify.hpp"
#include "emocov/evaluate.hpp"
#include "emocov/motion.hpp"
#include "emocov/spd.hpp"
#include "emocov/synth.hpp"
#include "oracles.hpp"

using namespace emocov;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// The 500-matrix sample shared by criteria 1 and 2: dims 2, 6, 20 in turn,
// condition number at most 1e6.
std::vector<SpdMatrix> spd_sample() {
  std::mt19937_64 rng(20240501);
  const Index dims[] = {2, 6, 20};
  std::vector<SpdMatrix> out;
  for (int i = 0; i < 500; ++i) out.emplace_back(oracle::random_spd(rng, dims[i % 3], 1e6));
  return out;
}

Outcome metric_axioms(const std::vector<SpdMatrix>& cs) {
  const auto t0 = Clock::now();
  int asym = 0, self = 0, tri = 0;
  double worst_self = 0.0, worst_tri = -std::numeric_limits<double>::infinity();
  // Matrices i, i+3, i+6 share a dimension.
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double aa = lerm_distance(cs[i], cs[i]);
    worst_self = std::max(worst_self, aa);
    self += aa > 1e-10;
    if (i + 6 >= cs.size()) continue;
    const SpdMatrix &a = cs[i], &b = cs[i + 3], &c = cs[i + 6];
    asym += lerm_distance(a, b) != lerm_distance(b, a);
    const double excess = lerm_distance(a, c) - lerm_distance(a, b) - lerm_distance(b, c);
    worst_tri = std::max(worst_tri, excess);
    tri += excess > 1e-9;
  }
  const double t = seconds_since(t0);
  return {asym == 0 && self == 0 && tri == 0 && t < 10.0,
          "500 samples; asymmetric pairs " + std::to_string(asym) + ", max d(a,a) " +
              fmt(worst_self) + " (<= 1e-10), max triangle excess " + fmt(worst_tri) +
              " (<= 1e-9), " + fmt(t) + " s (< 10 s)"};
}

Outcome round_trip(const std::vector<SpdMatrix>& cs) {
  double worst = 0.0;
  for (const SpdMatrix& c : cs) {
    const double rel = (spd_exp(spd_log(c)).matrix() - c.matrix()).norm() / c.matrix().norm();
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-9, "max relative error " + fmt(worst) + " (<= 1e-9) over 500 samples"};
}

Outcome mean_optimality() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> set_size(3, 10);
  std::uniform_real_distribution<double> log_delta(std::log(1e-3), std::log(1e-1));
  int violations = 0, candidates = 0;
  double closest = std::numeric_limits<double>::infinity();
  for (int set = 0; set < 50; ++set) {
    const Index n = 2 + set % 5;
    std::vector<SpdMatrix> cs;
    for (int i = set_size(rng); i > 0; --i) cs.emplace_back(oracle::random_spd(rng, n, 1e4));
    const SpdMatrix mean = log_euclidean_mean(cs);
    const double best = karcher_objective(mean, cs);
    const Matrix lm = spd_log(mean).matrix();
    for (int k = 0; k < 100; ++k) {
      const double delta = std::exp(log_delta(rng));
      const SpdMatrix p = spd_exp(SymMatrix(lm + delta * oracle::random_unit_symmetric(rng, n)));
      const double obj = karcher_objective(p, cs);
      violations += best > obj;
      closest = std::min(closest, obj - best);
      ++candidates;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " +
                               std::to_string(candidates) +
                               " perturbed candidates (50 sets), smallest margin " + fmt(closest)};
}

Outcome hand_oracle() {
  const SkeletonSequence s(1, 120.0, Matrix{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  const SymMatrix c = feature_covariance(extract_features(s));
  const Matrix o = oracle::two_pass_covariance(oracle::posture_velocity(s.frames()));
  Matrix rest = c.matrix();
  rest(0, 0) = rest(3, 3) = rest(0, 3) = rest(3, 0) = 0.0;
  // 1/3 is not a double: require the library to match the two-pass oracle
  // bit for bit, and the oracle to sit within rounding of 1/3.
  const double third_err = std::abs(c(3, 3) - 1.0 / 3.0);
  const bool ok = c.matrix() == o && c(0, 0) == 1.0 && c(0, 3) == 0.5 && c(3, 0) == 0.5 &&
                  third_err <= 4 * std::numeric_limits<double>::epsilon() &&
                  rest.cwiseAbs().maxCoeff() == 0.0;
  return {ok, "var(x)=" + fmt(c(0, 0), 17) + " var(v_x)=" + fmt(c(3, 3), 17) +
                  " cov(x,v_x)=" + fmt(c(0, 3), 17) + ", bitwise equal to two-pass oracle: " +
                  (c.matrix() == o ? "yes" : "no")};
}

SkeletonSequence moved(const SkeletonSequence& s, const Eigen::Matrix3d& r,
                       const Eigen::Vector3d& t) {
  Matrix f = s.frames();
  for (Index row = 0; row < f.rows(); ++row) {
    for (int j = 0; j < s.n_joints(); ++j) {
      const Eigen::Vector3d p = f.row(row).segment<3>(3 * j).transpose();
      f.row(row).segment<3>(3 * j) = (r * p + t).transpose();
    }
  }
  return SkeletonSequence(s.n_joints(), s.fps(), f, s.source_id(), s.subject_id(), s.label());
}

Outcome invariance() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const GaitParams p = GaitParams::defaults();
  const std::vector<int> torso = default_torso_joints();
  double worst_t = 0.0, worst_r = 0.0;
  int cases = 0;
  for (int subject = 0; subject < 2; ++subject) {
    for (const auto& label : p.labels.labels()) {
      const SkeletonSequence s = generate_sequence(p, subject, label, 0);
      const Eigen::Vector3d t(u(rng), u(rng), u(rng));
      const Matrix plain = covariance_descriptor(extract_features(s)).covariance.matrix();
      const Matrix shifted =
          covariance_descriptor(extract_features(moved(s, Eigen::Matrix3d::Identity(), t)))
              .covariance.matrix();
      worst_t = std::max(worst_t, (plain - shifted).cwiseAbs().maxCoeff());

      const Matrix a = describe_sequence(s, torso).covariance.matrix();
      const Matrix b =
          describe_sequence(moved(s, oracle::random_rotation(rng), t), torso).covariance.matrix();
      worst_r = std::max(worst_r, (a - b).norm());
      ++cases;
    }
  }
  return {worst_t <= 1e-10 && worst_r <= 1e-8,
          std::to_string(cases) + " synthetic skeletons; translation max entry change " +
              fmt(worst_t) + " (<= 1e-10), rigid motion Frobenius change " + fmt(worst_r) +
              " (<= 1e-8)"};
}

struct AggregationLog {
  int runs = 0;
  int mismatches = 0;

  void check(const EvalReport& r) {
    ++runs;
    std::vector<ConfusionMatrix> folds;
    for (const FoldResult& f : r.folds) folds.push_back(f.confusion);
    const ConfusionMatrix concatenated = confusion_from_predictions(r.labels, r.predictions);
    if (!(aggregate_confusions(folds) == concatenated) || !(r.overall == concatenated)) {
      ++mismatches;
    }
  }
};

struct EndToEnd {
  Outcome outcome;
  EvalReport first_report;
};

EndToEnd end_to_end(AggregationLog& agg) {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;
  std::optional<EvalReport> first;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GaitParams p = GaitParams::defaults();
    p.seed = seed;
    p.set_noise(0.01);
    std::vector<LabeledDescriptor> ds;
    for (const SkeletonSequence& s : generate_dataset(p, 8, 4)) {
      ds.push_back({describe_sequence(s, default_torso_joints()), *s.label(), s.subject_id()});
    }
    const EvalReport proto = run_crossval(ds, {Mode::prototype, Metric::lerm, 1}, p.labels);
    const EvalReport knn_l = run_crossval(ds, {Mode::knn, Metric::lerm, 1}, p.labels);
    const EvalReport knn_f = run_crossval(ds, {Mode::knn, Metric::frobenius, 1}, p.labels);
    for (const EvalReport* r : {&proto, &knn_l, &knn_f}) agg.check(*r);
    const double a = proto.average_accuracy, b = knn_l.average_accuracy,
                 c = knn_f.average_accuracy;
    ok = ok && a >= 0.90 && a >= b && b >= c;
    detail << (seed > 1 ? "; " : "") << "seed " << seed << ": " << fmt(a, 4) << " >= "
           << fmt(b, 4) << " >= " << fmt(c, 4);
    if (!first) first = proto;
  }
  const double t = seconds_since(t0);
  ok = ok && t < 120.0;
  detail << " (prototype+LERM >= 0.90, then kNN+LERM, then kNN+Frobenius), " << fmt(t) << " s (< 120 s)";
  return {{ok, detail.str()}, std::move(*first)};
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = "'" + std::string(EMOCOV_CLI) + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  std::size_t n;
  std::string text;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
  const int raw = pclose(pipe);
  if (out) *out = std::move(text);
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("emocov_accept_" + std::to_string(rd()));
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const std::string synth = " --subjects 4 --reps 2 --duration 2 --seed 7 -q";
  bool ok = run_cli("synth --out " + q(dir / "d1") + synth) == 0 &&
            run_cli("synth --out " + q(dir / "d2") + synth) == 0;
  std::vector<std::string> reports, stdouts;
  const std::vector<std::pair<fs::path, std::string>> runs{
      {dir / "d1", ""}, {dir / "d1", ""}, {dir / "d2", ""},
      {dir / "d1", " --parallel 4"}, {dir / "d2", " --parallel 3"}};
  for (std::size_t i = 0; ok && i < runs.size(); ++i) {
    const fs::path report = dir / ("report" + std::to_string(i) + ".json");
    std::string out;
    ok = run_cli("crossval -q --manifest " + q(runs[i].first / "manifest.json") +
                     " --mode knn --metric lerm --out " + q(report) + runs[i].second,
                 &out) == 0;
    if (ok) {
      reports.push_back(slurp(report));
      stdouts.push_back(out);
    }
  }
  std::size_t differing = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    differing += reports[i] != reports[0] || stdouts[i] != stdouts[0];
  }
  fs::remove_all(dir);
  ok = ok && reports.size() == runs.size() && differing == 0 && !reports[0].empty();
  return {ok, std::to_string(reports.size()) + " crossval runs (3 sequential, 2 with --parallel, " +
                  "two independently synthesized copies), " + std::to_string(differing) +
                  " differing from the first"};
}

Outcome report_shape(const EvalReport& synthetic) {
  bool ok = true;
  // The synthetic 5-label run: a 5x5 row-stochastic table in canonical label order.
  const std::string table = render_table(synthetic.overall);
  std::istringstream lines(table);
  std::string header;
  std::getline(lines, header);
  std::istringstream hs(header);
  std::vector<std::string> cols{std::istream_iterator<std::string>(hs), {}};
  const std::vector<std::string> order{"Anger", "Fear", "Joy", "Neutral", "Sadness"};
  ok = ok && cols == order;
  std::vector<std::string> rows;
  for (std::string line; std::getline(lines, line) && rows.size() < 5;) {
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    rows.push_back(name);
    int cells = 0;
    for (std::string cell; ls >> cell;) ++cells;
    ok = ok && cells == 5;
  }
  ok = ok && rows == order;
  const Matrix rates = synthetic.overall.rates();
  double worst_row = 0.0;
  for (Index i = 0; i < rates.rows(); ++i) {
    worst_row = std::max(worst_row, std::abs(rates.row(i).sum() - 1.0));
  }
  ok = ok && rates.rows() == 5 && rates.cols() == 5 && worst_row <= 1e-12;

  // A reference count matrix with known per-class rates, through the same reporting code.
  CountMatrix counts(5, 5);
  counts << 23, 1, 4, 0, 1, 1, 19, 3, 0, 5, 1, 2, 18, 3, 7, 2, 0, 0, 27, 4, 1, 7, 1, 2, 24;
  const ConfusionMatrix t1(LabelSet::emotions(), counts);
  const double expected[] = {79.31, 67.86, 58.06, 81.82, 68.57};
  for (Index i = 0; i < 5; ++i) {
    ok = ok && std::abs(100.0 * t1.rates()(i, i) - expected[i]) <= 0.005;
  }
  const double avg = 100.0 * t1.average_accuracy();
  const bool rendered = render_table(t1).find("Average accuracy is 71.12%") != std::string::npos;
  ok = ok && std::abs(avg - 71.12) <= 0.01 && rendered;
  return {ok, "synthetic table rows/columns Anger..Sadness, max row-sum error " +
                  fmt(worst_row) + "; reference macro average " + fmt(avg, 6) +
                  " (71.12 +/- 0.01)"};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> steps;
  const std::vector<SpdMatrix> sample = spd_sample();
  AggregationLog agg;
  std::optional<EvalReport> synthetic;

  steps.emplace_back("metric axioms", [&] { return metric_axioms(sample); });
  steps.emplace_back("log/exp round trip", [&] { return round_trip(sample); });
  steps.emplace_back("mean optimality", mean_optimality);
  steps.emplace_back("hand oracle", hand_oracle);
  steps.emplace_back("invariance", invariance);
  steps.emplace_back("end-to-end synthetic LOSO", [&] {
    EndToEnd e = end_to_end(agg);
    synthetic = std::move(e.first_report);
    return e.outcome;
  });
  steps.emplace_back("aggregation oracle", [&] {
    return Outcome{agg.runs > 0 && agg.mismatches == 0,
                   std::to_string(agg.mismatches) + " mismatches over " +
                       std::to_string(agg.runs) + " cross-validation runs"};
  });
  steps.emplace_back("determinism", determinism);
  steps.emplace_back("report shape", [&] {
    if (!synthetic) return Outcome{false, "no synthetic report available"};
    return report_shape(*synthetic);
  });

  int failures = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    Outcome o;
    try {
      o = steps[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << steps[i].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

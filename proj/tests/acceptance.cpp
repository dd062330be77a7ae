// Copyright 2026 The auroraclr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criterion 10 runs only when AURORACLR_OATH_DIR names a directory
// holding images/ and labels.csv.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "auroraclr/auroraclr.hpp"
#include "gradcheck_cases.hpp"
#include "support.hpp"

namespace {

using namespace auroraclr;
namespace fs = std::filesystem;
using V = std::vector<double>;
using Clock = std::chrono::steady_clock;

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome = Outcome::kPass;
  std::string detail;
};

// Collects failed checks; the first few are kept for the report line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) {
      ++failed_;
      if (notes_.size() < 4) notes_.push_back(what);
    }
  }
  void near(double actual, double expected, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << ": " << std::setprecision(12) << actual << " vs " << expected;
    expect(std::abs(actual - expected) <= tol, s.str());
  }
  Verdict verdict(const std::string& summary) const {
    std::ostringstream s;
    s << summary << " (" << total_ - failed_ << "/" << total_ << " checks)";
    for (const auto& n : notes_) s << "; " << n;
    return {failed_ == 0 ? Outcome::kPass : Outcome::kFail, s.str()};
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::vector<std::string> notes_;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::vector<V> rows_of(const Matrix& m) {
  std::vector<V> out;
  for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

std::vector<V> rows_of(const Tensor& t) {
  std::vector<V> out(t.dim(0));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    out[i].assign(t.data().begin() + static_cast<std::ptrdiff_t>(i * t.dim(1)),
                  t.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * t.dim(1)));
  return out;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict gradient_fidelity() {
  Checks c;
  const auto t0 = Clock::now();
  const auto cases = testing::gradient_cases();
  double worst = 0.0;
  std::size_t checked = 0, refined = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Rng rng(derive_seed(2024, i));
    for (int trial = 0; trial < 20; ++trial) {
      for (const auto& r : cases[i].run(rng)) {
        worst = std::max(worst, r.max_relative_error);
        checked += r.checked;
        refined += r.refined;
        c.expect(r.max_relative_error <= std::min(cases[i].tolerance, 1e-4),
                 cases[i].name + " rel err " + fmt(r.max_relative_error, 8));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + fmt(elapsed, 1) + " s");
  return c.verdict(std::to_string(cases.size()) + " ops x 20 instances, worst rel err " +
                   fmt(worst, 8) + ", " + std::to_string(refined) + " of " + std::to_string(checked) +
                   " elements re-estimated at a kink, " + fmt(elapsed, 1) + " s");
}

Verdict loss_oracle() {
  Checks c;
  Rng rng(7);
  const LossConfig half{0.5};
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.uniform_int(7), p = 2 + rng.uniform_int(15);
    const Tensor z = oracle::random_tensor({2 * n, p}, rng);
    std::vector<std::size_t> order(2 * n), pairs(2 * n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k = 0; k < n; ++k) {
      pairs[order[2 * k]] = order[2 * k + 1];
      pairs[order[2 * k + 1]] = order[2 * k];
    }
    const double engine = ntxent_batch(z, pairs, half).item();
    const double loops = oracle::ntxent(rows_of(z), pairs, 0.5);
    worst = std::max(worst, std::abs(engine - loops));
    c.near(engine, loops, 1e-10, "random instance " + std::to_string(t));
  }
  const std::vector<std::size_t> one{1, 0};
  c.expect(ntxent_batch(oracle::random_tensor({2, 5}, rng), one, half).item() == 0.0, "N=1 not exactly 0");
  const Tensor hand = Tensor::matrix(4, 2, {1, 0, 1, 0, 0, 1, 0, 1});
  const double expected = -std::log(std::exp(2.0) / (std::exp(2.0) + 2.0));
  c.near(ntxent_batch(hand, std::vector<std::size_t>{1, 0, 3, 2}, half).item(), expected, 1e-9, "4-row example");
  return c.verdict("100 instances, max |engine - oracle| " + fmt(worst * 1e12, 3) + "e-12");
}

Verdict scaling_contract() {
  Checks c;
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t h = 4 + rng.uniform_int(29), w = 4 + rng.uniform_int(29);
    V raw(h * w);
    const double base = rng.uniform(-100, 100), spread = std::exp(rng.uniform(-3, 6));
    for (double& v : raw) v = base + spread * rng.uniform();
    if (t % 5 == 0) {  // heavy-tailed frames exercise the clipping
      for (int s = 0; s < 3; ++s) raw[rng.uniform_int(raw.size())] += spread * 50;
    }
    const Tensor img({h, w}, raw);
    const ScaledImage out = scale_image(img);
    bool in_range = true;
    for (double v : out.pixels.data()) in_range &= v >= 0.0 && v <= 1.0;
    c.expect(in_range, "image " + std::to_string(t) + " outside [0,1]");

    const double a = std::exp(rng.uniform(-4, 4)), b = rng.uniform(-1000, 1000);
    V moved(raw);
    for (double& v : moved) v = a * v + b;
    const ScaledImage out2 = scale_image(Tensor({h, w}, moved));
    double diff = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) diff = std::max(diff, std::abs(out.pixels[i] - out2.pixels[i]));
    c.expect(diff <= 1e-9, "affine invariance off by " + fmt(diff, 12));

    for (double p : {1.0, 99.0, 50.0}) {
      c.expect(nearest_rank_percentile(raw, p) == oracle::percentile_by_count(raw, p),
               "percentile " + fmt(p, 0) + " mismatch on image " + std::to_string(t));
    }
  }
  return c.verdict("1000 random frames");
}

Verdict optimizer_contract() {
  Checks c;
  TrainConfig cfg;
  for (double g : {1e-3, 0.02, 0.5, -1.0, 7.0, -300.0, 1e4}) {
    Tensor w({3}, {1.0, -2.0, 0.5});
    w.set_requires_grad(true);
    {
      TapeScope scope;
      backward(sum(w * g));
    }
    std::vector<NamedParameter> params{{"w", w}};
    AdamState state;
    adam_step(params, state, cfg);
    const V start{1.0, -2.0, 0.5};
    for (std::size_t i = 0; i < 3; ++i) {
      const double step = std::abs(w[i] - start[i]);
      const double expected = cfg.learning_rate * std::abs(g) / (std::abs(g) + cfg.epsilon);
      c.expect(std::abs(step - expected) <= 1e-6 * expected, "first step for g=" + fmt(g, 3));
    }
  }
  TrainConfig quad;
  quad.learning_rate = 0.1;
  Tensor theta({1}, {1.0});
  theta.set_requires_grad(true);
  std::vector<NamedParameter> params{{"theta", theta}};
  AdamState state;
  for (int t = 0; t < 200; ++t) {
    theta.zero_grad();
    {
      TapeScope scope;
      backward(sum(theta * theta));
    }
    adam_step(params, state, quad);
  }
  c.expect(std::abs(theta[0]) < 1e-2, "quadratic ended at " + fmt(theta[0], 6));
  return c.verdict("first step and theta^2 descent, final |theta| " + fmt(std::abs(theta[0]), 6));
}

Verdict kmeans_oracle() {
  Checks c;
  Rng rng(13);
  std::size_t instances = 0;
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t d = 1; d <= 2; ++d)
      for (std::size_t k = 1; k <= std::min<std::size_t>(3, n); ++k)
        for (int rep = 0; rep < 6; ++rep) {
          Matrix pts(n, d);
          for (double& v : pts.values) v = rep % 2 ? std::round(rng.uniform(-3, 3)) : rng.uniform(-5, 5);
          const std::uint64_t seed = derive_seed(99, n, d, k, static_cast<std::uint64_t>(rep));
          const double optimum = oracle::exhaustive_kmeans_inertia(rows_of(pts), k);
          const KMeansResult best = kmeans_best_of(pts, k, seed, 20);
          c.near(best.inertia, optimum, 1e-9,
                 "N=" + std::to_string(n) + " d=" + std::to_string(d) + " k=" + std::to_string(k));
          for (std::size_t r = 0; r < 20; ++r) {
            const KMeansResult run = kmeans(pts, k, derive_seed(seed, k, r));
            for (std::size_t i = 1; i < run.inertia_history.size(); ++i)
              c.expect(run.inertia_history[i] <= run.inertia_history[i - 1] + 1e-9, "inertia rose");
          }
          ++instances;
        }
  return c.verdict(std::to_string(instances) + " small instances, 20 restarts each");
}

Verdict silhouette_contract() {
  Checks c;
  const Matrix pairs(4, 2, V{0, 0, 0, 1, 10, 0, 10, 1});
  const double s = silhouette_mean(pairs, std::vector<std::size_t>{0, 0, 1, 1});
  c.near(s, 0.9003, 1e-4, "two-pair example");
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + rng.uniform_int(30);
    Matrix pts(n, 1 + rng.uniform_int(4));
    for (double& v : pts.values) v = rng.normal();
    std::vector<std::size_t> a(n);
    for (auto& x : a) x = rng.uniform_int(5);
    a[0] = 0;
    a[1] = 1;
    const double v = silhouette_mean(pts, a);
    c.expect(v >= -1.0 && v <= 1.0, "silhouette " + fmt(v) + " outside [-1,1]");
  }
  const double centres[4][2] = {{0, 0}, {20, 0}, {0, 20}, {20, 20}};
  Matrix blobs(80, 2);
  std::vector<int> labels;
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < 20; ++i) {
      blobs(b * 20 + i, 0) = centres[b][0] + 1.5 * rng.normal();
      blobs(b * 20 + i, 1) = centres[b][1] + 1.5 * rng.normal();
      labels.push_back(static_cast<int>(b));
    }
  SweepOptions opt;
  opt.k_min = 2;
  opt.k_max = 8;
  const ClusterReport r = silhouette_sweep(blobs, opt, labels);
  c.expect(r.best_k == 4, "4-blob sweep picked k=" + std::to_string(r.best_k));
  return c.verdict("two-pair " + fmt(s, 6) + ", 4-blob sweep best k " + std::to_string(r.best_k));
}

EmbeddingSet make_set(Matrix x, std::vector<int> labels) {
  EmbeddingSet s;
  s.embeddings = std::move(x);
  s.labels = std::move(labels);
  for (std::size_t i = 0; i < s.labels.size(); ++i) s.source_ids.push_back(std::to_string(i));
  return s;
}

Verdict probe_contract() {
  Checks c;
  std::vector<int> labels;
  Matrix onehot(120, 6);
  for (std::size_t i = 0; i < 120; ++i) {
    labels.push_back(static_cast<int>(i % 6));
    onehot(i, i % 6) = 1.0;
  }
  const auto folds = stratified_folds(std::span<const int>(labels), 5, 42);
  const EvalReport perfect = cross_validate(make_set(onehot, labels), folds, ProbeConfig{});
  c.expect(perfect.accuracy.mean == 1.0 && perfect.accuracy.stddev == 0.0, "one-hot accuracy not 100%, std 0");

  Matrix line(20, 1);
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    line(i, 0) = i < 10 ? -1.0 : 1.0;
    y[i] = i < 10 ? 0 : 1;
  }
  ProbeConfig tiny;
  tiny.l2_strength = 1e-4;
  tiny.standardize = false;
  const auto train_acc = classification_metrics(y, predict(fit_logreg(line, y, 2, tiny), line).labels, 2).accuracy;
  c.expect(train_acc == 1.0, "separable 1-D training accuracy " + fmt(train_acc));

  Rng rng(19);
  std::vector<int> noise_labels;
  Matrix noise(600, 16);
  for (std::size_t i = 0; i < 600; ++i) {
    noise_labels.push_back(static_cast<int>(i % 6));
    for (std::size_t j = 0; j < 16; ++j) noise(i, j) = rng.normal();
  }
  const double chance = cross_validate(make_set(noise, noise_labels),
                                       stratified_folds(std::span<const int>(noise_labels), 5, 42), ProbeConfig{})
                            .accuracy.mean;
  c.expect(std::abs(chance - 1.0 / 6.0) <= 0.1, "noise accuracy " + fmt(chance));

  const auto m = metrics_from_confusion({{3, 1}, {2, 4}});
  c.expect(m.accuracy == 0.7 && m.precision[0] == 0.6 && m.recall[0] == 0.75, "[[3,1],[2,4]] arithmetic");
  const auto flat = classification_metrics(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 0, 0}, 2);
  c.expect(flat.accuracy == 0.5 && flat.macro_precision == 0.25, "single-class prediction arithmetic");
  const auto diag = metrics_from_confusion({{5, 0}, {0, 5}});
  c.expect(diag.accuracy == 1.0 && diag.macro_f1 == 1.0, "diagonal arithmetic");
  return c.verdict("one-hot 100%, noise " + fmt(100 * chance, 1) + "%");
}

// Shared by criteria 8 and 9: the first defaulted pipeline run.
struct DeskRun {
  PipelineSummary summary;
  fs::path dir;
  double seconds = 0.0;
};

// Accuracy measured for the defaulted pipeline at seed 42; other platforms
// may differ by a few points.
constexpr double kPinnedAccuracy = 0.9889;

DeskRun desk_run(const fs::path& dir) {
  fs::remove_all(dir);
  const RunConfig cfg;
  const auto t0 = Clock::now();
  DeskRun r;
  r.summary = run_pipeline(synthetic_dataset(cfg), cfg, dir);
  r.seconds = seconds_since(t0);
  r.dir = dir;
  return r;
}

std::optional<DeskRun> first_run;

Verdict desk_learning(const fs::path& root) {
  Checks c;
  const RunConfig cfg;
  c.expect(cfg.data.synthetic_per_class == 30 && cfg.data.image_size == 48 && cfg.train.batch_size == 8 &&
               cfg.train.epochs == 40 && cfg.seed == 42 &&
               cfg.encoder.stage_channels == std::vector<std::size_t>{8, 16, 32} &&
               cfg.encoder.blocks_per_stage == std::vector<std::size_t>{1, 1, 1},
           "defaults differ from the desk-scale setting");
  first_run = desk_run(root / "run_a");
  const auto& s = first_run->summary;
  const double first = s.loss_history.front(), last = s.loss_history.back();
  const double acc = s.probe.accuracy.mean, margin = s.separation.margin();
  c.expect(first_run->seconds < 600.0, "runtime " + fmt(first_run->seconds, 0) + " s");
  c.expect(last < first, "loss did not decrease");
  c.expect(acc >= 0.6, "probe accuracy " + fmt(acc));
  c.expect(std::abs(acc - kPinnedAccuracy) <= 0.05, "accuracy " + fmt(acc) + " far from pinned " + fmt(kPinnedAccuracy));
  c.expect(margin > 0.05, "separation margin " + fmt(margin));
  return c.verdict("loss " + fmt(first) + " -> " + fmt(last) + ", probe accuracy " + fmt(100 * acc, 1) +
                   "%, margin " + fmt(margin) + ", " + fmt(first_run->seconds, 0) + " s");
}

Verdict determinism(const fs::path& root) {
  Checks c;
  if (!first_run) first_run = desk_run(root / "run_a");
  const DeskRun second = desk_run(root / "run_b");
  c.expect(first_run->summary.loss_history == second.summary.loss_history, "loss histories differ");
  for (const char* f : {"loss_history.csv", "embeddings.crem", "embeddings.csv", "model.crck", "report.txt",
                        "probe/fold_metrics.csv", "cluster/assignments.csv", "cluster/silhouette_sweep.csv"}) {
    c.expect(slurp(first_run->dir / f) == slurp(second.dir / f), std::string(f) + " differs");
  }
  c.expect(first_run->summary.report == second.summary.report, "reports differ");
  return c.verdict("two seed-42 runs compared byte for byte");
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(AURORACLR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict oath_integration(const fs::path& root) {
  const char* env = std::getenv("AURORACLR_OATH_DIR");
  if (!env || !*env) return {Outcome::kSkip, "AURORACLR_OATH_DIR not set"};
  Checks c;
  const fs::path oath(env), dir = root / "oath";
  fs::create_directories(dir);
  const int pre = run_cli("preprocess --images " + (oath / "images").string() + " --labels " +
                              (oath / "labels.csv").string() + " --out " + (dir / "oath.crds").string(),
                          dir / "preprocess.log");
  c.expect(pre == 0, "preprocess exit " + std::to_string(pre));
  if (pre != 0) return c.verdict("preprocess failed");
  const Dataset ds = load_dataset_cache(dir / "oath.crds");
  c.expect(ds.size() == 5824, "record count " + std::to_string(ds.size()));
  // Arc, Diffuse, Discrete, Cloudy, Moon, Clear
  const std::array<std::size_t, kNumClasses> expected{774, 1400, 1102, 817, 585, 1082};
  std::ostringstream counts;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    counts << (k ? "/" : "") << ds.class_counts()[k];
    c.expect(ds.class_counts()[k] == expected[k],
             std::string(kClassNames[k]) + " count " + std::to_string(ds.class_counts()[k]));
  }
  const int run = run_cli("run --data " + (dir / "oath.crds").string() + " --out-dir " + (dir / "run").string() +
                              " --set train.epochs=1",
                          dir / "run.log");
  c.expect(run == 0 && fs::exists(dir / "run" / "report.txt"), "pipeline exit " + std::to_string(run));
  return c.verdict(std::to_string(ds.size()) + " records, counts " + counts.str());
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "auroraclr_acceptance";
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"loss oracle equivalence", loss_oracle},
      {"brightness scaling contract", scaling_contract},
      {"optimizer contract", optimizer_contract},
      {"k-means oracle", kmeans_oracle},
      {"silhouette", silhouette_contract},
      {"linear probe", probe_contract},
      {"desk-scale learning signal", [&] { return desk_learning(root); }},
      {"determinism", [&] { return determinism(root); }},
      {"OATH integration", [&] { return oath_integration(root); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    if (v.outcome == Outcome::kFail) ++failures;
    std::cout << tag << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all criteria met")
            << std::endl;
  return failures ? 1 : 0;
}

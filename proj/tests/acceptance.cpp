// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "liger_cli.hpp"
#include "pooled_reference.hpp"
#include "test_support.hpp"

using namespace liger;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

constexpr double kEps = 0.001;

struct Check {
  bool ok = true;
  std::string why;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) { return format_double(v); }

std::vector<std::vector<std::int8_t>> rows_of(const VoteMatrix& v) {
  std::vector<std::vector<std::int8_t>> out;
  for (std::size_t i = 0; i < v.n(); ++i) out.emplace_back(v.row(i).begin(), v.row(i).end());
  return out;
}

Check exact_moment_recovery() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  ts::Gen g(101);
  for (std::size_t m : {3u, 5u}) {
    for (int draw = 0; draw < 100; ++draw) {
      std::vector<double> a(m);
      for (auto& x : a) x = ts::uniform(g, 0.05, 0.95);
      MomentTable t(1, m);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = i + 1; k < m; ++k) t.set(0, i, k, a[i] * a[k], 1);
      }
      for (std::size_t i = 0; i < m; ++i) {
        const auto est = triplet_accuracy(t, 0, i, kEps);
        c.require(est && std::abs(*est - a[i]) <= 1e-9,
                  "m=" + std::to_string(m) + " source " + std::to_string(i) + " off by more than 1e-9");
      }
    }
  }
  const double dt = seconds_since(t0);
  c.require(dt < 1.0, "took " + num(dt) + " s");
  return c;
}

Check worked_fixture() {
  Check c;
  MomentTable t(1, 3);
  t.set(0, 0, 1, 0.48, 1);
  t.set(0, 0, 2, 0.56, 1);
  t.set(0, 1, 2, 0.42, 1);
  const auto est = triplet_accuracy(t, 0, 0, kEps);
  c.require(est && std::abs(*est - 0.8) <= 1e-12, "estimate " + (est ? num(*est) : std::string("absent")));
  return c;
}

Check posterior_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  ts::Gen g(103);
  for (std::size_t m = 1; m <= 4; ++m) {
    const auto rows = ts::all_vote_rows(m);
    for (int draw = 0; draw < 50; ++draw) {
      const auto model = ts::random_model(g, m);
      for (const auto& row : rows) {
        const double p = posterior_in_part(model, 0, row);
        c.require(std::abs(p - brute_force_posterior(model, 0, row)) <= 1e-12,
                  "m=" + std::to_string(m) + " draw " + std::to_string(draw));
      }
    }
  }
  const double dt = seconds_since(t0);
  c.require(dt < 5.0, "took " + num(dt) + " s");
  return c;
}

Check abstain_and_normalization() {
  Check c;
  ts::Gen g(104);
  for (int k = 0; k < 1000; ++k) {
    const auto m = ts::pick(g, 1, 6);
    const auto model = ts::random_model(g, m);
    auto wider = model;
    wider.m = m + 1;
    wider.accuracies.push_back(ts::uniform(g, -0.99, 0.99));
    wider.coverages.push_back(ts::uniform(g, 0.01, 1.0));
    wider.estimate_kind.push_back(EstimateKind::local);
    wider.radii.push_back(0.0);
    std::vector<std::int8_t> row(m);
    for (auto& v : row) v = static_cast<std::int8_t>(ts::pick(g, 0, 2)) - 1;
    auto row0 = row;
    row0.push_back(0);
    const double p = posterior_in_part(model, 0, row);
    c.require(std::abs(posterior_in_part(wider, 0, row0) - p) <= 1e-12, "abstain column moved case " + std::to_string(k));
    // Pr(y = -1 | votes) is Pr(y = +1 | votes) under negated accuracies and flipped balance.
    auto mirrored = model;
    mirrored.class_balances[0] = 1.0 - model.class_balances[0];
    for (auto& a : mirrored.accuracies) a = -a;
    c.require(std::abs(p + posterior_in_part(mirrored, 0, row) - 1.0) <= 1e-12,
              "posteriors over y do not sum to 1 in case " + std::to_string(k));
  }
  return c;
}

Check pooled_baseline() {
  Check c;
  ts::Gen g(105);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = ts::pick(g, 20, 500), m = ts::pick(g, 3, 7);
    const auto emb = ts::random_embeddings(g, n, 3);
    const auto votes = ts::random_votes(g, n, m, ts::uniform(g, 0.0, 0.7));
    EngineConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.radii.assign(m, 0.0);
    const auto model = fit(emb, extend_all(emb, votes, cfg.radii), cfg);
    const auto rows = rows_of(votes);
    const auto ref = pooled_reference::fit(rows, m, cfg.accuracy_clamp);
    for (std::size_t i = 0; i < m; ++i) {
      c.require(model.accuracy(0, i) == ref.accuracy[i], "accuracy differs, trial " + std::to_string(trial));
    }
    const auto preds = predict(model, emb, votes);
    for (std::size_t x = 0; x < n; ++x) {
      c.require(preds.posterior[x] == pooled_reference::posterior(ref, rows[x]),
                "posterior differs, trial " + std::to_string(trial));
    }
  }
  return c;
}

double max_recovery_error(std::size_t n, std::uint64_t seed) {
  static const std::vector<double> truth = {0.8, 0.6, 0.7};
  const auto sample = sample_dataset(spec_from_accuracies(truth, {1.0, 1.0, 1.0}), n, seed);
  const EmbeddingDataset emb(n, 1, std::vector<float>(n, 0.0f), Metric::euclidean);
  EngineConfig cfg;
  cfg.seed = seed;
  const auto model = fit(emb, unextended(sample.votes), cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(model.accuracy(0, i) - truth[i]));
  return worst;
}

Check sampled_recovery() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const double err = max_recovery_error(10000, 2024);
  c.require(err <= 0.05, "max error " + num(err) + " at n=10000");
  std::vector<double> medians;
  for (std::size_t n : {1000u, 4000u, 16000u}) {
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 20; ++s) errs.push_back(max_recovery_error(n, 500 + s));
    std::sort(errs.begin(), errs.end());
    medians.push_back(0.5 * (errs[9] + errs[10]));
  }
  c.require(medians[1] < medians[0] && medians[2] < medians[1],
            "medians " + num(medians[0]) + ", " + num(medians[1]) + ", " + num(medians[2]));
  const double dt = seconds_since(t0);
  c.require(dt < 30.0, "took " + num(dt) + " s");
  return c;
}

Check bias_variance() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto [a, b] = separated_populations();
  const auto rows = bench_bias_variance(a, b, 1000, {1, 2, 4, 8}, 10, 1);
  const auto mean = [](const std::vector<BiasVarianceRow>& r, std::size_t idx) { return r[idx].cross_entropy.mean; };
  c.require(mean(rows, 1) < mean(rows, 0) && mean(rows, 1) < mean(rows, 3),
            "separated: s1 " + num(mean(rows, 0)) + " s2 " + num(mean(rows, 1)) + " s8 " + num(mean(rows, 3)));
  const auto control = bench_bias_variance(a, a, 1000, {1, 2, 4, 8}, 10, 1);
  for (std::size_t r = 1; r < control.size(); ++r) {
    c.require(mean(control, 0) < mean(control, r),
              "control: s1 " + num(mean(control, 0)) + " not below s" + std::to_string(control[r].s));
  }
  const double dt = seconds_since(t0);
  c.require(dt < 120.0, "took " + num(dt) + " s");
  return c;
}

const std::vector<ExtensionCurve>& extension_curves() {
  static const std::vector<ExtensionCurve> curves = [] {
    using L = CheckerboardTaskSpec::Labels;
    std::vector<ExtensionVariant> variants;
    for (double acc : {0.89, 0.7, 0.5, 0.3}) {
      variants.push_back({"acc_" + format_double(acc), extension_task(10, L::checkerboard, acc, 10000, 42)});
    }
    variants.push_back({"board_2x2", extension_task(2, L::checkerboard, 0.89, 10000, 42)});
    variants.push_back({"board_random", extension_task(10, L::random, 0.89, 10000, 42)});
    return bench_extension(variants, default_extension_grid(), 0);
  }();
  return curves;
}

Check extension_tradeoff() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto& curves = extension_curves();
  for (const auto& curve : curves) {
    c.require(curve.points.front().r == 0.0 && curve.points.front().cross_entropy == curve.baseline_cross_entropy,
              curve.name + ": r=0 differs from the unextended baseline");
  }
  const double top = curves[0].best_reduction();
  for (std::size_t k = 1; k < 4; ++k) {
    c.require(top >= curves[k].best_reduction(),
              curves[k].name + " reduction " + num(curves[k].best_reduction()) + " exceeds " + num(top));
  }
  const double board10 = top, board2 = curves[4].best_reduction(), random = curves[5].best_reduction();
  c.require(board2 > board10 && board2 > random, "2x2 reduction " + num(board2) + " not the greatest");
  c.require(random < board10 && random < board2, "random reduction " + num(random) + " not the least");
  const double dt = seconds_since(t0);
  c.require(dt < 180.0, "took " + num(dt) + " s");
  return c;
}

Check extension_structure() {
  Check c;
  const auto task = checkerboard_task(extension_task(10, CheckerboardTaskSpec::Labels::checkerboard, 0.89, 10000, 42));
  const auto grid = default_extension_grid();
  std::size_t previous = 0;
  for (double r : grid) {
    const auto ext = extend_all(task.embeddings, task.votes, std::vector<double>{r, 0.0, 0.0});
    std::size_t covered = 0;
    for (std::size_t i = 0; i < task.votes.n(); ++i) {
      covered += ext.votes.at(i, 0) != 0;
      for (std::size_t k = 0; k < 3; ++k) {
        if (task.votes.at(i, k) != 0) {
          c.require(ext.votes.at(i, k) == task.votes.at(i, k), "supported vote changed at r=" + num(r));
        }
      }
    }
    c.require(covered >= previous, "coverage shrank at r=" + num(r));
    previous = covered;
  }

  // Source 0 votes on x < 0.55; its extension crosses into the next tile
  // column once r exceeds 0.05, after which the extended votes get worse.
  const auto& curve = extension_curves()[0];
  const auto& pts = curve.points;
  for (std::size_t g = 1; g < pts.size(); ++g) {
    if (pts[g - 1].r >= 0.05 - 1e-12) {
      c.require(pts[g].extended_accuracy < pts[g - 1].extended_accuracy,
                "extended accuracy did not fall between r=" + num(pts[g - 1].r) + " and r=" + num(pts[g].r));
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 0; g < pts.size(); ++g) {
    if (pts[g].reduction > pts[best].reduction) best = g;
  }
  c.require(best > 0 && best + 1 < pts.size(), "lift peaks at the grid edge r=" + num(pts[best].r));
  c.require(pts.back().reduction < pts[best].reduction, "lift does not fall after its peak");
  return c;
}

Check smoothness_estimators() {
  Check c;
  ts::Gen g(110);
  const auto emb = ts::random_embeddings(g, 60, 2);
  for (double v : label_lipschitz_curve(emb, LabelVector(std::vector<std::int8_t>(60, 1)),
                                        NeighborhoodSpec::radius_grid({0.1, 0.5, 1.0, 5.0}))) {
    c.require(v == 0.0, "constant labels give " + num(v));
  }
  const std::vector<double> grid = {0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = ts::pick(g, 2, 80), m = ts::pick(g, 1, 4);
    const auto e = ts::random_embeddings(g, n, ts::pick(g, 1, 3));
    const auto y = ts::random_labels(g, n);
    const auto votes = ts::random_votes(g, n, m, ts::uniform(g, 0.1, 0.9));
    const auto curve = local_pl_curve(e, y, votes, grid);
    for (std::size_t k = 1; k < curve.size(); ++k) {
      c.require(curve[k] >= curve[k - 1], "pl curve decreased in trial " + std::to_string(trial));
    }
  }
  const EmbeddingDataset line(2, 1, {0.0f, 0.3f}, Metric::euclidean);
  const auto fixture = local_pl_curve(line, LabelVector({1, -1}), VoteMatrix(2, 1, {1, 0}), {0.1, 0.5});
  c.require(fixture == std::vector<double>{0.0, 1.0}, "hand fixture mismatch");
  return c;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::map<std::string, std::uint64_t> hash_tree(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), root).string()] = fnv1a(liger::detail::read_file(entry.path()));
    }
  }
  return out;
}

// Full pipeline in one directory; returns the stdout of every step. Both runs
// use the same directory so the absolute support paths in model.json match.
std::string run_pipeline(const fs::path& dir, Check& c) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  liger::detail::write_file(p("board.json"),
                            R"({"n": 800, "grid": 4, "sources": [
                                 {"support": [0, 0, 0.55, 1], "density": 0.3, "accuracy": 0.89},
                                 {"density": 0.5, "accuracy": 0.6},
                                 {"density": 0.5, "accuracy": 0.5}]})");
  liger::detail::write_file(p("model_spec.json"), R"({"accuracies": [0.8, 0.6, 0.7], "n": 500})");
  liger::detail::write_file(p("two.json"),
                            R"({"a": {"accuracies": [0.9, 0.9, 0.3]}, "b": {"accuracies": [0.3, 0.9, 0.9]}, "n_each": 200})");
  liger::detail::write_file(p("config.json"), R"({"seed": 17, "s": 3, "radii": [0.03, 0, 0]})");
  liger::detail::write_file(p("bv.json"), R"({"n_each": 300})");
  liger::detail::write_file(p("ext.json"), R"({"n": 1500})");

  const std::vector<std::vector<std::string>> steps = {
      {"synth", "--kind", "checkerboard", "--config", p("board.json"), "--seed", "1", "--out", p("train")},
      {"synth", "--kind", "checkerboard", "--config", p("board.json"), "--seed", "2", "--out", p("dev")},
      {"synth", "--kind", "model", "--config", p("model_spec.json"), "--seed", "3", "--out", p("model_data")},
      {"synth", "--kind", "two-population", "--config", p("two.json"), "--seed", "4", "--out", p("two_data")},
      {"partition", "--embeddings", p("train/embeddings.lgem"), "--s", "4", "--seed", "5", "--out",
       p("partition.json")},
      {"extend", "--embeddings", p("train/embeddings.lgem"), "--votes", p("train/votes.csv"), "--radii",
       "0.03,0,0", "--out", p("extended.csv")},
      {"fit", "--embeddings", p("train/embeddings.lgem"), "--votes", p("train/votes.csv"), "--config",
       p("config.json"), "--out", p("model.json")},
      {"predict", "--model", p("model.json"), "--embeddings", p("dev/embeddings.lgem"), "--votes",
       p("dev/votes.csv"), "--out", p("predictions.csv")},
      {"evaluate", "--predictions", p("predictions.csv"), "--labels", p("dev/labels.csv"), "--out",
       p("metrics.json")},
      {"tune", "--embeddings", p("train/embeddings.lgem"), "--votes", p("train/votes.csv"), "--dev-embeddings",
       p("dev/embeddings.lgem"), "--dev-votes", p("dev/votes.csv"), "--dev-labels", p("dev/labels.csv"),
       "--r-grid", "0,0.02,0.04", "--s-max", "3", "--seed", "6", "--out", p("tune.json")},
      {"smoothness", "--embeddings", p("train/embeddings.lgem"), "--labels", p("train/labels.csv"), "--votes",
       p("train/votes.csv"), "--r-grid", "0.02,0.05,0.1", "--out", p("smoothness.csv")},
      {"bench", "--kind", "bias-variance", "--config", p("bv.json"), "--seeds", "3", "--seed", "7", "--out",
       p("bias_variance.csv")},
      {"bench", "--kind", "extension", "--config", p("ext.json"), "--r-grid", "0,0.02,0.05", "--seed", "8",
       "--out", p("extension.csv")},
  };
  std::string transcript;
  for (const auto& args : steps) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    c.require(code == 0, args[0] + " exited " + std::to_string(code) + ": " + err.str());
    transcript += args[0] + "\n" + out.str();
  }
  return transcript;
}

Check determinism() {
  Check c;
  const auto base = fs::temp_directory_path() / "liger_acceptance_determinism";
  const auto first = run_pipeline(base / "run", c);
  const auto hashes = hash_tree(base / "run");
  fs::rename(base / "run", base / "first");
  const auto second = run_pipeline(base / "run", c);
  const auto again = hash_tree(base / "run");
  c.require(first == second, "stdout differs between runs");
  c.require(hashes.size() > 15, "only " + std::to_string(hashes.size()) + " files produced");
  c.require(hashes == again, "artifact hashes differ between runs");
  fs::remove_all(base);
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Check()>>> criteria = {
      {1, exact_moment_recovery}, {2, worked_fixture},       {3, posterior_oracle},
      {4, abstain_and_normalization}, {5, pooled_baseline},  {6, sampled_recovery},
      {7, bias_variance},         {8, extension_tradeoff},   {9, extension_structure},
      {10, smoothness_estimators}, {11, determinism},
  };
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    Check result;
    try {
      result = run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.why = std::string("threw: ") + e.what();
    }
    std::printf("criterion %d: %s%s%s\n", id, result.ok ? "PASS" : "FAIL", result.ok ? "" : " - ",
                result.why.c_str());
    std::fflush(stdout);
    failures += !result.ok;
  }
  return failures == 0 ? 0 : 1;
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "liger/bench.hpp"
#include "liger/metrics.hpp"
#include "liger/tune.hpp"
#include "test_support.hpp"

using namespace liger;
namespace ts = testing_support;

TEST(Metrics, PerfectPosteriors) {
  const LabelVector y({1, -1, 1});
  const auto r = compute_metrics(std::vector<double>{1.0, 0.0, 1.0}, y);
  EXPECT_EQ(r.cross_entropy, 0.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.n_evaluated, 3u);
}

TEST(Metrics, UninformativePosteriors) {
  const LabelVector y({1, -1, -1, 1});
  EXPECT_NEAR(compute_metrics(std::vector<double>(4, 0.5), y).cross_entropy, std::log(2.0), 1e-15);
}

TEST(Metrics, F1FromCounts) {
  // TP = 1, FP = 1, FN = 1, TN = 1.
  const LabelVector y({1, -1, 1, -1});
  const auto r = compute_metrics(std::vector<double>{0.9, 0.8, 0.1, 0.2}, y);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_EQ(compute_metrics(std::vector<double>{0.1, 0.1}, LabelVector({-1, -1})).f1, 0.0);
}

TEST(Metrics, ConfidentMistakeIsFloored) {
  const auto r = compute_metrics(std::vector<double>{0.0}, LabelVector({1}));
  EXPECT_NEAR(r.cross_entropy, -std::log(kProbabilityFloor), 1e-9);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics(std::vector<double>{0.5}, LabelVector({1, 1})), ShapeError);
  EXPECT_THROW(compute_metrics(std::vector<double>{1.5}, LabelVector({1})), ValidationError);
}

TEST(Metrics, PermutationInvariant) {
  ts::Gen g(1);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = ts::pick(g, 1, 50);
    std::vector<double> post(n);
    for (auto& p : post) p = ts::uniform(g, 0.0, 1.0);
    const auto y = ts::random_labels(g, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    std::vector<double> post2(n);
    std::vector<std::int8_t> y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      post2[i] = post[perm[i]];
      y2[i] = static_cast<std::int8_t>(y[perm[i]]);
    }
    const auto a = compute_metrics(post, y);
    const auto b = compute_metrics(post2, LabelVector(y2));
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.f1, b.f1);
    EXPECT_NEAR(a.cross_entropy, b.cross_entropy, 1e-12);
  }
}

namespace {

struct TuneFixture {
  CheckerboardTask train, dev;
};

TuneFixture checkerboard_fixture(std::size_t n) {
  auto spec = extension_task(2, CheckerboardTaskSpec::Labels::checkerboard, 0.89, n, 21);
  auto dev_spec = spec;
  dev_spec.seed = 22;
  return {checkerboard_task(spec), checkerboard_task(dev_spec)};
}

}  // namespace

TEST(Tune, SingleCandidate) {
  const auto f = checkerboard_fixture(600);
  EngineConfig cfg;
  cfg.seed = 1;
  const auto r = tune(f.train.embeddings, f.train.votes, f.dev.embeddings, f.dev.votes, &f.dev.labels, cfg,
                      {0.02}, 1);
  EXPECT_EQ(r.s, 1u);
  EXPECT_EQ(r.radii[0], 0.02);
}

TEST(Tune, MissingDevLabelsAndEmptyGrid) {
  const auto f = checkerboard_fixture(100);
  EngineConfig cfg;
  EXPECT_THROW(tune(f.train.embeddings, f.train.votes, f.dev.embeddings, f.dev.votes, nullptr, cfg, {0.1}),
               ArgumentError);
  EXPECT_THROW(tune(f.train.embeddings, f.train.votes, f.dev.embeddings, f.dev.votes, &f.dev.labels, cfg, {}),
               ArgumentError);
}

TEST(Tune, FullCoverageSourcesArePinned) {
  auto spec = extension_task(2, CheckerboardTaskSpec::Labels::checkerboard, 0.89, 600, 5);
  spec.sources[1].density = 1.0;
  auto dev_spec = spec;
  dev_spec.seed = 6;
  const auto train = checkerboard_task(spec);
  const auto dev = checkerboard_task(dev_spec);
  EngineConfig cfg;
  cfg.seed = 3;
  const auto r = tune(train.embeddings, train.votes, dev.embeddings, dev.votes, &dev.labels, cfg,
                      {0.0, 0.02, 0.05, 0.1}, 2);
  EXPECT_EQ(r.radii[1], 0.0);
  for (const auto& e : r.search_trace) EXPECT_EQ(e.radii[1], 0.0);
}

TEST(Tune, ReportedMetricIsReproducible) {
  const auto f = checkerboard_fixture(800);
  EngineConfig cfg;
  cfg.seed = 9;
  const auto r = tune(f.train.embeddings, f.train.votes, f.dev.embeddings, f.dev.votes, &f.dev.labels, cfg,
                      {0.0, 0.01, 0.03}, 3);
  auto best = cfg;
  best.radii = r.radii;
  best.s = r.s;
  const auto model = fit(f.train.embeddings, extend_all(f.train.embeddings, f.train.votes, r.radii), best);
  const auto preds = predict(model, f.dev.embeddings, f.dev.votes);
  EXPECT_EQ(compute_metrics(preds.posterior, f.dev.labels).f1, r.dev_metric);
  // Ties resolve toward the earlier candidate, so the incumbent is never beaten in the trace.
  for (const auto& e : r.search_trace) EXPECT_LE(e.metric, r.dev_metric);
}

TEST(Tune, ExtendingAccurateSourceBeatsBaseline) {
  auto spec = extension_task(10, CheckerboardTaskSpec::Labels::checkerboard, 0.89, 4000, 31);
  auto dev_spec = spec;
  dev_spec.seed = 32;
  const auto train = checkerboard_task(spec);
  const auto dev = checkerboard_task(dev_spec);
  EngineConfig cfg;
  cfg.seed = 1;
  const auto r = tune(train.embeddings, train.votes, dev.embeddings, dev.votes, &dev.labels, cfg,
                      {0.0, 0.01, 0.02, 0.03, 0.04}, 1, DevMetric::accuracy);
  ASSERT_EQ(r.search_trace.front().radii, std::vector<double>(3, 0.0));
  EXPECT_GT(r.radii[0], 0.0);
  EXPECT_GT(r.dev_metric, r.search_trace.front().metric);
}

TEST(MeanInterval, StudentT) {
  const auto ci = mean_confidence_interval({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(ci.mean, 2.0);
  // With 2 degrees of freedom the t quantile is (2p - 1) / sqrt(2p(1 - p)); se = 1 / sqrt(3).
  const double p = 0.975;
  const double t = (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));
  EXPECT_NEAR(ci.hi - ci.mean, t / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(ci.mean - ci.lo, ci.hi - ci.mean, 1e-15);
  const auto one = mean_confidence_interval({5.0});
  EXPECT_EQ(one.lo, 5.0);
  EXPECT_EQ(one.hi, 5.0);
}

TEST(BiasVariance, TableShapeAndArguments) {
  const auto [a, b] = separated_populations();
  const auto rows = bench_bias_variance(a, b, 200, {1, 2, 4, 8}, 3, 7);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.per_seed.size(), 3u);
    EXPECT_LE(r.cross_entropy.lo, r.cross_entropy.mean);
    EXPECT_GE(r.cross_entropy.hi, r.cross_entropy.mean);
  }
  const auto csv = encode_bias_variance_csv(rows);
  EXPECT_EQ(csv.rfind("s,mean,ci_lo,ci_hi\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_THROW(bench_bias_variance(a, b, 200, {2, 1}, 1, 7), ArgumentError);
  EXPECT_THROW(bench_bias_variance(a, b, 200, {3}, 1, 7), ArgumentError);
}

TEST(BiasVariance, PopulationPartsSplitEvenly) {
  std::vector<std::uint8_t> membership(8, 0);
  std::fill(membership.begin() + 4, membership.end(), 1);
  EXPECT_EQ(detail::population_parts(membership, 4, 4), (std::vector<std::size_t>{0, 0, 1, 1, 2, 2, 3, 3}));
  EXPECT_EQ(detail::population_parts(membership, 4, 1), std::vector<std::size_t>(8, 0));
}

TEST(Extension, ZeroRadiusEqualsUnextendedAndCurvesShareBaseline) {
  std::vector<ExtensionVariant> variants;
  using L = CheckerboardTaskSpec::Labels;
  variants.push_back({"fine", extension_task(10, L::checkerboard, 0.89, 1500, 3)});
  variants.push_back({"coarse", extension_task(2, L::checkerboard, 0.89, 1500, 3)});
  variants.push_back({"random", extension_task(10, L::random, 0.89, 1500, 3)});
  const auto curves = bench_extension(variants, {0.0, 0.02, 0.05}, 0);
  ASSERT_EQ(curves.size(), 3u);
  for (const auto& c : curves) {
    EXPECT_EQ(c.points[0].cross_entropy, c.baseline_cross_entropy);
    EXPECT_EQ(c.points[0].reduction, 0.0);
    EXPECT_EQ(c.points[0].extended_count, 0u);
    // Labels only enter through vote-label agreement, which these variants share.
    EXPECT_NEAR(c.baseline_cross_entropy, curves[0].baseline_cross_entropy, 1e-12);
  }
  const auto csv = encode_extension_csv(curves);
  EXPECT_EQ(csv.rfind("r,variant,cross_entropy\n0,fine,", 0), 0u);
  EXPECT_THROW(bench_extension(variants, {0.0}, 3), ArgumentError);
}

TEST(Extension, DefaultGrid) {
  const auto grid = default_extension_grid();
  ASSERT_EQ(grid.size(), 21u);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_NEAR(grid.back(), 0.1, 1e-15);
}

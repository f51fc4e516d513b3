#pragma once

// Synthetic benchmark drivers: the part-count bias/variance sweep on two
// populations, and the extension-radius sweep on checkerboard tasks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "liger/extend.hpp"
#include "liger/io.hpp"
#include "liger/label_model.hpp"
#include "liger/metrics.hpp"
#include "liger/random.hpp"
#include "liger/synthetic.hpp"

namespace liger {

struct MeanInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Mean and two-sided Student-t confidence interval.
inline MeanInterval mean_confidence_interval(const std::vector<double>& xs, double level = 0.95) {
  MeanInterval out;
  if (xs.empty()) return out;
  const auto n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  out.lo = out.hi = out.mean;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  out.lo = out.mean - t * se;
  out.hi = out.mean + t * se;
  return out;
}

// ---------------------------------------------------------------------------
// Bias/variance in the number of parts

struct BiasVarianceRow {
  std::size_t s = 1;
  MeanInterval cross_entropy;
  std::vector<double> per_seed;
};

namespace detail {

// s = 1 pools everything; otherwise each population is cut into s/2
// contiguous, equally sized chunks.
inline std::vector<std::size_t> population_parts(const std::vector<std::uint8_t>& membership,
                                                 std::size_t n_each, std::size_t s) {
  std::vector<std::size_t> out(membership.size(), 0);
  if (s == 1) return out;
  const std::size_t per_pop = s / 2;
  std::size_t rank[2] = {0, 0};
  for (std::size_t i = 0; i < membership.size(); ++i) {
    const std::size_t p = membership[i];
    out[i] = p * per_pop + rank[p]++ * per_pop / n_each;
  }
  return out;
}

}  // namespace detail

// For each seed: sample train and test bundles, fit with each s on
// membership-based parts, and record mean test cross-entropy.
inline std::vector<BiasVarianceRow> bench_bias_variance(const SyntheticModelSpec& spec_a,
                                                        const SyntheticModelSpec& spec_b,
                                                        std::size_t n_each,
                                                        const std::vector<std::size_t>& s_list,
                                                        std::size_t n_seeds, std::uint64_t seed) {
  if (!std::is_sorted(s_list.begin(), s_list.end())) throw ArgumentError("s list must be ascending");
  for (auto s : s_list) {
    if (s == 0 || (s > 1 && s % 2 != 0) || s / 2 > n_each) {
      throw ArgumentError("each s must be 1 or an even number splitting both populations");
    }
  }
  const double prior_a = conditional_tables(spec_a).prior_pos;
  const double prior_b = conditional_tables(spec_b).prior_pos;

  std::vector<BiasVarianceRow> rows(s_list.size());
  for (std::size_t r = 0; r < s_list.size(); ++r) rows[r].s = s_list[r];
  for (std::size_t t = 0; t < n_seeds; ++t) {
    const auto train = two_population_dataset(spec_a, spec_b, n_each, Rng::derive(seed, 2 * t));
    const auto test = two_population_dataset(spec_a, spec_b, n_each, Rng::derive(seed, 2 * t + 1));
    for (std::size_t r = 0; r < s_list.size(); ++r) {
      const std::size_t s = s_list[r];
      EngineConfig cfg;
      cfg.seed = seed;
      cfg.s = s;
      cfg.class_balance_mode = ClassBalanceMode::explicit_list;
      std::vector<double> balances(s);
      for (std::size_t j = 0; j < s; ++j) {
        balances[j] = s == 1 ? 0.5 * (prior_a + prior_b) : (j < s / 2 ? prior_a : prior_b);
      }
      cfg.explicit_balances = balances;
      auto part = partition_from_assignment(train.embeddings,
                                            detail::population_parts(train.membership, n_each, s), s);
      const auto model = fit_with_partition(std::move(part), train.embeddings, unextended(train.votes), cfg);
      const auto test_parts = detail::population_parts(test.membership, n_each, s);
      std::vector<double> post(test.votes.n());
      for (std::size_t i = 0; i < test.votes.n(); ++i) {
        post[i] = posterior_in_part(model, test_parts[i], test.votes.row(i));
      }
      rows[r].per_seed.push_back(compute_metrics(post, test.labels).cross_entropy);
    }
  }
  for (auto& row : rows) row.cross_entropy = mean_confidence_interval(row.per_seed);
  return rows;
}

// Two populations whose accurate and inaccurate sources are swapped; pooling
// them averages each accuracy to 0.6.
inline std::pair<SyntheticModelSpec, SyntheticModelSpec> separated_populations() {
  const std::vector<double> cov(6, 0.7);
  return {spec_from_accuracies({0.9, 0.9, 0.9, 0.3, 0.3, 0.3}, cov),
          spec_from_accuracies({0.3, 0.3, 0.3, 0.9, 0.9, 0.9}, cov)};
}

inline std::string encode_bias_variance_csv(const std::vector<BiasVarianceRow>& rows) {
  std::string out = "s,mean,ci_lo,ci_hi\n";
  for (const auto& r : rows) {
    out += std::to_string(r.s) + "," + format_double(r.cross_entropy.mean) + "," +
           format_double(r.cross_entropy.lo) + "," + format_double(r.cross_entropy.hi) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extension radius sweep

struct ExtensionVariant {
  std::string name;
  CheckerboardTaskSpec task;
};

struct ExtensionPoint {
  double r = 0.0;
  double cross_entropy = 0.0;      // test set
  double reduction = 0.0;          // cross-entropy at r = 0 minus at r
  double extended_accuracy = 0.0;  // fraction of extended training votes that match the label
  std::size_t extended_count = 0;
};

struct ExtensionCurve {
  std::string name;
  double baseline_cross_entropy = 0.0;  // fit without any extension
  std::vector<ExtensionPoint> points;

  double best_reduction() const {
    double best = 0.0;
    for (const auto& p : points) best = std::max(best, p.reduction);
    return best;
  }
};

// For each variant and radius: extend only `extendable`, fit with s = 1,
// and score cross-entropy on an independent draw of the same task.
inline std::vector<ExtensionCurve> bench_extension(const std::vector<ExtensionVariant>& variants,
                                                   const std::vector<double>& r_grid,
                                                   std::size_t extendable) {
  std::vector<ExtensionCurve> curves;
  for (const auto& variant : variants) {
    const std::size_t m = variant.task.sources.size();
    if (extendable >= m) throw ArgumentError("extendable source index out of range");
    auto test_spec = variant.task;
    test_spec.seed = Rng::derive(variant.task.seed, 7);
    const auto train = checkerboard_task(variant.task);
    const auto test = checkerboard_task(test_spec);

    EngineConfig cfg;
    cfg.s = 1;
    cfg.seed = variant.task.seed;

    const auto score = [&](const ExtendedVoteMatrix& train_ext, const VoteMatrix& test_votes) {
      const auto model = fit(train.embeddings, train_ext, cfg);
      const auto preds = predict_extended(model, test.embeddings, test_votes);
      return compute_metrics(preds.posterior, test.labels).cross_entropy;
    };

    ExtensionCurve curve;
    curve.name = variant.name;
    curve.baseline_cross_entropy = score(unextended(train.votes), test.votes);

    const NeighborIndex train_index(train.embeddings, train.votes, train.embeddings, train.votes, true);
    const NeighborIndex test_index(train.embeddings, train.votes, test.embeddings, test.votes, false);
    double at_zero = 0.0;
    for (std::size_t g = 0; g < r_grid.size(); ++g) {
      std::vector<double> radii(m, 0.0);
      radii[extendable] = r_grid[g];
      const auto train_ext = train_index.extend(train.votes, radii);
      const auto test_ext = test_index.extend(test.votes, radii);
      ExtensionPoint p;
      p.r = r_grid[g];
      p.cross_entropy = score(train_ext, test_ext.votes);
      std::size_t right = 0;
      for (std::size_t i = 0; i < train.votes.n(); ++i) {
        if (train_ext.provenance_at(i, extendable) != Provenance::extended) continue;
        ++p.extended_count;
        right += train_ext.votes.at(i, extendable) == train.labels[i];
      }
      p.extended_accuracy =
          p.extended_count ? static_cast<double>(right) / static_cast<double>(p.extended_count) : 0.0;
      if (g == 0) at_zero = p.cross_entropy;
      p.reduction = at_zero - p.cross_entropy;
      curve.points.push_back(p);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

inline std::string encode_extension_csv(const std::vector<ExtensionCurve>& curves) {
  std::string out = "r,variant,cross_entropy\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += format_double(p.r) + "," + c.name + "," + format_double(p.cross_entropy) + "\n";
    }
  }
  return out;
}

// Three-source checkerboard task in which source 0 (the one that gets
// extended) votes only on x < 0.55; sources 1 and 2 vote sparsely everywhere.
inline CheckerboardTaskSpec extension_task(std::size_t grid, CheckerboardTaskSpec::Labels labels,
                                           double extended_accuracy, std::size_t n, std::uint64_t seed) {
  CheckerboardTaskSpec spec;
  spec.n = n;
  spec.grid = grid;
  spec.labels = labels;
  spec.seed = seed;
  spec.sources = {
      {Region{0.0, 0.0, 0.55, 1.0}, 0.3, extended_accuracy},
      {Region{}, 0.5, 0.6},
      {Region{}, 0.5, 0.5},
  };
  return spec;
}

// Radii 0, 0.005, ..., 0.1.
inline std::vector<double> default_extension_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(0.005 * k);
  return grid;
}

}  // namespace liger

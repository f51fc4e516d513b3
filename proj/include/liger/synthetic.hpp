#pragma once

// Samplers for the binary-label weak-supervision graphical model and for
// 2-D checkerboard extension tasks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/random.hpp"

namespace liger {

// Canonical parameters of one population:
//   Pr(y, votes) ∝ exp(theta_y*y + sum_i theta_i*v_i*y + theta_abstain_i*[v_i == 0]).
struct SyntheticModelSpec {
  std::size_t m = 0;
  double theta_y = 0.0;
  std::vector<double> theta;
  std::vector<double> theta_abstain;

  void validate() const {
    if (theta.size() != m || theta_abstain.size() != m) {
      throw ValidationError("synthetic spec needs m entries in theta and theta_abstain");
    }
    if (!std::isfinite(theta_y)) throw ValidationError("theta_y must be finite");
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::isfinite(theta[i]) || !std::isfinite(theta_abstain[i])) {
        throw ValidationError("synthetic spec parameters must be finite");
      }
    }
  }
};

// Exact marginals implied by a SyntheticModelSpec.
struct ConditionalTables {
  double prior_pos = 0.5;  // Pr(y = +1)
  // vote[i][y_index][v + 1]: Pr(lambda_i = v | y), y_index 0 for y = -1, 1 for y = +1.
  std::vector<std::array<std::array<double, 3>, 2>> vote;

  double prob(std::size_t source, int y, int v) const { return vote[source][y > 0 ? 1 : 0][v + 1]; }

  // E[lambda_i * y | lambda_i != 0], identical for both y.
  double accuracy(std::size_t source) const {
    const double right = prob(source, 1, 1), wrong = prob(source, 1, -1);
    return (right - wrong) / (right + wrong);
  }

  double coverage(std::size_t source) const { return 1.0 - prob(source, 1, 0); }
};

inline ConditionalTables conditional_tables(const SyntheticModelSpec& spec) {
  spec.validate();
  ConditionalTables t;
  t.vote.resize(spec.m);
  std::array<double, 2> log_weight{};
  for (int yi = 0; yi < 2; ++yi) {
    const double y = yi == 0 ? -1.0 : 1.0;
    log_weight[yi] = spec.theta_y * y;
    for (std::size_t i = 0; i < spec.m; ++i) {
      const double e_pos = std::exp(spec.theta[i] * y);
      const double e_neg = std::exp(-spec.theta[i] * y);
      const double e_abs = std::exp(spec.theta_abstain[i]);
      const double z = e_pos + e_neg + e_abs;
      t.vote[i][yi] = {e_neg / z, e_abs / z, e_pos / z};
      log_weight[yi] += std::log(z);
    }
  }
  t.prior_pos = 1.0 / (1.0 + std::exp(log_weight[0] - log_weight[1]));
  return t;
}

// theta_i reaching accuracy `a` for a given theta_abstain, by bisection to 1e-10.
inline double theta_for_accuracy(double a, double theta_abstain) {
  if (!(a > -1.0 && a < 1.0)) throw ArgumentError("target accuracy must lie in (-1, 1)");
  const auto accuracy_at = [&](double th) {
    SyntheticModelSpec one{1, 0.0, {th}, {theta_abstain}};
    return conditional_tables(one).accuracy(0);
  };
  double lo = -40.0, hi = 40.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (accuracy_at(mid) < a ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline constexpr double kFullCoverageThetaAbstain = -50.0;

// theta_abstain giving Pr(lambda != 0) = coverage under theta.
inline double theta_abstain_for_coverage(double theta, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ArgumentError("coverage must lie in (0, 1]");
  if (coverage == 1.0) return kFullCoverageThetaAbstain;
  return std::log(2.0 * std::cosh(theta) * (1.0 - coverage) / coverage);
}

// Spec with the requested accuracies, coverages and Pr(y = +1).
inline SyntheticModelSpec spec_from_accuracies(const std::vector<double>& accuracies,
                                               const std::vector<double>& coverages,
                                               double positive_prior = 0.5) {
  if (accuracies.size() != coverages.size()) throw ArgumentError("accuracies and coverages differ in length");
  if (!(positive_prior > 0.0 && positive_prior < 1.0)) throw ArgumentError("prior must lie in (0, 1)");
  SyntheticModelSpec spec;
  spec.m = accuracies.size();
  // Each Z_i(y) is symmetric in y, so only theta_y moves the prior.
  spec.theta_y = 0.5 * std::log(positive_prior / (1.0 - positive_prior));
  for (std::size_t i = 0; i < spec.m; ++i) {
    const double th = std::atanh(std::clamp(accuracies[i], -1.0 + 1e-15, 1.0 - 1e-15));
    const double th0 = theta_abstain_for_coverage(th, coverages[i]);
    spec.theta.push_back(theta_for_accuracy(accuracies[i], th0));
    spec.theta_abstain.push_back(th0);
  }
  return spec;
}

struct SyntheticSample {
  LabelVector labels;
  VoteMatrix votes;
  std::vector<double> true_accuracy;  // analytic, from the tables
};

namespace detail {

inline void sample_rows(const ConditionalTables& t, std::size_t m, std::size_t n, Rng& rng,
                        std::vector<std::int8_t>& labels, std::vector<std::int8_t>& votes) {
  for (std::size_t x = 0; x < n; ++x) {
    const int y = rng.uniform() < t.prior_pos ? 1 : -1;
    labels.push_back(static_cast<std::int8_t>(y));
    for (std::size_t i = 0; i < m; ++i) {
      // Inverse CDF over the order +1, -1, 0.
      const double u = rng.uniform();
      const double p_pos = t.prob(i, y, 1);
      const double p_neg = t.prob(i, y, -1);
      votes.push_back(u < p_pos ? 1 : u < p_pos + p_neg ? -1 : 0);
    }
  }
}

}  // namespace detail

// Samples n points: y from Pr(y), then each vote independently given y.
inline SyntheticSample sample_dataset(const SyntheticModelSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("sample size must be >= 1");
  const auto tables = conditional_tables(spec);
  Rng rng(seed);
  std::vector<std::int8_t> labels, votes;
  labels.reserve(n);
  votes.reserve(n * spec.m);
  detail::sample_rows(tables, spec.m, n, rng, labels, votes);
  SyntheticSample out{LabelVector(std::move(labels)), VoteMatrix(n, spec.m, std::move(votes)), {}};
  for (std::size_t i = 0; i < spec.m; ++i) out.true_accuracy.push_back(tables.accuracy(i));
  return out;
}

// Two populations side by side in a 2-D embedding: population p occupies
// [10p, 10p + 1] x [0, 1].
struct TwoPopulationBundle {
  EmbeddingDataset embeddings;
  LabelVector labels;
  VoteMatrix votes;
  std::vector<std::uint8_t> membership;  // 0 for spec_a, 1 for spec_b
  std::vector<double> accuracy_a, accuracy_b;
};

inline TwoPopulationBundle two_population_dataset(const SyntheticModelSpec& spec_a,
                                                  const SyntheticModelSpec& spec_b,
                                                  std::size_t n_each, std::uint64_t seed) {
  if (spec_a.m != spec_b.m) throw ArgumentError("populations must have the same number of sources");
  if (n_each == 0) throw ArgumentError("n_each must be >= 1");
  const std::size_t m = spec_a.m;
  const auto ta = conditional_tables(spec_a);
  const auto tb = conditional_tables(spec_b);
  std::vector<std::int8_t> labels, votes;
  Rng ra(Rng::derive(seed, 0)), rb(Rng::derive(seed, 1)), rc(Rng::derive(seed, 2));
  detail::sample_rows(ta, m, n_each, ra, labels, votes);
  detail::sample_rows(tb, m, n_each, rb, labels, votes);
  std::vector<float> coords;
  std::vector<std::uint8_t> membership;
  for (std::size_t x = 0; x < 2 * n_each; ++x) {
    const std::uint8_t p = x < n_each ? 0 : 1;
    membership.push_back(p);
    coords.push_back(static_cast<float>(10.0 * p + rc.uniform()));
    coords.push_back(static_cast<float>(rc.uniform()));
  }
  TwoPopulationBundle out{EmbeddingDataset(2 * n_each, 2, std::move(coords), Metric::euclidean),
                          LabelVector(std::move(labels)), VoteMatrix(2 * n_each, m, std::move(votes)),
                          std::move(membership), {}, {}};
  for (std::size_t i = 0; i < m; ++i) {
    out.accuracy_a.push_back(ta.accuracy(i));
    out.accuracy_b.push_back(tb.accuracy(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkerboard tasks over [0, 1]^2

struct Region {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct CheckerboardSource {
  Region support;
  double density = 1.0;   // Pr(vote) for a point inside the support region
  double accuracy = 1.0;  // E[vote * y | vote != 0]
};

struct CheckerboardTaskSpec {
  enum class Labels { checkerboard, random };
  std::size_t n = 0;
  std::size_t grid = 10;
  Labels labels = Labels::checkerboard;
  std::uint64_t seed = 0;
  std::vector<CheckerboardSource> sources;

  void validate() const {
    if (grid < 1) throw ValidationError("checkerboard grid must be >= 1");
    for (const auto& s : sources) {
      if (!(s.accuracy > 0.0 && s.accuracy <= 1.0)) {
        throw ValidationError("checkerboard source accuracy must lie in (0, 1]");
      }
      if (!(s.density >= 0.0 && s.density <= 1.0)) {
        throw ValidationError("checkerboard source density must lie in [0, 1]");
      }
    }
  }
};

// +1 on tiles with even (row + column) parity.
inline int checkerboard_label(double x, double y, std::size_t grid) {
  const auto g = static_cast<double>(grid);
  const auto tile = [&](double c) {
    auto t = static_cast<std::size_t>(std::floor(c * g));
    return t < grid ? t : grid - 1;
  };
  return (tile(x) + tile(y)) % 2 == 0 ? 1 : -1;
}

struct CheckerboardTask {
  EmbeddingDataset embeddings;
  LabelVector labels;
  VoteMatrix votes;
};

// Every source draws a coverage and a correctness uniform for every point,
// so changing one source's accuracy leaves its support and all other draws intact.
inline CheckerboardTask checkerboard_task(const CheckerboardTaskSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n, m = spec.sources.size();
  Rng coord_rng(Rng::derive(spec.seed, 0));
  Rng label_rng(Rng::derive(spec.seed, 1));
  std::vector<float> coords(2 * n);
  std::vector<std::int8_t> labels(n);
  for (std::size_t x = 0; x < n; ++x) {
    coords[2 * x] = static_cast<float>(coord_rng.uniform());
    coords[2 * x + 1] = static_cast<float>(coord_rng.uniform());
    labels[x] = static_cast<std::int8_t>(
        spec.labels == CheckerboardTaskSpec::Labels::random
            ? (label_rng.uniform() < 0.5 ? 1 : -1)
            : checkerboard_label(coords[2 * x], coords[2 * x + 1], spec.grid));
  }
  std::vector<std::int8_t> votes(n * m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& src = spec.sources[k];
    Rng rng(Rng::derive(spec.seed, 100 + k));
    for (std::size_t x = 0; x < n; ++x) {
      const double u_cov = rng.uniform();
      const double u_acc = rng.uniform();
      if (!src.support.contains(coords[2 * x], coords[2 * x + 1]) || !(u_cov < src.density)) continue;
      const int y = labels[x];
      votes[x * m + k] = static_cast<std::int8_t>(u_acc < (1.0 + src.accuracy) / 2.0 ? y : -y);
    }
  }
  return {EmbeddingDataset(n, 2, std::move(coords), Metric::euclidean), LabelVector(std::move(labels)),
          VoteMatrix(n, m, std::move(votes))};
}

// ---------------------------------------------------------------------------
// JSON documents for the CLI

inline SyntheticModelSpec synthetic_spec_from_json(const nlohmann::json& j) {
  try {
    SyntheticModelSpec spec;
    if (j.contains("accuracies")) {
      const auto acc = j.at("accuracies").get<std::vector<double>>();
      const auto cov = j.contains("coverages") ? j.at("coverages").get<std::vector<double>>()
                                               : std::vector<double>(acc.size(), 1.0);
      return spec_from_accuracies(acc, cov, j.value("positive_prior", 0.5));
    }
    spec.theta = j.at("theta").get<std::vector<double>>();
    spec.theta_abstain = j.at("theta_abstain").get<std::vector<double>>();
    spec.theta_y = j.value("theta_y", 0.0);
    spec.m = spec.theta.size();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed synthetic spec: ") + e.what());
  }
}

inline CheckerboardTaskSpec checkerboard_spec_from_json(const nlohmann::json& j) {
  try {
    CheckerboardTaskSpec spec;
    spec.n = j.at("n").get<std::size_t>();
    spec.grid = j.value("grid", std::size_t{10});
    const auto labels = j.value("labels", std::string("checkerboard"));
    if (labels == "random") spec.labels = CheckerboardTaskSpec::Labels::random;
    else if (labels != "checkerboard") throw ValidationError("checkerboard 'labels' must be checkerboard or random");
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& s : j.at("sources")) {
      CheckerboardSource src;
      if (s.contains("support")) {
        const auto r = s.at("support").get<std::vector<double>>();
        if (r.size() != 4) throw ValidationError("checkerboard source 'support' must be [x0, y0, x1, y1]");
        src.support = {r[0], r[1], r[2], r[3]};
      }
      src.density = s.value("density", 1.0);
      src.accuracy = s.at("accuracy").get<double>();
      spec.sources.push_back(src);
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkerboard spec: ") + e.what());
  }
}

}  // namespace liger

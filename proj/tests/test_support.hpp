#pragma once

// Hand-rolled generators and independent oracles shared by the test binaries.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "liger/liger.hpp"

namespace testing_support {

using Gen = std::mt19937_64;

inline double uniform(Gen& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t pick(Gen& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline liger::EmbeddingDataset random_embeddings(Gen& g, std::size_t n, std::size_t d,
                                                 liger::Metric metric = liger::Metric::euclidean,
                                                 double scale = 1.0) {
  std::vector<float> data(n * d);
  for (auto& x : data) x = static_cast<float>(uniform(g, -scale, scale));
  if (metric == liger::Metric::cosine) {
    for (std::size_t i = 0; i < n; ++i) data[i * d] += static_cast<float>(2.0 * scale);
  }
  return liger::EmbeddingDataset(n, d, std::move(data), metric);
}

// Each entry abstains with probability p_abstain, else +-1 evenly.
inline liger::VoteMatrix random_votes(Gen& g, std::size_t n, std::size_t m, double p_abstain) {
  std::vector<std::int8_t> v(n * m);
  for (auto& x : v) {
    if (uniform(g, 0.0, 1.0) < p_abstain) {
      x = 0;
    } else {
      x = uniform(g, 0.0, 1.0) < 0.5 ? 1 : -1;
    }
  }
  return liger::VoteMatrix(n, m, std::move(v));
}

inline liger::LabelVector random_labels(Gen& g, std::size_t n) {
  std::vector<std::int8_t> y(n);
  for (auto& x : y) x = uniform(g, 0.0, 1.0) < 0.5 ? 1 : -1;
  return liger::LabelVector(std::move(y));
}

// Single-part model with the given parameters, over a 1-D dummy partition.
inline liger::LabelModel hand_model(std::vector<double> accuracies, std::vector<double> coverages,
                                    double balance) {
  liger::LabelModel model;
  model.s = 1;
  model.m = accuracies.size();
  model.accuracies = std::move(accuracies);
  model.coverages = std::move(coverages);
  model.class_balances = {balance};
  model.radii.assign(model.m, 0.0);
  model.estimate_kind.assign(model.m, liger::EstimateKind::local);
  model.partition.s = 1;
  model.partition.d = 1;
  model.partition.centroids = {0.0};
  model.partition.part_sizes = {1};
  model.partition.assignment = {0};
  return model;
}

inline liger::LabelModel random_model(Gen& g, std::size_t m) {
  std::vector<double> acc(m), cov(m);
  for (auto& a : acc) a = uniform(g, -0.95, 0.95);
  for (auto& c : cov) c = uniform(g, 0.05, 1.0);
  return hand_model(std::move(acc), std::move(cov), uniform(g, 0.05, 0.95));
}

// Every row of {-1, 0, 1}^m.
inline std::vector<std::vector<std::int8_t>> all_vote_rows(std::size_t m) {
  std::vector<std::vector<std::int8_t>> rows{{}};
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::vector<std::int8_t>> next;
    for (const auto& r : rows) {
      for (std::int8_t v : {-1, 0, 1}) {
        auto e = r;
        e.push_back(v);
        next.push_back(std::move(e));
      }
    }
    rows = std::move(next);
  }
  return rows;
}

// Bayes rule on the generative model, summed explicitly over y.
inline double bayes_posterior(const std::vector<double>& acc, const std::vector<double>& cov,
                              double balance, const std::vector<std::int8_t>& row) {
  double joint[2];
  for (int yi = 0; yi < 2; ++yi) {
    const int y = yi == 0 ? -1 : 1;
    double p = y == 1 ? balance : 1.0 - balance;
    for (std::size_t i = 0; i < row.size(); ++i) {
      p *= row[i] == 0 ? 1.0 - cov[i] : cov[i] * (1.0 + row[i] * y * acc[i]) / 2.0;
    }
    joint[yi] = p;
  }
  return joint[1] / (joint[0] + joint[1]);
}

inline std::size_t count_nonzero(const liger::VoteMatrix& v, std::size_t k) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < v.n(); ++i) c += v.at(i, k) != 0;
  return c;
}

}  // namespace testing_support

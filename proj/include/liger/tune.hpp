#pragma once

// Dev-set search over extension radii and part count:
//   1. one shared radius over a grid (s = 1),
//   2. per-source refinement around the shared optimum,
//   3. part count 1..s_max with radii frozen.
// Only strict improvements replace the incumbent, so ties keep the earlier
// (smaller r, smaller s) candidate.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/extend.hpp"
#include "liger/label_model.hpp"
#include "liger/metrics.hpp"

namespace liger {

enum class DevMetric { f1, accuracy };

struct TuneTraceEntry {
  std::string stage;  // "shared", "per_source", "parts"
  std::vector<double> radii;
  std::size_t s = 1;
  double metric = 0.0;
};

struct TuneResult {
  std::vector<double> radii;
  std::size_t s = 1;
  double dev_metric = 0.0;
  std::vector<TuneTraceEntry> search_trace;
};

inline constexpr double kRadiusMultipliers[] = {0.5, 0.75, 1.25, 1.5};

// Fits on the training set with the given hyperparameters and scores the dev set.
class DevEvaluator {
 public:
  DevEvaluator(const EmbeddingDataset& emb_train, const VoteMatrix& votes_train,
               const EmbeddingDataset& emb_dev, const VoteMatrix& votes_dev,
               const LabelVector& labels_dev, EngineConfig config, DevMetric metric)
      : emb_train_(emb_train), votes_train_(votes_train), emb_dev_(emb_dev), votes_dev_(votes_dev),
        labels_dev_(labels_dev), config_(std::move(config)), metric_(metric),
        train_index_(emb_train, votes_train, emb_train, votes_train, true),
        dev_index_(emb_train, votes_train, emb_dev, votes_dev, false) {
    if (labels_dev.n() != emb_dev.n()) throw ShapeError("dev labels and embeddings disagree on n");
  }

  ExtendedVoteMatrix extend_train(const std::vector<double>& radii) const {
    return train_index_.extend(votes_train_, radii);
  }

  double score(const std::vector<double>& radii, std::size_t s) const {
    auto cfg = config_;
    cfg.s = s;
    cfg.radii = radii;
    if (cfg.class_balance_mode == ClassBalanceMode::explicit_list && cfg.explicit_balances &&
        cfg.explicit_balances->size() != s) {
      cfg.explicit_balances->resize(s, cfg.explicit_balances->empty() ? 0.5 : cfg.explicit_balances->back());
    }
    const auto model = fit(emb_train_, extend_train(radii), cfg, DevLabels{&emb_dev_, &labels_dev_});
    const auto dev_ext = dev_index_.extend(votes_dev_, radii);
    const auto preds = predict_extended(model, emb_dev_, dev_ext.votes);
    const auto report = compute_metrics(preds.posterior, labels_dev_);
    return metric_ == DevMetric::f1 ? report.f1 : report.accuracy;
  }

 private:
  const EmbeddingDataset& emb_train_;
  const VoteMatrix& votes_train_;
  const EmbeddingDataset& emb_dev_;
  const VoteMatrix& votes_dev_;
  const LabelVector& labels_dev_;
  EngineConfig config_;
  DevMetric metric_;
  NeighborIndex train_index_;
  NeighborIndex dev_index_;
};

inline TuneResult tune(const EmbeddingDataset& emb_train, const VoteMatrix& votes_train,
                       const EmbeddingDataset& emb_dev, const VoteMatrix& votes_dev,
                       const LabelVector* labels_dev, const EngineConfig& config,
                       std::vector<double> r_grid, std::size_t s_max = 10,
                       DevMetric metric = DevMetric::f1) {
  if (!labels_dev) throw ArgumentError("tuning needs dev labels");
  if (r_grid.empty()) throw ArgumentError("radius grid is empty");
  if (s_max < 1) throw ArgumentError("s_max must be >= 1");
  for (double r : r_grid) {
    if (!(r >= 0.0)) throw ArgumentError("radius grid values must be non-negative");
  }
  std::sort(r_grid.begin(), r_grid.end());
  r_grid.erase(std::unique(r_grid.begin(), r_grid.end()), r_grid.end());
  if (emb_train.n() != votes_train.n()) throw ShapeError("training embeddings and votes disagree on n");
  if (emb_dev.n() != votes_dev.n()) throw ShapeError("dev embeddings and votes disagree on n");
  if (votes_dev.m() != votes_train.m()) throw ShapeError("dev votes have the wrong number of sources");

  const std::size_t m = votes_train.m();
  const DevEvaluator eval(emb_train, votes_train, emb_dev, votes_dev, *labels_dev, config, metric);

  // Sources voting on every training point are never extended.
  std::vector<bool> pinned(m, true);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < votes_train.n() && pinned[k]; ++i) pinned[k] = votes_train.at(i, k) != 0;
  }
  const auto shared = [&](double r) {
    std::vector<double> radii(m, r);
    for (std::size_t k = 0; k < m; ++k) {
      if (pinned[k]) radii[k] = 0.0;
    }
    return radii;
  };

  TuneResult result;
  bool have = false;
  const auto consider = [&](const char* stage, std::vector<double> radii, std::size_t s) {
    const double score = eval.score(radii, s);
    result.search_trace.push_back({stage, radii, s, score});
    if (!have || score > result.dev_metric) {
      have = true;
      result.dev_metric = score;
      result.radii = std::move(radii);
      result.s = s;
      return true;
    }
    return false;
  };

  for (double r : r_grid) consider("shared", shared(r), 1);
  const double r_star = result.radii.empty() ? 0.0 : *std::max_element(result.radii.begin(), result.radii.end());

  if (r_star > 0.0) {
    const auto ext = eval.extend_train(result.radii);
    std::vector<std::size_t> volume(m, 0);
    for (std::size_t i = 0; i < votes_train.n(); ++i) {
      for (std::size_t k = 0; k < m; ++k) volume[k] += ext.provenance_at(i, k) == Provenance::extended;
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return volume[a] > volume[b]; });
    for (std::size_t k : order) {
      if (pinned[k]) continue;
      for (double mult : kRadiusMultipliers) {
        // The local grid stays inside the span of the caller's grid.
        const double r = mult * r_star;
        if (r < r_grid.front() || r > r_grid.back()) continue;
        auto radii = result.radii;
        radii[k] = r;
        consider("per_source", std::move(radii), 1);
      }
    }
  }

  const std::size_t s_top =
      std::min(s_max, detail::distinct_points(detail::clustering_points(emb_train), emb_train.n(), emb_train.d()));
  for (std::size_t s = 2; s <= s_top; ++s) consider("parts", result.radii, s);
  return result;
}

}  // namespace liger

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "liger/error.hpp"

namespace liger {

enum class Metric : std::uint8_t { euclidean = 0, cosine = 1 };

inline std::string_view to_string(Metric m) {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw ValidationError("unknown metric '" + std::string(s) + "'");
}

// Distance between two embedding rows. Cosine distance is 1 - cosine similarity.
template <typename A, typename B>
double distance(Metric metric, std::span<const A> a, std::span<const B> b) {
  if (metric == Metric::euclidean) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// n x d matrix of finite float32 embeddings with the metric they live under.
class EmbeddingDataset {
 public:
  EmbeddingDataset() = default;

  EmbeddingDataset(std::size_t n, std::size_t d, std::vector<float> data, Metric metric)
      : n_(n), d_(d), data_(std::move(data)), metric_(metric) {
    validate();
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  Metric metric() const { return metric_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * d_, d_};
  }

  double distance(std::size_t i, std::size_t j) const {
    return liger::distance(metric_, row(i), row(j));
  }

  bool operator==(const EmbeddingDataset&) const = default;

 private:
  void validate() const {
    if (d_ == 0) throw ValidationError("embedding dimension must be positive");
    if (data_.size() != n_ * d_) throw ShapeError("embedding buffer size does not match n*d");
    for (std::size_t i = 0; i < n_; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d_; ++k) {
        const float v = data_[i * d_ + k];
        if (!std::isfinite(v)) {
          throw ValidationError("embedding row " + std::to_string(i) + " column " +
                                std::to_string(k) + " is not finite");
        }
        sq += static_cast<double>(v) * v;
      }
      if (metric_ == Metric::cosine && !(sq > 0.0)) {
        throw ValidationError("embedding row " + std::to_string(i) +
                              " has zero norm under cosine metric");
      }
    }
  }

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<float> data_;
  Metric metric_ = Metric::euclidean;
};

// n x m weak-source votes in {-1, 0, +1}; 0 is an abstain.
class VoteMatrix {
 public:
  VoteMatrix() = default;

  VoteMatrix(std::size_t n, std::size_t m, std::vector<std::int8_t> votes)
      : n_(n), m_(m), votes_(std::move(votes)) {
    if (votes_.size() != n_ * m_) throw ShapeError("vote buffer size does not match n*m");
    for (std::size_t i = 0; i < votes_.size(); ++i) {
      const int v = votes_[i];
      if (v < -1 || v > 1) {
        throw ValidationError("vote at row " + std::to_string(i / m_) + " source " +
                              std::to_string(i % m_) + " is " + std::to_string(v) +
                              ", expected -1, 0 or 1");
      }
    }
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  const std::vector<std::int8_t>& data() const { return votes_; }

  int at(std::size_t i, std::size_t source) const { return votes_[i * m_ + source]; }

  std::span<const std::int8_t> row(std::size_t i) const {
    return {votes_.data() + i * m_, m_};
  }

  bool operator==(const VoteMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::int8_t> votes_;
};

// Ground-truth labels in {-1, +1}.
class LabelVector {
 public:
  LabelVector() = default;

  explicit LabelVector(std::vector<std::int8_t> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] != 1 && labels_[i] != -1) {
        throw ValidationError("label at row " + std::to_string(i) + " is " +
                              std::to_string(int{labels_[i]}) + ", expected -1 or 1");
      }
    }
  }

  std::size_t n() const { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::int8_t>& data() const { return labels_; }

  bool operator==(const LabelVector&) const = default;

 private:
  std::vector<std::int8_t> labels_;
};

enum class ClassBalanceMode { uniform, global_from_dev, per_part_from_dev, explicit_list };

inline std::string_view to_string(ClassBalanceMode m) {
  switch (m) {
    case ClassBalanceMode::uniform: return "uniform";
    case ClassBalanceMode::global_from_dev: return "global_from_dev";
    case ClassBalanceMode::per_part_from_dev: return "per_part_from_dev";
    case ClassBalanceMode::explicit_list: return "explicit";
  }
  return "uniform";
}

inline ClassBalanceMode parse_class_balance_mode(std::string_view s) {
  if (s == "uniform") return ClassBalanceMode::uniform;
  if (s == "global_from_dev") return ClassBalanceMode::global_from_dev;
  if (s == "per_part_from_dev") return ClassBalanceMode::per_part_from_dev;
  if (s == "explicit") return ClassBalanceMode::explicit_list;
  throw ValidationError("unknown class_balance_mode '" + std::string(s) + "'");
}

struct EngineConfig {
  std::uint64_t seed = 0;
  std::size_t s = 1;
  std::vector<double> radii;
  Metric metric = Metric::euclidean;
  ClassBalanceMode class_balance_mode = ClassBalanceMode::uniform;
  std::optional<std::vector<double>> explicit_balances;
  double accuracy_clamp = 0.001;
  std::size_t kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;

  void validate() const {
    if (s < 1) throw ValidationError("config field 's' must be >= 1");
    for (double r : radii) {
      if (!(r >= 0.0)) throw ValidationError("config field 'radii' must be non-negative");
    }
    if (!(accuracy_clamp > 0.0 && accuracy_clamp < 0.5)) {
      throw ValidationError("config field 'accuracy_clamp' must lie in (0, 0.5)");
    }
    if (!(kmeans_tol >= 0.0)) throw ValidationError("config field 'kmeans_tol' must be >= 0");
    const bool is_explicit = class_balance_mode == ClassBalanceMode::explicit_list;
    if (is_explicit != explicit_balances.has_value()) {
      throw ValidationError(
          "config field 'explicit_balances' must be present exactly when "
          "class_balance_mode is 'explicit'");
    }
    if (explicit_balances) {
      if (explicit_balances->size() != s) {
        throw ValidationError("config field 'explicit_balances' must have length s");
      }
      for (double b : *explicit_balances) {
        if (!(b > 0.0 && b < 1.0)) {
          throw ValidationError("config field 'explicit_balances' entries must lie in (0, 1)");
        }
      }
    }
  }
};

}  // namespace liger

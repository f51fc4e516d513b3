#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "liger/dataset.hpp"
#include "liger/error.hpp"

namespace liger {

struct MetricsReport {
  double accuracy = 0.0;
  double f1 = 0.0;             // positive class +1
  double cross_entropy = 0.0;  // mean -ln Pr(true label), natural log
  std::size_t n_evaluated = 0;
};

inline constexpr double kProbabilityFloor = 1e-12;

inline MetricsReport compute_metrics(std::span<const double> posteriors, const LabelVector& labels) {
  if (posteriors.size() != labels.n()) {
    throw ShapeError("posteriors have length " + std::to_string(posteriors.size()) +
                     ", labels have " + std::to_string(labels.n()));
  }
  MetricsReport r;
  r.n_evaluated = labels.n();
  if (labels.n() == 0) return r;
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  double ce = 0.0;
  for (std::size_t i = 0; i < labels.n(); ++i) {
    const double p = posteriors[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("posterior " + std::to_string(i) + " is outside [0, 1]");
    const int y = labels[i];
    const int yhat = p >= 0.5 ? 1 : -1;
    correct += yhat == y;
    tp += yhat == 1 && y == 1;
    fp += yhat == 1 && y == -1;
    fn += yhat == -1 && y == 1;
    const double p_true = y == 1 ? p : 1.0 - p;
    ce -= std::log(std::clamp(p_true, kProbabilityFloor, 1.0));
  }
  const auto n = static_cast<double>(labels.n());
  r.accuracy = static_cast<double>(correct) / n;
  const std::size_t denom = 2 * tp + fp + fn;
  r.f1 = denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
  r.cross_entropy = ce / n;
  return r;
}

}  // namespace liger

// Fits a two-part label model on a synthetic checkerboard task, extending the
// one sparse source by 0.03, and reports held-out metrics.

#include <iostream>

#include "liger/liger.hpp"

int main() {
  using namespace liger;
  const auto train_spec = extension_task(2, CheckerboardTaskSpec::Labels::checkerboard, 0.89, 4000, 1);
  auto test_spec = train_spec;
  test_spec.seed = 2;
  const auto train = checkerboard_task(train_spec);
  const auto test = checkerboard_task(test_spec);

  EngineConfig cfg;
  cfg.seed = 7;
  cfg.s = 2;
  cfg.radii = {0.03, 0.0, 0.0};

  const auto extended = extend_all(train.embeddings, train.votes, cfg.radii);
  const auto model = fit(train.embeddings, extended, cfg);
  const auto preds = predict(model, test.embeddings, test.votes);
  const auto report = compute_metrics(preds.posterior, test.labels);

  for (std::size_t j = 0; j < model.s; ++j) {
    std::cout << "part " << j << " accuracies:";
    for (std::size_t i = 0; i < model.m; ++i) std::cout << ' ' << model.accuracy(j, i);
    std::cout << '\n';
  }
  std::cout << "accuracy=" << report.accuracy << " f1=" << report.f1
            << " cross_entropy=" << report.cross_entropy << '\n';
}

#pragma once

// Command-line front end. run() parses argv, dispatches one subcommand and
// maps failures to exit codes: 0 success, 1 invalid input, 2 usage error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "liger/liger.hpp"

namespace liger::cli {

// Missing or contradictory flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string embeddings, votes, labels;
  std::string dev_embeddings, dev_votes, dev_labels;
  std::string config, out, model, predictions, kind, metric;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> s;
  std::vector<std::size_t> s_list;
  std::vector<double> radii, sim_thresholds, r_grid;
  std::size_t s_max = 10;
  std::size_t seeds = 10;
  std::optional<unsigned> threads;
};

namespace detail {

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(liger::detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  liger::detail::write_file(path, j.dump(2) + "\n");
}

// The engine config plus whether a seed was supplied anywhere.
struct ResolvedConfig {
  EngineConfig config;
  bool has_seed = false;
};

inline ResolvedConfig resolve_config(const Options& o) {
  ResolvedConfig r;
  if (!o.config.empty()) {
    const auto j = read_json(o.config);
    r.config = config_from_json(j);
    r.has_seed = j.is_object() && j.contains("seed");
  }
  if (o.seed) {
    r.config.seed = *o.seed;
    r.has_seed = true;
  }
  if (o.s) r.config.s = *o.s;
  if (!o.metric.empty()) r.config.metric = parse_metric(o.metric);
  return r;
}

inline void require_seed(const ResolvedConfig& r) {
  if (!r.has_seed) throw UsageError("this subcommand is randomized: pass --seed or set 'seed' in --config");
}

inline EmbeddingDataset load_embeddings_flag(const Options& o, const std::string& path,
                                             Metric csv_metric) {
  auto emb = load_embeddings(path, csv_metric);
  if (!o.metric.empty() && emb.metric() != parse_metric(o.metric)) {
    throw ValidationError("embeddings '" + path + "' declare metric " + std::string(to_string(emb.metric())) +
                          " but --metric is " + o.metric);
  }
  return emb;
}

// Radii from --radii, --sim-thresholds, or the config, broadcast when a
// single value is given.
inline std::vector<double> resolve_radii(const Options& o, const EngineConfig& cfg, Metric metric,
                                         std::size_t m) {
  if (!o.radii.empty() && !o.sim_thresholds.empty()) {
    throw UsageError("--radii and --sim-thresholds are mutually exclusive");
  }
  std::vector<double> radii = cfg.radii;
  if (!o.radii.empty()) radii = o.radii;
  if (!o.sim_thresholds.empty()) {
    if (metric != Metric::cosine) throw UsageError("--sim-thresholds needs cosine embeddings");
    radii.clear();
    for (double t : o.sim_thresholds) radii.push_back(1.0 - t);
  }
  if (radii.empty()) radii.assign(m, 0.0);
  if (radii.size() == 1 && m != 1) radii.assign(m, radii[0]);
  if (radii.size() != m) {
    throw ValidationError("radii has " + std::to_string(radii.size()) + " entries but votes have " +
                          std::to_string(m) + " sources");
  }
  for (double r : radii) {
    if (!(r >= 0.0)) throw ValidationError("radii must be non-negative");
  }
  return radii;
}

inline std::string absolute(const std::string& path) {
  return std::filesystem::absolute(path).lexically_normal().string();
}

}  // namespace detail

inline int cmd_partition(const Options& o, std::ostream& out) {
  detail::require(o.embeddings, "--embeddings");
  detail::require(o.out, "--out");
  const auto rc = detail::resolve_config(o);
  detail::require_seed(rc);
  const auto emb = detail::load_embeddings_flag(o, o.embeddings, rc.config.metric);
  const auto part = kmeans_fit(emb, rc.config.s, rc.config.seed,
                               KMeansOptions{rc.config.kmeans_max_iters, rc.config.kmeans_tol});
  detail::write_json(o.out, partition_to_json(part));
  out << "s=" << part.s << "\n";
  out << "part_sizes=" << detail::join(part.part_sizes) << "\n";
  out << "objective=" << format_double(kmeans_objective(emb, part)) << "\n";
  out << "average_diameter=" << format_double(part_diameters(emb, part).average) << "\n";
  return 0;
}

inline int cmd_extend(const Options& o, std::ostream& out) {
  detail::require(o.embeddings, "--embeddings");
  detail::require(o.votes, "--votes");
  detail::require(o.out, "--out");
  const auto rc = detail::resolve_config(o);
  const auto emb = detail::load_embeddings_flag(o, o.embeddings, rc.config.metric);
  const auto votes = load_votes(o.votes, emb.n());
  const auto radii = detail::resolve_radii(o, rc.config, emb.metric(), votes.m());
  const auto ext = extend_all(emb, votes, radii);
  store_votes(o.out, ext.votes);
  const auto delta = coverage_delta(votes, ext);
  out << "n=" << votes.n() << "\n";
  out << "radii=" << detail::join(radii) << "\n";
  out << "coverage_before=" << format_double(delta.before) << "\n";
  out << "coverage_after=" << format_double(delta.after) << "\n";
  out << "coverage_delta=" << format_double(delta.delta) << "\n";
  out << "source_coverage_before=" << detail::join(delta.per_source_before) << "\n";
  out << "source_coverage_after=" << detail::join(delta.per_source_after) << "\n";
  return 0;
}

namespace detail {

struct DevData {
  std::optional<EmbeddingDataset> embeddings;
  std::optional<LabelVector> labels;

  DevLabels view() const {
    return {embeddings ? &*embeddings : nullptr, labels ? &*labels : nullptr};
  }
};

inline DevData load_dev(const Options& o, Metric csv_metric) {
  DevData dev;
  if (!o.dev_embeddings.empty()) dev.embeddings = load_embeddings_flag(o, o.dev_embeddings, csv_metric);
  if (!o.dev_labels.empty()) {
    dev.labels = load_labels(o.dev_labels, dev.embeddings ? std::optional<std::size_t>(dev.embeddings->n())
                                                          : std::nullopt);
  }
  return dev;
}

}  // namespace detail

inline int cmd_fit(const Options& o, std::ostream& out) {
  detail::require(o.embeddings, "--embeddings");
  detail::require(o.votes, "--votes");
  detail::require(o.out, "--out");
  auto rc = detail::resolve_config(o);
  detail::require_seed(rc);
  const auto emb = detail::load_embeddings_flag(o, o.embeddings, rc.config.metric);
  const auto votes = load_votes(o.votes, emb.n());
  rc.config.radii = detail::resolve_radii(o, rc.config, emb.metric(), votes.m());
  const auto dev = detail::load_dev(o, rc.config.metric);
  const auto ext = extend_all(emb, votes, rc.config.radii);
  const auto model = fit(emb, ext, rc.config, dev.view());

  auto doc = model_to_json(model);
  if (model.needs_support()) {
    doc["support"] = {{"embeddings", detail::absolute(o.embeddings)}, {"votes", detail::absolute(o.votes)}};
  }
  detail::write_json(o.out, doc);

  double mean_acc = 0.0;
  for (double a : model.accuracies) mean_acc += a;
  mean_acc /= static_cast<double>(model.accuracies.size());
  out << "n=" << emb.n() << "\n";
  out << "m=" << votes.m() << "\n";
  out << "s=" << model.s << "\n";
  out << "part_sizes=" << detail::join(model.partition.part_sizes) << "\n";
  out << "mean_accuracy=" << format_double(mean_acc) << "\n";
  return 0;
}

namespace detail {

inline LabelModel load_model(const std::string& path, Metric csv_metric) {
  const auto doc = read_json(path);
  auto model = model_from_json(doc);
  if (model.needs_support()) {
    if (!doc.contains("support")) {
      throw ValidationError("model field 'support' is required when radii are non-zero");
    }
    try {
      const auto emb = load_embeddings(doc.at("support").at("embeddings").get<std::string>(), csv_metric);
      auto votes = load_votes(doc.at("support").at("votes").get<std::string>(), emb.n());
      model.support = std::make_shared<SupportSet>(SupportSet{emb, std::move(votes)});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("model field 'support' is malformed: ") + e.what());
    }
  }
  return model;
}

}  // namespace detail

inline int cmd_predict(const Options& o, std::ostream& out) {
  detail::require(o.model, "--model");
  detail::require(o.embeddings, "--embeddings");
  detail::require(o.votes, "--votes");
  detail::require(o.out, "--out");
  const auto rc = detail::resolve_config(o);
  const auto model = detail::load_model(o.model, rc.config.metric);
  const auto emb = detail::load_embeddings_flag(o, o.embeddings, rc.config.metric);
  const auto votes = load_votes(o.votes, emb.n());
  const auto preds = predict(model, emb, votes);
  liger::detail::write_file(o.out, encode_predictions_csv(preds));
  std::size_t positive = 0, silent = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < preds.n(); ++i) {
    positive += preds.label[i] == 1;
    silent += preds.abstains[i] == model.m;
    mean += preds.posterior[i];
  }
  out << "n=" << preds.n() << "\n";
  out << "mean_posterior=" << format_double(preds.n() ? mean / static_cast<double>(preds.n()) : 0.0) << "\n";
  out << "positive=" << positive << "\n";
  out << "all_abstain=" << silent << "\n";
  return 0;
}

inline int cmd_evaluate(const Options& o, std::ostream& out) {
  detail::require(o.predictions, "--predictions");
  detail::require(o.labels, "--labels");
  const auto post = parse_predictions_posteriors(liger::detail::read_file(o.predictions));
  const auto labels = load_labels(o.labels, post.size());
  const auto r = compute_metrics(post, labels);
  if (!o.out.empty()) {
    detail::write_json(o.out, {{"accuracy", r.accuracy},
                               {"f1", r.f1},
                               {"cross_entropy", r.cross_entropy},
                               {"n_evaluated", r.n_evaluated}});
  }
  out << "n=" << r.n_evaluated << "\n";
  out << "accuracy=" << format_double(r.accuracy) << "\n";
  out << "f1=" << format_double(r.f1) << "\n";
  out << "cross_entropy=" << format_double(r.cross_entropy) << "\n";
  return 0;
}

inline int cmd_tune(const Options& o, std::ostream& out) {
  detail::require(o.embeddings, "--embeddings");
  detail::require(o.votes, "--votes");
  detail::require(o.dev_embeddings, "--dev-embeddings");
  detail::require(o.dev_votes, "--dev-votes");
  detail::require(o.dev_labels, "--dev-labels");
  detail::require(o.out, "--out");
  if (o.r_grid.empty() && o.sim_thresholds.empty()) throw UsageError("missing required flag --r-grid");
  auto rc = detail::resolve_config(o);
  detail::require_seed(rc);
  const auto emb = detail::load_embeddings_flag(o, o.embeddings, rc.config.metric);
  const auto votes = load_votes(o.votes, emb.n());
  const auto dev_emb = detail::load_embeddings_flag(o, o.dev_embeddings, rc.config.metric);
  const auto dev_votes = load_votes(o.dev_votes, dev_emb.n());
  const auto dev_labels = load_labels(o.dev_labels, dev_emb.n());
  std::vector<double> grid = o.r_grid;
  if (!o.sim_thresholds.empty()) {
    if (!o.r_grid.empty()) throw UsageError("--r-grid and --sim-thresholds are mutually exclusive");
    if (emb.metric() != Metric::cosine) throw UsageError("--sim-thresholds needs cosine embeddings");
    for (double t : o.sim_thresholds) grid.push_back(1.0 - t);
  }
  const auto result = tune(emb, votes, dev_emb, dev_votes, &dev_labels, rc.config, grid, o.s_max);

  auto tuned = rc.config;
  tuned.radii = result.radii;
  tuned.s = result.s;
  if (tuned.explicit_balances && tuned.explicit_balances->size() != tuned.s) {
    tuned.explicit_balances->resize(tuned.s, tuned.explicit_balances->empty() ? 0.5 : tuned.explicit_balances->back());
  }
  auto trace = nlohmann::json::array();
  for (const auto& e : result.search_trace) {
    trace.push_back({{"stage", e.stage}, {"radii", e.radii}, {"s", e.s}, {"metric", e.metric}});
  }
  detail::write_json(o.out, {{"radii", result.radii},
                             {"s", result.s},
                             {"dev_metric", result.dev_metric},
                             {"config", config_to_json(tuned)},
                             {"search_trace", trace}});
  out << "radii=" << detail::join(result.radii) << "\n";
  out << "s=" << result.s << "\n";
  out << "dev_metric=" << format_double(result.dev_metric) << "\n";
  out << "candidates=" << result.search_trace.size() << "\n";
  return 0;
}

inline int cmd_smoothness(const Options& o, std::ostream& out) {
  detail::require(o.embeddings, "--embeddings");
  detail::require(o.out, "--out");
  if (o.r_grid.empty()) throw UsageError("missing required flag --r-grid");
  if (o.labels.empty() && o.votes.empty()) throw UsageError("smoothness needs --labels, --votes, or both");
  const auto rc = detail::resolve_config(o);
  const auto emb = detail::load_embeddings_flag(o, o.embeddings, rc.config.metric);
  std::optional<LabelVector> labels;
  std::optional<VoteMatrix> votes;
  if (!o.labels.empty()) labels = load_labels(o.labels, emb.n());
  if (!o.votes.empty()) votes = load_votes(o.votes, emb.n());
  NeighborhoodSpec spec;
  if (o.kind.empty() || o.kind == "radius") {
    spec = NeighborhoodSpec::radius_grid(o.r_grid);
  } else if (o.kind == "knn") {
    spec.kind = NeighborhoodSpec::Kind::knn;
    spec.values = o.r_grid;
  } else {
    throw UsageError("--kind for smoothness must be radius or knn");
  }
  if (labels && votes && spec.kind == NeighborhoodSpec::Kind::radius &&
      !std::is_sorted(spec.values.begin(), spec.values.end())) {
    throw UsageError("--r-grid must be ascending");
  }
  const auto report = smoothness_report(emb, labels ? &*labels : nullptr, votes ? &*votes : nullptr, spec);
  liger::detail::write_file(o.out, encode_smoothness_csv(report));
  out << "grid=" << detail::join(spec.values) << "\n";
  if (report.label_curve) out << "label_curve=" << detail::join(*report.label_curve) << "\n";
  if (report.coverage_curve) out << "coverage_curve=" << detail::join(*report.coverage_curve) << "\n";
  if (report.pl_curve) out << "pl_curve=" << detail::join(*report.pl_curve) << "\n";
  return 0;
}

// synth writes labels.csv and votes.csv (plus embeddings.lgem for the
// spatial generators) into the --out directory.
inline int cmd_synth(const Options& o, std::ostream& out) {
  detail::require(o.kind, "--kind");
  detail::require(o.config, "--config");
  detail::require(o.out, "--out");
  if (!o.seed) throw UsageError("synth is randomized: pass --seed");
  const auto j = detail::read_json(o.config);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  const auto get_n = [&](const char* key) {
    try {
      return j.at(key).get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("synth config field '") + key + "': " + e.what());
    }
  };
  if (o.kind == "model") {
    const auto spec = synthetic_spec_from_json(j);
    const auto sample = sample_dataset(spec, get_n("n"), *o.seed);
    store_labels(dir / "labels.csv", sample.labels);
    store_votes(dir / "votes.csv", sample.votes);
    out << "n=" << sample.labels.n() << "\n";
    out << "m=" << sample.votes.m() << "\n";
    out << "true_accuracy=" << detail::join(sample.true_accuracy) << "\n";
  } else if (o.kind == "two-population") {
    if (!j.contains("a") || !j.contains("b")) throw ValidationError("synth config needs fields 'a' and 'b'");
    const auto a = synthetic_spec_from_json(j.at("a"));
    const auto b = synthetic_spec_from_json(j.at("b"));
    const auto bundle = two_population_dataset(a, b, get_n("n_each"), *o.seed);
    store_embeddings(dir / "embeddings.lgem", bundle.embeddings);
    store_labels(dir / "labels.csv", bundle.labels);
    store_votes(dir / "votes.csv", bundle.votes);
    std::string membership = "id,population\n";
    for (std::size_t i = 0; i < bundle.membership.size(); ++i) {
      membership += std::to_string(i) + "," + std::to_string(bundle.membership[i]) + "\n";
    }
    liger::detail::write_file(dir / "membership.csv", membership);
    out << "n=" << bundle.labels.n() << "\n";
    out << "m=" << bundle.votes.m() << "\n";
    out << "accuracy_a=" << detail::join(bundle.accuracy_a) << "\n";
    out << "accuracy_b=" << detail::join(bundle.accuracy_b) << "\n";
  } else if (o.kind == "checkerboard") {
    auto spec = checkerboard_spec_from_json(j);
    spec.seed = *o.seed;
    const auto task = checkerboard_task(spec);
    store_embeddings(dir / "embeddings.lgem", task.embeddings);
    store_labels(dir / "labels.csv", task.labels);
    store_votes(dir / "votes.csv", task.votes);
    out << "n=" << task.labels.n() << "\n";
    out << "m=" << task.votes.m() << "\n";
    out << "coverage=" << detail::join(validate_bundle(task.embeddings, task.votes).coverage) << "\n";
  } else {
    throw UsageError("--kind for synth must be model, two-population, or checkerboard");
  }
  return 0;
}

namespace detail {

inline std::vector<ExtensionVariant> default_extension_variants(std::size_t n, std::uint64_t seed) {
  using L = CheckerboardTaskSpec::Labels;
  std::vector<ExtensionVariant> v;
  for (double a : {0.89, 0.7, 0.5, 0.3}) {
    v.push_back({"acc_" + format_double(a), extension_task(10, L::checkerboard, a, n, seed)});
  }
  v.push_back({"board_2x2", extension_task(2, L::checkerboard, 0.89, n, seed)});
  v.push_back({"board_random", extension_task(10, L::random, 0.89, n, seed)});
  return v;
}

// Optional config: {"variants": [{"name", "grid", "labels", "accuracy"}], "n"}.
inline std::vector<ExtensionVariant> extension_variants(const nlohmann::json& j, std::uint64_t seed) {
  try {
    const std::size_t n = j.value("n", std::size_t{10000});
    if (!j.contains("variants")) return default_extension_variants(n, seed);
    std::vector<ExtensionVariant> v;
    for (const auto& e : j.at("variants")) {
      const auto labels = e.value("labels", std::string("checkerboard"));
      if (labels != "checkerboard" && labels != "random") {
        throw ValidationError("variant 'labels' must be checkerboard or random");
      }
      v.push_back({e.at("name").get<std::string>(),
                   extension_task(e.value("grid", std::size_t{10}),
                                  labels == "random" ? CheckerboardTaskSpec::Labels::random
                                                     : CheckerboardTaskSpec::Labels::checkerboard,
                                  e.at("accuracy").get<double>(), n, seed)});
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed bench config: ") + e.what());
  }
}

}  // namespace detail

inline int cmd_bench(const Options& o, std::ostream& out) {
  detail::require(o.kind, "--kind");
  detail::require(o.out, "--out");
  if (!o.seed) throw UsageError("bench is randomized: pass --seed");
  const nlohmann::json j = o.config.empty() ? nlohmann::json::object() : detail::read_json(o.config);
  if (o.kind == "bias-variance") {
    auto [a, b] = separated_populations();
    std::size_t n_each = 1000;
    try {
      if (j.contains("a")) a = synthetic_spec_from_json(j.at("a"));
      if (j.contains("b")) b = synthetic_spec_from_json(j.at("b"));
      n_each = j.value("n_each", n_each);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed bench config: ") + e.what());
    }
    const auto s_list = o.s_list.empty() ? std::vector<std::size_t>{1, 2, 4, 8} : o.s_list;
    const auto rows = bench_bias_variance(a, b, n_each, s_list, o.seeds, *o.seed);
    liger::detail::write_file(o.out, encode_bias_variance_csv(rows));
    for (const auto& r : rows) out << "s" << r.s << "_mean=" << format_double(r.cross_entropy.mean) << "\n";
  } else if (o.kind == "extension") {
    const auto variants = detail::extension_variants(j, *o.seed);
    const auto grid = o.r_grid.empty() ? default_extension_grid() : o.r_grid;
    const auto curves = bench_extension(variants, grid, 0);
    liger::detail::write_file(o.out, encode_extension_csv(curves));
    for (const auto& c : curves) out << c.name << "_best_reduction=" << format_double(c.best_reduction()) << "\n";
  } else {
    throw UsageError("--kind for bench must be bias-variance or extension");
  }
  return 0;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak-supervision label model with embedding-space partitioning and vote extension", "liger"};
  app.require_subcommand(1);
  Options o;

  const auto input = [&](CLI::App* c, const std::string& flag, std::string& target) {
    c->add_option(flag, target);
  };
  const auto common = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "worker cap (default: LIGER_THREADS or all cores)");
    c->add_option("--metric", o.metric, "metric for CSV embeddings: euclidean or cosine");
    c->add_option("--config", o.config, "engine config JSON");
  };

  auto* partition = app.add_subcommand("partition", "k-means partition of the embeddings");
  common(partition);
  input(partition, "--embeddings", o.embeddings);
  input(partition, "--out", o.out);
  partition->add_option("--seed", o.seed);
  partition->add_option("--s", o.s);

  auto* extend = app.add_subcommand("extend", "nearest-neighbor vote extension");
  common(extend);
  input(extend, "--embeddings", o.embeddings);
  input(extend, "--votes", o.votes);
  input(extend, "--out", o.out);
  extend->add_option("--radii", o.radii)->delimiter(',');
  extend->add_option("--sim-thresholds", o.sim_thresholds)->delimiter(',');

  auto* fit_cmd = app.add_subcommand("fit", "fit the label model");
  common(fit_cmd);
  for (auto [flag, target] : {std::pair{"--embeddings", &o.embeddings}, {"--votes", &o.votes},
                              {"--out", &o.out}, {"--dev-embeddings", &o.dev_embeddings},
                              {"--dev-labels", &o.dev_labels}}) {
    input(fit_cmd, flag, *target);
  }
  fit_cmd->add_option("--seed", o.seed);
  fit_cmd->add_option("--s", o.s);
  fit_cmd->add_option("--radii", o.radii)->delimiter(',');
  fit_cmd->add_option("--sim-thresholds", o.sim_thresholds)->delimiter(',');

  auto* predict_cmd = app.add_subcommand("predict", "posteriors for new points");
  common(predict_cmd);
  input(predict_cmd, "--model", o.model);
  input(predict_cmd, "--embeddings", o.embeddings);
  input(predict_cmd, "--votes", o.votes);
  input(predict_cmd, "--out", o.out);

  auto* evaluate = app.add_subcommand("evaluate", "accuracy, F1 and cross-entropy of predictions");
  common(evaluate);
  input(evaluate, "--predictions", o.predictions);
  input(evaluate, "--labels", o.labels);
  input(evaluate, "--out", o.out);

  auto* tune_cmd = app.add_subcommand("tune", "dev-set search over radii and part count");
  common(tune_cmd);
  for (auto [flag, target] : {std::pair{"--embeddings", &o.embeddings}, {"--votes", &o.votes},
                              {"--dev-embeddings", &o.dev_embeddings}, {"--dev-votes", &o.dev_votes},
                              {"--dev-labels", &o.dev_labels}, {"--out", &o.out}}) {
    input(tune_cmd, flag, *target);
  }
  tune_cmd->add_option("--seed", o.seed);
  tune_cmd->add_option("--r-grid", o.r_grid)->delimiter(',');
  tune_cmd->add_option("--sim-thresholds", o.sim_thresholds)->delimiter(',');
  tune_cmd->add_option("--s-max", o.s_max);

  auto* smooth = app.add_subcommand("smoothness", "label, coverage and off-support smoothness curves");
  common(smooth);
  input(smooth, "--embeddings", o.embeddings);
  input(smooth, "--labels", o.labels);
  input(smooth, "--votes", o.votes);
  input(smooth, "--out", o.out);
  smooth->add_option("--r-grid", o.r_grid)->delimiter(',');
  smooth->add_option("--kind", o.kind, "radius (default) or knn");

  auto* synth = app.add_subcommand("synth", "sample a synthetic dataset");
  synth->add_option("--threads", o.threads);
  synth->add_option("--kind", o.kind, "model, two-population, or checkerboard");
  synth->add_option("--config", o.config, "generator spec JSON");
  synth->add_option("--seed", o.seed);
  input(synth, "--out", o.out);

  auto* bench = app.add_subcommand("bench", "synthetic benchmarks");
  bench->add_option("--threads", o.threads);
  bench->add_option("--kind", o.kind, "bias-variance or extension");
  bench->add_option("--config", o.config, "benchmark JSON (optional)");
  bench->add_option("--seed", o.seed);
  bench->add_option("--s", o.s_list)->delimiter(',');
  bench->add_option("--seeds", o.seeds);
  bench->add_option("--r-grid", o.r_grid)->delimiter(',');
  input(bench, "--out", o.out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    unsigned threads = 0;
    if (o.threads) {
      threads = *o.threads;
    } else if (const char* env = std::getenv("LIGER_THREADS")) {
      try {
        threads = static_cast<unsigned>(std::stoul(env));
      } catch (const std::exception&) {
        throw UsageError(std::string("LIGER_THREADS is not a number: ") + env);
      }
    }
    set_thread_count(threads);

    const auto* sub = app.get_subcommands().front();
    const auto& name = sub->get_name();
    if (name == "partition") return cmd_partition(o, out);
    if (name == "extend") return cmd_extend(o, out);
    if (name == "fit") return cmd_fit(o, out);
    if (name == "predict") return cmd_predict(o, out);
    if (name == "evaluate") return cmd_evaluate(o, out);
    if (name == "tune") return cmd_tune(o, out);
    if (name == "smoothness") return cmd_smoothness(o, out);
    if (name == "synth") return cmd_synth(o, out);
    if (name == "bench") return cmd_bench(o, out);
    throw UsageError("unknown subcommand " + name);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace liger::cli

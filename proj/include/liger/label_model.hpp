#pragma once

// Per-part source accuracies from pairwise agreement moments (triplet method)
// and naive-Bayes pseudolabel posteriors over extended votes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/extend.hpp"
#include "liger/io.hpp"
#include "liger/partition.hpp"

namespace liger {

// Per part, per unordered source pair: mean of vote products over points
// where both sources vote, and how many such points there were.
class MomentTable {
 public:
  MomentTable() = default;
  MomentTable(std::size_t s, std::size_t m)
      : s_(s), m_(m), agreement_(s * m * m, 0.0), overlap_(s * m * m, 0) {}

  std::size_t s() const { return s_; }
  std::size_t m() const { return m_; }

  bool present(std::size_t part, std::size_t i, std::size_t k) const {
    return overlap_[cell(part, i, k)] > 0;
  }
  double agreement(std::size_t part, std::size_t i, std::size_t k) const {
    return agreement_[cell(part, i, k)];
  }
  std::size_t overlap(std::size_t part, std::size_t i, std::size_t k) const {
    return overlap_[cell(part, i, k)];
  }

  void set(std::size_t part, std::size_t i, std::size_t k, double agreement, std::size_t overlap) {
    agreement_[cell(part, i, k)] = agreement;
    agreement_[cell(part, k, i)] = agreement;
    overlap_[cell(part, i, k)] = overlap;
    overlap_[cell(part, k, i)] = overlap;
  }

 private:
  std::size_t cell(std::size_t part, std::size_t i, std::size_t k) const {
    return (part * m_ + i) * m_ + k;
  }

  std::size_t s_ = 0, m_ = 0;
  std::vector<double> agreement_;
  std::vector<std::size_t> overlap_;
};

inline MomentTable pairwise_agreements(const VoteMatrix& votes,
                                       std::span<const std::size_t> assignment, std::size_t s) {
  if (assignment.size() != votes.n()) throw ShapeError("assignment length must equal n");
  const std::size_t m = votes.m();
  std::vector<long long> sums(s * m * m, 0);
  std::vector<std::size_t> counts(s * m * m, 0);
  for (std::size_t x = 0; x < votes.n(); ++x) {
    const std::size_t j = assignment[x];
    const auto row = votes.row(x);
    for (std::size_t i = 0; i < m; ++i) {
      if (row[i] == 0) continue;
      for (std::size_t k = i + 1; k < m; ++k) {
        if (row[k] == 0) continue;
        const std::size_t c = (j * m + i) * m + k;
        sums[c] += row[i] * row[k];
        ++counts[c];
      }
    }
  }
  MomentTable table(s, m);
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = i + 1; k < m; ++k) {
        const std::size_t c = (j * m + i) * m + k;
        if (counts[c] == 0) continue;
        table.set(j, i, k, static_cast<double>(sums[c]) / static_cast<double>(counts[c]), counts[c]);
      }
    }
  }
  return table;
}

inline MomentTable pairwise_agreements(const ExtendedVoteMatrix& votes, const Partition& part) {
  return pairwise_agreements(votes.votes, part.assignment, part.s);
}

// Mean over usable pairs (k, l) of sqrt(|M_ik * M_il / M_kl|), before clamping.
// A pair is usable when all three moments exist and |M_kl| >= eps.
// nullopt when no pair is usable.
inline std::optional<double> triplet_accuracy_unclamped(const MomentTable& moments,
                                                        std::size_t part, std::size_t source,
                                                        double eps) {
  const std::size_t m = moments.m();
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (k == source || !moments.present(part, source, k)) continue;
    for (std::size_t l = k + 1; l < m; ++l) {
      if (l == source || !moments.present(part, source, l) || !moments.present(part, k, l)) continue;
      const double mkl = moments.agreement(part, k, l);
      if (std::abs(mkl) < eps) continue;
      const double mik = moments.agreement(part, source, k);
      const double mil = moments.agreement(part, source, l);
      total += std::sqrt(std::abs(mik * mil / mkl));
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return total / static_cast<double>(used);
}

// Clamp so that the vote likelihood (1 + a) / 2 stays inside [eps, 1 - eps].
inline double clamp_accuracy(double a, double eps) {
  return std::clamp(a, -1.0 + 2.0 * eps, 1.0 - 2.0 * eps);
}

inline std::optional<double> triplet_accuracy(const MomentTable& moments, std::size_t part,
                                              std::size_t source, double eps) {
  auto raw = triplet_accuracy_unclamped(moments, part, source, eps);
  if (!raw) return std::nullopt;
  return clamp_accuracy(*raw, eps);
}

// How each (part, source) accuracy was obtained.
enum class EstimateKind : std::uint8_t {
  local = 0,          // triplet method on the part
  pooled = 1,         // part was degenerate; pooled (s = 1) estimate used
  uninformative = 2,  // no usable triplet even pooled; accuracy 0
};

inline std::string_view to_string(EstimateKind k) {
  switch (k) {
    case EstimateKind::local: return "local";
    case EstimateKind::pooled: return "pooled";
    case EstimateKind::uninformative: return "uninformative";
  }
  return "local";
}

// Training support used to extend votes of new points at prediction time.
struct SupportSet {
  EmbeddingDataset embeddings;
  VoteMatrix votes;  // raw (unextended) training votes
};

struct LabelModel {
  std::size_t s = 0;
  std::size_t m = 0;
  Partition partition;
  std::vector<double> accuracies;      // s x m
  std::vector<double> coverages;       // s x m
  std::vector<double> class_balances;  // s, Pr(y = +1 | part)
  std::vector<double> radii;           // m
  double accuracy_clamp = 0.001;
  std::uint64_t seed = 0;
  std::vector<EstimateKind> estimate_kind;  // s x m

  std::shared_ptr<const SupportSet> support;

  double accuracy(std::size_t part, std::size_t source) const { return accuracies[part * m + source]; }
  double coverage(std::size_t part, std::size_t source) const { return coverages[part * m + source]; }

  bool needs_support() const {
    return std::any_of(radii.begin(), radii.end(), [](double r) { return r > 0.0; });
  }
};

// Labels available for class-balance estimation.
struct DevLabels {
  const EmbeddingDataset* embeddings = nullptr;  // required for per_part_from_dev
  const LabelVector* labels = nullptr;
};

namespace detail {

inline VoteMatrix raw_votes(const ExtendedVoteMatrix& ext) {
  std::vector<std::int8_t> raw(ext.votes.data());
  for (std::size_t c = 0; c < raw.size(); ++c) {
    if (ext.provenance[c] != Provenance::original) raw[c] = 0;
  }
  return VoteMatrix(ext.votes.n(), ext.votes.m(), std::move(raw));
}

inline std::vector<double> class_balances(const EngineConfig& cfg, const Partition& part,
                                          const DevLabels& dev) {
  const std::size_t s = part.s;
  const double eps = cfg.accuracy_clamp;
  switch (cfg.class_balance_mode) {
    case ClassBalanceMode::uniform:
      return std::vector<double>(s, 0.5);
    case ClassBalanceMode::explicit_list:
      return *cfg.explicit_balances;
    case ClassBalanceMode::global_from_dev: {
      if (!dev.labels || dev.labels->n() == 0) {
        throw ArgumentError("class_balance_mode global_from_dev needs dev labels");
      }
      std::size_t pos = 0;
      for (std::size_t i = 0; i < dev.labels->n(); ++i) pos += (*dev.labels)[i] == 1;
      const double p = static_cast<double>(pos) / static_cast<double>(dev.labels->n());
      return std::vector<double>(s, std::clamp(p, eps, 1.0 - eps));
    }
    case ClassBalanceMode::per_part_from_dev: {
      if (!dev.labels || !dev.embeddings) {
        throw ArgumentError("class_balance_mode per_part_from_dev needs dev embeddings and labels");
      }
      if (dev.embeddings->n() != dev.labels->n()) throw ShapeError("dev embeddings and labels disagree on n");
      std::vector<double> pos(s, 0.0), tot(s, 0.0);
      for (std::size_t i = 0; i < dev.labels->n(); ++i) {
        const auto j = assign_part(part, dev.embeddings->row(i));
        tot[j] += 1.0;
        pos[j] += (*dev.labels)[i] == 1 ? 1.0 : 0.0;
      }
      std::vector<double> out(s);
      for (std::size_t j = 0; j < s; ++j) out[j] = (pos[j] + 1.0) / (tot[j] + 2.0);
      return out;
    }
  }
  throw InternalError("unhandled class balance mode");
}

}  // namespace detail

// Fits per-part accuracies, coverages and class balances on an existing partition.
inline LabelModel fit_with_partition(Partition partition, const EmbeddingDataset& emb,
                                     const ExtendedVoteMatrix& votes, const EngineConfig& cfg,
                                     const DevLabels& dev = {}) {
  cfg.validate();
  const std::size_t m = votes.votes.m();
  if (m < 3) throw ArgumentError("triplet method needs three sources (m = " + std::to_string(m) + ")");
  if (emb.n() != votes.votes.n()) throw ShapeError("embeddings and votes disagree on n");
  if (partition.n() != emb.n()) throw ShapeError("partition and embeddings disagree on n");
  const std::size_t s = partition.s;
  for (std::size_t j = 0; j < s; ++j) {
    if (partition.part_sizes[j] == 0) throw InternalError("part " + std::to_string(j) + " is empty");
  }
  const double eps = cfg.accuracy_clamp;

  LabelModel model;
  model.s = s;
  model.m = m;
  model.radii = votes.radii;
  model.accuracy_clamp = eps;
  model.seed = cfg.seed;
  model.class_balances = detail::class_balances(cfg, partition, dev);

  const auto local = pairwise_agreements(votes, partition);
  const std::vector<std::size_t> everyone(emb.n(), 0);
  const auto pooled = pairwise_agreements(votes.votes, everyone, 1);

  model.accuracies.assign(s * m, 0.0);
  model.estimate_kind.assign(s * m, EstimateKind::local);
  model.coverages.assign(s * m, 0.0);
  for (std::size_t x = 0; x < emb.n(); ++x) {
    const auto j = partition.assignment[x];
    for (std::size_t i = 0; i < m; ++i) {
      if (votes.votes.at(x, i) != 0) model.coverages[j * m + i] += 1.0;
    }
  }
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      model.coverages[j * m + i] /= static_cast<double>(partition.part_sizes[j]);
    }
  }
  std::vector<std::optional<double>> pooled_acc(m);
  for (std::size_t i = 0; i < m; ++i) pooled_acc[i] = triplet_accuracy(pooled, 0, i, eps);
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t c = j * m + i;
      if (auto a = triplet_accuracy(local, j, i, eps)) {
        model.accuracies[c] = *a;
      } else if (pooled_acc[i]) {
        model.accuracies[c] = *pooled_acc[i];
        model.estimate_kind[c] = EstimateKind::pooled;
      } else {
        model.accuracies[c] = 0.0;
        model.estimate_kind[c] = EstimateKind::uninformative;
      }
    }
  }
  model.partition = std::move(partition);
  model.support = std::make_shared<SupportSet>(SupportSet{emb, detail::raw_votes(votes)});
  return model;
}

// Partitions with k-means (s and seed from the config), then fits.
inline LabelModel fit(const EmbeddingDataset& emb, const ExtendedVoteMatrix& votes,
                      const EngineConfig& cfg, const DevLabels& dev = {}) {
  cfg.validate();
  if (votes.votes.m() < 3) {
    throw ArgumentError("triplet method needs three sources (m = " +
                        std::to_string(votes.votes.m()) + ")");
  }
  auto part = kmeans_fit(emb, cfg.s, cfg.seed, KMeansOptions{cfg.kmeans_max_iters, cfg.kmeans_tol});
  return fit_with_partition(std::move(part), emb, votes, cfg, dev);
}

// Pr(y = +1 | votes, part). Abstaining sources contribute no factor; the
// normalizer is the model-implied mixture over y.
inline double posterior_in_part(const LabelModel& model, std::size_t part,
                                std::span<const std::int8_t> votes_row) {
  if (votes_row.size() != model.m) throw ShapeError("votes row length must equal m");
  if (part >= model.s) throw ArgumentError("part index out of range");
  const double prior = model.class_balances[part];
  double pos = prior, neg = 1.0 - prior;
  double log_pos = std::log(prior), log_neg = std::log1p(-prior);
  for (std::size_t i = 0; i < model.m; ++i) {
    const int v = votes_row[i];
    if (v == 0) continue;
    const double cov = model.coverage(part, i);
    if (!(cov > 0.0)) continue;  // identical factor on both branches
    const double a = model.accuracy(part, i);
    const double fp = (1.0 + v * a) / 2.0 * cov;
    const double fn = (1.0 - v * a) / 2.0 * cov;
    pos *= fp;
    neg *= fn;
    log_pos += std::log(fp);
    log_neg += std::log(fn);
  }
  const double total = pos + neg;
  if (total > 1e-280) return pos / total;
  // Long products underflow; fall back to the log-space ratio.
  return 1.0 / (1.0 + std::exp(log_neg - log_pos));
}

template <typename T>
double posterior(const LabelModel& model, std::span<const T> point,
                 std::span<const std::int8_t> votes_row) {
  return posterior_in_part(model, assign_part(model.partition, point), votes_row);
}

inline constexpr std::size_t kBruteForceMaxSources = 10;

// Posterior read off the fully materialized joint Pr(votes, y | part) over
// all 3^m vote patterns, abstain factors (1 - coverage) included.
inline double brute_force_posterior(const LabelModel& model, std::size_t part,
                                    std::span<const std::int8_t> votes_row) {
  const std::size_t m = model.m;
  if (m > kBruteForceMaxSources) throw ArgumentError("brute-force posterior supports m <= 10");
  if (votes_row.size() != m) throw ShapeError("votes row length must equal m");
  if (part >= model.s) throw ArgumentError("part index out of range");
  std::size_t patterns = 1;
  for (std::size_t i = 0; i < m; ++i) patterns *= 3;
  // Pattern digit i (base 3): 0 -> abstain, 1 -> +1, 2 -> -1.
  std::vector<double> joint_pos(patterns), joint_neg(patterns);
  const double prior = model.class_balances[part];
  double mass = 0.0;
  for (std::size_t p = 0; p < patterns; ++p) {
    double jp = prior, jn = 1.0 - prior;
    std::size_t code = p;
    for (std::size_t i = 0; i < m; ++i, code /= 3) {
      const std::size_t digit = code % 3;
      const double cov = model.coverage(part, i);
      const double a = model.accuracy(part, i);
      if (digit == 0) {
        jp *= 1.0 - cov;
        jn *= 1.0 - cov;
      } else {
        const double v = digit == 1 ? 1.0 : -1.0;
        jp *= (1.0 + v * a) / 2.0 * cov;
        jn *= (1.0 - v * a) / 2.0 * cov;
      }
    }
    joint_pos[p] = jp;
    joint_neg[p] = jn;
    mass += jp + jn;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw InternalError("joint table does not sum to 1");
  std::size_t index = 0, place = 1;
  for (std::size_t i = 0; i < m; ++i, place *= 3) {
    const int v = votes_row[i];
    index += place * (v == 0 ? 0u : v == 1 ? 1u : 2u);
  }
  const double denom = joint_pos[index] + joint_neg[index];
  if (!(denom > 0.0)) throw ArgumentError("vote pattern has zero probability under the model");
  return joint_pos[index] / denom;
}

// Counts of each extended-vote pattern per part, for the empirical normalizer.
class EmpiricalJoint {
 public:
  EmpiricalJoint(const ExtendedVoteMatrix& votes, const Partition& part)
      : counts_(part.s), sizes_(part.part_sizes) {
    for (std::size_t x = 0; x < votes.votes.n(); ++x) {
      const auto row = votes.votes.row(x);
      ++counts_[part.assignment[x]][std::vector<std::int8_t>(row.begin(), row.end())];
    }
  }

  double frequency(std::size_t part, std::span<const std::int8_t> row) const {
    const auto& c = counts_[part];
    const auto it = c.find(std::vector<std::int8_t>(row.begin(), row.end()));
    if (it == c.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(sizes_[part]);
  }

 private:
  std::vector<std::map<std::vector<std::int8_t>, std::size_t>> counts_;
  std::vector<std::size_t> sizes_;
};

// Diagnostic: likelihood times prior divided by the empirical pattern
// frequency in the part. Not guaranteed to lie in [0, 1]; nullopt for
// patterns never seen in training.
inline std::optional<double> empirical_posterior(const LabelModel& model, const EmpiricalJoint& joint,
                                                 std::size_t part,
                                                 std::span<const std::int8_t> votes_row) {
  const double freq = joint.frequency(part, votes_row);
  if (freq <= 0.0) return std::nullopt;
  double num = model.class_balances[part];
  for (std::size_t i = 0; i < model.m; ++i) {
    const int v = votes_row[i];
    const double cov = model.coverage(part, i);
    num *= v == 0 ? 1.0 - cov : (1.0 + v * model.accuracy(part, i)) / 2.0 * cov;
  }
  return num / freq;
}

struct Predictions {
  std::vector<double> posterior;
  std::vector<int> label;
  std::vector<std::size_t> part;
  std::vector<std::size_t> abstains;  // sources still abstaining after extension

  std::size_t n() const { return posterior.size(); }
};

inline int hard_label(double posterior) { return posterior >= 0.5 ? 1 : -1; }

// Predicts on already-extended votes.
inline Predictions predict_extended(const LabelModel& model, const EmbeddingDataset& emb,
                                    const VoteMatrix& extended) {
  if (emb.n() != extended.n()) throw ShapeError("test embeddings and votes disagree on n");
  if (extended.m() != model.m) throw ShapeError("test votes have the wrong number of sources");
  if (emb.d() != model.partition.d) throw ShapeError("test embeddings have the wrong dimension");
  Predictions out;
  const std::size_t n = emb.n();
  out.posterior.resize(n);
  out.label.resize(n);
  out.part.resize(n);
  out.abstains.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto row = extended.row(i);
    const auto j = assign_part(model.partition, emb.row(i));
    out.part[i] = j;
    out.posterior[i] = posterior_in_part(model, j, row);
    out.label[i] = hard_label(out.posterior[i]);
    out.abstains[i] = static_cast<std::size_t>(std::count(row.begin(), row.end(), std::int8_t{0}));
  });
  return out;
}

// Extends raw test votes against the training support with the model radii, then predicts.
inline Predictions predict(const LabelModel& model, const EmbeddingDataset& emb,
                           const VoteMatrix& votes) {
  if (emb.n() != votes.n()) throw ShapeError("test embeddings and votes disagree on n");
  if (votes.m() != model.m) throw ShapeError("test votes have the wrong number of sources");
  if (!model.needs_support()) return predict_extended(model, emb, votes);
  if (!model.support) throw ArgumentError("model has non-zero radii but no training support");
  const auto ext = extend_against(model.support->embeddings, model.support->votes, emb, votes,
                                  model.radii);
  return predict_extended(model, emb, ext.votes);
}

inline std::string encode_predictions_csv(const Predictions& p) {
  std::string out = "id,part,posterior,label,abstains\n";
  for (std::size_t i = 0; i < p.n(); ++i) {
    out += std::to_string(i) + "," + std::to_string(p.part[i]) + "," +
           format_double(p.posterior[i]) + "," + std::to_string(p.label[i]) + "," +
           std::to_string(p.abstains[i]) + "\n";
  }
  return out;
}

// Reads the posterior column of a predictions CSV.
inline std::vector<double> parse_predictions_posteriors(std::string_view text) {
  const auto rows = detail::lines(text);
  if (rows.empty() || rows[0] != "id,part,posterior,label,abstains") {
    throw FormatError("predictions CSV header must be 'id,part,posterior,label,abstains'");
  }
  std::vector<double> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = detail::split(rows[i], ',');
    if (cells.size() != 5) throw FormatError("predictions CSV line " + std::to_string(i + 1) + " must have 5 columns");
    detail::check_id(cells[0], i - 1, i + 1);
    auto v = detail::parse_number<double>(cells[2]);
    if (!v || !(*v >= 0.0 && *v <= 1.0)) {
      throw ValidationError("predictions CSV line " + std::to_string(i + 1) + ": posterior must lie in [0, 1]");
    }
    out.push_back(*v);
  }
  return out;
}

namespace detail {
inline nlohmann::json matrix_json(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(v.begin() + r * cols, v.begin() + (r + 1) * cols));
  }
  return out;
}

inline std::vector<double> matrix_from_json(const nlohmann::json& j, std::size_t rows,
                                            std::size_t cols, const char* field) {
  const auto mat = j.get<std::vector<std::vector<double>>>();
  if (mat.size() != rows) throw ValidationError(std::string("model field '") + field + "' must have s rows");
  std::vector<double> out;
  for (const auto& r : mat) {
    if (r.size() != cols) throw ValidationError(std::string("model field '") + field + "' rows must have m entries");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}
}  // namespace detail

inline nlohmann::json model_to_json(const LabelModel& model) {
  nlohmann::json j;
  j["partition"] = partition_to_json(model.partition);
  j["accuracies"] = detail::matrix_json(model.accuracies, model.s, model.m);
  j["coverages"] = detail::matrix_json(model.coverages, model.s, model.m);
  j["class_balances"] = model.class_balances;
  j["radii"] = model.radii;
  j["accuracy_clamp"] = model.accuracy_clamp;
  j["seed"] = model.seed;
  std::vector<std::string> kinds;
  for (auto k : model.estimate_kind) kinds.emplace_back(to_string(k));
  j["estimates"] = kinds;
  return j;
}

// Reads a model document. The training support is not part of the document;
// callers attach it when the radii are non-zero.
inline LabelModel model_from_json(const nlohmann::json& j) {
  try {
    LabelModel model;
    model.partition = partition_from_json(j.at("partition"));
    model.s = model.partition.s;
    model.radii = j.at("radii").get<std::vector<double>>();
    model.m = model.radii.size();
    model.accuracies = detail::matrix_from_json(j.at("accuracies"), model.s, model.m, "accuracies");
    model.coverages = detail::matrix_from_json(j.at("coverages"), model.s, model.m, "coverages");
    model.class_balances = j.at("class_balances").get<std::vector<double>>();
    model.accuracy_clamp = j.at("accuracy_clamp").get<double>();
    model.seed = j.at("seed").get<std::uint64_t>();
    if (model.class_balances.size() != model.s) {
      throw ValidationError("model field 'class_balances' must have length s");
    }
    for (double b : model.class_balances) {
      if (!(b > 0.0 && b < 1.0)) throw ValidationError("model field 'class_balances' entries must lie in (0, 1)");
    }
    for (double a : model.accuracies) {
      if (!(a > -1.0 && a < 1.0)) throw ValidationError("model field 'accuracies' entries must lie in (-1, 1)");
    }
    for (double c : model.coverages) {
      if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("model field 'coverages' entries must lie in [0, 1]");
    }
    model.estimate_kind.assign(model.s * model.m, EstimateKind::local);
    if (j.contains("estimates")) {
      const auto kinds = j.at("estimates").get<std::vector<std::string>>();
      for (std::size_t c = 0; c < kinds.size() && c < model.estimate_kind.size(); ++c) {
        model.estimate_kind[c] = kinds[c] == "pooled"          ? EstimateKind::pooled
                                 : kinds[c] == "uninformative" ? EstimateKind::uninformative
                                                               : EstimateKind::local;
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace liger

#pragma once

// Empirical smoothness curves of an embedding space: how often labels,
// abstain indicators, or off-support labels change within a neighborhood.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/io.hpp"
#include "liger/parallel.hpp"

namespace liger {

// Neighborhoods are either all other points within a radius, or the k nearest
// other points (distance ties broken by lower index).
struct NeighborhoodSpec {
  enum class Kind { radius, knn };
  Kind kind = Kind::radius;
  std::vector<double> values;

  static NeighborhoodSpec radius_grid(std::vector<double> radii) {
    return {Kind::radius, std::move(radii)};
  }
  static NeighborhoodSpec knn_grid(std::vector<std::size_t> ks) {
    return {Kind::knn, std::vector<double>(ks.begin(), ks.end())};
  }
};

struct SmoothnessReport {
  NeighborhoodSpec spec;
  std::optional<std::vector<double>> label_curve;
  std::optional<std::vector<double>> coverage_curve;
  std::optional<std::vector<double>> pl_curve;
};

namespace detail {

inline void check_grid(const NeighborhoodSpec& spec) {
  if (spec.values.empty()) throw ArgumentError("smoothness grid is empty");
  for (double v : spec.values) {
    if (!(v >= 0.0)) throw ArgumentError("smoothness grid values must be non-negative");
    if (spec.kind == NeighborhoodSpec::Kind::knn && v != std::floor(v)) {
      throw ArgumentError("kNN grid values must be integers");
    }
  }
}

// Other points sorted by (distance, index).
inline std::vector<std::pair<double, std::size_t>> sorted_neighbors(const EmbeddingDataset& emb,
                                                                   std::size_t i) {
  std::vector<std::pair<double, std::size_t>> out;
  out.reserve(emb.n() ? emb.n() - 1 : 0);
  for (std::size_t j = 0; j < emb.n(); ++j) {
    if (j != i) out.emplace_back(emb.distance(i, j), j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Number of leading neighbors inside the neighborhood for grid value g.
inline std::size_t neighborhood_size(const std::vector<std::pair<double, std::size_t>>& sorted,
                                     const NeighborhoodSpec& spec, double g) {
  if (spec.kind == NeighborhoodSpec::Kind::knn) {
    return std::min(sorted.size(), static_cast<std::size_t>(g));
  }
  const auto it = std::upper_bound(sorted.begin(), sorted.end(),
                                   std::make_pair(g, std::numeric_limits<std::size_t>::max()));
  return static_cast<std::size_t>(it - sorted.begin());
}

struct PointContribution {
  std::vector<double> label;     // G: fraction of differing labels (or -1 when empty)
  std::vector<double> coverage;  // G x m: fraction of differing abstain indicators
  std::vector<double> pl;        // G x m: 1 if a differing off-support witness exists, -1 if not in support
};

}  // namespace detail

// Computes whichever curves the provided inputs allow: label curve needs
// labels, coverage curve needs votes, PL curve needs both.
inline SmoothnessReport smoothness_report(const EmbeddingDataset& emb, const LabelVector* labels,
                                          const VoteMatrix* votes, const NeighborhoodSpec& spec) {
  detail::check_grid(spec);
  if (labels && labels->n() != emb.n()) throw ShapeError("labels and embeddings disagree on n");
  if (votes && votes->n() != emb.n()) throw ShapeError("votes and embeddings disagree on n");
  const std::size_t n = emb.n();
  const std::size_t G = spec.values.size();
  const std::size_t m = votes ? votes->m() : 0;

  std::vector<detail::PointContribution> contrib(n);
  parallel_for(n, [&](std::size_t i) {
    const auto sorted = detail::sorted_neighbors(emb, i);
    auto& c = contrib[i];
    std::vector<std::size_t> sizes(G);
    for (std::size_t g = 0; g < G; ++g) sizes[g] = detail::neighborhood_size(sorted, spec, spec.values[g]);

    if (labels) {
      c.label.assign(G, -1.0);
      std::vector<std::size_t> prefix(sorted.size() + 1, 0);
      for (std::size_t r = 0; r < sorted.size(); ++r) {
        prefix[r + 1] = prefix[r] + ((*labels)[sorted[r].second] != (*labels)[i]);
      }
      for (std::size_t g = 0; g < G; ++g) {
        if (sizes[g] > 0) c.label[g] = static_cast<double>(prefix[sizes[g]]) / static_cast<double>(sizes[g]);
      }
    }
    if (votes) {
      c.coverage.assign(G * m, -1.0);
      std::vector<std::size_t> prefix(sorted.size() + 1);
      for (std::size_t k = 0; k < m; ++k) {
        const bool own = votes->at(i, k) != 0;
        prefix[0] = 0;
        for (std::size_t r = 0; r < sorted.size(); ++r) {
          prefix[r + 1] = prefix[r] + ((votes->at(sorted[r].second, k) != 0) != own);
        }
        for (std::size_t g = 0; g < G; ++g) {
          if (sizes[g] > 0) {
            c.coverage[g * m + k] = static_cast<double>(prefix[sizes[g]]) / static_cast<double>(sizes[g]);
          }
        }
      }
    }
    if (votes && labels) {
      c.pl.assign(G * m, -1.0);
      for (std::size_t k = 0; k < m; ++k) {
        if (votes->at(i, k) == 0) continue;
        // Rank (1-based) of the first off-support neighbor with a different label.
        std::size_t witness = std::numeric_limits<std::size_t>::max();
        for (std::size_t r = 0; r < sorted.size(); ++r) {
          const auto j = sorted[r].second;
          if (votes->at(j, k) == 0 && (*labels)[j] != (*labels)[i]) {
            witness = r + 1;
            break;
          }
        }
        for (std::size_t g = 0; g < G; ++g) {
          c.pl[g * m + k] = witness <= sizes[g] ? 1.0 : 0.0;
        }
      }
    }
  }, 16);

  SmoothnessReport report;
  report.spec = spec;
  if (labels) {
    std::vector<double> curve(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (contrib[i].label[g] >= 0.0) {
          sum += contrib[i].label[g];
          ++cnt;
        }
      }
      curve[g] = cnt ? sum / static_cast<double>(cnt) : 0.0;
    }
    report.label_curve = std::move(curve);
  }
  if (votes) {
    std::vector<double> curve(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      double over_sources = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = contrib[i].coverage[g * m + k];
          if (v >= 0.0) {
            sum += v;
            ++cnt;
          }
        }
        over_sources += cnt ? sum / static_cast<double>(cnt) : 0.0;
      }
      curve[g] = m ? over_sources / static_cast<double>(m) : 0.0;
    }
    report.coverage_curve = std::move(curve);
  }
  if (votes && labels) {
    std::vector<double> curve(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      double over_sources = 0.0;
      std::size_t sources = 0;
      for (std::size_t k = 0; k < m; ++k) {
        double hits = 0.0;
        std::size_t support = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = contrib[i].pl[g * m + k];
          if (v >= 0.0) {
            hits += v;
            ++support;
          }
        }
        if (support == 0) continue;  // source never votes
        over_sources += hits / static_cast<double>(support);
        ++sources;
      }
      curve[g] = sources ? over_sources / static_cast<double>(sources) : 0.0;
    }
    report.pl_curve = std::move(curve);
  }
  return report;
}

inline std::vector<double> label_lipschitz_curve(const EmbeddingDataset& emb,
                                                 const LabelVector& labels,
                                                 const NeighborhoodSpec& spec) {
  return *smoothness_report(emb, &labels, nullptr, spec).label_curve;
}

inline std::vector<double> coverage_lipschitz_curve(const EmbeddingDataset& emb,
                                                    const VoteMatrix& votes,
                                                    const NeighborhoodSpec& spec) {
  return *smoothness_report(emb, nullptr, &votes, spec).coverage_curve;
}

inline std::vector<double> local_pl_curve(const EmbeddingDataset& emb, const LabelVector& labels,
                                          const VoteMatrix& votes,
                                          const std::vector<double>& radius_grid) {
  if (!std::is_sorted(radius_grid.begin(), radius_grid.end())) {
    throw ArgumentError("PL radius grid must be ascending");
  }
  return *smoothness_report(emb, &labels, &votes, NeighborhoodSpec::radius_grid(radius_grid)).pl_curve;
}

// CSV "grid_value,label_curve,coverage_curve,pl_curve"; uncomputed curves are empty cells.
inline std::string encode_smoothness_csv(const SmoothnessReport& r) {
  std::string out = "grid_value,label_curve,coverage_curve,pl_curve\n";
  const auto cell = [](const std::optional<std::vector<double>>& c, std::size_t g) {
    return c ? format_double((*c)[g]) : std::string();
  };
  for (std::size_t g = 0; g < r.spec.values.size(); ++g) {
    out += format_double(r.spec.values[g]) + "," + cell(r.label_curve, g) + "," +
           cell(r.coverage_curve, g) + "," + cell(r.pl_curve, g) + "\n";
  }
  return out;
}

}  // namespace liger

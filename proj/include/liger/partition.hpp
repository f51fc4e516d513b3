#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/parallel.hpp"
#include "liger/random.hpp"

namespace liger {

// Assignment of points to s parts of the embedding space.
//
// Centroids live in "clustering space": the raw coordinates under the
// euclidean metric, unit-normalized coordinates under cosine. In that space
// squared euclidean distance orders centroids exactly as the dataset metric does.
struct Partition {
  std::size_t s = 0;
  std::size_t d = 0;
  Metric metric = Metric::euclidean;
  std::vector<double> centroids;        // s x d, row-major
  std::vector<std::size_t> assignment;  // length n, values in [0, s)
  std::vector<std::size_t> part_sizes;  // length s

  std::span<const double> centroid(std::size_t j) const { return {centroids.data() + j * d, d}; }
  std::size_t n() const { return assignment.size(); }

  bool operator==(const Partition&) const = default;
};

struct KMeansOptions {
  std::size_t max_iters = 100;
  double tol = 1e-6;
};

namespace detail {

// Row i in clustering space.
inline void clustering_point(Metric metric, std::span<const float> row, std::span<double> out) {
  double sq = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = row[k];
    sq += out[k] * out[k];
  }
  if (metric == Metric::cosine) {
    const double norm = std::sqrt(sq);
    for (auto& v : out) v /= norm;
  }
}

inline std::vector<double> clustering_points(const EmbeddingDataset& emb) {
  std::vector<double> pts(emb.n() * emb.d());
  for (std::size_t i = 0; i < emb.n(); ++i) {
    clustering_point(emb.metric(), emb.row(i), {pts.data() + i * emb.d(), emb.d()});
  }
  return pts;
}

inline double squared_distance(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

// Nearest centroid, ties to the lowest index.
inline std::size_t nearest_centroid(const double* point, const std::vector<double>& centroids,
                                    std::size_t s, std::size_t d, double* best_dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s; ++j) {
    const double dist = squared_distance(point, centroids.data() + j * d, d);
    if (dist < best_d) {
      best_d = dist;
      best = j;
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

struct LloydState {
  const std::vector<double>& points;
  std::size_t n, d, s;
  std::vector<double> centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> dist;  // squared distance of each point to its centroid
  std::vector<std::size_t> sizes;

  void assign() {
    parallel_for(n, [&](std::size_t i) {
      assignment[i] = nearest_centroid(points.data() + i * d, centroids, s, d, &dist[i]);
    });
    sizes.assign(s, 0);
    for (auto a : assignment) ++sizes[a];
  }

  // Assign every point to its nearest centroid; an empty part takes the point
  // farthest from its centroid as its new centroid, then everything is reassigned.
  void assign_and_repair() {
    assign();
    for (std::size_t guard = 0; guard <= s; ++guard) {
      const auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
      if (empty == sizes.end()) return;
      const auto j = static_cast<std::size_t>(empty - sizes.begin());
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assignment[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (far == n) throw InternalError("k-means repair found no donor point");
      std::copy_n(points.data() + far * d, d, centroids.data() + j * d);
      assign();
      if (sizes[j] == 0) {
        // Only reachable with duplicate points that tie a lower-index centroid.
        --sizes[assignment[far]];
        assignment[far] = j;
        dist[far] = 0.0;
        sizes[j] = 1;
      }
    }
    if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) {
      throw InternalError("k-means left an empty part after repair");
    }
  }

  double objective() const {
    double acc = 0.0;
    for (double v : dist) acc += v;
    return acc;
  }

  // Recomputes centroids as part means; returns relative centroid movement.
  double update(Metric metric) {
    std::vector<double> sums(s * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = points.data() + i * d;
      double* c = sums.data() + assignment[i] * d;
      for (std::size_t k = 0; k < d; ++k) c[k] += p[k];
    }
    double moved = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      double* c = sums.data() + j * d;
      for (std::size_t k = 0; k < d; ++k) c[k] /= static_cast<double>(sizes[j]);
      if (metric == Metric::cosine) {
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) sq += c[k] * c[k];
        if (sq > 0.0) {
          const double norm = std::sqrt(sq);
          for (std::size_t k = 0; k < d; ++k) c[k] /= norm;
        } else {
          std::copy_n(centroids.data() + j * d, d, c);
        }
      }
      const double* old = centroids.data() + j * d;
      moved += squared_distance(c, old, d);
      for (std::size_t k = 0; k < d; ++k) scale += old[k] * old[k];
    }
    centroids = std::move(sums);
    return std::sqrt(moved) / std::max(std::sqrt(scale), std::numeric_limits<double>::min());
  }
};

inline std::size_t distinct_points(const std::vector<double>& points, std::size_t n, std::size_t d) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const auto row = [&](std::size_t i) { return points.begin() + static_cast<std::ptrdiff_t>(i * d); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(row(a), row(a) + static_cast<std::ptrdiff_t>(d), row(b),
                                        row(b) + static_cast<std::ptrdiff_t>(d));
  });
  std::size_t count = n ? 1 : 0;
  for (std::size_t k = 1; k < n; ++k) {
    count += !std::equal(row(order[k]), row(order[k]) + static_cast<std::ptrdiff_t>(d), row(order[k - 1]));
  }
  return count;
}

inline std::vector<double> kmeans_plus_plus(const std::vector<double>& points, std::size_t n,
                                            std::size_t d, std::size_t s, Rng& rng) {
  std::vector<double> centroids;
  centroids.reserve(s * d);
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  chosen[first] = true;
  centroids.insert(centroids.end(), points.begin() + first * d, points.begin() + (first + 1) * d);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.data() + i * d, points.data() + first * d, d);
  for (std::size_t c = 1; c < s; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > target) break;
      }
    } else {
      // Every remaining point duplicates a chosen centroid.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    centroids.insert(centroids.end(), points.begin() + pick * d, points.begin() + (pick + 1) * d);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.data() + i * d, points.data() + pick * d, d));
    }
  }
  return centroids;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed (emb, s, seed).
// When `objective_trace` is given it receives the objective after every assignment step.
inline Partition kmeans_fit(const EmbeddingDataset& emb, std::size_t s, std::uint64_t seed,
                            const KMeansOptions& opts = {},
                            std::vector<double>* objective_trace = nullptr) {
  if (s == 0) throw ArgumentError("k-means needs s >= 1");
  if (s > emb.n()) {
    throw ArgumentError("k-means needs s <= n (s = " + std::to_string(s) +
                        ", n = " + std::to_string(emb.n()) + ")");
  }
  const std::size_t n = emb.n(), d = emb.d();
  const auto points = detail::clustering_points(emb);
  // Coinciding points would force coinciding centroids, and assign_part could
  // then not reproduce the fitted assignment.
  if (s > 1 && detail::distinct_points(points, n, d) < s) {
    throw ArgumentError("k-means needs at least s = " + std::to_string(s) +
                        " distinct points in clustering space");
  }
  Rng rng(seed);

  detail::LloydState st{points, n, d, s, detail::kmeans_plus_plus(points, n, d, s, rng),
                        std::vector<std::size_t>(n), std::vector<double>(n), {}};
  std::vector<std::size_t> previous;
  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    st.assign_and_repair();
    if (objective_trace) objective_trace->push_back(st.objective());
    if (st.assignment == previous) break;
    previous = st.assignment;
    if (st.update(emb.metric()) < opts.tol) break;
  }
  st.assign_and_repair();
  if (objective_trace) objective_trace->push_back(st.objective());

  Partition part;
  part.s = s;
  part.d = d;
  part.metric = emb.metric();
  part.centroids = std::move(st.centroids);
  part.assignment = std::move(st.assignment);
  part.part_sizes = std::move(st.sizes);
  return part;
}

// Partition from a given assignment; centroids are the part means in clustering space.
inline Partition partition_from_assignment(const EmbeddingDataset& emb,
                                           std::vector<std::size_t> assignment, std::size_t s) {
  if (assignment.size() != emb.n()) throw ShapeError("assignment length must equal n");
  const std::size_t d = emb.d();
  Partition part;
  part.s = s;
  part.d = d;
  part.metric = emb.metric();
  part.part_sizes.assign(s, 0);
  part.centroids.assign(s * d, 0.0);
  std::vector<double> p(d);
  for (std::size_t i = 0; i < emb.n(); ++i) {
    if (assignment[i] >= s) throw ArgumentError("assignment index out of range");
    ++part.part_sizes[assignment[i]];
    detail::clustering_point(emb.metric(), emb.row(i), p);
    for (std::size_t k = 0; k < d; ++k) part.centroids[assignment[i] * d + k] += p[k];
  }
  for (std::size_t j = 0; j < s; ++j) {
    if (part.part_sizes[j] == 0) throw ArgumentError("part " + std::to_string(j) + " is empty");
    for (std::size_t k = 0; k < d; ++k) {
      part.centroids[j * d + k] /= static_cast<double>(part.part_sizes[j]);
    }
  }
  part.assignment = std::move(assignment);
  return part;
}

// Index of the nearest centroid under the partition's metric; ties to the lowest index.
template <typename T>
std::size_t assign_part(const Partition& part, std::span<const T> point) {
  if (point.size() != part.d) {
    throw ShapeError("point has dimension " + std::to_string(point.size()) + ", partition has " +
                     std::to_string(part.d));
  }
  std::vector<double> p(point.begin(), point.end());
  if (part.metric == Metric::cosine) {
    double sq = 0.0;
    for (double v : p) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > 0.0) {
      for (auto& v : p) v /= norm;
    }
  }
  return detail::nearest_centroid(p.data(), part.centroids, part.s, part.d);
}

template <typename T>
std::size_t assign_part(const Partition& part, const std::vector<T>& point) {
  return assign_part(part, std::span<const T>(point));
}

struct PartDiameters {
  std::vector<double> per_part;
  double average = 0.0;  // weighted by part mass part_sizes / n
};

// Exact maximum pairwise distance inside each part.
inline PartDiameters part_diameters(const EmbeddingDataset& emb, const Partition& part) {
  if (part.n() != emb.n()) throw ShapeError("partition and embeddings disagree on n");
  std::vector<std::vector<std::size_t>> members(part.s);
  for (std::size_t i = 0; i < part.n(); ++i) members[part.assignment[i]].push_back(i);
  PartDiameters out;
  out.per_part.assign(part.s, 0.0);
  parallel_for(part.s, [&](std::size_t j) {
    double best = 0.0;
    const auto& mem = members[j];
    for (std::size_t a = 0; a < mem.size(); ++a) {
      for (std::size_t b = a + 1; b < mem.size(); ++b) {
        best = std::max(best, emb.distance(mem[a], mem[b]));
      }
    }
    out.per_part[j] = best;
  }, 1);
  for (std::size_t j = 0; j < part.s; ++j) {
    out.average += out.per_part[j] * (static_cast<double>(members[j].size()) /
                                      static_cast<double>(emb.n()));
  }
  return out;
}

// Sum of squared clustering-space distances of points to their centroid.
inline double kmeans_objective(const EmbeddingDataset& emb, const Partition& part) {
  const auto pts = detail::clustering_points(emb);
  double acc = 0.0;
  for (std::size_t i = 0; i < emb.n(); ++i) {
    acc += detail::squared_distance(pts.data() + i * emb.d(),
                                    part.centroids.data() + part.assignment[i] * part.d, part.d);
  }
  return acc;
}

inline nlohmann::json partition_to_json(const Partition& part) {
  nlohmann::json j;
  j["s"] = part.s;
  j["metric"] = std::string(to_string(part.metric));
  auto cents = nlohmann::json::array();
  for (std::size_t c = 0; c < part.s; ++c) {
    const auto row = part.centroid(c);
    cents.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["centroids"] = std::move(cents);
  j["assignment"] = part.assignment;
  return j;
}

inline Partition partition_from_json(const nlohmann::json& j) {
  try {
    Partition part;
    part.s = j.at("s").get<std::size_t>();
    part.metric = parse_metric(j.at("metric").get<std::string>());
    const auto cents = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (cents.size() != part.s || part.s == 0) {
      throw ValidationError("partition field 'centroids' must have s rows");
    }
    part.d = cents.front().size();
    for (const auto& row : cents) {
      if (row.size() != part.d) throw ValidationError("partition field 'centroids' is ragged");
      part.centroids.insert(part.centroids.end(), row.begin(), row.end());
    }
    part.assignment = j.at("assignment").get<std::vector<std::size_t>>();
    part.part_sizes.assign(part.s, 0);
    for (auto a : part.assignment) {
      if (a >= part.s) throw ValidationError("partition field 'assignment' has index >= s");
      ++part.part_sizes[a];
    }
    return part;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed partition document: ") + e.what());
  }
}

}  // namespace liger

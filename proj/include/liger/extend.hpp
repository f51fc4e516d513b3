#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liger/dataset.hpp"
#include "liger/error.hpp"
#include "liger/parallel.hpp"

namespace liger {

enum class Provenance : std::uint8_t { abstain = 0, original = 1, extended = 2 };

// Votes after nearest-neighbor extension, with where each vote came from.
struct ExtendedVoteMatrix {
  VoteMatrix votes;
  std::vector<Provenance> provenance;  // n x m, row-major
  std::vector<double> radii;

  Provenance provenance_at(std::size_t i, std::size_t source) const {
    return provenance[i * votes.m() + source];
  }
};

struct CoveredNeighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

// Nearest support point (a point where `source` votes) to `query`, skipping
// `exclude`. Ties go to the lowest index.
template <typename T>
std::optional<CoveredNeighbor> nearest_covered_to(const EmbeddingDataset& support,
                                                  const VoteMatrix& support_votes,
                                                  std::size_t source, std::span<const T> query,
                                                  std::optional<std::size_t> exclude = {}) {
  std::optional<CoveredNeighbor> best;
  for (std::size_t j = 0; j < support.n(); ++j) {
    if (support_votes.at(j, source) == 0 || (exclude && *exclude == j)) continue;
    const double dist = liger::distance(support.metric(), support.row(j), query);
    if (!best || dist < best->distance) best = CoveredNeighbor{j, dist};
  }
  return best;
}

inline std::optional<CoveredNeighbor> nearest_covered_neighbor(const EmbeddingDataset& emb,
                                                               const VoteMatrix& votes,
                                                               std::size_t source,
                                                               std::size_t point) {
  if (source >= votes.m()) throw ArgumentError("source index out of range");
  return nearest_covered_to(emb, votes, source, emb.row(point), point);
}

// Nearest covered support point for every abstaining query entry, all sources.
// Independent of the radii, so one index serves a whole radius sweep.
class NeighborIndex {
 public:
  NeighborIndex(const EmbeddingDataset& support, const VoteMatrix& support_votes,
                const EmbeddingDataset& query, const VoteMatrix& query_votes,
                bool query_is_support)
      : n_(query.n()), m_(query_votes.m()) {
    if (support.n() != support_votes.n() || query.n() != query_votes.n()) {
      throw ShapeError("embeddings and votes disagree on n");
    }
    if (support_votes.m() != query_votes.m()) throw ShapeError("support and query disagree on m");
    if (support.d() != query.d()) throw ShapeError("support and query disagree on dimension");
    if (support.metric() != query.metric()) throw ShapeError("support and query disagree on metric");

    // Per-source support lists keep the inner loop tight.
    std::vector<std::vector<std::size_t>> covered(m_);
    for (std::size_t j = 0; j < support.n(); ++j) {
      for (std::size_t k = 0; k < m_; ++k) {
        if (support_votes.at(j, k) != 0) covered[k].push_back(j);
      }
    }
    neighbor_.assign(n_ * m_, kNone);
    dist_.assign(n_ * m_, std::numeric_limits<double>::infinity());
    parallel_for(n_, [&](std::size_t i) {
      const auto q = query.row(i);
      for (std::size_t k = 0; k < m_; ++k) {
        if (query_votes.at(i, k) != 0) continue;
        std::size_t best = kNone;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j : covered[k]) {
          if (query_is_support && j == i) continue;
          const double dist = liger::distance(support.metric(), support.row(j), q);
          if (dist < best_d) {
            best_d = dist;
            best = j;
          }
        }
        neighbor_[i * m_ + k] = best;
        dist_[i * m_ + k] = best_d;
      }
    }, 64);
    vote_.assign(n_ * m_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < m_; ++k) {
        const auto j = neighbor_[i * m_ + k];
        if (j != kNone) vote_[i * m_ + k] = support_votes.at(j, k);
      }
    }
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

  std::optional<CoveredNeighbor> neighbor(std::size_t i, std::size_t source) const {
    const auto j = neighbor_[i * m_ + source];
    if (j == kNone) return std::nullopt;
    return CoveredNeighbor{j, dist_[i * m_ + source]};
  }

  // Applies the three-case extension rule to `query_votes` with per-source radii.
  ExtendedVoteMatrix extend(const VoteMatrix& query_votes, std::span<const double> radii) const {
    if (radii.size() != m_) {
      throw ShapeError("radii has length " + std::to_string(radii.size()) + ", expected m = " +
                       std::to_string(m_));
    }
    if (query_votes.n() != n_ || query_votes.m() != m_) throw ShapeError("query votes changed shape");
    for (double r : radii) {
      if (!(r >= 0.0)) throw ArgumentError("extension radii must be non-negative");
    }
    std::vector<std::int8_t> out(query_votes.data());
    std::vector<Provenance> prov(n_ * m_, Provenance::abstain);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < m_; ++k) {
        const std::size_t c = i * m_ + k;
        if (query_votes.at(i, k) != 0) {
          prov[c] = Provenance::original;
        } else if (neighbor_[c] != kNone && dist_[c] <= radii[k]) {
          out[c] = vote_[c];
          prov[c] = Provenance::extended;
        }
      }
    }
    return {VoteMatrix(n_, m_, std::move(out)), std::move(prov),
            std::vector<double>(radii.begin(), radii.end())};
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t n_, m_;
  std::vector<std::size_t> neighbor_;
  std::vector<double> dist_;
  std::vector<std::int8_t> vote_;
};

// Extended column for one source: keep own votes, copy the nearest covered
// neighbor's vote when it lies within r, abstain otherwise.
struct ExtendedColumn {
  std::vector<std::int8_t> votes;
  std::vector<Provenance> provenance;
};

inline ExtendedColumn extend_source(const EmbeddingDataset& emb, const VoteMatrix& votes,
                                    std::size_t source, double r) {
  if (source >= votes.m()) throw ArgumentError("source index out of range");
  if (!(r >= 0.0)) throw ArgumentError("extension radius must be non-negative");
  if (emb.n() != votes.n()) throw ShapeError("embeddings and votes disagree on n");
  ExtendedColumn col;
  col.votes.resize(votes.n());
  col.provenance.resize(votes.n());
  parallel_for(votes.n(), [&](std::size_t i) {
    const int own = votes.at(i, source);
    if (own != 0) {
      col.votes[i] = static_cast<std::int8_t>(own);
      col.provenance[i] = Provenance::original;
      return;
    }
    const auto nn = nearest_covered_neighbor(emb, votes, source, i);
    if (nn && nn->distance <= r) {
      col.votes[i] = static_cast<std::int8_t>(votes.at(nn->index, source));
      col.provenance[i] = Provenance::extended;
    } else {
      col.votes[i] = 0;
      col.provenance[i] = Provenance::abstain;
    }
  }, 64);
  return col;
}

// Extends every source of a training set against its own support.
inline ExtendedVoteMatrix extend_all(const EmbeddingDataset& emb, const VoteMatrix& votes,
                                     std::span<const double> radii) {
  if (radii.size() != votes.m()) {
    throw ShapeError("radii has length " + std::to_string(radii.size()) + ", expected m = " +
                     std::to_string(votes.m()));
  }
  return NeighborIndex(emb, votes, emb, votes, true).extend(votes, radii);
}

// Extends query votes (e.g. a test set) against a training support.
inline ExtendedVoteMatrix extend_against(const EmbeddingDataset& support,
                                         const VoteMatrix& support_votes,
                                         const EmbeddingDataset& query,
                                         const VoteMatrix& query_votes,
                                         std::span<const double> radii) {
  if (radii.size() != query_votes.m()) throw ShapeError("radii length must equal m");
  return NeighborIndex(support, support_votes, query, query_votes, false).extend(query_votes, radii);
}

// Wraps raw votes as an extension with all radii 0.
inline ExtendedVoteMatrix unextended(const VoteMatrix& votes) {
  std::vector<Provenance> prov(votes.n() * votes.m());
  for (std::size_t c = 0; c < prov.size(); ++c) {
    prov[c] = votes.data()[c] != 0 ? Provenance::original : Provenance::abstain;
  }
  return {votes, std::move(prov), std::vector<double>(votes.m(), 0.0)};
}

struct CoverageDelta {
  double before = 0.0;  // fraction of points with at least one vote
  double after = 0.0;
  double delta = 0.0;
  std::vector<double> per_source_before;
  std::vector<double> per_source_after;
};

inline CoverageDelta coverage_delta(const VoteMatrix& before, const ExtendedVoteMatrix& after) {
  const auto& a = after.votes;
  if (before.n() != a.n() || before.m() != a.m()) throw ShapeError("coverage_delta shape mismatch");
  CoverageDelta out;
  const auto n = static_cast<double>(before.n());
  out.per_source_before.assign(before.m(), 0.0);
  out.per_source_after.assign(before.m(), 0.0);
  std::size_t any_before = 0, any_after = 0;
  for (std::size_t i = 0; i < before.n(); ++i) {
    bool b = false, c = false;
    for (std::size_t k = 0; k < before.m(); ++k) {
      if (before.at(i, k) != 0) {
        b = true;
        out.per_source_before[k] += 1.0;
      }
      if (a.at(i, k) != 0) {
        c = true;
        out.per_source_after[k] += 1.0;
      }
    }
    any_before += b;
    any_after += c;
  }
  if (before.n() == 0) return out;
  for (auto& v : out.per_source_before) v /= n;
  for (auto& v : out.per_source_after) v /= n;
  out.before = static_cast<double>(any_before) / n;
  out.after = static_cast<double>(any_after) / n;
  out.delta = out.after - out.before;
  return out;
}

}  // namespace liger

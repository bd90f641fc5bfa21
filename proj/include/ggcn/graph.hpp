#pragma once

// Undirected attributed graphs, node orderings, growth schedules and the
// candidate / normalized adjacency matrices fed to the encoder.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/errors.hpp"
#include "ggcn/random.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

// Symmetric 0/1 adjacency with zero diagonal, plus one feature row per node.
struct Graph {
  Matrix adjacency;
  Matrix features;

  Index n() const { return adjacency.rows(); }
  Index feature_dim() const { return features.cols(); }

  void validate() const {
    if (adjacency.rows() != adjacency.cols()) {
      throw ContractError("graph: adjacency is not square " +
                          detail::shape_str(adjacency.rows(), adjacency.cols()));
    }
    if (features.rows() != adjacency.rows()) {
      throw ContractError("graph: " + std::to_string(features.rows()) + " feature rows for " +
                          std::to_string(adjacency.rows()) + " nodes");
    }
    for (Index i = 0; i < n(); ++i) {
      if (adjacency(i, i) != 0.0) {
        throw ContractError("graph: nonzero diagonal at node " + std::to_string(i));
      }
      for (Index j = i + 1; j < n(); ++j) {
        const double a = adjacency(i, j);
        if (a != adjacency(j, i)) {
          throw ContractError("graph: asymmetric entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
        }
        if (a != 0.0 && a != 1.0) {
          throw ContractError("graph: non-binary entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
        }
      }
    }
  }

  std::size_t edge_count() const {
    return static_cast<std::size_t>(adjacency.sum() / 2.0 + 0.5);
  }

  // Fraction of unordered node pairs that are edges.
  double density() const {
    const double pairs = static_cast<double>(n()) * static_cast<double>(n() - 1) / 2.0;
    return pairs > 0.0 ? static_cast<double>(edge_count()) / pairs : 0.0;
  }

  bool has_edge(Index i, Index j) const { return adjacency(i, j) != 0.0; }

  std::vector<std::pair<Index, Index>> edges() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index i = 0; i < n(); ++i) {
      for (Index j = i + 1; j < n(); ++j) {
        if (adjacency(i, j) != 0.0) out.emplace_back(i, j);
      }
    }
    return out;
  }

  static Graph from_edges(Index n, const std::vector<std::pair<Index, Index>>& edges,
                          Matrix features) {
    Graph g;
    g.adjacency = Matrix::Zero(n, n);
    for (auto [i, j] : edges) {
      if (i < 0 || j < 0 || i >= n || j >= n) {
        throw ContractError("graph: edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range for " + std::to_string(n) + " nodes");
      }
      if (i == j) continue;
      g.adjacency(i, j) = 1.0;
      g.adjacency(j, i) = 1.0;
    }
    g.features = std::move(features);
    g.validate();
    return g;
  }

  // Graph restricted to `nodes`, relabeled 0..k-1 in the given order.
  Graph induced(const std::vector<Index>& nodes) const {
    const Index k = static_cast<Index>(nodes.size());
    Graph g;
    g.adjacency.resize(k, k);
    g.features.resize(k, features.cols());
    for (Index a = 0; a < k; ++a) {
      g.features.row(a) = features.row(nodes[a]);
      for (Index b = 0; b < k; ++b) g.adjacency(a, b) = adjacency(nodes[a], nodes[b]);
    }
    return g;
  }
};

// Node i of the input graph moves to position pi[i].
struct NodeOrdering {
  std::vector<Index> pi;

  Index size() const { return static_cast<Index>(pi.size()); }

  void validate() const {
    std::vector<char> seen(pi.size(), 0);
    for (Index p : pi) {
      if (p < 0 || p >= size() || seen[p]) {
        throw ContractError("ordering is not a permutation of 0.." + std::to_string(size() - 1));
      }
      seen[p] = 1;
    }
  }

  NodeOrdering inverse() const {
    NodeOrdering inv;
    inv.pi.resize(pi.size());
    for (Index i = 0; i < size(); ++i) inv.pi[pi[i]] = i;
    return inv;
  }

  static NodeOrdering identity(Index n) {
    NodeOrdering o;
    o.pi.resize(n);
    std::iota(o.pi.begin(), o.pi.end(), Index{0});
    return o;
  }
};

// Consecutive ordering positions split into batches; batches[0] is the seed.
struct GrowthSchedule {
  std::vector<std::vector<Index>> batches;

  std::size_t size() const { return batches.size(); }
  // Number of nodes present once batch `s` has arrived.
  Index present_after(std::size_t s) const {
    Index total = 0;
    for (std::size_t k = 0; k <= s; ++k) total += static_cast<Index>(batches[k].size());
    return total;
  }
};

// Observed block plus stochastic links to `added` incoming nodes.
struct CandidateAdjacency {
  Matrix matrix;
  Index observed = 0;
  Index added = 0;
  double p_tilde = 0.0;

  Index size() const { return matrix.rows(); }
};

struct NormalizedAdjacency {
  Matrix matrix;
  Eigen::VectorXd degrees;
};

enum class SelfLoops { all, new_only };

inline NormalizedAdjacency normalize_adjacency(const Matrix& base) {
  if (base.rows() != base.cols()) {
    throw DimensionError("normalize_adjacency: matrix is not square " +
                         detail::shape_str(base.rows(), base.cols()));
  }
  NormalizedAdjacency out;
  out.degrees = base.rowwise().sum();
  for (Index i = 0; i < base.rows(); ++i) {
    if (!(out.degrees(i) > 0.0)) {
      throw ContractError("normalize_adjacency: node " + std::to_string(i) +
                          " has zero degree; add self-loops first");
    }
  }
  const Eigen::VectorXd inv_sqrt = out.degrees.cwiseSqrt().cwiseInverse();
  out.matrix = inv_sqrt.asDiagonal() * base * inv_sqrt.asDiagonal();
  return out;
}

// Draws the candidate matrix: `observed` copied, a unit diagonal for every
// incoming node, and each pair touching an incoming node linked with
// probability p_tilde.
inline CandidateAdjacency build_candidate(const Matrix& observed, Index n_new, double p_tilde,
                                          Rng& rng) {
  detail::require(p_tilde >= 0.0 && p_tilde <= 1.0,
                  "build_candidate: p_tilde " + std::to_string(p_tilde) + " outside [0,1]");
  detail::require(n_new >= 1, "build_candidate: need at least one incoming node");
  if (observed.rows() != observed.cols()) {
    throw DimensionError("build_candidate: observed block is not square " +
                         detail::shape_str(observed.rows(), observed.cols()));
  }
  const Index t = observed.rows();
  const Index size = t + n_new;
  CandidateAdjacency c;
  c.observed = t;
  c.added = n_new;
  c.p_tilde = p_tilde;
  c.matrix = Matrix::Zero(size, size);
  c.matrix.topLeftCorner(t, t) = observed;
  std::bernoulli_distribution fill(p_tilde);
  for (Index j = t; j < size; ++j) {
    for (Index i = 0; i < j; ++i) {
      if (fill(rng)) {
        c.matrix(i, j) = 1.0;
        c.matrix(j, i) = 1.0;
      }
    }
    c.matrix(j, j) = 1.0;
  }
  return c;
}

// The matrix handed to normalize_adjacency. Under `all` every node gets a
// self-loop; under `new_only` only incoming nodes do, plus any old node that
// would otherwise have zero degree.
inline Matrix with_self_loops(const Matrix& adjacency, Index observed, SelfLoops policy) {
  Matrix base = adjacency;
  for (Index i = 0; i < base.rows(); ++i) {
    if (i >= observed || policy == SelfLoops::all || base.row(i).sum() == 0.0) base(i, i) = 1.0;
  }
  return base;
}

inline Matrix with_self_loops(const CandidateAdjacency& c, SelfLoops policy) {
  return with_self_loops(c.matrix, c.observed, policy);
}

inline NodeOrdering sample_ordering(Index n, Rng& rng) {
  detail::require(n >= 1, "sample_ordering: n must be at least 1");
  NodeOrdering o = NodeOrdering::identity(n);
  std::shuffle(o.pi.begin(), o.pi.end(), rng);
  return o;
}

// Permutes rows/columns of the adjacency and rows of the features so that
// node i lands at position pi[i].
inline Graph apply_ordering(const Graph& g, const NodeOrdering& order) {
  if (order.size() != g.n()) {
    throw ContractError("apply_ordering: ordering has " + std::to_string(order.size()) +
                        " entries for " + std::to_string(g.n()) + " nodes");
  }
  order.validate();
  Graph out;
  out.adjacency.resize(g.n(), g.n());
  out.features.resize(g.n(), g.features.cols());
  for (Index i = 0; i < g.n(); ++i) {
    out.features.row(order.pi[i]) = g.features.row(i);
    for (Index j = 0; j < g.n(); ++j) {
      out.adjacency(order.pi[i], order.pi[j]) = g.adjacency(i, j);
    }
  }
  return out;
}

// Row permutation of an arbitrary matrix with the same convention.
inline Matrix apply_ordering_rows(const Matrix& m, const NodeOrdering& order) {
  if (order.size() != m.rows()) {
    throw ContractError("apply_ordering_rows: ordering has " + std::to_string(order.size()) +
                        " entries for " + std::to_string(m.rows()) + " rows");
  }
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) out.row(order.pi[i]) = m.row(i);
  return out;
}

// Contiguous near-equal batches; the first n % num_batches batches carry the
// extra node.
inline GrowthSchedule build_schedule(Index n, Index num_batches) {
  detail::require(num_batches >= 1, "build_schedule: num_batches must be at least 1");
  detail::require(num_batches <= n, "build_schedule: " + std::to_string(num_batches) +
                                        " batches requested for " + std::to_string(n) +
                                        " nodes");
  GrowthSchedule s;
  const Index base = n / num_batches;
  const Index extra = n % num_batches;
  Index pos = 0;
  for (Index b = 0; b < num_batches; ++b) {
    const Index len = base + (b < extra ? 1 : 0);
    std::vector<Index> batch(len);
    std::iota(batch.begin(), batch.end(), pos);
    pos += len;
    s.batches.push_back(std::move(batch));
  }
  return s;
}

}  // namespace ggcn

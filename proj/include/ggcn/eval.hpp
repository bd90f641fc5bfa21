#pragma once

// Link-prediction task construction, inference-time scoring and the AUC /
// AP metrics.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/errors.hpp"
#include "ggcn/graph.hpp"
#include "ggcn/model.hpp"
#include "ggcn/random.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

enum class Task { new_nodes, observed_graph };

inline std::string to_string(Task t) {
  return t == Task::new_nodes ? "new_nodes" : "observed_graph";
}

inline Task parse_task(const std::string& s) {
  if (s == "new_nodes") return Task::new_nodes;
  if (s == "observed_graph") return Task::observed_graph;
  throw ContractError("unknown task '" + s + "'");
}

using NodePair = std::pair<Index, Index>;

// Nodes are relabeled so that observed nodes come first: split indices
// [0, observed.n()) are observed, the rest are held-out new nodes.
// `node_ids[k]` is the original index of split node k.
struct EvalSplit {
  Task task = Task::new_nodes;
  Graph observed;
  Matrix full_features;
  std::vector<Index> node_ids;
  std::vector<NodePair> val_pos, val_neg;
  std::vector<NodePair> test_pos, test_neg;

  Index n_total() const { return full_features.rows(); }
  Index n_observed() const { return observed.n(); }

  void validate() const {
    observed.validate();
    detail::require(observed.n() <= n_total(), "split: more observed nodes than total nodes");
    detail::require(static_cast<Index>(node_ids.size()) == n_total(),
                    "split: node id map has wrong length");
    std::set<NodePair> seen;
    auto check = [&](const std::vector<NodePair>& pairs, bool positive) {
      for (auto [i, j] : pairs) {
        detail::require(i >= 0 && j >= 0 && i < n_total() && j < n_total() && i != j,
                        "split: query pair out of range");
        const NodePair key{std::min(i, j), std::max(i, j)};
        detail::require(seen.insert(key).second, "split: query pair listed twice");
        if (task == Task::new_nodes) {
          detail::require(key.second >= n_observed(), "split: new-node query touches no new node");
        } else if (positive) {
          detail::require(!observed.has_edge(i, j), "split: held-out edge still observed");
        }
      }
    };
    check(val_pos, true);
    check(val_neg, false);
    check(test_pos, true);
    check(test_neg, false);
  }
};

struct Metrics {
  double auc = 0.0;
  double ap = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

namespace detail {

// Splits `items` (already shuffled) into a validation head and a test tail.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> cut(std::vector<T> items, std::size_t n_val) {
  std::vector<T> val(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<T> test(items.begin() + static_cast<std::ptrdiff_t>(n_val), items.end());
  return {std::move(val), std::move(test)};
}

inline std::size_t floor_count(std::size_t total, double frac) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(total) * frac + 1e-9));
}

}  // namespace detail

// Samples round(frac_observed * n) nodes as the observed graph; every edge
// touching a held-out node is a positive, and an equal number of unconnected
// pairs touching held-out nodes are negatives. Queries are split between
// validation and test by `val_share`.
inline EvalSplit make_newnode_split(const Graph& g, double frac_observed, Rng& rng,
                                    double val_share = 0.5) {
  detail::require(frac_observed > 0.0 && frac_observed < 1.0,
                  "make_newnode_split: frac_observed must lie in (0,1)");
  detail::require(val_share >= 0.0 && val_share <= 1.0, "make_newnode_split: bad val_share");
  g.validate();
  const Index n = g.n();
  const Index t = static_cast<Index>(std::llround(frac_observed * static_cast<double>(n)));
  if (t <= 0 || t >= n) {
    throw ContractError("make_newnode_split: " + std::to_string(n) + " nodes at fraction " +
                        std::to_string(frac_observed) + " leave " + std::to_string(n - t) +
                        " new nodes");
  }
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> kept(perm.begin(), perm.begin() + t);
  std::vector<Index> held(perm.begin() + t, perm.end());
  std::sort(kept.begin(), kept.end());
  std::sort(held.begin(), held.end());

  EvalSplit split;
  split.task = Task::new_nodes;
  split.node_ids = kept;
  split.node_ids.insert(split.node_ids.end(), held.begin(), held.end());
  const Graph relabeled = g.induced(split.node_ids);
  std::vector<Index> first(t);
  std::iota(first.begin(), first.end(), Index{0});
  split.observed = relabeled.induced(first);
  split.full_features = relabeled.features;

  std::vector<NodePair> pos, non_edges;
  for (Index j = t; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      (relabeled.has_edge(i, j) ? pos : non_edges).emplace_back(i, j);
    }
  }
  if (pos.size() < 2) {
    throw ContractError("make_newnode_split: only " + std::to_string(pos.size()) +
                        " edges touch new nodes; use a denser graph");
  }
  if (non_edges.size() < pos.size()) {
    throw ContractError("make_newnode_split: " + std::to_string(non_edges.size()) +
                        " unconnected pairs available for " + std::to_string(pos.size()) +
                        " positives");
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(non_edges.begin(), non_edges.end(), rng);
  non_edges.resize(pos.size());
  const std::size_t n_val = detail::floor_count(pos.size(), val_share);
  std::tie(split.val_pos, split.test_pos) = detail::cut(std::move(pos), n_val);
  std::tie(split.val_neg, split.test_neg) = detail::cut(std::move(non_edges), n_val);
  return split;
}

// Removes floor(E * val_frac) and floor(E * test_frac) edges uniformly at
// random from the graph; negatives are equally many unconnected pairs, drawn
// without replacement.
inline EvalSplit make_observed_split(const Graph& g, double val_frac, double test_frac, Rng& rng) {
  detail::require(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac < 1.0,
                  "make_observed_split: need val_frac, test_frac >= 0 and val + test < 1");
  g.validate();
  std::vector<NodePair> edges = g.edges();
  const std::size_t n_val = detail::floor_count(edges.size(), val_frac);
  const std::size_t n_test = detail::floor_count(edges.size(), test_frac);
  if ((val_frac > 0.0 && n_val == 0) || (test_frac > 0.0 && n_test == 0)) {
    throw ContractError("make_observed_split: " + std::to_string(edges.size()) +
                        " edges are not enough for the requested fractions");
  }
  const double n = static_cast<double>(g.n());
  const double non_edge_count = n * (n - 1.0) / 2.0 - static_cast<double>(edges.size());
  if (non_edge_count < static_cast<double>(n_val + n_test)) {
    throw ContractError("make_observed_split: not enough unconnected pairs for negatives");
  }

  std::shuffle(edges.begin(), edges.end(), rng);
  EvalSplit split;
  split.task = Task::observed_graph;
  split.node_ids.resize(g.n());
  std::iota(split.node_ids.begin(), split.node_ids.end(), Index{0});
  split.full_features = g.features;
  split.observed = g;
  split.test_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.val_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_test),
                       edges.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  for (const auto& group : {split.test_pos, split.val_pos}) {
    for (auto [i, j] : group) {
      split.observed.adjacency(i, j) = 0.0;
      split.observed.adjacency(j, i) = 0.0;
    }
  }

  std::uniform_int_distribution<Index> pick(0, g.n() - 1);
  std::set<NodePair> used;
  auto draw_negatives = [&](std::size_t count) {
    std::vector<NodePair> out;
    while (out.size() < count) {
      Index i = pick(rng);
      Index j = pick(rng);
      if (i == j || g.has_edge(i, j)) continue;
      if (i > j) std::swap(i, j);
      if (!used.insert({i, j}).second) continue;
      out.emplace_back(i, j);
    }
    return out;
  };
  split.test_neg = draw_negatives(n_test);
  split.val_neg = draw_negatives(n_val);
  return split;
}

// Mean latent embedding of every split node. Held-out nodes enter the
// candidate adjacency isolated (p~ = 0) with only their self-loop.
inline Matrix embed(const ModelParams& params, Variant variant, const EvalSplit& split,
                    SelfLoops self_loops = SelfLoops::all) {
  if (split.full_features.cols() != params.dims().input) {
    throw DimensionError("embed: split has " + std::to_string(split.full_features.cols()) +
                         " feature dims, model expects " + std::to_string(params.dims().input));
  }
  const Index t = split.n_observed();
  const Index hidden = split.n_total() - t;
  Matrix candidate;
  if (hidden > 0) {
    Rng unused(0);
    candidate = build_candidate(split.observed.adjacency, hidden, 0.0, unused).matrix;
  } else {
    candidate = split.observed.adjacency;
  }
  const NormalizedAdjacency adj = normalize_adjacency(with_self_loops(candidate, t, self_loops));
  return encode(params, adj, split.full_features, variant).mean;
}

inline std::vector<double> score_pairs(const Matrix& z, const std::vector<NodePair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= z.rows() || j >= z.rows()) {
      throw DimensionError("score_pairs: pair (" + std::to_string(i) + "," + std::to_string(j) +
                           ") outside " + std::to_string(z.rows()) + " embeddings");
    }
    out.push_back(detail::stable_sigmoid(z.row(i).dot(z.row(j))));
  }
  return out;
}

inline std::vector<double> predict_links(const ModelParams& params, Variant variant,
                                         const EvalSplit& split,
                                         const std::vector<NodePair>& pairs,
                                         SelfLoops self_loops = SelfLoops::all) {
  return score_pairs(embed(params, variant, split, self_loops), pairs);
}

// Mann-Whitney AUC with tied scores counted as one half.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("auc: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double n_pos = 0.0, n_neg = 0.0, pos_rank_sum = 0.0;
  for (std::size_t lo = 0; lo < idx.size();) {
    std::size_t hi = lo;
    while (hi < idx.size() && scores[idx[hi]] == scores[idx[lo]]) ++hi;
    const double mid_rank = (static_cast<double>(lo + hi) + 1.0) / 2.0;
    for (std::size_t k = lo; k < hi; ++k) {
      if (labels[idx[k]] != 0) {
        n_pos += 1.0;
        pos_rank_sum += mid_rank;
      } else {
        n_neg += 1.0;
      }
    }
    lo = hi;
  }
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw ContractError("auc: need at least one positive and one negative label");
  }
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

// Mean precision at the rank of each positive, ranking by descending score;
// equal scores keep their input order.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("average_precision: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, total = 0.0;
  for (std::size_t rank = 0; rank < idx.size(); ++rank) {
    if (labels[idx[rank]] != 0) {
      hits += 1.0;
      total += hits / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0.0) throw ContractError("average_precision: no positive labels");
  return total / hits;
}

inline Metrics score_metrics(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<double> scores = pos;
  scores.insert(scores.end(), neg.begin(), neg.end());
  std::vector<int> labels(pos.size(), 1);
  labels.resize(scores.size(), 0);
  return {auc(scores, labels), average_precision(scores, labels), pos.size(), neg.size()};
}

inline Metrics evaluate(const ModelParams& params, Variant variant, const EvalSplit& split,
                        const std::vector<NodePair>& pos, const std::vector<NodePair>& neg,
                        SelfLoops self_loops = SelfLoops::all) {
  const Matrix z = embed(params, variant, split, self_loops);
  return score_metrics(score_pairs(z, pos), score_pairs(z, neg));
}

inline Metrics evaluate_test(const ModelParams& params, Variant variant, const EvalSplit& split,
                             SelfLoops self_loops = SelfLoops::all) {
  return evaluate(params, variant, split, split.test_pos, split.test_neg, self_loops);
}

}  // namespace ggcn

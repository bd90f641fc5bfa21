#pragma once

// Sequential training over sampled graph-growth sequences, plus the static
// GCN-VAE / MLP-VAE baselines.
//
// One iteration of G-GCN: draw a uniform node ordering, cut it into batches
// (the first is the seed subgraph), and for every later batch encode all
// nodes present after it arrives under a freshly drawn candidate adjacency.
// Each step's KL is taken against the previous step's encoding for old nodes
// and N(0, I) for the incoming batch. Step losses are summed and one Adam
// update is applied to the shared weights.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/errors.hpp"
#include "ggcn/graph.hpp"
#include "ggcn/loss.hpp"
#include "ggcn/model.hpp"
#include "ggcn/optim.hpp"
#include "ggcn/random.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

enum class ReconTarget { all, old_only };
enum class PriorMode { adaptive, standard };

// p~ used for candidate fills during training. `density` uses the edge
// density of the training graph.
struct PTildePolicy {
  bool density = true;
  double value = 0.0;
};

struct TrainConfig {
  Index hidden_dim = 400;
  Index latent_dim = 200;
  double learning_rate = 1e-3;
  Index iterations = 200;
  double beta = 1.0;
  // Batches in the growth schedule including the seed batch; 3 gives
  // batches of #train / 3. A single batch trains on the whole graph as one
  // static step.
  Index num_batches = 3;
  PTildePolicy p_tilde;
  SelfLoops self_loops = SelfLoops::all;
  ReconTarget recon_target = ReconTarget::all;
  PriorMode prior = PriorMode::adaptive;
  std::uint64_t seed = 0;
  bool verbose = false;
  // Destination of progress lines when verbose.
  std::ostream* progress = &std::cerr;

  void validate() const {
    detail::require(hidden_dim >= 1 && latent_dim >= 1, "hidden and latent dims must be >= 1");
    detail::require(iterations >= 0, "iterations must be >= 0");
    detail::require(num_batches >= 1, "num_batches must be >= 1");
    detail::require(learning_rate > 0.0, "learning rate must be positive");
    detail::require(beta >= 0.0, "beta must be non-negative");
    detail::require(p_tilde.density || (p_tilde.value >= 0.0 && p_tilde.value <= 1.0),
                    "p_tilde must lie in [0,1]");
  }

  double resolve_p_tilde(const Graph& g) const {
    return p_tilde.density ? g.density() : p_tilde.value;
  }
};

// Disjoint RNG streams per source of randomness.
enum RngStream : std::uint64_t {
  kInitStream = 1,
  kOrderStream = 2,
  kFillStream = 3,
  kNoiseStream = 4,
};

struct TrainHistory {
  // Per iteration: recon and kl summed over steps, total = sequence loss.
  std::vector<LossBreakdown> iterations;
  std::vector<std::vector<LossBreakdown>> steps;
  std::vector<double> seconds;
  // Filled only when a validator is supplied.
  std::vector<double> val_auc;
  std::vector<double> val_ap;

  std::size_t size() const { return iterations.size(); }
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Returns (AUC, AP) on held-out pairs for the current parameters.
using Validator = std::function<std::pair<double, double>(const ModelParams&)>;

// ---- one sampled growth sequence -------------------------------------------

struct StepDraw {
  Index observed = 0;  // nodes present before the batch
  Index added = 0;     // incoming batch size; 0 for the single static step
  Matrix candidate;    // raw candidate adjacency over observed + added
  Matrix eps;          // reparameterization noise, rows in ordering position
};

struct SequenceDraw {
  NodeOrdering ordering;
  GrowthSchedule schedule;
  Graph ordered;
  // Candidate over seed + first batch from which the seed's prior is encoded.
  Matrix seed_prior_candidate;
  std::vector<StepDraw> steps;
};

struct SequenceRngs {
  Rng order;
  Rng fill;
  Rng noise;

  explicit SequenceRngs(std::uint64_t seed)
      : order(make_rng(seed, kOrderStream)),
        fill(make_rng(seed, kFillStream)),
        noise(make_rng(seed, kNoiseStream)) {}
};

// Noise is drawn per step as a full n x latent block in original node order
// and then permuted, so a given node sees the same draw whatever ordering
// was sampled.
inline SequenceDraw draw_sequence(const Graph& g, const TrainConfig& cfg, double p_tilde,
                                  SequenceRngs& rngs) {
  detail::require(g.n() >= cfg.num_batches + 1,
                  "training graph has " + std::to_string(g.n()) + " nodes, need at least " +
                      std::to_string(cfg.num_batches + 1) + " for " +
                      std::to_string(cfg.num_batches) + " batches");
  SequenceDraw d;
  d.ordering = sample_ordering(g.n(), rngs.order);
  d.schedule = build_schedule(g.n(), cfg.num_batches);
  d.ordered = apply_ordering(g, d.ordering);

  auto noise = [&](Index present) {
    Matrix eps = apply_ordering_rows(standard_normal(g.n(), cfg.latent_dim, rngs.noise), d.ordering);
    return Matrix(eps.topRows(present));
  };

  if (d.schedule.size() == 1) {
    StepDraw s;
    s.observed = g.n();
    s.added = 0;
    s.candidate = d.ordered.adjacency;
    s.eps = noise(g.n());
    d.steps.push_back(std::move(s));
    return d;
  }

  for (std::size_t b = 1; b < d.schedule.size(); ++b) {
    const Index t = d.schedule.present_after(b - 1);
    const Index added = static_cast<Index>(d.schedule.batches[b].size());
    const Matrix observed = d.ordered.adjacency.topLeftCorner(t, t);
    if (b == 1) {
      d.seed_prior_candidate = build_candidate(observed, added, p_tilde, rngs.fill).matrix;
    }
    StepDraw s;
    s.observed = t;
    s.added = added;
    s.candidate = build_candidate(observed, added, p_tilde, rngs.fill).matrix;
    s.eps = noise(t + added);
    d.steps.push_back(std::move(s));
  }
  return d;
}

struct SequenceForward {
  Var total;
  std::vector<LossBreakdown> steps;
  // Prior used at each step; pass back in to freeze them (gradient checks).
  std::vector<GaussianLatent> priors;
};

// Sum of step losses for one drawn sequence. Priors are constants: either
// derived from this pass (`frozen_priors` null) or taken from the caller.
inline SequenceForward sequence_forward(const ParamVars& params, const SequenceDraw& draw,
                                        const TrainConfig& cfg,
                                        const std::vector<GaussianLatent>* frozen_priors = nullptr) {
  if (frozen_priors != nullptr && frozen_priors->size() != draw.steps.size()) {
    throw ContractError("sequence_forward: " + std::to_string(frozen_priors->size()) +
                        " frozen priors for " + std::to_string(draw.steps.size()) + " steps");
  }
  SequenceForward out;
  const Index latent = params.w1.cols();
  std::optional<GaussianLatent> previous;
  Var total;
  for (std::size_t k = 0; k < draw.steps.size(); ++k) {
    const StepDraw& step = draw.steps[k];
    const Index present = step.observed + step.added;
    const NormalizedAdjacency adj =
        normalize_adjacency(with_self_loops(step.candidate, step.observed, cfg.self_loops));
    const Matrix features = draw.ordered.features.topRows(present);
    LatentVars q = encode(params, adj, features, Variant::ggcn);
    Var z = reparameterize(q, step.eps);

    Var probs;
    Matrix target;
    if (cfg.recon_target == ReconTarget::old_only && step.added > 0) {
      probs = decode_edge_probs(slice_rows(z, 0, step.observed));
      target = draw.ordered.adjacency.topLeftCorner(step.observed, step.observed);
    } else {
      probs = decode_edge_probs(z);
      target = draw.ordered.adjacency.topLeftCorner(present, present);
    }

    GaussianLatent prior;
    if (frozen_priors != nullptr) {
      prior = (*frozen_priors)[k];
    } else if (step.added == 0 || cfg.prior == PriorMode::standard) {
      prior = GaussianLatent::standard(present, latent);
    } else {
      if (k == 0) {
        const ModelParams values{{params.w0.value(), params.w1.value(), params.w2.value()}};
        const NormalizedAdjacency seed_adj = normalize_adjacency(
            with_self_loops(draw.seed_prior_candidate, step.observed, cfg.self_loops));
        GaussianLatent seed = encode(values, seed_adj, features, Variant::ggcn);
        previous = GaussianLatent{seed.mean.topRows(step.observed),
                                  seed.log_std.topRows(step.observed)};
      }
      prior = make_priors(*previous, step.added, latent);
    }

    StepLoss loss = step_loss(probs, target, q, prior, cfg.beta, default_pos_weight(target));
    total = k == 0 ? loss.total : add(total, loss.total);
    out.steps.push_back(loss.breakdown);
    out.priors.push_back(std::move(prior));
    previous = q.values();
  }
  out.total = total;
  return out;
}

// ---- training loops --------------------------------------------------------

namespace detail {

inline void check_finite(const LossBreakdown& l, Index iteration, std::size_t step) {
  if (!std::isfinite(l.total) || !std::isfinite(l.recon) || !std::isfinite(l.kl)) {
    throw NumericError("non-finite loss at iteration " + std::to_string(iteration) + " step " +
                       std::to_string(step) + " (recon=" + std::to_string(l.recon) +
                       " kl=" + std::to_string(l.kl) + ")");
  }
}

inline void record_iteration(TrainHistory& h, std::vector<LossBreakdown> steps, double beta,
                             double seconds, Index iteration, std::ostream* progress) {
  LossBreakdown sum{0.0, 0.0, 0.0, beta};
  for (const LossBreakdown& s : steps) {
    sum.recon += s.recon;
    sum.kl += s.kl;
  }
  sum.total = sequence_loss(steps);
  h.iterations.push_back(sum);
  h.steps.push_back(std::move(steps));
  h.seconds.push_back(seconds);
  if (progress != nullptr) {
    char line[160];
    std::snprintf(line, sizeof line, "iter=%lld recon=%.6f kl=%.6f total=%.6f",
                  static_cast<long long>(iteration), sum.recon, sum.kl, sum.total);
    *progress << line << '\n';
  }
}

inline void run_validator(TrainHistory& h, const Validator& validator, const ModelParams& p) {
  if (!validator) return;
  auto [auc, ap] = validator(p);
  h.val_auc.push_back(auc);
  h.val_ap.push_back(ap);
}

inline ModelParams initial_params(const Graph& g, const TrainConfig& cfg) {
  Rng init = make_rng(cfg.seed, kInitStream);
  return ModelParams::glorot({g.feature_dim(), cfg.hidden_dim, cfg.latent_dim}, init);
}

}  // namespace detail

inline TrainResult train_ggcn(const Graph& g, const TrainConfig& cfg,
                              const Validator& validator = {}) {
  cfg.validate();
  g.validate();
  TrainResult result{detail::initial_params(g, cfg), {}};
  AdamState adam(AdamHyper{cfg.learning_rate});
  SequenceRngs rngs(cfg.seed);
  const double p_tilde = cfg.resolve_p_tilde(g);

  for (Index it = 0; it < cfg.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    const SequenceDraw draw = draw_sequence(g, cfg, p_tilde, rngs);
    Tape tape;
    const ParamVars pv = bind(tape, result.params);
    SequenceForward fwd = sequence_forward(pv, draw, cfg);
    for (std::size_t s = 0; s < fwd.steps.size(); ++s) detail::check_finite(fwd.steps[s], it, s);
    tape.backward(fwd.total);
    const std::array<Matrix, 3> grads = pv.grads();
    adam_step(result.params.weights, grads, adam);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    detail::record_iteration(result.history, std::move(fwd.steps), cfg.beta, took.count(), it,
                             cfg.verbose ? cfg.progress : nullptr);
    detail::run_validator(result.history, validator, result.params);
  }
  return result;
}

// Static VAE on the whole training graph with an N(0, I) prior for every
// node. `variant` selects the graph encoder (GCN-VAE) or identity
// propagation (MLP-VAE).
inline TrainResult train_static(Variant variant, const Graph& g, const TrainConfig& cfg,
                                const Validator& validator = {}) {
  detail::require(variant != Variant::ggcn, "train_static: use train_ggcn for G-GCN");
  cfg.validate();
  g.validate();
  TrainResult result{detail::initial_params(g, cfg), {}};
  AdamState adam(AdamHyper{cfg.learning_rate});
  Rng noise = make_rng(cfg.seed, kNoiseStream);
  const NormalizedAdjacency adj =
      normalize_adjacency(with_self_loops(g.adjacency, g.n(), cfg.self_loops));
  const double pos_weight = default_pos_weight(g.adjacency);
  const GaussianLatent prior = GaussianLatent::standard(g.n(), cfg.latent_dim);

  for (Index it = 0; it < cfg.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    const Matrix eps = standard_normal(g.n(), cfg.latent_dim, noise);
    Tape tape;
    const ParamVars pv = bind(tape, result.params);
    LatentVars q = encode(pv, adj, g.features, variant);
    Var probs = decode_edge_probs(reparameterize(q, eps));
    StepLoss loss = step_loss(probs, g.adjacency, q, prior, cfg.beta, pos_weight);
    detail::check_finite(loss.breakdown, it, 0);
    tape.backward(loss.total);
    const std::array<Matrix, 3> grads = pv.grads();
    adam_step(result.params.weights, grads, adam);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    detail::record_iteration(result.history, {loss.breakdown}, cfg.beta, took.count(), it,
                             cfg.verbose ? cfg.progress : nullptr);
    detail::run_validator(result.history, validator, result.params);
  }
  return result;
}

inline TrainResult train_gcnvae(const Graph& g, const TrainConfig& cfg,
                                const Validator& validator = {}) {
  return train_static(Variant::gcnvae, g, cfg, validator);
}

inline TrainResult train_mlpvae(const Graph& g, const TrainConfig& cfg,
                                const Validator& validator = {}) {
  return train_static(Variant::mlpvae, g, cfg, validator);
}

inline TrainResult train(Variant variant, const Graph& g, const TrainConfig& cfg,
                         const Validator& validator = {}) {
  return variant == Variant::ggcn ? train_ggcn(g, cfg, validator)
                                  : train_static(variant, g, cfg, validator);
}

}  // namespace ggcn

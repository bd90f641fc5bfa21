#pragma once

// Edge reconstruction, diagonal-Gaussian KL and the per-step / per-sequence
// adaptive variational loss.

#include <span>
#include <string>

#include "ggcn/errors.hpp"
#include "ggcn/model.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

inline constexpr double kLogFloor = 1e-12;

struct LossBreakdown {
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
  double beta = 1.0;
};

// Number of non-edges over number of edges among unordered off-diagonal
// pairs of `target`; 1 when the target has no edges.
inline double default_pos_weight(const Matrix& target) {
  const double n = static_cast<double>(target.rows());
  const double pairs = n * (n - 1.0) / 2.0;
  const double edges = (target.sum() - target.diagonal().sum()) / 2.0;
  if (edges <= 0.0 || pairs - edges <= 0.0) return 1.0;
  return (pairs - edges) / edges;
}

// Mean weighted binary cross-entropy over unordered off-diagonal pairs:
// -[w a log p + (1 - a) log(1 - p)].
inline Var recon_loss(const Var& probs, const Matrix& target, double pos_weight) {
  const Index n = target.rows();
  if (probs.rows() != n || probs.cols() != n || target.cols() != n) {
    throw DimensionError("recon_loss: probabilities " + detail::shape_str(probs.rows(), probs.cols()) +
                         " vs target " + detail::shape_str(target.rows(), target.cols()));
  }
  detail::require(n >= 2, "recon_loss: need at least two nodes");
  detail::require(pos_weight > 0.0, "recon_loss: pos_weight must be positive");
  Matrix pos = Matrix::Zero(n, n);
  Matrix neg = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double a = target(i, j);
      pos(i, j) = pos_weight * a;
      neg(i, j) = 1.0 - a;
    }
  }
  Tape& tape = *probs.tape();
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  Var log_p = log(probs, kLogFloor);
  Var log_not_p = log(add_scalar(scale(probs, -1.0), 1.0), kLogFloor);
  Var ll = add(sum(mul(tape.constant(std::move(pos)), log_p)),
               sum(mul(tape.constant(std::move(neg)), log_not_p)));
  return scale(ll, -1.0 / pairs);
}

inline double recon_loss(const Matrix& probs, const Matrix& target, double pos_weight) {
  Tape tape;
  return recon_loss(tape.constant(probs), target, pos_weight).scalar();
}

// Sum over entries of KL(N(mq, sq^2) || N(mp, sp^2)); the prior is constant.
inline Var kl_diag_gaussians(const LatentVars& q, const GaussianLatent& prior) {
  if (q.mean.rows() != prior.mean.rows() || q.mean.cols() != prior.mean.cols() ||
      q.log_std.rows() != prior.log_std.rows() || q.log_std.cols() != prior.log_std.cols()) {
    throw DimensionError("kl_diag_gaussians: posterior " +
                         detail::shape_str(q.mean.rows(), q.mean.cols()) + " vs prior " +
                         detail::shape_str(prior.mean.rows(), prior.mean.cols()));
  }
  Tape& tape = *q.mean.tape();
  const Matrix half_inv_var = 0.5 * (-2.0 * prior.log_std.array()).exp().matrix();
  Var diff = sub(q.mean, tape.constant(prior.mean));
  Var spread = add(exp(scale(q.log_std, 2.0)), mul(diff, diff));
  Var entry = add(sub(tape.constant(prior.log_std), q.log_std),
                  mul(spread, tape.constant(half_inv_var)));
  return add_scalar(sum(entry), -0.5 * static_cast<double>(prior.mean.size()));
}

inline double kl_diag_gaussians(const GaussianLatent& q, const GaussianLatent& prior) {
  Tape tape;
  LatentVars qv{tape.constant(q.mean), tape.constant(q.log_std)};
  return kl_diag_gaussians(qv, prior).scalar();
}

struct StepLoss {
  Var total;
  LossBreakdown breakdown;
};

// recon + beta * KL for one growth step.
inline StepLoss step_loss(const Var& probs, const Matrix& target, const LatentVars& q,
                          const GaussianLatent& prior, double beta, double pos_weight) {
  detail::require(beta >= 0.0, "step_loss: beta must be non-negative");
  Var recon = recon_loss(probs, target, pos_weight);
  Var kl = kl_diag_gaussians(q, prior);
  Var total = add(recon, scale(kl, beta));
  return {total, {recon.scalar(), kl.scalar(), total.scalar(), beta}};
}

inline LossBreakdown step_loss(const Matrix& probs, const Matrix& target, const GaussianLatent& q,
                               const GaussianLatent& prior, double beta, double pos_weight) {
  Tape tape;
  LatentVars qv{tape.constant(q.mean), tape.constant(q.log_std)};
  return step_loss(tape.constant(probs), target, qv, prior, beta, pos_weight).breakdown;
}

inline double sequence_loss(std::span<const LossBreakdown> steps) {
  detail::require(!steps.empty(), "sequence_loss: no steps");
  double total = 0.0;
  for (const LossBreakdown& s : steps) total += s.total;
  return total;
}

}  // namespace ggcn

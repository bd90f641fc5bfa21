#pragma once

// Two-layer graph-convolutional Gaussian encoder, reparameterized sampling,
// inner-product edge decoder and the adaptive latent priors.

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "ggcn/errors.hpp"
#include "ggcn/graph.hpp"
#include "ggcn/random.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

enum class Variant { ggcn, gcnvae, mlpvae };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::ggcn: return "ggcn";
    case Variant::gcnvae: return "gcnvae";
    case Variant::mlpvae: return "mlpvae";
  }
  return "?";
}

// Display names used in summaries.
inline std::string display_name(Variant v) {
  switch (v) {
    case Variant::ggcn: return "G-GCN";
    case Variant::gcnvae: return "GCN-VAE";
    case Variant::mlpvae: return "MLP-VAE";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "ggcn" || s == "G-GCN") return Variant::ggcn;
  if (s == "gcnvae" || s == "GCN-VAE") return Variant::gcnvae;
  if (s == "mlpvae" || s == "MLP-VAE") return Variant::mlpvae;
  throw ContractError("unknown model variant '" + s + "'");
}

struct ModelDims {
  Index input = 0;
  Index hidden = 0;
  Index latent = 0;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Aggregation weights shared by every growth step: W0 (input x hidden),
// W1 (hidden x latent, mean head), W2 (hidden x latent, log-std head).
struct ModelParams {
  std::array<Matrix, 3> weights;

  Matrix& w0() { return weights[0]; }
  Matrix& w1() { return weights[1]; }
  Matrix& w2() { return weights[2]; }
  const Matrix& w0() const { return weights[0]; }
  const Matrix& w1() const { return weights[1]; }
  const Matrix& w2() const { return weights[2]; }

  ModelDims dims() const { return {w0().rows(), w0().cols(), w1().cols()}; }

  void validate() const {
    const ModelDims d = dims();
    if (w1().rows() != d.hidden || w2().rows() != d.hidden || w2().cols() != d.latent) {
      throw DimensionError("model params: W0 " + detail::shape_str(w0().rows(), w0().cols()) +
                           ", W1 " + detail::shape_str(w1().rows(), w1().cols()) + ", W2 " +
                           detail::shape_str(w2().rows(), w2().cols()) + " are inconsistent");
    }
    for (const Matrix& w : weights) {
      if (!w.allFinite()) throw NumericError("model params contain non-finite entries");
    }
  }

  // Uniform on +-sqrt(6 / (fan_in + fan_out)).
  static ModelParams glorot(ModelDims d, Rng& rng) {
    detail::require(d.input >= 1 && d.hidden >= 1 && d.latent >= 1,
                    "model dims must all be at least 1");
    auto init = [&rng](Index rows, Index cols) {
      const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
      std::uniform_real_distribution<double> dist(-r, r);
      Matrix m(rows, cols);
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
      return m;
    };
    ModelParams p;
    p.weights[0] = init(d.input, d.hidden);
    p.weights[1] = init(d.hidden, d.latent);
    p.weights[2] = init(d.hidden, d.latent);
    return p;
  }
};

// Per-node diagonal Gaussian: mean and log standard deviation.
struct GaussianLatent {
  Matrix mean;
  Matrix log_std;

  Index rows() const { return mean.rows(); }

  static GaussianLatent standard(Index rows, Index cols) {
    return {Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
  }
};

struct LatentVars {
  Var mean;
  Var log_std;

  GaussianLatent values() const { return {mean.value(), log_std.value()}; }
};

struct ParamVars {
  Var w0, w1, w2;

  std::array<Matrix, 3> grads() const { return {w0.grad(), w1.grad(), w2.grad()}; }
};

inline ParamVars bind(Tape& tape, const ModelParams& p, bool requires_grad = true) {
  return {tape.leaf(p.w0(), requires_grad), tape.leaf(p.w1(), requires_grad),
          tape.leaf(p.w2(), requires_grad)};
}

// mean = A relu(A X W0) W1, log_std = A relu(A X W0) W2, with A the
// normalized adjacency (identity for MLP-VAE).
inline LatentVars encode(const ParamVars& params, const NormalizedAdjacency& adj,
                         const Matrix& features, Variant variant) {
  Tape& tape = *params.w0.tape();
  const Index n = features.rows();
  if (adj.matrix.rows() != n || adj.matrix.cols() != n) {
    throw DimensionError("encode: adjacency " +
                         detail::shape_str(adj.matrix.rows(), adj.matrix.cols()) + " vs features " +
                         detail::shape_str(features.rows(), features.cols()));
  }
  if (features.cols() != params.w0.rows()) {
    throw DimensionError("encode: features " + detail::shape_str(features.rows(), features.cols()) +
                         " vs W0 " + detail::shape_str(params.w0.rows(), params.w0.cols()));
  }

  Var pre;
  if (variant == Variant::mlpvae) {
    pre = matmul(tape.constant(features), params.w0);
  } else if (features.cols() <= params.w0.cols()) {
    pre = matmul(tape.constant(adj.matrix * features), params.w0);
  } else {
    pre = matmul(tape.constant(adj.matrix), matmul(tape.constant(features), params.w0));
  }
  Var hidden = relu(pre);
  if (variant != Variant::mlpvae) hidden = matmul(tape.constant(adj.matrix), hidden);
  return {matmul(hidden, params.w1), matmul(hidden, params.w2)};
}

inline GaussianLatent encode(const ModelParams& params, const NormalizedAdjacency& adj,
                             const Matrix& features, Variant variant) {
  Tape tape;
  return encode(bind(tape, params, false), adj, features, variant).values();
}

// z = mean + exp(log_std) * eps; eps enters as a constant.
inline Var reparameterize(const LatentVars& latent, const Matrix& eps) {
  if (eps.rows() != latent.mean.rows() || eps.cols() != latent.mean.cols()) {
    throw DimensionError("reparameterize: eps " + detail::shape_str(eps.rows(), eps.cols()) +
                         " vs latent " +
                         detail::shape_str(latent.mean.rows(), latent.mean.cols()));
  }
  Tape& tape = *latent.mean.tape();
  return add(latent.mean, mul(exp(latent.log_std), tape.constant(eps)));
}

inline Matrix reparameterize(const GaussianLatent& latent, const Matrix& eps) {
  if (eps.rows() != latent.mean.rows() || eps.cols() != latent.mean.cols()) {
    throw DimensionError("reparameterize: eps " + detail::shape_str(eps.rows(), eps.cols()) +
                         " vs latent " +
                         detail::shape_str(latent.mean.rows(), latent.mean.cols()));
  }
  return latent.mean + latent.log_std.array().exp().matrix().cwiseProduct(eps);
}

// P[i][j] = sigmoid(<z_i, z_j>).
inline Var decode_edge_probs(const Var& z) { return sigmoid(matmul_nt(z, z)); }

inline Matrix decode_edge_probs(const Matrix& z) {
  return (z * z.transpose()).unaryExpr(&detail::stable_sigmoid);
}

// Old rows copy `previous` (held constant), incoming rows are N(0, I).
inline GaussianLatent make_priors(const GaussianLatent& previous, Index n_new, Index latent_dim) {
  detail::require(n_new >= 1, "make_priors: need at least one incoming node");
  if (previous.rows() > 0 && previous.mean.cols() != latent_dim) {
    throw DimensionError("make_priors: previous encoding has " +
                         std::to_string(previous.mean.cols()) + " latent dims, expected " +
                         std::to_string(latent_dim));
  }
  const Index old = previous.rows();
  GaussianLatent prior = GaussianLatent::standard(old + n_new, latent_dim);
  if (old > 0) {
    prior.mean.topRows(old) = previous.mean;
    prior.log_std.topRows(old) = previous.log_std;
  }
  return prior;
}

}  // namespace ggcn

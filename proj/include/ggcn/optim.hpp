#pragma once

// Adam with bias correction, and a central finite-difference gradient used
// as a test oracle for the tape.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ggcn/errors.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step_count = 0;

  AdamState() = default;
  explicit AdamState(AdamHyper h) : hyper(h) {}
};

// In-place Adam update of `params`. Moments are created on first use.
inline void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const Matrix& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " tensors, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& p = params[k];
    const Matrix& g = grads[k];
    const Matrix& m = state.first_moment[k];
    if (g.rows() != p.rows() || g.cols() != p.cols() || m.rows() != p.rows() ||
        m.cols() != p.cols()) {
      throw DimensionError("adam_step: tensor " + std::to_string(k) + " param " +
                           detail::shape_str(p.rows(), p.cols()) + " vs grad " +
                           detail::shape_str(g.rows(), g.cols()));
    }
  }

  const AdamHyper& h = state.hyper;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(h.beta1, t);
  const double bias2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    m = h.beta1 * m + (1.0 - h.beta1) * grads[k];
    v = h.beta2 * v + (1.0 - h.beta2) * grads[k].cwiseAbs2();
    auto m_hat = m.array() / bias1;
    auto v_hat = v.array() / bias2;
    params[k].array() -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
  }
}

using ScalarFn = std::function<double(std::span<const Matrix>)>;

// (f(θ + h e_i) - f(θ - h e_i)) / 2h for every coordinate of every tensor.
inline std::vector<Matrix> finite_difference_grad(const ScalarFn& f, std::vector<Matrix> params,
                                                  double h) {
  detail::require(h > 0.0, "finite_difference_grad: step h must be positive");
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix g(params[k].rows(), params[k].cols());
    for (Index i = 0; i < params[k].size(); ++i) {
      double& x = params[k].data()[i];
      const double saved = x;
      x = saved + h;
      const double up = f(params);
      x = saved - h;
      const double down = f(params);
      x = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_difference_grad: non-finite function value at tensor " +
                           std::to_string(k) + " coordinate " + std::to_string(i));
      }
      g.data()[i] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// max |a-b| / max(|a|, |b|, floor) over all entries; the floor keeps
// near-zero gradients from dominating on finite-difference noise.
inline double max_relative_error(std::span<const Matrix> a, std::span<const Matrix> b,
                                 double floor = 1e-7) {
  if (a.size() != b.size()) throw DimensionError("max_relative_error: tensor counts differ");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols()) {
      throw DimensionError("max_relative_error: shape mismatch " +
                           detail::shape_str(a[k].rows(), a[k].cols()) + " vs " +
                           detail::shape_str(b[k].rows(), b[k].cols()));
    }
    for (Index i = 0; i < a[k].size(); ++i) {
      const double x = a[k].data()[i];
      const double y = b[k].data()[i];
      const double denom = std::max({std::abs(x), std::abs(y), floor});
      worst = std::max(worst, std::abs(x - y) / denom);
    }
  }
  return worst;
}

}  // namespace ggcn

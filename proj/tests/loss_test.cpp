#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "ggcn/loss.hpp"
#include "ggcn/optim.hpp"
#include "test_util.hpp"

namespace ggcn {
namespace {

using testing::random_graph;
using testing::kl_quadrature;
using testing::random_matrix;

Matrix one(double v) { return Matrix::Constant(1, 1, v); }

// Probabilities for a 2-node graph with a single off-diagonal pair.
Matrix pair_probs(double p) {
  Matrix m(2, 2);
  m << 0.5, p, p, 0.5;
  return m;
}

Matrix pair_target(double a) {
  Matrix m(2, 2);
  m << 0, a, a, 0;
  return m;
}

TEST(Recon, SinglePairAtHalf) {
  EXPECT_NEAR(recon_loss(pair_probs(0.5), pair_target(1.0), 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(recon_loss(pair_probs(0.5), pair_target(1.0), 1.0), 0.693147, 1e-6);
}

TEST(Recon, PerfectReconstructionApproachesZero) {
  Rng rng = make_rng(50);
  const Graph g = random_graph(8, 0.4, 1, rng);
  Matrix probs = g.adjacency * (1.0 - 1e-10) + Matrix::Constant(8, 8, 0.5e-10);
  EXPECT_LT(recon_loss(probs, g.adjacency, 3.0), 1e-8);
}

TEST(Recon, PosWeightScalesOnlyPositiveTerms) {
  Rng rng = make_rng(51);
  const Graph g = random_graph(7, 0.4, 1, rng);
  const Matrix probs = random_matrix(7, 7, rng).cwiseAbs() * 0.9 + Matrix::Constant(7, 7, 0.05);
  const Matrix sym = (probs + probs.transpose()) / 2.0;
  const double l1 = recon_loss(sym, g.adjacency, 1.0);
  const double l2 = recon_loss(sym, g.adjacency, 2.0);
  const double l3 = recon_loss(sym, g.adjacency, 3.0);
  // Linear in the weight: equal spacing, with slope = positive contribution.
  EXPECT_NEAR(l3 - l2, l2 - l1, 1e-14);
  EXPECT_NEAR(l2 - l1, l1 - recon_loss(sym, g.adjacency, 1e-300), 1e-12);
}

TEST(Recon, DecreasesTowardTarget) {
  Rng rng = make_rng(52);
  for (int k = 0; k < 20; ++k) {
    const Graph g = random_graph(6, 0.5, 1, rng);
    Matrix p0 = random_matrix(6, 6, rng).cwiseAbs() * 0.8 + Matrix::Constant(6, 6, 0.1);
    p0 = (p0 + p0.transpose()) / 2.0;
    double prev = recon_loss(p0, g.adjacency, 1.5);
    EXPECT_GE(prev, 0.0);
    for (double lam = 0.1; lam < 0.95; lam += 0.1) {
      const double cur = recon_loss(p0 + lam * (g.adjacency - p0), g.adjacency, 1.5);
      EXPECT_LT(cur, prev);
      EXPECT_GE(cur, 0.0);
      prev = cur;
    }
  }
}

TEST(Recon, Errors) {
  EXPECT_THROW(recon_loss(Matrix::Constant(3, 3, 0.5), pair_target(1.0), 1.0), DimensionError);
  EXPECT_THROW(recon_loss(one(0.5), Matrix::Zero(1, 1), 1.0), ContractError);
}

TEST(PosWeight, NonEdgesOverEdges) {
  Matrix a = Matrix::Zero(4, 4);
  a(0, 1) = a(1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(default_pos_weight(a), 5.0);
  EXPECT_EQ(default_pos_weight(Matrix::Zero(4, 4)), 1.0);
}

GaussianLatent scalar(double mean, double log_std) { return {one(mean), one(log_std)}; }

TEST(Kl, IdenticalIsZero) {
  Rng rng = make_rng(53);
  const GaussianLatent q{random_matrix(4, 3, rng), random_matrix(4, 3, rng)};
  EXPECT_LE(std::abs(kl_diag_gaussians(q, q)), 1e-12);
}

TEST(Kl, ShiftedMean) {
  EXPECT_NEAR(kl_diag_gaussians(scalar(1.0, 0.0), scalar(0.0, 0.0)), 0.5, 1e-15);
}

TEST(Kl, WiderPosterior) {
  const double expected = -std::log(2.0) + 2.0 - 0.5;
  EXPECT_NEAR(kl_diag_gaussians(scalar(0.0, std::log(2.0)), scalar(0.0, 0.0)), expected, 1e-14);
  EXPECT_NEAR(expected, 0.80685, 1e-5);
}

TEST(Kl, MatchesNumericalIntegration) {
  Rng rng = make_rng(54);
  std::uniform_real_distribution<double> mean(-2.0, 2.0), ls(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double mq = mean(rng), lq = ls(rng), mp = mean(rng), lp = ls(rng);
    EXPECT_NEAR(kl_diag_gaussians(scalar(mq, lq), scalar(mp, lp)),
                kl_quadrature(mq, std::exp(lq), mp, std::exp(lp)), 1e-6);
  }
}

TEST(Kl, NonNegativeAndZeroOnlyAtMatch) {
  Rng rng = make_rng(55);
  for (int k = 0; k < 1000; ++k) {
    const GaussianLatent q{random_matrix(3, 2, rng, 2.0), random_matrix(3, 2, rng)};
    const GaussianLatent p{random_matrix(3, 2, rng, 2.0), random_matrix(3, 2, rng)};
    const double kl = kl_diag_gaussians(q, p);
    EXPECT_GE(kl, 0.0);
    EXPECT_GT(kl, 1e-10);
  }
}

TEST(Kl, ShapeMismatch) {
  EXPECT_THROW(kl_diag_gaussians(GaussianLatent::standard(2, 2), GaussianLatent::standard(2, 3)),
               DimensionError);
}

TEST(StepLoss, BetaZeroAndMatchingPrior) {
  Rng rng = make_rng(56);
  const Graph g = random_graph(5, 0.5, 1, rng);
  const Matrix probs = decode_edge_probs(random_matrix(5, 2, rng));
  const GaussianLatent q{random_matrix(5, 2, rng), random_matrix(5, 2, rng)};
  const GaussianLatent p = GaussianLatent::standard(5, 2);
  const LossBreakdown b0 = step_loss(probs, g.adjacency, q, p, 0.0, 2.0);
  EXPECT_EQ(b0.total, b0.recon);
  const LossBreakdown same = step_loss(probs, g.adjacency, q, q, 1.0, 2.0);
  EXPECT_NEAR(same.total, same.recon, 1e-12);
  EXPECT_THROW(step_loss(probs, g.adjacency, q, p, -1.0, 2.0), ContractError);
}

TEST(StepLoss, RecomputationOracle) {
  Rng rng = make_rng(57);
  const Graph g = random_graph(6, 0.4, 1, rng);
  const Matrix z = random_matrix(6, 3, rng);
  const Matrix probs = decode_edge_probs(z);
  const GaussianLatent q{random_matrix(6, 3, rng), random_matrix(6, 3, rng, 0.5)};
  const GaussianLatent p{random_matrix(6, 3, rng), random_matrix(6, 3, rng, 0.5)};
  const double beta = 0.37, w = default_pos_weight(g.adjacency);
  const LossBreakdown b = step_loss(probs, g.adjacency, q, p, beta, w);

  double recon = 0.0;
  int pairs = 0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = i + 1; j < 6; ++j, ++pairs) {
      const double a = g.adjacency(i, j), pij = probs(i, j);
      recon -= w * a * std::log(pij) + (1.0 - a) * std::log(1.0 - pij);
    }
  recon /= pairs;
  double kl = 0.0;
  for (Index i = 0; i < q.mean.size(); ++i) {
    const double sq = std::exp(q.log_std.data()[i]), sp = std::exp(p.log_std.data()[i]);
    const double d = q.mean.data()[i] - p.mean.data()[i];
    kl += std::log(sp / sq) + (sq * sq + d * d) / (2.0 * sp * sp) - 0.5;
  }
  EXPECT_NEAR(b.recon, recon, 1e-12);
  EXPECT_NEAR(b.kl, kl, 1e-12);
  EXPECT_NEAR(b.total, recon + beta * kl, 1e-12);
  EXPECT_NEAR(b.total, b.recon + b.beta * b.kl, 1e-12);
}

TEST(StepLoss, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(58);
  const Graph g = random_graph(7, 0.4, 3, rng);
  const NormalizedAdjacency adj =
      normalize_adjacency(with_self_loops(g.adjacency, g.n(), SelfLoops::all));
  const ModelParams p0 = ModelParams::glorot({3, 4, 2}, rng);
  const Matrix eps = standard_normal(7, 2, rng);
  const GaussianLatent prior{random_matrix(7, 2, rng, 0.3), random_matrix(7, 2, rng, 0.3)};
  const double w = default_pos_weight(g.adjacency);

  auto loss = [&](const ModelParams& p, std::array<Matrix, 3>* grads) {
    Tape t;
    const ParamVars pv = bind(t, p);
    LatentVars q = encode(pv, adj, g.features, Variant::ggcn);
    StepLoss s = step_loss(decode_edge_probs(reparameterize(q, eps)), g.adjacency, q, prior, 0.8, w);
    if (grads != nullptr) {
      t.backward(s.total);
      *grads = pv.grads();
    }
    return s.total.scalar();
  };
  std::array<Matrix, 3> analytic;
  loss(p0, &analytic);
  auto f = [&](std::span<const Matrix> ws) {
    return loss(ModelParams{{ws[0], ws[1], ws[2]}}, nullptr);
  };
  const auto numeric = finite_difference_grad(
      f, std::vector<Matrix>(p0.weights.begin(), p0.weights.end()), 1e-5);
  EXPECT_LE(max_relative_error(analytic, numeric), 1e-4);
}

TEST(SequenceLoss, SumsTotals) {
  const std::vector<LossBreakdown> single = {{0.4, 0.1, 0.5, 1.0}};
  EXPECT_EQ(sequence_loss(single), 0.5);
  const std::vector<LossBreakdown> two = {{0, 0, 1.0, 1}, {0, 0, 2.5, 1}};
  EXPECT_EQ(sequence_loss(two), 3.5);
  std::vector<LossBreakdown> many = {{0, 0, 0.3, 1}, {0, 0, 1.7, 1}, {0, 0, 2.25, 1}};
  const double s = sequence_loss(many);
  std::reverse(many.begin(), many.end());
  EXPECT_EQ(sequence_loss(many), s);
  EXPECT_THROW(sequence_loss(std::vector<LossBreakdown>{}), ContractError);
}

}  // namespace
}  // namespace ggcn

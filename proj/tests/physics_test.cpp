#include "cdpinn/physics.hpp"

#include <random>

#include <gtest/gtest.h>

#include "cdpinn/errors.hpp"
#include "cdpinn/oracle.hpp"
#include "support/test_support.hpp"

using namespace cdpinn;
namespace ct = cdpinn::testing;

namespace {

OutputBundle bundle(double lambda, double dlambda_dt, const ComplexMatrix& a, std::vector<double> c = {}) {
  OutputBundle b;
  b.lambda = lambda;
  b.dlambda_dt = dlambda_dt;
  b.a_cd = a;
  b.c = c.empty() ? std::vector<double>(static_cast<std::size_t>(a.size()), 0.0) : std::move(c);
  return b;
}

const ComplexMatrix kZero4 = ComplexMatrix::Zero(4, 4);

}  // namespace

TEST(physics, build_h_ad) {
  const ProblemSpec p = builtin_h2(1.0);
  EXPECT_EQ(build_h_ad(p, 0.0), p.h_initial);
  EXPECT_EQ(build_h_ad(p, 1.0), p.h_final);
  EXPECT_NEAR(build_h_ad(p, 0.5)(0, 3).real(), 0.09839529, 1e-15);
}

TEST(physics, build_total_h) {
  const ProblemSpec p = builtin_h2(1.0);
  const ComplexMatrix yy = kron(pauli::y(), pauli::y());
  EXPECT_EQ(build_total_h(p, bundle(0.3, 0.0, yy)), build_h_ad(p, 0.3));
  EXPECT_EQ(build_total_h(p, bundle(0.3, 2.0, kZero4)), build_h_ad(p, 0.3));
  EXPECT_EQ(build_total_h(p, bundle(0.0, 1.0, yy)), (p.h_initial + yy).eval());
}

TEST(physics, endpoint_losses) {
  const ProblemSpec p = builtin_h2(1.0);
  const LossWeights w;
  const std::vector<OutputBundle> exact0{bundle(0.0, 0.0, kZero4)};
  const std::vector<OutputBundle> exact1{bundle(1.0, 0.0, kZero4)};
  EXPECT_EQ(loss_ic(p, exact0, w), 0.0);
  EXPECT_EQ(loss_fc(p, exact1, w), 0.0);

  // λ wrong, H right (dλ/dt·A supplies the difference exactly).
  const ComplexMatrix fix0 = p.h_initial - p.h_final;
  EXPECT_NEAR(loss_ic(p, std::vector{bundle(1.0, 1.0, fix0)}, w), 1000.0, 1e-12);
  EXPECT_NEAR(loss_fc(p, std::vector{bundle(0.0, 1.0, -fix0)}, w), 1000.0, 1e-12);

  // A single entry perturbed by ε contributes w·ε².
  ComplexMatrix a = kZero4;
  const double eps = 1e-3;
  a(1, 2) = eps;
  EXPECT_NEAR(loss_ic(p, std::vector{bundle(0.0, 1.0, a)}, w), 1000.0 * eps * eps, 1e-15);
  a(1, 2) = Complex(0.0, eps);
  EXPECT_NEAR(loss_fc(p, std::vector{bundle(1.0, 1.0, a)}, w), 1000.0 * eps * eps, 1e-15);
}

TEST(physics, endpoint_symmetry) {
  ProblemSpec p = builtin_h2(1.5);
  ProblemSpec swapped = p;
  std::swap(swapped.h_initial, swapped.h_final);
  std::mt19937_64 rng(3);
  const ComplexMatrix a = ct::random_complex(4, rng);
  const LossWeights w;
  EXPECT_NEAR(loss_ic(p, std::vector{bundle(0.2, 0.4, a)}, w),
              loss_fc(swapped, std::vector{bundle(0.8, -0.4, -a)}, w), 1e-12);
}

TEST(physics, least_action_with_exact_gauge) {
  const ProblemSpec p = builtin_h2(1.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const LossWeights w;
  for (int k = 0; k < 50; ++k) {
    const double lambda = u(rng);
    const GaugeReport r = exact_gauge_potential(p, lambda);
    const std::vector<OutputBundle> b{bundle(lambda, 1.0, r.a_exact)};
    EXPECT_LE(loss_least_action(p, b, w) / w.w_action, 1e-16) << "lambda " << lambda;
    EXPECT_LE(loss_least_action(p, b, w), 1e-12);
  }
  EXPECT_GT(loss_least_action(p, std::vector{bundle(0.5, 1.0, kZero4)}, w), 0.0);
}

TEST(physics, least_action_homogeneity) {
  std::mt19937_64 rng(12);
  ProblemSpec p;
  p.n_qubits = 2;
  p.h_initial = ct::random_hermitian(4, rng);
  p.h_final = ct::random_hermitian(4, rng);
  ProblemSpec scaled = p;
  const double s = 1.7;
  scaled.h_initial *= s;
  scaled.h_final *= s;
  const LossWeights w;
  const std::vector b{bundle(0.35, 1.0, kZero4)};
  EXPECT_NEAR(loss_least_action(scaled, b, w), std::pow(s, 4) * loss_least_action(p, b, w),
              1e-12 * loss_least_action(scaled, b, w));
}

TEST(physics, adiabaticity) {
  const LossWeights w;
  std::vector<OutputBundle> b;
  for (int i = 0; i < 8; ++i) b.push_back(bundle(i / 8.0, 1.0, kZero4));
  EXPECT_DOUBLE_EQ(loss_adiabaticity(b, w), 0.5);
  for (auto& x : b) x.dlambda_dt = 0.0;
  EXPECT_EQ(loss_adiabaticity(b, w), 0.0);
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)].dlambda_dt = 0.1 * i;
  const double base = loss_adiabaticity(b, w);
  for (auto& x : b) x.dlambda_dt *= 2.0;
  EXPECT_NEAR(loss_adiabaticity(b, w), 4.0 * base, 1e-15);
}

TEST(physics, coupling) {
  const PauliBasis basis = pauli_basis(2);
  const LossWeights w;
  const ComplexMatrix xy = kron(pauli::x(), pauli::y());
  EXPECT_DOUBLE_EQ(loss_coupling(std::vector{bundle(0.5, 1.0, xy)}, basis, w), 250.0 * 4.0);

  std::mt19937_64 rng(21);
  const ComplexMatrix h = ct::random_hermitian(4, rng);
  const ComplexVector dec = pauli_decompose(h, basis);
  std::vector<double> c(16);
  for (int k = 0; k < 16; ++k) c[static_cast<std::size_t>(k)] = dec[k].real();
  EXPECT_LE(loss_coupling(std::vector{bundle(0.5, 1.0, h, c)}, basis, w), 1e-24);

  // Best real c for an anti-Hermitian output is zero; nothing cancels it.
  const ComplexMatrix anti = Complex(0.0, 1.0) * h;
  const double floor = w.w_coupling * anti.squaredNorm();
  EXPECT_NEAR(loss_coupling(std::vector{bundle(0.5, 1.0, anti)}, basis, w), floor, 1e-12 * floor);
  EXPECT_GE(loss_coupling(std::vector{bundle(0.5, 1.0, anti, c)}, basis, w), floor);
}

TEST(physics, coupling_floor_for_mixed_outputs) {
  const PauliBasis basis = pauli_basis(2);
  const LossWeights w;
  std::mt19937_64 rng(5);
  const ComplexMatrix a = ct::random_complex(4, rng);
  const ComplexMatrix anti_part = 0.5 * (a - a.adjoint());
  const double floor = w.w_coupling * anti_part.squaredNorm();
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> c(16);
    for (double& x : c) x = n(rng);
    EXPECT_GE(loss_coupling(std::vector{bundle(0.5, 1.0, a, c)}, basis, w), floor * (1.0 - 1e-12));
  }
  // The Hermitian part's decomposition attains the floor.
  const ComplexVector dec = pauli_decompose(0.5 * (a + a.adjoint()), basis);
  std::vector<double> best(16);
  for (int k = 0; k < 16; ++k) best[static_cast<std::size_t>(k)] = dec[k].real();
  EXPECT_NEAR(loss_coupling(std::vector{bundle(0.5, 1.0, a, best)}, basis, w), floor, 1e-12 * floor);
}

TEST(physics, total_loss_breakdown) {
  const ProblemSpec p = builtin_h2(1.0);
  const PauliBasis basis = pauli_basis(2);
  const LossWeights w;
  const std::vector<OutputBundle> t0{bundle(0.0, 0.0, kZero4)};
  const std::vector<OutputBundle> t1{bundle(1.0, 0.0, kZero4)};
  std::vector<OutputBundle> inner;
  for (int i = 1; i < 5; ++i) inner.push_back(bundle(i / 5.0, 0.0, kZero4));
  LossBreakdown zero = total_loss(p, basis, {t0, t1, inner}, w);
  EXPECT_GT(zero.l_action, 0.0);  // A = 0 is not the gauge potential

  std::vector<OutputBundle> exact;
  for (int i = 1; i < 5; ++i) {
    const ComplexMatrix a = exact_gauge_potential(p, i / 5.0).a_exact;
    const ComplexVector dec = pauli_decompose(a, basis);
    std::vector<double> c(16);
    for (int k = 0; k < 16; ++k) c[static_cast<std::size_t>(k)] = dec[k].real();
    exact.push_back(bundle(i / 5.0, 0.0, a, c));
  }
  const LossBreakdown b = total_loss(p, basis, {t0, t1, exact}, w);
  EXPECT_LE(b.l_total, 1e-12);
  EXPECT_LE(b.hermiticity_diag, 1e-24);

  std::mt19937_64 rng(4);
  std::vector<OutputBundle> noisy;
  for (int i = 0; i < 6; ++i) noisy.push_back(bundle(0.1 * i + 0.2, 0.3 * i, ct::random_complex(4, rng)));
  const LossBreakdown r = total_loss(p, basis, {std::span(noisy).subspan(0, 1), std::span(noisy).subspan(1, 1),
                                                std::span(noisy).subspan(2)}, w);
  EXPECT_NEAR(r.l_total, r.l_ic + r.l_fc + r.l_action + r.l_adiabaticity + r.l_coupling, 1e-12 * r.l_total);
  EXPECT_GT(r.hermiticity_diag, 0.0);
}

TEST(physics, weights_validate) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.w_ad = 0.0;
  EXPECT_THROW(w.validate(), ConfigError);
  w = LossWeights{};
  w.w_ic = -1.0;
  EXPECT_THROW(w.validate(), ConfigError);
}

TEST(physics, adjoints_match_finite_differences_in_bundle_space) {
  // Perturb bundle fields directly; complements the parameter-space check.
  const ProblemSpec p = builtin_h2(2.0);
  const PauliBasis basis = pauli_basis(2);
  const LossWeights w;
  std::mt19937_64 rng(44);
  std::normal_distribution<double> n;
  std::vector<double> c(16);
  for (double& x : c) x = n(rng);
  std::vector<OutputBundle> b{bundle(0.37, 0.8, ct::random_complex(4, rng), c)};
  auto value = [&](const std::vector<OutputBundle>& x) {
    return loss_ic(p, x, w) + loss_fc(p, x, w) + loss_least_action(p, x, w) + loss_adiabaticity(x, w) +
           loss_coupling(x, basis, w);
  };
  std::vector<BundleAdjoint> adj = zero_adjoints(b);
  loss_ic(p, b, w, adj);
  loss_fc(p, b, w, adj);
  loss_least_action(p, b, w, adj);
  loss_adiabaticity(b, w, adj);
  loss_coupling(b, basis, w, adj);

  const double h = 1e-6;
  auto check = [&](double analytic, auto&& poke) {
    std::vector<OutputBundle> up = b, down = b;
    poke(up[0], h);
    poke(down[0], -h);
    const double fd = (value(up) - value(down)) / (2.0 * h);
    EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  };
  check(adj[0].d_lambda, [](OutputBundle& x, double d) { x.lambda += d; });
  check(adj[0].d_dlambda_dt, [](OutputBundle& x, double d) { x.dlambda_dt += d; });
  check(adj[0].d_a_cd(1, 2).real(), [](OutputBundle& x, double d) { x.a_cd(1, 2) += d; });
  check(adj[0].d_a_cd(3, 0).imag(), [](OutputBundle& x, double d) { x.a_cd(3, 0) += Complex(0.0, d); });
  check(adj[0].d_c[7], [](OutputBundle& x, double d) { x.c[7] += d; });
}

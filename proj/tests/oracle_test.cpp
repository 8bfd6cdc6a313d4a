#include "cdpinn/oracle.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cdpinn/errors.hpp"
#include "cdpinn/physics.hpp"
#include "support/test_support.hpp"

using namespace cdpinn;
namespace ct = cdpinn::testing;

namespace {

const Complex kI(0.0, 1.0);

Protocol exact_protocol(const ProblemSpec& p, bool with_cd) {
  return [p, with_cd](double t) {
    ProtocolSample s;
    s.lambda = t;
    s.dlambda_dt = 1.0;
    if (with_cd) s.a_cd = exact_gauge_potential(p, t).a_exact;
    return s;
  };
}

std::vector<double> grid(int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return g;
}

}  // namespace

TEST(oracle, toy_qubit_exact_gauge) {
  const ProblemSpec toy = ct::toy_qubit();
  const GaugeReport r = exact_gauge_potential(toy, 0.5);
  EXPECT_NEAR(std::abs(r.a_exact(0, 1)), 1.0, 1e-10);
  // Closed form (1/2)·dθ/dλ with θ = atan(λ/(1−λ)).
  for (double lambda : {0.1, 0.3, 0.5, 0.8}) {
    const double dtheta = 1.0 / (lambda * lambda + (1.0 - lambda) * (1.0 - lambda));
    EXPECT_NEAR(std::abs(exact_gauge_potential(toy, lambda).a_exact(0, 1)), 0.5 * dtheta, 1e-10);
  }
  // σ_Y up to sign.
  const double sign = r.a_exact(0, 1).imag() < 0 ? 1.0 : -1.0;
  EXPECT_LT((r.a_exact - sign * pauli::y()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(r.el_residual, 1e-12);
  EXPECT_LE((r.a_exact - r.a_exact.adjoint()).norm(), 1e-12);
}

TEST(oracle, degenerate_start_of_bond_one) {
  try {
    exact_gauge_potential(builtin_h2(1.0), 0.0);
    FAIL() << "expected DegenerateSpectrumError";
  } catch (const DegenerateSpectrumError& e) {
    EXPECT_LT(e.gap(), 1e-8);
    EXPECT_NEAR(e.coupling(), 0.19679058, 1e-8);
  }
  EXPECT_NO_THROW(exact_gauge_potential(builtin_h2(1.0), 0.05));
}

TEST(oracle, euler_lagrange_residual_vanishes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (double d : builtin_h2_distances()) {
    const ProblemSpec p = builtin_h2(d);
    for (int k = 0; k < 40; ++k) {
      const double lambda = u(rng);
      const GaugeReport r = exact_gauge_potential(p, lambda);
      EXPECT_LE(r.el_residual, 1e-10) << "d=" << d << " lambda=" << lambda;
      EXPECT_LE((r.a_exact - r.a_exact.adjoint()).norm(), 1e-12);
      EXPECT_GT(r.min_coupled_gap, 0.0);
    }
  }
}

TEST(oracle, action_of_zero_is_derivative_norm) {
  const ProblemSpec p = builtin_h2(2.0);
  EXPECT_NEAR(action_value(p, 0.4, ComplexMatrix::Zero(4, 4)), d_h_ad_d_lambda(p).squaredNorm(), 1e-15);
}

TEST(oracle, exact_gauge_minimises_action) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const ProblemSpec p = builtin_h2(builtin_h2_distances()[static_cast<std::size_t>(pick(rng))]);
    const double lambda = u(rng);
    const GaugeReport r = exact_gauge_potential(p, lambda);
    ComplexMatrix delta = ct::random_hermitian(4, rng);
    delta *= 1e-3 / delta.norm();
    EXPECT_GE(action_value(p, lambda, r.a_exact + delta), r.action_value - 1e-12);
  }
  const ProblemSpec p = builtin_h2(1.5);
  const GaugeReport r = exact_gauge_potential(p, 0.6);
  EXPECT_LE(r.action_value, action_value(p, 0.6, ComplexMatrix::Zero(4, 4)));
  EXPECT_LE(r.action_value, action_value(p, 0.6, nc_gauge_potential(p, 0.6, 1).a_nc) + 1e-12);
  EXPECT_LE(r.action_value, action_value(p, 0.6, ct::random_hermitian(4, rng)));
}

TEST(oracle, diagonal_gauge_invariance) {
  const ProblemSpec p = builtin_h2(2.5);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (double lambda : {0.2, 0.5, 0.9}) {
    const GaugeReport r = exact_gauge_potential(p, lambda);
    const ComplexMatrix v = hermitian_eigensystem(build_h_ad(p, lambda)).vectors;
    Eigen::VectorXcd diag(4);
    for (int k = 0; k < 4; ++k) diag[k] = n(rng);
    const ComplexMatrix shifted = r.a_exact + v * diag.asDiagonal() * v.adjoint();
    EXPECT_NEAR(action_value(p, lambda, shifted), r.action_value, 1e-12);
  }
}

TEST(oracle, nested_commutator_toy) {
  const ProblemSpec toy = ct::toy_qubit();
  const NcExpansion one = nc_gauge_potential(toy, 0.5, 1);
  EXPECT_LT(action_value(toy, 0.5, one.a_nc), action_value(toy, 0.5, ComplexMatrix::Zero(2, 2)));
  const NcExpansion four = nc_gauge_potential(toy, 0.5, 4);
  EXPECT_NEAR(std::abs(four.a_nc(0, 1)), 1.0, 1e-3);
  EXPECT_EQ(four.alphas.size(), 4u);
}

TEST(oracle, nested_commutator_monotone_and_hermitian) {
  const ProblemSpec p = builtin_h2(1.0);
  double previous = action_value(p, 0.5, ComplexMatrix::Zero(4, 4));
  for (int order = 1; order <= 4; ++order) {
    const NcExpansion nc = nc_gauge_potential(p, 0.5, order);
    const double a = action_value(p, 0.5, nc.a_nc);
    EXPECT_LE(a, previous + 1e-12) << "order " << order;
    EXPECT_LE((nc.a_nc - nc.a_nc.adjoint()).norm(), 1e-10);
    previous = a;
  }
  std::mt19937_64 rng(4);
  ProblemSpec random_spec;
  random_spec.n_qubits = 2;
  random_spec.h_initial = ct::random_hermitian(4, rng);
  random_spec.h_final = ct::random_hermitian(4, rng);
  previous = action_value(random_spec, 0.3, ComplexMatrix::Zero(4, 4));
  for (int order = 1; order <= 4; ++order) {
    const NcExpansion nc = nc_gauge_potential(random_spec, 0.3, order);
    const double a = action_value(random_spec, 0.3, nc.a_nc);
    EXPECT_LE(a, previous * (1.0 + 1e-12));
    EXPECT_GE(a, exact_gauge_potential(random_spec, 0.3).action_value - 1e-12);
    previous = a;
  }
}

TEST(oracle, nested_commutator_order_bounds) {
  EXPECT_THROW(nc_gauge_potential(builtin_h2(1.0), 0.5, 0), ConfigError);
  EXPECT_THROW(nc_gauge_potential(builtin_h2(1.0), 0.5, 5), ConfigError);
}

TEST(oracle, eigen_tracks_start_and_flat_schedule) {
  const ProblemSpec p = builtin_h2(1.0);
  MlpParameters m = glorot_init({1, 49}, 1).zeros_like();
  m.biases[0][0] = -45.0;  // λ ≈ 3e-20 everywhere, dλ/dt = 0
  m.biases[0][1 + 32 + 5] = 0.7;
  const EigenTracks tr = eigen_tracks(p, m, std::vector<double>{0.0, 0.5});
  const double expected[] = {-1.0661087, -0.5490812, -0.5490812, 0.00400595};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(tr.adiabatic[0][k], expected[k], 1e-9);
  EXPECT_EQ(tr.cd[1], tr.adiabatic[1]);
}

TEST(oracle, fidelity_constant_hamiltonian) {
  const ProblemSpec p = builtin_h2(1.5);
  const Protocol still = [](double) {
    ProtocolSample s;
    return s;  // λ = 0 throughout
  };
  const FidelityTrace tr = evolve_fidelity(p, still, grid(11), 1e-3);
  const ComplexVector g0 = hermitian_eigensystem(p.h_initial).vectors.col(0);
  const ComplexVector g1 = hermitian_eigensystem(p.h_final).vectors.col(0);
  const double overlap = std::norm(g1.dot(g0));
  for (double f : tr.fidelity) EXPECT_NEAR(f, overlap, 1e-12);
}

TEST(oracle, fidelity_exact_cd_beats_adiabatic_and_converges) {
  const ProblemSpec p = ct::restricted(builtin_h2(2.5), 0.05);
  const std::vector<double> g = grid(11);
  const FidelityTrace cd = evolve_fidelity(p, exact_protocol(p, true), g, 1e-3);
  const FidelityTrace ad = evolve_fidelity(p, exact_protocol(p, false), g, 1e-3);
  EXPECT_GE(cd.fidelity.back(), ad.fidelity.back());
  EXPECT_GT(cd.fidelity.back(), 0.999);
  const FidelityTrace half = evolve_fidelity(p, exact_protocol(p, true), g, 5e-4);
  EXPECT_LE(std::abs(half.fidelity.back() - cd.fidelity.back()), 1e-8);
  EXPECT_LE(cd.max_norm_drift, 1e-6);
}

TEST(oracle, fidelity_step_size_guard) {
  const ProblemSpec p = ct::toy_qubit();
  EXPECT_THROW(evolve_fidelity(p, exact_protocol(p, false), grid(3), 0.5), StepSizeError);
  EXPECT_THROW(evolve_fidelity(p, exact_protocol(p, false), std::vector<double>{0.0}, 1e-4), ConfigError);
}

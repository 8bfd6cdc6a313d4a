#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cdpinn/linalg.hpp"
#include "cdpinn/net.hpp"
#include "cdpinn/problem.hpp"

namespace cdpinn {

struct GaugeReport {
  double lambda = 0.0;
  ComplexMatrix a_exact;  // diagonal (in the eigenbasis) fixed to zero
  double min_coupled_gap = std::numeric_limits<double>::infinity();
  double el_residual = 0.0;
  double action_value = 0.0;
};

// ‖[i·∂λH_AD − [A, H_AD], H_AD]‖_F at λ.
double euler_lagrange_residual(const ProblemSpec& p, double lambda, const ComplexMatrix& a);

// Tr[G†G] with G = ∂λH_AD + i[A, H_AD]; equals Tr[G²] whenever A is
// Hermitian (then G is Hermitian).
double action_value(const ProblemSpec& p, double lambda, const ComplexMatrix& a);

/// Exact adiabatic gauge potential at λ from the instantaneous eigenbasis:
/// ⟨m|A|n⟩ = −i⟨m|∂λH_AD|n⟩ / (E_m − E_n) for m ≠ n, zero diagonal.
///
/// Pairs closer than gap_tolerance are skipped when their coupling is below
/// gap_tolerance too; a pair that is both degenerate and coupled raises
/// DegenerateSpectrumError carrying (m, n, gap).
GaugeReport exact_gauge_potential(const ProblemSpec& p, double lambda, double gap_tolerance = 1e-8);

struct NcExpansion {
  int order = 0;
  std::vector<double> alphas;
  ComplexMatrix a_nc;
  int rank = 0;                   // independent commutator directions used
  double condition_number = 1.0;  // of the retained least-squares block
};

// Nested-commutator ansatz A = i·Σ_k α_k·ad_H^{2k−1}(∂λH) with real α chosen
// to minimise action_value. Rank-deficient families (common for effectively
// two-level spectra) get the minimum-norm α. Throws ConfigError unless
// 1 <= order <= 4 and IllConditionedError if the commutators overflow.
NcExpansion nc_gauge_potential(const ProblemSpec& p, double lambda, int order);

// Energy levels along a trained protocol.
struct EigenTracks {
  std::vector<double> times;
  std::vector<double> lambda;
  std::vector<double> dlambda_dt;
  std::vector<RealVector> cd;         // spectrum of H_AD + (dλ/dt)·Σ C·P
  std::vector<RealVector> adiabatic;  // spectrum of H_AD(λ(t))
};

EigenTracks eigen_tracks(const ProblemSpec& p, const MlpParameters& model, std::span<const double> times);

struct ProtocolSample {
  double lambda = 0.0;
  double dlambda_dt = 0.0;
  ComplexMatrix a_cd;  // empty means no counterdiabatic term
};

using Protocol = std::function<ProtocolSample(double t)>;

// λ(t), dλ/dt and the Hermitian reconstruction Σ C·P from a trained model;
// with include_cd == false the gauge term is dropped (adiabatic driving).
Protocol model_protocol(const MlpParameters& model, bool include_cd);

struct FidelityTrace {
  std::vector<double> times;
  std::vector<double> fidelity;    // |⟨ground(h_final)|ψ(t)⟩|²
  std::vector<double> norm_drift;  // largest per-step |‖ψ‖ − 1| since the previous sample
  double max_norm_drift = 0.0;
};

/// Integrates i·dψ/dt = H(t)ψ with H(t) = H_AD(λ) + (dλ/dt)·A from the ground
/// state of h_initial, using classical RK4 with renormalisation after every
/// step. Samples fidelity at each time in `t_grid` (ascending; the first
/// entry is the start time). Steps between samples are equal and no longer
/// than dt.
///
/// Throws StepSizeError if dt > 1e-3·(t_grid.back() − t_grid.front()) or if
/// any step drifts the norm by more than 1e-6.
FidelityTrace evolve_fidelity(const ProblemSpec& p, const Protocol& protocol, std::span<const double> t_grid,
                              double dt);

}  // namespace cdpinn

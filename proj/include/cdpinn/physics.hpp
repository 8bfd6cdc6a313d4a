#pragma once

#include <span>
#include <vector>

#include "cdpinn/linalg.hpp"
#include "cdpinn/net.hpp"
#include "cdpinn/problem.hpp"

namespace cdpinn {

// Mixture weights of the five loss terms. The two halves of each endpoint
// loss (λ target and Hamiltonian target) share one weight.
struct LossWeights {
  double w_ic = 1e3;
  double w_fc = 1e3;
  double w_action = 1e2;
  double w_ad = 5e-1;
  double w_coupling = 2.5e2;

  // Throws ConfigError unless every weight is strictly positive.
  void validate() const;
};

struct LossBreakdown {
  double l_ic = 0.0;
  double l_fc = 0.0;
  double l_action = 0.0;
  double l_adiabaticity = 0.0;
  double l_coupling = 0.0;
  double l_total = 0.0;
  double hermiticity_diag = 0.0;  // reported, never part of l_total
};

// (1 − λ)·h_initial + λ·h_final
ComplexMatrix build_h_ad(const ProblemSpec& p, double lambda);
// build_h_ad(p, λ) + (dλ/dt)·A_CD
ComplexMatrix build_total_h(const ProblemSpec& p, const OutputBundle& bundle);

// Every loss function below returns the weighted mean over `bundles`. When
// `adjoints` is non-empty it must match `bundles` in length (see
// zero_adjoints) and receives += the derivative of the returned value.

std::vector<BundleAdjoint> zero_adjoints(std::span<const OutputBundle> bundles);

// w_ic·mean|λ|² + w_ic·mean‖H(t_min) − h_initial‖²_F
double loss_ic(const ProblemSpec& p, std::span<const OutputBundle> bundles, const LossWeights& w,
               std::span<BundleAdjoint> adjoints = {});

// w_fc·mean|λ − 1|² + w_fc·mean‖H(t_max) − h_final‖²_F
double loss_fc(const ProblemSpec& p, std::span<const OutputBundle> bundles, const LossWeights& w,
               std::span<BundleAdjoint> adjoints = {});

// w_action·mean‖[i·∂λH_AD − [A_CD, H_AD], H_AD]‖²_F
double loss_least_action(const ProblemSpec& p, std::span<const OutputBundle> bundles,
                         const LossWeights& w, std::span<BundleAdjoint> adjoints = {});

// w_ad·mean|dλ/dt|²
double loss_adiabaticity(std::span<const OutputBundle> bundles, const LossWeights& w,
                         std::span<BundleAdjoint> adjoints = {});

// w_coupling·mean‖A_CD − Σ_P C_P·P‖²_F
double loss_coupling(std::span<const OutputBundle> bundles, const PauliBasis& basis,
                     const LossWeights& w, std::span<BundleAdjoint> adjoints = {});

// mean‖A_CD − A_CD†‖²_F
double hermiticity_diagnostic(std::span<const OutputBundle> bundles);

struct LossBatches {
  std::span<const OutputBundle> at_t_min;
  std::span<const OutputBundle> at_t_max;
  std::span<const OutputBundle> interior;
};

struct LossAdjoints {
  std::span<BundleAdjoint> at_t_min;
  std::span<BundleAdjoint> at_t_max;
  std::span<BundleAdjoint> interior;
};

LossBreakdown total_loss(const ProblemSpec& p, const PauliBasis& basis, const LossBatches& batches,
                         const LossWeights& w, const LossAdjoints& adjoints = {});

// Evaluator for a batch laid out as [t_min, t_max, interior...]: one
// evaluation at each endpoint stands in for the replicated endpoint set.
// `last_breakdown`, when non-null, receives the breakdown of every call.
LossEvaluator make_training_evaluator(const ProblemSpec& p, const PauliBasis& basis,
                                      const LossWeights& w, LossBreakdown* last_breakdown = nullptr);

}  // namespace cdpinn

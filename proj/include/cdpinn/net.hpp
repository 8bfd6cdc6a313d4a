#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cdpinn/linalg.hpp"

namespace cdpinn {

// Weights and biases of the dense network t ↦ (λ, A_CD, C). Layer k maps
// layer_sizes[k] inputs to layer_sizes[k + 1] outputs; hidden layers use
// tanh, the output layer applies a sigmoid to the λ slot and leaves the
// remaining slots linear. The same struct carries parameter gradients.
struct MlpParameters {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[k]: layer_sizes[k+1] x layer_sizes[k]
  std::vector<Eigen::VectorXd> biases;   // biases[k]: layer_sizes[k+1]

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
  int output_width() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }

  // Same shapes, all zeros.
  MlpParameters zeros_like() const;

  // Flat view in a fixed order (per layer: weights column-major, then
  // biases). Used by the optimizer and by gradient checks.
  double& coordinate(std::size_t index);
  double coordinate(std::size_t index) const;

  bool operator==(const MlpParameters&) const = default;
};

// Output slots for n qubits: 1 (λ) + 2·4^n (Re/Im of every A_CD entry,
// row-major, interleaved) + 4^n (Pauli coefficients C).
int output_width_for_qubits(int n_qubits);
// Inverse of the above; returns 0 when the width fits no qubit count.
int qubits_for_output_width(int width);

// Throws ConfigError for an empty list, a first size other than 1, a
// non-positive size or an output width that fits no qubit count.
void validate_layer_sizes(const std::vector<int>& layer_sizes);

// (1, 30 × 6, output_width_for_qubits(n_qubits))
std::vector<int> default_layer_sizes(int n_qubits);

MlpParameters glorot_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

struct OutputBundle {
  double lambda = 0.0;
  double dlambda_dt = 0.0;
  ComplexMatrix a_cd;
  std::vector<double> c;
};

OutputBundle forward(const MlpParameters& params, double t);
OutputBundle forward_with_input_derivative(const MlpParameters& params, double t);

// Activations and their time tangents for a batch of inputs, kept for the
// reverse pass. Column b of every matrix belongs to times[b].
struct NetTape {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> pre;       // z_k
  std::vector<Eigen::MatrixXd> pre_dot;   // dz_k/dt
  std::vector<Eigen::MatrixXd> post;      // σ(z_k) for hidden layers
  std::vector<Eigen::MatrixXd> post_dot;  // dσ(z_k)/dt
};

NetTape forward_batch(const MlpParameters& params, std::span<const double> times);
std::vector<OutputBundle> bundles_from_tape(const NetTape& tape);

// Sensitivity of a scalar loss to one OutputBundle. d_a_cd holds
// ∂L/∂Re(A_ij) + i·∂L/∂Im(A_ij).
struct BundleAdjoint {
  double d_lambda = 0.0;
  double d_dlambda_dt = 0.0;
  ComplexMatrix d_a_cd;
  std::vector<double> d_c;
};

// Reverse pass through the tape, including the tangent path, so the result
// contains ∂²λ/∂t∂Θ contributions from d_dlambda_dt.
MlpParameters backward(const MlpParameters& params, const NetTape& tape,
                       std::span<const BundleAdjoint> adjoints);

struct LossValue {
  double value = 0.0;
  std::vector<BundleAdjoint> adjoints;
};

using LossEvaluator = std::function<LossValue(std::span<const OutputBundle>)>;

struct GradientResult {
  double loss = 0.0;
  MlpParameters gradient;
};

// Exact gradient of evaluator(forward(times)) with respect to every weight
// and bias.
GradientResult loss_gradient(const MlpParameters& params, std::span<const double> times,
                             const LossEvaluator& evaluator);

// Checkpoint fragment: {layer_sizes, weights, biases}. Weights are nested
// row-major arrays; doubles round-trip exactly.
nlohmann::json parameters_to_json(const MlpParameters& params);
// Throws FormatError on shape or type mismatch.
MlpParameters parameters_from_json(const nlohmann::json& j);

}  // namespace cdpinn

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdpinn/net.hpp"
#include "cdpinn/physics.hpp"
#include "cdpinn/problem.hpp"

namespace cdpinn {

struct TrainConfig {
  long epochs = 500000;
  double learning_rate = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int log2_interior = 11;
  double t_min = 0.0;
  double t_max = 1.0;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::vector<int> layer_sizes;  // empty: default_layer_sizes(problem)
  long log_every = 1000;
  long checkpoint_every = 10000;

  // Throws ConfigError.
  void validate() const;
};

// 50k epochs, lr 1e-4, 2^9 interior points.
TrainConfig desk_profile();
// 500k epochs, lr 1e-5, 2^11 interior points.
TrainConfig paper_profile();
// "desk" | "paper"; throws ConfigError otherwise.
TrainConfig profile_by_name(const std::string& name);

struct LossSample {
  long epoch = 0;
  LossBreakdown loss;
  double seconds = 0.0;  // wall clock since the run (or resume) started
};

struct TrainingState {
  MlpParameters params;
  MlpParameters adam_m;
  MlpParameters adam_v;
  long epoch = 0;
  std::uint64_t seed = 0;
  std::vector<LossSample> loss_history;
  double wall_clock_seconds = 0.0;
};

// Fresh state: Glorot parameters, zero moments, epoch 0.
TrainingState initial_state(const ProblemSpec& p, const TrainConfig& config);

// In-place Adam update with bias correction; advances state.epoch. Throws
// NumericsError (state untouched) if any gradient component is not finite.
void adam_update(TrainingState& state, const MlpParameters& gradient, const TrainConfig& config);
TrainingState adam_step(TrainingState state, const MlpParameters& gradient, const TrainConfig& config);

struct ProgressEvent {
  long epoch = 0;
  LossBreakdown loss;
  double seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const ProgressEvent&)> on_progress;
  // Called every checkpoint_every epochs, at the end of the run, and with
  // the last good state before a NumericsError propagates.
  std::function<void(const TrainingState&)> on_checkpoint;
};

// The fixed evaluation times of a run: [t_min, t_max, interior...].
std::vector<double> training_times(const TrainConfig& config);

// Full-batch training. The interior batch is generated once; each epoch
// evaluates the network on it, takes the exact loss gradient and applies one
// Adam step. Losses are logged at epochs divisible by log_every. With
// `resume`, training continues from that state up to config.epochs and
// reproduces an uninterrupted run bit for bit.
TrainingState train(const ProblemSpec& p, const TrainConfig& config, const TrainHooks& hooks = {},
                    std::optional<TrainingState> resume = std::nullopt);

// Loss of the current parameters on the run's fixed batch.
LossBreakdown evaluate_loss(const ProblemSpec& p, const TrainConfig& config, const MlpParameters& params);

// Checkpoint JSON: {schema_version, layer_sizes, weights, biases, seed,
// epoch, adam: {m, v}}. Doubles round-trip exactly.
nlohmann::json checkpoint_to_json(const TrainingState& state);
// Throws UnsupportedVersion for another schema_version and FormatError for
// anything malformed.
TrainingState checkpoint_from_json(const nlohmann::json& j);
// Writes atomically (temp file + rename).
void save_checkpoint(const TrainingState& state, const std::filesystem::path& path);
TrainingState load_checkpoint(const std::filesystem::path& path);

// Exponential smoothing with α = 2/(window + 1).
std::vector<double> smoothed(std::span<const double> values, int window);

struct MonotonicityReport {
  bool ok = true;
  long worst_span_start = -1;  // epoch index where the largest violation begins
  double worst_end_ratio = 0.0;   // max over spans of s(a + span) / s(a)
  double worst_peak_ratio = 0.0;  // max over spans of max_{e in span} s(e) / s(a)
};

// Checks that the smoothed per-epoch total loss ends every `span`-epoch
// window starting at or after `start` no higher than it began, and never
// rises more than `tolerance` (relative) above the window's start inside it.
MonotonicityReport check_smoothed_monotone(std::span<const double> per_epoch_totals, int window = 200,
                                           long span = 10000, long start = 20000, double tolerance = 0.05);

}  // namespace cdpinn

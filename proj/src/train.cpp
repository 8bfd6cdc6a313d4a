#include "cdpinn/train.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>

#include "cdpinn/errors.hpp"
#include "cdpinn/sampling.hpp"

namespace cdpinn {

namespace {

constexpr int kCheckpointSchema = 1;

int problem_qubits_for(const TrainConfig& config, const ProblemSpec& p) {
  if (config.layer_sizes.empty()) return p.n_qubits;
  return qubits_for_output_width(config.layer_sizes.back());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
  if (log2_interior < 0 || log2_interior > 20) throw ConfigError("log2_interior must be in [0, 20]");
  if (!(t_min < t_max)) throw ConfigError("t_min must be < t_max");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  weights.validate();
  if (!layer_sizes.empty()) validate_layer_sizes(layer_sizes);
}

TrainConfig desk_profile() {
  TrainConfig c;
  c.epochs = 50000;
  c.learning_rate = 1e-4;
  c.log2_interior = 9;
  c.log_every = 100;
  c.checkpoint_every = 5000;
  return c;
}

TrainConfig paper_profile() {
  TrainConfig c;
  c.epochs = 500000;
  c.learning_rate = 1e-5;
  c.log2_interior = 11;
  c.log_every = 1000;
  c.checkpoint_every = 10000;
  return c;
}

TrainConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
}

TrainingState initial_state(const ProblemSpec& p, const TrainConfig& config) {
  const std::vector<int> sizes = config.layer_sizes.empty() ? default_layer_sizes(p.n_qubits) : config.layer_sizes;
  TrainingState s;
  s.params = glorot_init(sizes, config.seed);
  s.adam_m = s.params.zeros_like();
  s.adam_v = s.params.zeros_like();
  s.seed = config.seed;
  return s;
}

void adam_update(TrainingState& state, const MlpParameters& gradient, const TrainConfig& config) {
  const std::size_t n = state.params.parameter_count();
  if (gradient.parameter_count() != n || gradient.layer_sizes != state.params.layer_sizes) {
    throw DimensionError("adam_update: gradient shape does not match parameters");
  }
  // Validate the whole gradient before touching the state.
  std::size_t coord = 0;
  for (std::size_t k = 0; k < gradient.layer_count(); ++k) {
    for (Eigen::Index i = 0; i < gradient.weights[k].size(); ++i, ++coord) {
      if (!std::isfinite(gradient.weights[k].data()[i])) throw NumericsError(state.epoch, coord, "gradient");
    }
    for (Eigen::Index i = 0; i < gradient.biases[k].size(); ++i, ++coord) {
      if (!std::isfinite(gradient.biases[k].data()[i])) throw NumericsError(state.epoch, coord, "gradient");
    }
  }

  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double step = static_cast<double>(state.epoch + 1);
  const double correction1 = 1.0 - std::pow(b1, step);
  const double correction2 = 1.0 - std::pow(b2, step);
  const double lr = config.learning_rate;
  const double eps = config.adam_epsilon;

  auto apply = [&](double* theta, double* m, double* v, const double* g, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  };
  for (std::size_t k = 0; k < gradient.layer_count(); ++k) {
    apply(state.params.weights[k].data(), state.adam_m.weights[k].data(), state.adam_v.weights[k].data(),
          gradient.weights[k].data(), gradient.weights[k].size());
    apply(state.params.biases[k].data(), state.adam_m.biases[k].data(), state.adam_v.biases[k].data(),
          gradient.biases[k].data(), gradient.biases[k].size());
  }
  ++state.epoch;
}

TrainingState adam_step(TrainingState state, const MlpParameters& gradient, const TrainConfig& config) {
  adam_update(state, gradient, config);
  return state;
}

std::vector<double> training_times(const TrainConfig& config) {
  const TimeBatch batch = sobol_interior(config.log2_interior, config.t_min, config.t_max);
  std::vector<double> times;
  times.reserve(batch.interior.size() + 2);
  times.push_back(batch.t_min);
  times.push_back(batch.t_max);
  times.insert(times.end(), batch.interior.begin(), batch.interior.end());
  return times;
}

LossBreakdown evaluate_loss(const ProblemSpec& p, const TrainConfig& config, const MlpParameters& params) {
  const PauliBasis basis = pauli_basis(p.n_qubits);
  const std::vector<double> times = training_times(config);
  const std::vector<OutputBundle> out = bundles_from_tape(forward_batch(params, times));
  const std::span<const OutputBundle> all(out);
  return total_loss(p, basis, {all.subspan(0, 1), all.subspan(1, 1), all.subspan(2)}, config.weights);
}

TrainingState train(const ProblemSpec& p, const TrainConfig& config, const TrainHooks& hooks,
                    std::optional<TrainingState> resume) {
  config.validate();
  validate_problem(p);
  if (problem_qubits_for(config, p) != p.n_qubits) {
    throw ConfigError("network output width does not match the problem's qubit count");
  }

  TrainingState state = resume ? std::move(*resume) : initial_state(p, config);
  if (qubits_for_output_width(state.params.output_width()) != p.n_qubits) {
    throw ConfigError("checkpoint output width does not match the problem's qubit count");
  }
  if (state.epoch > config.epochs) {
    throw ConfigError("resume state is already past the requested epoch count");
  }

  const PauliBasis basis = pauli_basis(p.n_qubits);
  const std::vector<double> times = training_times(config);
  LossBreakdown breakdown;
  const LossEvaluator evaluator = make_training_evaluator(p, basis, config.weights, &breakdown);

  const auto start = std::chrono::steady_clock::now();
  const double prior_seconds = state.wall_clock_seconds;
  auto elapsed = [&] {
    return prior_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto record = [&](long epoch) {
    if (!state.loss_history.empty() && state.loss_history.back().epoch >= epoch) return;
    const double secs = elapsed();
    state.loss_history.push_back({epoch, breakdown, secs});
    if (hooks.on_progress) hooks.on_progress({epoch, breakdown, secs});
  };

  while (state.epoch < config.epochs) {
    GradientResult g = loss_gradient(state.params, times, evaluator);
    if (!std::isfinite(g.loss)) {
      state.wall_clock_seconds = elapsed();
      if (hooks.on_checkpoint) hooks.on_checkpoint(state);
      throw NumericsError(state.epoch, 0, "loss is not finite");
    }
    if (state.epoch % config.log_every == 0) record(state.epoch);
    try {
      adam_update(state, g.gradient, config);
    } catch (const NumericsError&) {
      state.wall_clock_seconds = elapsed();
      if (hooks.on_checkpoint) hooks.on_checkpoint(state);
      throw;
    }
    if (state.epoch % config.checkpoint_every == 0 && state.epoch < config.epochs && hooks.on_checkpoint) {
      state.wall_clock_seconds = elapsed();
      hooks.on_checkpoint(state);
    }
  }

  breakdown = evaluate_loss(p, config, state.params);
  if (state.epoch % config.log_every == 0) record(state.epoch);
  state.wall_clock_seconds = elapsed();
  if (hooks.on_checkpoint) hooks.on_checkpoint(state);
  return state;
}

nlohmann::json checkpoint_to_json(const TrainingState& state) {
  nlohmann::json j = parameters_to_json(state.params);
  j["schema_version"] = kCheckpointSchema;
  j["seed"] = state.seed;
  j["epoch"] = state.epoch;
  nlohmann::json m = parameters_to_json(state.adam_m);
  nlohmann::json v = parameters_to_json(state.adam_v);
  j["adam"] = {{"m", {{"weights", m["weights"]}, {"biases", m["biases"]}}},
               {"v", {{"weights", v["weights"]}, {"biases", v["biases"]}}}};
  return j;
}

TrainingState checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw FormatError("checkpoint: missing schema_version");
  int version = 0;
  try {
    version = j.at("schema_version").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad schema_version: ") + e.what());
  }
  if (version != kCheckpointSchema) {
    throw UnsupportedVersion("checkpoint schema_version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kCheckpointSchema) + ")");
  }
  try {
    TrainingState s;
    s.params = parameters_from_json(j);
    s.seed = j.at("seed").get<std::uint64_t>();
    s.epoch = j.at("epoch").get<long>();
    if (s.epoch < 0) throw FormatError("checkpoint: negative epoch");
    if (j.contains("adam")) {
      const auto& adam = j.at("adam");
      nlohmann::json m = adam.at("m");
      nlohmann::json v = adam.at("v");
      m["layer_sizes"] = s.params.layer_sizes;
      v["layer_sizes"] = s.params.layer_sizes;
      s.adam_m = parameters_from_json(m);
      s.adam_v = parameters_from_json(v);
    } else {
      s.adam_m = s.params.zeros_like();
      s.adam_v = s.params.zeros_like();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FormatError("cannot write checkpoint " + tmp.string());
    out << checkpoint_to_json(state).dump() << '\n';
    if (!out) throw FormatError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

std::vector<double> smoothed(std::span<const double> values, int window) {
  std::vector<double> out;
  out.reserve(values.size());
  const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s = (i == 0) ? values[i] : alpha * values[i] + (1.0 - alpha) * s;
    out.push_back(s);
  }
  return out;
}

MonotonicityReport check_smoothed_monotone(std::span<const double> per_epoch_totals, int window, long span,
                                           long start, double tolerance) {
  MonotonicityReport r;
  const std::vector<double> s = smoothed(per_epoch_totals, window);
  const long n = static_cast<long>(s.size());
  // Sliding maximum over [a, a + span], walking a downwards.
  std::deque<long> window_max;
  for (long a = n - 1 - span; a >= start; --a) {
    if (window_max.empty()) {
      for (long e = a + span; e >= a; --e) {
        while (!window_max.empty() && s[static_cast<std::size_t>(window_max.back())] <= s[static_cast<std::size_t>(e)]) {
          window_max.pop_back();
        }
        window_max.push_back(e);
      }
    } else {
      while (!window_max.empty() && window_max.front() > a + span) window_max.pop_front();
      while (!window_max.empty() && s[static_cast<std::size_t>(window_max.back())] <= s[static_cast<std::size_t>(a)]) {
        window_max.pop_back();
      }
      window_max.push_back(a);
    }
    const double base = s[static_cast<std::size_t>(a)];
    const double end_ratio = s[static_cast<std::size_t>(a + span)] / base;
    const double peak_ratio = s[static_cast<std::size_t>(window_max.front())] / base;
    if (end_ratio > r.worst_end_ratio) {
      r.worst_end_ratio = end_ratio;
      if (end_ratio > 1.0) r.worst_span_start = a;
    }
    r.worst_peak_ratio = std::max(r.worst_peak_ratio, peak_ratio);
    if (end_ratio > 1.0 || peak_ratio > 1.0 + tolerance) r.ok = false;
  }
  return r;
}

}  // namespace cdpinn

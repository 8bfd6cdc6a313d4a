#include "cdpinn/net.hpp"

#include <cmath>
#include <random>

#include "cdpinn/errors.hpp"

namespace cdpinn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int matrix_dim_for_width(int width) {
  const int n = qubits_for_output_width(width);
  return n > 0 ? (1 << n) : 0;
}

}  // namespace

std::size_t MlpParameters::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    n += static_cast<std::size_t>(weights[k].size() + biases[k].size());
  }
  return n;
}

MlpParameters MlpParameters::zeros_like() const {
  MlpParameters out;
  out.layer_sizes = layer_sizes;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.weights.push_back(Eigen::MatrixXd::Zero(weights[k].rows(), weights[k].cols()));
    out.biases.push_back(Eigen::VectorXd::Zero(biases[k].size()));
  }
  return out;
}

double& MlpParameters::coordinate(std::size_t index) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto nw = static_cast<std::size_t>(weights[k].size());
    if (index < nw) return weights[k].data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(biases[k].size());
    if (index < nb) return biases[k].data()[index];
    index -= nb;
  }
  throw std::out_of_range("MlpParameters::coordinate: index out of range");
}

double MlpParameters::coordinate(std::size_t index) const {
  return const_cast<MlpParameters&>(*this).coordinate(index);
}

int output_width_for_qubits(int n_qubits) {
  const int strings = 1 << (2 * n_qubits);
  return 1 + 2 * strings + strings;
}

int qubits_for_output_width(int width) {
  for (int n = 1; n <= 6; ++n) {
    if (output_width_for_qubits(n) == width) return n;
  }
  return 0;
}

void validate_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) throw ConfigError("layer_sizes needs at least an input and an output size");
  if (layer_sizes.front() != 1) throw ConfigError("layer_sizes must start with 1 (scalar time input)");
  for (int s : layer_sizes) {
    if (s < 1) throw ConfigError("layer_sizes entries must be positive");
  }
  if (qubits_for_output_width(layer_sizes.back()) == 0) {
    throw ConfigError("output width " + std::to_string(layer_sizes.back()) +
                      " is not 1 + 3·4^n for any qubit count n");
  }
}

std::vector<int> default_layer_sizes(int n_qubits) {
  std::vector<int> sizes{1};
  for (int i = 0; i < 6; ++i) sizes.push_back(30);
  sizes.push_back(output_width_for_qubits(n_qubits));
  return sizes;
}

MlpParameters glorot_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  validate_layer_sizes(layer_sizes);
  std::mt19937_64 rng(seed);
  MlpParameters p;
  p.layer_sizes = layer_sizes;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const int fan_in = layer_sizes[k];
    const int fan_out = layer_sizes[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = dist(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

NetTape forward_batch(const MlpParameters& params, std::span<const double> times) {
  const auto batch = static_cast<Eigen::Index>(times.size());
  const std::size_t layers = params.layer_count();
  NetTape tape;
  tape.times.assign(times.begin(), times.end());
  tape.pre.resize(layers);
  tape.pre_dot.resize(layers);
  tape.post.resize(layers);
  tape.post_dot.resize(layers);

  Eigen::MatrixXd input(1, batch);
  for (Eigen::Index b = 0; b < batch; ++b) input(0, b) = times[static_cast<std::size_t>(b)];
  Eigen::MatrixXd input_dot = Eigen::MatrixXd::Ones(1, batch);

  for (std::size_t k = 0; k < layers; ++k) {
    const Eigen::MatrixXd& a = (k == 0) ? input : tape.post[k - 1];
    const Eigen::MatrixXd& a_dot = (k == 0) ? input_dot : tape.post_dot[k - 1];
    tape.pre[k].noalias() = params.weights[k] * a;
    tape.pre[k].colwise() += params.biases[k];
    tape.pre_dot[k].noalias() = params.weights[k] * a_dot;
    if (k + 1 < layers) {
      tape.post[k] = tape.pre[k].array().tanh().matrix();
      tape.post_dot[k] = ((1.0 - tape.post[k].array().square()) * tape.pre_dot[k].array()).matrix();
    }
  }
  return tape;
}

std::vector<OutputBundle> bundles_from_tape(const NetTape& tape) {
  const Eigen::MatrixXd& z = tape.pre.back();
  const Eigen::MatrixXd& z_dot = tape.pre_dot.back();
  const int width = static_cast<int>(z.rows());
  const int dim = matrix_dim_for_width(width);
  const int strings = dim * dim;
  std::vector<OutputBundle> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    OutputBundle& o = out[static_cast<std::size_t>(b)];
    const double s = sigmoid(z(0, b));
    o.lambda = s;
    o.dlambda_dt = s * (1.0 - s) * z_dot(0, b);
    o.a_cd.resize(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        const int slot = 1 + 2 * (i * dim + j);
        o.a_cd(i, j) = Complex(z(slot, b), z(slot + 1, b));
      }
    }
    o.c.resize(static_cast<std::size_t>(strings));
    for (int k = 0; k < strings; ++k) o.c[static_cast<std::size_t>(k)] = z(1 + 2 * strings + k, b);
  }
  return out;
}

OutputBundle forward_with_input_derivative(const MlpParameters& params, double t) {
  const double times[1] = {t};
  return bundles_from_tape(forward_batch(params, times)).front();
}

OutputBundle forward(const MlpParameters& params, double t) {
  OutputBundle o = forward_with_input_derivative(params, t);
  o.dlambda_dt = 0.0;
  return o;
}

MlpParameters backward(const MlpParameters& params, const NetTape& tape,
                       std::span<const BundleAdjoint> adjoints) {
  const std::size_t layers = params.layer_count();
  const Eigen::MatrixXd& z_out = tape.pre.back();
  const Eigen::MatrixXd& z_out_dot = tape.pre_dot.back();
  const Eigen::Index batch = z_out.cols();
  const int width = static_cast<int>(z_out.rows());
  const int dim = matrix_dim_for_width(width);
  const int strings = dim * dim;
  if (static_cast<Eigen::Index>(adjoints.size()) != batch) {
    throw DimensionError("backward: adjoint count does not match batch size");
  }

  // Adjoints of the output layer's pre-activations and of their tangents.
  Eigen::MatrixXd bar = Eigen::MatrixXd::Zero(width, batch);
  Eigen::MatrixXd bar_dot = Eigen::MatrixXd::Zero(width, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const BundleAdjoint& adj = adjoints[static_cast<std::size_t>(b)];
    const double s = sigmoid(z_out(0, b));
    const double ds = s * (1.0 - s);
    const double dds = ds * (1.0 - 2.0 * s);
    bar(0, b) = ds * adj.d_lambda + dds * z_out_dot(0, b) * adj.d_dlambda_dt;
    bar_dot(0, b) = ds * adj.d_dlambda_dt;
    if (adj.d_a_cd.size() != 0) {
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
          const int slot = 1 + 2 * (i * dim + j);
          bar(slot, b) = adj.d_a_cd(i, j).real();
          bar(slot + 1, b) = adj.d_a_cd(i, j).imag();
        }
      }
    }
    for (std::size_t k = 0; k < adj.d_c.size(); ++k) {
      bar(1 + 2 * strings + static_cast<Eigen::Index>(k), b) = adj.d_c[k];
    }
  }

  MlpParameters grad = params.zeros_like();
  Eigen::MatrixXd input(1, batch);
  for (Eigen::Index b = 0; b < batch; ++b) input(0, b) = tape.times[static_cast<std::size_t>(b)];
  const Eigen::MatrixXd input_dot = Eigen::MatrixXd::Ones(1, batch);

  for (std::size_t k = layers; k-- > 0;) {
    const Eigen::MatrixXd& a = (k == 0) ? input : tape.post[k - 1];
    const Eigen::MatrixXd& a_dot = (k == 0) ? input_dot : tape.post_dot[k - 1];
    grad.weights[k].noalias() = bar * a.transpose();
    grad.weights[k].noalias() += bar_dot * a_dot.transpose();
    grad.biases[k] = bar.rowwise().sum();
    if (k == 0) break;

    const Eigen::MatrixXd a_bar = params.weights[k].transpose() * bar;
    const Eigen::MatrixXd a_dot_bar = params.weights[k].transpose() * bar_dot;
    // tanh: σ' = 1 − a², σ'' = −2a(1 − a²)
    const Eigen::ArrayXXd act = tape.post[k - 1].array();
    const Eigen::ArrayXXd d1 = 1.0 - act.square();
    const Eigen::ArrayXXd d2 = -2.0 * act * d1;
    bar_dot = (d1 * a_dot_bar.array()).matrix();
    bar = (d1 * a_bar.array() + d2 * tape.pre_dot[k - 1].array() * a_dot_bar.array()).matrix();
  }
  return grad;
}

GradientResult loss_gradient(const MlpParameters& params, std::span<const double> times,
                             const LossEvaluator& evaluator) {
  const NetTape tape = forward_batch(params, times);
  const std::vector<OutputBundle> outputs = bundles_from_tape(tape);
  LossValue lv = evaluator(outputs);
  GradientResult result;
  result.loss = lv.value;
  result.gradient = backward(params, tape, lv.adjoints);
  return result;
}

nlohmann::json parameters_to_json(const MlpParameters& params) {
  nlohmann::json j;
  j["layer_sizes"] = params.layer_sizes;
  nlohmann::json ws = nlohmann::json::array();
  nlohmann::json bs = nlohmann::json::array();
  for (std::size_t k = 0; k < params.layer_count(); ++k) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < params.weights[k].rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(params.weights[k].cols()));
      for (Eigen::Index c = 0; c < params.weights[k].cols(); ++c) row[static_cast<std::size_t>(c)] = params.weights[k](i, c);
      rows.push_back(std::move(row));
    }
    ws.push_back(std::move(rows));
    bs.push_back(std::vector<double>(params.biases[k].data(), params.biases[k].data() + params.biases[k].size()));
  }
  j["weights"] = std::move(ws);
  j["biases"] = std::move(bs);
  return j;
}

MlpParameters parameters_from_json(const nlohmann::json& j) {
  try {
    MlpParameters p;
    p.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    validate_layer_sizes(p.layer_sizes);
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    const std::size_t layers = p.layer_sizes.size() - 1;
    if (!ws.is_array() || !bs.is_array() || ws.size() != layers || bs.size() != layers) {
      throw FormatError("weights/biases layer count does not match layer_sizes");
    }
    for (std::size_t k = 0; k < layers; ++k) {
      const int rows = p.layer_sizes[k + 1];
      const int cols = p.layer_sizes[k];
      const auto& wj = ws[k];
      if (!wj.is_array() || wj.size() != static_cast<std::size_t>(rows)) {
        throw FormatError("weights[" + std::to_string(k) + "] has wrong row count");
      }
      Eigen::MatrixXd w(rows, cols);
      for (int r = 0; r < rows; ++r) {
        const auto row = wj[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(cols)) {
          throw FormatError("weights[" + std::to_string(k) + "] has wrong column count");
        }
        for (int c = 0; c < cols; ++c) w(r, c) = row[static_cast<std::size_t>(c)];
      }
      const auto b = bs[k].get<std::vector<double>>();
      if (b.size() != static_cast<std::size_t>(rows)) {
        throw FormatError("biases[" + std::to_string(k) + "] has wrong length");
      }
      p.weights.push_back(std::move(w));
      p.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed parameters: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed parameters: ") + e.what());
  }
}

}  // namespace cdpinn

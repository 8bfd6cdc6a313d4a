#include "cdpinn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "cdpinn/errors.hpp"
#include "cdpinn/net.hpp"
#include "cdpinn/numfmt.hpp"
#include "cdpinn/oracle.hpp"
#include "cdpinn/physics.hpp"
#include "cdpinn/problem.hpp"
#include "cdpinn/train.hpp"

namespace cdpinn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

json matrix_json(const ComplexMatrix& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r, c;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"re", re}, {"im", im}};
}

json breakdown_json(const LossBreakdown& b) {
  return {{"l_ic", b.l_ic},
          {"l_fc", b.l_fc},
          {"l_action", b.l_action},
          {"l_adiabaticity", b.l_adiabaticity},
          {"l_coupling", b.l_coupling},
          {"l_total", b.l_total},
          {"hermiticity_diag", b.hermiticity_diag}};
}

json config_json(const TrainConfig& c, const std::vector<int>& layer_sizes) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"log2_interior", c.log2_interior},
          {"t_min", c.t_min},
          {"t_max", c.t_max},
          {"weights",
           {{"w_ic", c.weights.w_ic},
            {"w_fc", c.weights.w_fc},
            {"w_action", c.weights.w_action},
            {"w_ad", c.weights.w_ad},
            {"w_coupling", c.weights.w_coupling}}},
          {"seed", c.seed},
          {"layer_sizes", layer_sizes},
          {"log_every", c.log_every},
          {"checkpoint_every", c.checkpoint_every}};
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = (n == 1) ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 1) v.back() = b;
  return v;
}

void require_model_matches(const MlpParameters& model, const ProblemSpec& p) {
  const int expected = output_width_for_qubits(p.n_qubits);
  if (model.output_width() != expected) {
    throw ConfigError("checkpoint output width " + std::to_string(model.output_width()) + " does not match " +
                      std::to_string(p.n_qubits) + "-qubit problem (expected " + std::to_string(expected) + ")");
  }
}

const char* kLossHeader = "epoch,l_ic,l_fc,l_action,l_adiabaticity,l_coupling,l_total,hermiticity_diag,seconds\n";

void write_loss_row(std::ostream& out, long epoch, const LossBreakdown& b, double seconds) {
  out << epoch << ',';
  const double vals[] = {b.l_ic, b.l_fc, b.l_action, b.l_adiabaticity, b.l_coupling, b.l_total, b.hermiticity_diag,
                         seconds};
  write_csv_row(out, vals);
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string problem;
  std::string profile = "desk";
  std::optional<long> epochs;
  std::optional<double> lr;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<long> log_every;
  std::optional<long> checkpoint_every;
  std::optional<int> log2_interior;
  std::string resume;
  bool wallclock = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  const ProblemSpec p = resolve_problem(a.problem);
  TrainConfig cfg = profile_by_name(a.profile);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.log_every) cfg.log_every = *a.log_every;
  if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
  if (a.log2_interior) cfg.log2_interior = *a.log2_interior;
  cfg.seed = a.seed;
  cfg.validate();

  std::optional<TrainingState> resume;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    require_model_matches(resume->params, p);
    cfg.seed = resume->seed;
  }

  const fs::path dir(a.out);
  ensure_dir(dir);
  const json problem_doc = problem_to_json(p);
  const std::vector<int> sizes = resume ? resume->params.layer_sizes : default_layer_sizes(p.n_qubits);

  json manifest;
  std::string cmdline = "cdpinn";
  for (const auto& s : argv) cmdline += " " + s;
  manifest["command_line"] = cmdline;
  manifest["tool_version"] = kToolVersion;
  manifest["profile"] = a.profile;
  manifest["config"] = config_json(cfg, sizes);
  manifest["problem"] = {{"source", a.problem}, {"label", p.label}, {"sha256", sha256_hex(problem_doc.dump())}};
  manifest["seed"] = cfg.seed;
  manifest["resumed_from"] = a.resume.empty() ? json(nullptr) : json(a.resume);
  manifest["started_at"] = utc_timestamp();
  open_output(dir / "manifest.json") << manifest.dump(2) << '\n';
  open_output(dir / "problem.json") << problem_doc.dump(2) << '\n';

  std::ofstream losses = open_output(dir / "losses.csv");
  losses << kLossHeader;
  const fs::path ckpt = dir / "checkpoint.json";
  bool have_checkpoint = false;

  TrainHooks hooks;
  hooks.on_progress = [&](const ProgressEvent& e) {
    write_loss_row(losses, e.epoch, e.loss, a.wallclock ? e.seconds : 0.0);
    losses.flush();
  };
  hooks.on_checkpoint = [&](const TrainingState& s) {
    save_checkpoint(s, ckpt);
    have_checkpoint = true;
  };

  TrainingState state;
  try {
    state = train(p, cfg, hooks, std::move(resume));
  } catch (const NumericsError& e) {
    err << "error: " << e.what() << '\n';
    if (have_checkpoint) err << "last good checkpoint: " << ckpt.string() << '\n';
    return kExitNumerics;
  }

  const LossBreakdown final_loss = evaluate_loss(p, cfg, state.params);
  const OutputBundle at_min = forward_with_input_derivative(state.params, cfg.t_min);
  const OutputBundle at_max = forward_with_input_derivative(state.params, cfg.t_max);
  json summary;
  summary["epoch"] = state.epoch;
  summary["final_loss"] = breakdown_json(final_loss);
  summary["lambda_t_min"] = at_min.lambda;
  summary["lambda_t_max"] = at_max.lambda;
  summary["h_t_min_error"] = (build_total_h(p, at_min) - p.h_initial).norm();
  summary["h_t_max_error"] = (build_total_h(p, at_max) - p.h_final).norm();
  if (a.wallclock) summary["wall_clock_seconds"] = state.wall_clock_seconds;
  open_output(dir / "summary.json") << summary.dump(2) << '\n';

  manifest["finished_at"] = utc_timestamp();
  open_output(dir / "manifest.json") << manifest.dump(2) << '\n';
  out << "trained " << state.epoch << " epochs; final l_total " << fmt17(final_loss.l_total) << "; outputs in "
      << dir.string() << '\n';
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::string& problem, int grid, const std::string& out_dir,
             std::ostream& out) {
  if (grid < 2) throw ConfigError("--grid must be >= 2");
  const ProblemSpec p = resolve_problem(problem);
  const TrainingState state = load_checkpoint(checkpoint);
  require_model_matches(state.params, p);
  const PauliBasis basis = pauli_basis(p.n_qubits);
  const fs::path dir(out_dir);
  ensure_dir(dir);

  const std::vector<double> times = linspace(0.0, 1.0, grid);
  const std::vector<OutputBundle> bundles = bundles_from_tape(forward_batch(state.params, times));
  const EigenTracks tracks = eigen_tracks(p, state.params, times);

  std::ofstream schedule = open_output(dir / "schedule.csv");
  schedule << "t,lambda,dlambda_dt\n";
  std::ofstream coeffs = open_output(dir / "coefficients.csv");
  coeffs << 't';
  for (const auto& l : basis.labels) coeffs << ',' << l;
  coeffs << '\n';
  std::ofstream ops = open_output(dir / "operators.jsonl");
  std::ofstream energies = open_output(dir / "energies.csv");
  energies << 't';
  for (int k = 0; k < p.dim(); ++k) energies << ",cd_E" << k;
  for (int k = 0; k < p.dim(); ++k) energies << ",ad_E" << k;
  energies << '\n';

  std::vector<double> mean_abs(basis.size(), 0.0);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const OutputBundle& b = bundles[i];
    const double t = times[i];
    const double sched[] = {t, b.lambda, b.dlambda_dt};
    write_csv_row(schedule, sched);

    std::vector<double> row{t};
    row.insert(row.end(), b.c.begin(), b.c.end());
    write_csv_row(coeffs, row);
    for (std::size_t k = 0; k < b.c.size(); ++k) mean_abs[k] += std::abs(b.c[k]);

    const ComplexMatrix a_rec = pauli_reconstruct(std::span<const double>(b.c), basis);
    json line;
    line["t"] = t;
    line["lambda"] = b.lambda;
    line["dlambda_dt"] = b.dlambda_dt;
    line["H"] = matrix_json(build_total_h(p, b));
    line["A_cd"] = matrix_json(b.a_cd);
    line["A_cd_reconstructed"] = matrix_json(a_rec);
    ops << line.dump() << '\n';

    std::vector<double> e{t};
    e.insert(e.end(), tracks.cd[i].data(), tracks.cd[i].data() + tracks.cd[i].size());
    e.insert(e.end(), tracks.adiabatic[i].data(), tracks.adiabatic[i].data() + tracks.adiabatic[i].size());
    write_csv_row(energies, e);
  }

  std::vector<std::size_t> order(basis.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double& m : mean_abs) m /= static_cast<double>(bundles.size());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return mean_abs[x] > mean_abs[y]; });
  json ranking = json::array();
  for (std::size_t k : order) ranking.push_back({{"label", basis.labels[k]}, {"mean_abs", mean_abs[k]}});
  open_output(dir / "coefficient_ranking.json") << ranking.dump(2) << '\n';

  out << "evaluated " << grid << " points; outputs in " << dir.string() << '\n';
  return kExitOk;
}

// --- oracle ----------------------------------------------------------------

// Time at which the model's schedule reaches `lambda`, or nullopt if the
// sampled schedule never brackets it.
std::optional<double> invert_schedule(const MlpParameters& model, const std::vector<double>& grid,
                                      const std::vector<double>& lambdas, double lambda) {
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double l0 = lambdas[i] - lambda;
    const double l1 = lambdas[i + 1] - lambda;
    if (l0 == 0.0) return grid[i];
    if ((l0 < 0.0) != (l1 < 0.0) || l1 == 0.0) {
      double lo = grid[i], hi = grid[i + 1];
      const bool rising = l1 > l0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = forward(model, mid).lambda - lambda;
        if ((v < 0.0) == rising) lo = mid; else hi = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return std::nullopt;
}

int cmd_oracle(const std::string& problem, int grid, int nc_order, const std::string& checkpoint, double gap_tol,
               const std::string& out_dir, std::ostream& out) {
  if (grid < 2) throw ConfigError("--lambda-grid must be >= 2");
  if (nc_order < 1 || nc_order > 4) throw ConfigError("--nc-order must be in [1, 4]");
  const ProblemSpec p = resolve_problem(problem);
  std::optional<MlpParameters> model;
  std::vector<double> t_dense, l_dense;
  if (!checkpoint.empty()) {
    model = load_checkpoint(checkpoint).params;
    require_model_matches(*model, p);
    t_dense = linspace(0.0, 1.0, 2049);
    for (const OutputBundle& b : bundles_from_tape(forward_batch(*model, t_dense))) l_dense.push_back(b.lambda);
  }
  const PauliBasis basis = pauli_basis(p.n_qubits);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  std::ofstream csv = open_output(dir / "gauge.csv");
  csv << "lambda,status,min_gap,action_zero,action_nc,action_exact,action_model,el_zero,el_nc,el_exact,el_model,"
         "model_t,model_offdiag_distance\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const ComplexMatrix zero = ComplexMatrix::Zero(p.dim(), p.dim());
  int degenerate_rows = 0;
  for (double lambda : linspace(0.0, 1.0, grid)) {
    std::string status = "ok";
    std::optional<GaugeReport> exact;
    try {
      exact = exact_gauge_potential(p, lambda, gap_tol);
    } catch (const DegenerateSpectrumError&) {
      status = "degenerate";
      ++degenerate_rows;
    }
    const NcExpansion nc = nc_gauge_potential(p, lambda, nc_order);
    double action_model = nan, el_model = nan, model_t = nan, dist = nan;
    if (model) {
      if (auto t = invert_schedule(*model, t_dense, l_dense, lambda)) {
        const OutputBundle b = forward(*model, *t);
        const ComplexMatrix a_model = pauli_reconstruct(std::span<const double>(b.c), basis);
        model_t = *t;
        action_model = action_value(p, lambda, a_model);
        el_model = euler_lagrange_residual(p, lambda, a_model);
        if (exact) {
          const ComplexMatrix v = hermitian_eigensystem(build_h_ad(p, lambda)).vectors;
          ComplexMatrix diff = v.adjoint() * (a_model - exact->a_exact) * v;
          diff.diagonal().setZero();
          dist = diff.norm();
        }
      }
    }
    csv << fmt17(lambda) << ',' << status << ',';
    const double vals[] = {exact ? exact->min_coupled_gap : nan,
                           action_value(p, lambda, zero),
                           action_value(p, lambda, nc.a_nc),
                           exact ? exact->action_value : nan,
                           action_model,
                           euler_lagrange_residual(p, lambda, zero),
                           euler_lagrange_residual(p, lambda, nc.a_nc),
                           exact ? exact->el_residual : nan,
                           el_model,
                           model_t,
                           dist};
    write_csv_row(csv, vals);
  }
  out << "wrote " << grid << " rows (" << degenerate_rows << " degenerate) to " << (dir / "gauge.csv").string()
      << '\n';
  return kExitOk;
}

// --- fidelity --------------------------------------------------------------

int cmd_fidelity(const std::string& checkpoint, const std::string& problem, double dt, int grid,
                 const std::string& out_dir, std::ostream& out) {
  if (grid < 2) throw ConfigError("--grid must be >= 2");
  const ProblemSpec p = resolve_problem(problem);
  const MlpParameters model = load_checkpoint(checkpoint).params;
  require_model_matches(model, p);
  const std::vector<double> times = linspace(0.0, 1.0, grid);
  const FidelityTrace cd = evolve_fidelity(p, model_protocol(model, true), times, dt);
  const FidelityTrace ad = evolve_fidelity(p, model_protocol(model, false), times, dt);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  std::ofstream csv = open_output(dir / "fidelity.csv");
  csv << "t,fidelity_cd,fidelity_adiabatic,norm_drift_cd,norm_drift_adiabatic\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double row[] = {times[i], cd.fidelity[i], ad.fidelity[i], cd.norm_drift[i], ad.norm_drift[i]};
    write_csv_row(csv, row);
  }
  out << "final fidelity: cd " << fmt17(cd.fidelity.back()) << ", adiabatic " << fmt17(ad.fidelity.back()) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterdiabatic protocol synthesis with physics-informed networks", "cdpinn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a network for a problem");
  train_cmd->add_option("--problem", ta.problem, "h2:<d> or problem JSON file")->required();
  train_cmd->add_option("--profile", ta.profile, "desk | paper")->capture_default_str();
  train_cmd->add_option("--epochs", ta.epochs);
  train_cmd->add_option("--lr", ta.lr);
  train_cmd->add_option("--seed", ta.seed)->capture_default_str();
  train_cmd->add_option("--out", ta.out, "output directory")->required();
  train_cmd->add_option("--log-every", ta.log_every);
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every);
  train_cmd->add_option("--log2-interior", ta.log2_interior);
  train_cmd->add_option("--resume", ta.resume, "continue from a checkpoint");
  train_cmd->add_flag("--wallclock", ta.wallclock, "record wall-clock seconds (outputs no longer reproducible)");

  std::string checkpoint, problem, out_dir;
  int grid = 512;
  auto* eval_cmd = app.add_subcommand("eval", "export schedule, coefficients, operators and energies");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--problem", problem)->required();
  eval_cmd->add_option("--grid", grid)->capture_default_str();
  eval_cmd->add_option("--out", out_dir)->required();

  int lambda_grid = 101;
  int nc_order = 2;
  double gap_tol = 1e-8;
  auto* oracle_cmd = app.add_subcommand("oracle", "compare exact, nested-commutator and model gauge potentials");
  oracle_cmd->add_option("--problem", problem)->required();
  oracle_cmd->add_option("--lambda-grid", lambda_grid)->capture_default_str();
  oracle_cmd->add_option("--nc-order", nc_order)->capture_default_str();
  oracle_cmd->add_option("--checkpoint", checkpoint);
  oracle_cmd->add_option("--gap-tolerance", gap_tol)->capture_default_str();
  oracle_cmd->add_option("--out", out_dir)->required();

  double dt = 1e-4;
  int fid_grid = 101;
  auto* fid_cmd = app.add_subcommand("fidelity", "Schrodinger evolution under the trained protocol");
  fid_cmd->add_option("--checkpoint", checkpoint)->required();
  fid_cmd->add_option("--problem", problem)->required();
  fid_cmd->add_option("--dt", dt)->capture_default_str();
  fid_cmd->add_option("--grid", fid_grid)->capture_default_str();
  fid_cmd->add_option("--out", out_dir)->required();

  std::string export_path;
  auto* export_cmd = app.add_subcommand("export-problem", "write a problem as JSON");
  export_cmd->add_option("--problem", problem)->required();
  export_cmd->add_option("--out", export_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(ta, args, out, err);
    if (*eval_cmd) return cmd_eval(checkpoint, problem, grid, out_dir, out);
    if (*oracle_cmd) return cmd_oracle(problem, lambda_grid, nc_order, checkpoint, gap_tol, out_dir, out);
    if (*fid_cmd) return cmd_fidelity(checkpoint, problem, dt, fid_grid, out_dir, out);
    if (*export_cmd) {
      write_problem(resolve_problem(problem), export_path);
      return kExitOk;
    }
  } catch (const NumericsError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerics;
  } catch (const StepSizeError& e) {
    err << "error: " << e.what() << " (try a smaller --dt)\n";
    return kExitNumerics;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace cdpinn

#include "cdpinn/oracle.hpp"

#include <cmath>
#include <memory>

#include "cdpinn/errors.hpp"
#include "cdpinn/physics.hpp"

namespace cdpinn {

namespace {
const Complex kI(0.0, 1.0);
}

double euler_lagrange_residual(const ProblemSpec& p, double lambda, const ComplexMatrix& a) {
  const ComplexMatrix h = build_h_ad(p, lambda);
  const ComplexMatrix dh = d_h_ad_d_lambda(p);
  const ComplexMatrix m = kI * dh - commutator(a, h);
  return commutator(m, h).norm();
}

double action_value(const ProblemSpec& p, double lambda, const ComplexMatrix& a) {
  const ComplexMatrix h = build_h_ad(p, lambda);
  const ComplexMatrix g = d_h_ad_d_lambda(p) + kI * commutator(a, h);
  return g.squaredNorm();
}

GaugeReport exact_gauge_potential(const ProblemSpec& p, double lambda, double gap_tolerance) {
  const ComplexMatrix h = build_h_ad(p, lambda);
  const Eigensystem es = hermitian_eigensystem(h);
  const ComplexMatrix& v = es.vectors;
  const ComplexMatrix dh_eig = v.adjoint() * d_h_ad_d_lambda(p) * v;
  const Eigen::Index n = h.rows();

  GaugeReport r;
  r.lambda = lambda;
  ComplexMatrix a_eig = ComplexMatrix::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (m == k) continue;
      const double gap = es.values[m] - es.values[k];
      const double coupling = std::abs(dh_eig(m, k));
      if (std::abs(gap) < gap_tolerance) {
        if (coupling > gap_tolerance) {
          throw DegenerateSpectrumError(static_cast<int>(std::min(m, k)), static_cast<int>(std::max(m, k)),
                                        std::abs(gap), coupling);
        }
        continue;
      }
      if (coupling > gap_tolerance) r.min_coupled_gap = std::min(r.min_coupled_gap, std::abs(gap));
      a_eig(m, k) = -kI * dh_eig(m, k) / gap;
    }
  }
  r.a_exact = v * a_eig * v.adjoint();
  // Remove rounding asymmetry; the construction is Hermitian analytically.
  r.a_exact = 0.5 * (r.a_exact + r.a_exact.adjoint()).eval();
  r.el_residual = euler_lagrange_residual(p, lambda, r.a_exact);
  r.action_value = action_value(p, lambda, r.a_exact);
  return r;
}

NcExpansion nc_gauge_potential(const ProblemSpec& p, double lambda, int order) {
  if (order < 1 || order > 4) {
    throw ConfigError("nested-commutator order must be in [1, 4], got " + std::to_string(order));
  }
  const ComplexMatrix h = build_h_ad(p, lambda);
  const ComplexMatrix dh = d_h_ad_d_lambda(p);
  const Eigen::Index n = h.rows();
  const Eigen::Index entries = n * n;

  // O_k = ad_H^{2k−1}(∂H) (anti-Hermitian), B_k = [H, O_k]. With
  // A = iΣα_k O_k the action's G is ∂H + Σ α_k B_k, so α is an ordinary real
  // least-squares solution.
  std::vector<ComplexMatrix> odd;
  std::vector<ComplexMatrix> even;
  ComplexMatrix cur = dh;
  for (int k = 0; k < order; ++k) {
    cur = commutator(h, cur);
    odd.push_back(cur);
    cur = commutator(h, cur);
    even.push_back(cur);
  }

  Eigen::MatrixXd design(2 * entries, order);
  Eigen::VectorXd target(2 * entries);
  for (Eigen::Index e = 0; e < entries; ++e) {
    target[e] = -dh.data()[e].real();
    target[entries + e] = -dh.data()[e].imag();
  }
  std::vector<double> col_scale(static_cast<std::size_t>(order), 0.0);
  for (int k = 0; k < order; ++k) {
    const double norm = even[static_cast<std::size_t>(k)].norm();
    if (!std::isfinite(norm)) throw IllConditionedError(std::numeric_limits<double>::infinity(), "nested commutators overflow");
    col_scale[static_cast<std::size_t>(k)] = norm > 0.0 ? 1.0 / norm : 0.0;
    for (Eigen::Index e = 0; e < entries; ++e) {
      design(e, k) = even[static_cast<std::size_t>(k)].data()[e].real() * col_scale[static_cast<std::size_t>(k)];
      design(entries + e, k) = even[static_cast<std::size_t>(k)].data()[e].imag() * col_scale[static_cast<std::size_t>(k)];
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd scaled_alpha = svd.solve(target);
  const Eigen::VectorXd& sv = svd.singularValues();

  NcExpansion out;
  out.order = order;
  out.rank = static_cast<int>(svd.rank());
  out.condition_number = (out.rank > 0) ? sv[0] / sv[out.rank - 1] : 1.0;
  out.alphas.resize(static_cast<std::size_t>(order));
  out.a_nc = ComplexMatrix::Zero(n, n);
  for (int k = 0; k < order; ++k) {
    const double alpha = scaled_alpha[k] * col_scale[static_cast<std::size_t>(k)];
    if (!std::isfinite(alpha)) throw IllConditionedError(out.condition_number, "nested-commutator solve failed");
    out.alphas[static_cast<std::size_t>(k)] = alpha;
    out.a_nc += kI * alpha * odd[static_cast<std::size_t>(k)];
  }
  return out;
}

EigenTracks eigen_tracks(const ProblemSpec& p, const MlpParameters& model, std::span<const double> times) {
  const PauliBasis basis = pauli_basis(p.n_qubits);
  const std::vector<OutputBundle> out = bundles_from_tape(forward_batch(model, times));
  EigenTracks tr;
  tr.times.assign(times.begin(), times.end());
  for (const OutputBundle& b : out) {
    const ComplexMatrix h_ad = build_h_ad(p, b.lambda);
    const ComplexMatrix a_rec = pauli_reconstruct(std::span<const double>(b.c), basis);
    tr.lambda.push_back(b.lambda);
    tr.dlambda_dt.push_back(b.dlambda_dt);
    tr.cd.push_back(hermitian_eigensystem(h_ad + b.dlambda_dt * a_rec).values);
    tr.adiabatic.push_back(hermitian_eigensystem(h_ad).values);
  }
  return tr;
}

Protocol model_protocol(const MlpParameters& model, bool include_cd) {
  const int n_qubits = qubits_for_output_width(model.output_width());
  if (n_qubits == 0) throw ConfigError("model output width fits no qubit count");
  auto basis = std::make_shared<const PauliBasis>(pauli_basis(n_qubits));
  return [model, include_cd, basis](double t) {
    const OutputBundle b = forward_with_input_derivative(model, t);
    ProtocolSample s;
    s.lambda = b.lambda;
    s.dlambda_dt = b.dlambda_dt;
    if (include_cd) s.a_cd = pauli_reconstruct(std::span<const double>(b.c), *basis);
    return s;
  };
}

FidelityTrace evolve_fidelity(const ProblemSpec& p, const Protocol& protocol, std::span<const double> t_grid,
                              double dt) {
  if (t_grid.size() < 2) throw ConfigError("fidelity grid needs at least two times");
  const double span = t_grid.back() - t_grid.front();
  if (!(span > 0.0)) throw ConfigError("fidelity grid must be ascending");
  if (!(dt > 0.0) || dt > 1e-3 * span) {
    throw StepSizeError("dt=" + std::to_string(dt) + " exceeds 1e-3 of the evolution span (" +
                        std::to_string(1e-3 * span) + "); use a smaller --dt");
  }

  auto hamiltonian = [&](double t) {
    const ProtocolSample s = protocol(t);
    ComplexMatrix h = build_h_ad(p, s.lambda);
    if (s.a_cd.size() != 0) h += s.dlambda_dt * s.a_cd;
    return h;
  };
  auto rhs = [](const ComplexMatrix& h, const ComplexVector& psi) -> ComplexVector { return -kI * (h * psi); };

  ComplexVector psi = hermitian_eigensystem(p.h_initial).vectors.col(0);
  const ComplexVector target = hermitian_eigensystem(p.h_final).vectors.col(0);
  auto fidelity = [&] { return std::norm(target.dot(psi)); };

  FidelityTrace tr;
  tr.times.push_back(t_grid.front());
  tr.fidelity.push_back(fidelity());
  tr.norm_drift.push_back(0.0);

  ComplexMatrix h_now = hamiltonian(t_grid.front());
  for (std::size_t seg = 1; seg < t_grid.size(); ++seg) {
    const double t0 = t_grid[seg - 1];
    const double t1 = t_grid[seg];
    if (!(t1 > t0)) throw ConfigError("fidelity grid must be strictly ascending");
    const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(steps);
    double seg_drift = 0.0;
    for (long s = 0; s < steps; ++s) {
      const double t = t0 + h * static_cast<double>(s);
      const ComplexMatrix h_mid = hamiltonian(t + 0.5 * h);
      const ComplexMatrix h_end = hamiltonian(t + h);
      const ComplexVector k1 = rhs(h_now, psi);
      const ComplexVector k2 = rhs(h_mid, psi + 0.5 * h * k1);
      const ComplexVector k3 = rhs(h_mid, psi + 0.5 * h * k2);
      const ComplexVector k4 = rhs(h_end, psi + h * k3);
      psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double norm = psi.norm();
      const double drift = std::abs(norm - 1.0);
      if (!(drift <= 1e-6)) {
        throw StepSizeError("norm drift " + std::to_string(drift) + " at t=" + std::to_string(t + h) +
                            " exceeds 1e-6; use a smaller --dt");
      }
      psi /= norm;
      seg_drift = std::max(seg_drift, drift);
      h_now = h_end;
    }
    tr.times.push_back(t1);
    tr.fidelity.push_back(fidelity());
    tr.norm_drift.push_back(seg_drift);
    tr.max_norm_drift = std::max(tr.max_norm_drift, seg_drift);
  }
  return tr;
}

}  // namespace cdpinn

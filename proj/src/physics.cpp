#include "cdpinn/physics.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "cdpinn/errors.hpp"
#include "cdpinn/parallel.hpp"

namespace cdpinn {

int configured_threads() {
  const char* env = std::getenv("CDPINN_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return std::clamp(n, 1, 64);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(configured_threads());
  if (workers <= 1 || n < 2 * workers) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

namespace {

void check_adjoints(std::span<const OutputBundle> bundles, std::span<BundleAdjoint> adjoints) {
  if (!adjoints.empty() && adjoints.size() != bundles.size()) {
    throw DimensionError("adjoint span does not match bundle count");
  }
}

// Re Tr(g† v): derivative of a real scalar along v given its matrix gradient g.
double real_inner(const ComplexMatrix& g, const ComplexMatrix& v) {
  return (g.conjugate().cwiseProduct(v)).sum().real();
}

double sum_in_order(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double endpoint_loss(const ProblemSpec& p, std::span<const OutputBundle> bundles, double weight,
                     double lambda_target, const ComplexMatrix& h_target,
                     std::span<BundleAdjoint> adjoints) {
  check_adjoints(bundles, adjoints);
  if (bundles.empty()) return 0.0;
  const double scale = weight / static_cast<double>(bundles.size());
  const ComplexMatrix dh = d_h_ad_d_lambda(p);
  double total = 0.0;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const OutputBundle& b = bundles[i];
    const double dl = b.lambda - lambda_target;
    const ComplexMatrix r = build_total_h(p, b) - h_target;
    total += scale * (dl * dl + r.squaredNorm());
    if (!adjoints.empty()) {
      BundleAdjoint& adj = adjoints[i];
      const ComplexMatrix g = 2.0 * scale * r;
      adj.d_lambda += 2.0 * scale * dl + real_inner(g, dh);
      adj.d_dlambda_dt += real_inner(g, b.a_cd);
      adj.d_a_cd += b.dlambda_dt * g;
    }
  }
  return total;
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {w_ic, w_fc, w_action, w_ad, w_coupling}) {
    if (!(v > 0.0)) throw ConfigError("loss weights must be strictly positive");
  }
}

ComplexMatrix build_h_ad(const ProblemSpec& p, double lambda) {
  return (1.0 - lambda) * p.h_initial + lambda * p.h_final;
}

ComplexMatrix build_total_h(const ProblemSpec& p, const OutputBundle& bundle) {
  ComplexMatrix h = build_h_ad(p, bundle.lambda);
  if (bundle.dlambda_dt != 0.0 && bundle.a_cd.size() != 0) h += bundle.dlambda_dt * bundle.a_cd;
  return h;
}

std::vector<BundleAdjoint> zero_adjoints(std::span<const OutputBundle> bundles) {
  std::vector<BundleAdjoint> out(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    out[i].d_a_cd = ComplexMatrix::Zero(bundles[i].a_cd.rows(), bundles[i].a_cd.cols());
    out[i].d_c.assign(bundles[i].c.size(), 0.0);
  }
  return out;
}

double loss_ic(const ProblemSpec& p, std::span<const OutputBundle> bundles, const LossWeights& w,
               std::span<BundleAdjoint> adjoints) {
  return endpoint_loss(p, bundles, w.w_ic, 0.0, p.h_initial, adjoints);
}

double loss_fc(const ProblemSpec& p, std::span<const OutputBundle> bundles, const LossWeights& w,
               std::span<BundleAdjoint> adjoints) {
  return endpoint_loss(p, bundles, w.w_fc, 1.0, p.h_final, adjoints);
}

double loss_least_action(const ProblemSpec& p, std::span<const OutputBundle> bundles,
                         const LossWeights& w, std::span<BundleAdjoint> adjoints) {
  check_adjoints(bundles, adjoints);
  if (bundles.empty()) return 0.0;
  const double scale = w.w_action / static_cast<double>(bundles.size());
  const ComplexMatrix dh = d_h_ad_d_lambda(p);
  const ComplexMatrix i_dh = Complex(0.0, 1.0) * dh;
  std::vector<double> values(bundles.size());
  parallel_for(bundles.size(), [&](std::size_t i) {
    const OutputBundle& b = bundles[i];
    const ComplexMatrix h = build_h_ad(p, b.lambda);
    const ComplexMatrix& a = b.a_cd;
    const ComplexMatrix m = i_dh - (a * h - h * a);
    const ComplexMatrix e = m * h - h * m;
    values[i] = scale * e.squaredNorm();
    if (!adjoints.empty()) {
      // E = M·H − H·M, M = i∂H − A·H + H·A, H = H_AD(λ); g_X is the
      // Wirtinger-style gradient ∂/∂Re X + i·∂/∂Im X.
      const ComplexMatrix h_dag = h.adjoint();
      const ComplexMatrix g_e = 2.0 * scale * e;
      const ComplexMatrix g_m = g_e * h_dag - h_dag * g_e;
      const ComplexMatrix m_dag = m.adjoint();
      const ComplexMatrix a_dag = a.adjoint();
      const ComplexMatrix g_h = (m_dag * g_e - g_e * m_dag) + (g_m * a_dag - a_dag * g_m);
      BundleAdjoint& adj = adjoints[i];
      adj.d_a_cd += h_dag * g_m - g_m * h_dag;
      adj.d_lambda += real_inner(g_h, dh);
    }
  });
  return sum_in_order(values);
}

double loss_adiabaticity(std::span<const OutputBundle> bundles, const LossWeights& w,
                         std::span<BundleAdjoint> adjoints) {
  check_adjoints(bundles, adjoints);
  if (bundles.empty()) return 0.0;
  const double scale = w.w_ad / static_cast<double>(bundles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const double v = bundles[i].dlambda_dt;
    total += scale * v * v;
    if (!adjoints.empty()) adjoints[i].d_dlambda_dt += 2.0 * scale * v;
  }
  return total;
}

double loss_coupling(std::span<const OutputBundle> bundles, const PauliBasis& basis,
                     const LossWeights& w, std::span<BundleAdjoint> adjoints) {
  check_adjoints(bundles, adjoints);
  if (bundles.empty()) return 0.0;
  const double scale = w.w_coupling / static_cast<double>(bundles.size());
  const int dim = basis.dim();
  std::vector<double> values(bundles.size());
  parallel_for(bundles.size(), [&](std::size_t i) {
    const OutputBundle& b = bundles[i];
    const ComplexMatrix r = b.a_cd - pauli_reconstruct(std::span<const double>(b.c), basis);
    values[i] = scale * r.squaredNorm();
    if (!adjoints.empty()) {
      const ComplexMatrix g = 2.0 * scale * r;
      BundleAdjoint& adj = adjoints[i];
      adj.d_a_cd += g;
      // ∂/∂C_k of ‖A − Σ C·P‖² is −Re Tr(g†·P_k)
      for (std::size_t k = 0; k < basis.size(); ++k) {
        double acc = 0.0;
        for (int row = 0; row < dim; ++row) {
          const int col = basis.column[k][static_cast<std::size_t>(row)];
          acc += (std::conj(g(row, col)) * basis.phase[k][static_cast<std::size_t>(row)]).real();
        }
        adj.d_c[k] -= acc;
      }
    }
  });
  return sum_in_order(values);
}

double hermiticity_diagnostic(std::span<const OutputBundle> bundles) {
  if (bundles.empty()) return 0.0;
  double total = 0.0;
  for (const OutputBundle& b : bundles) total += (b.a_cd - b.a_cd.adjoint()).squaredNorm();
  return total / static_cast<double>(bundles.size());
}

LossBreakdown total_loss(const ProblemSpec& p, const PauliBasis& basis, const LossBatches& batches,
                         const LossWeights& w, const LossAdjoints& adjoints) {
  LossBreakdown out;
  out.l_ic = loss_ic(p, batches.at_t_min, w, adjoints.at_t_min);
  out.l_fc = loss_fc(p, batches.at_t_max, w, adjoints.at_t_max);
  out.l_action = loss_least_action(p, batches.interior, w, adjoints.interior);
  out.l_adiabaticity = loss_adiabaticity(batches.interior, w, adjoints.interior);
  out.l_coupling = loss_coupling(batches.interior, basis, w, adjoints.interior);
  out.l_total = out.l_ic + out.l_fc + out.l_action + out.l_adiabaticity + out.l_coupling;
  out.hermiticity_diag = hermiticity_diagnostic(batches.interior);
  return out;
}

LossEvaluator make_training_evaluator(const ProblemSpec& p, const PauliBasis& basis,
                                      const LossWeights& w, LossBreakdown* last_breakdown) {
  return [p, basis, w, last_breakdown](std::span<const OutputBundle> bundles) {
    if (bundles.size() < 3) throw DimensionError("training batch needs both endpoints and interior points");
    LossValue lv;
    lv.adjoints = zero_adjoints(bundles);
    std::span<BundleAdjoint> adj(lv.adjoints);
    const LossBatches batches{bundles.subspan(0, 1), bundles.subspan(1, 1), bundles.subspan(2)};
    const LossAdjoints adjoints{adj.subspan(0, 1), adj.subspan(1, 1), adj.subspan(2)};
    const LossBreakdown br = total_loss(p, basis, batches, w, adjoints);
    if (last_breakdown) *last_breakdown = br;
    lv.value = br.l_total;
    return lv;
  };
}

}  // namespace cdpinn

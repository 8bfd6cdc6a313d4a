#include "cdpinn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cdpinn/errors.hpp"

namespace cdpinn {

namespace pauli {
ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }

ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

namespace {

void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw DimensionError(std::string(what) + ": matrix must be square and non-empty, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

}  // namespace

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square(a, "commutator");
  require_square(b, "commutator");
  if (a.rows() != b.rows()) {
    throw DimensionError("commutator: dimension mismatch " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
  }
  return a * b - b * a;
}

double frobenius_norm_sq(const ComplexMatrix& a) { return a.squaredNorm(); }

ComplexMatrix dagger(const ComplexMatrix& a) { return a.adjoint(); }

double hermiticity_deviation(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  double dev = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i; j < a.cols(); ++j) {
      dev = std::max(dev, std::abs(a(i, j) - std::conj(a(j, i))));
    }
  }
  return dev;
}

Eigensystem hermitian_eigensystem(const ComplexMatrix& input) {
  require_square(input, "hermitian_eigensystem");
  const Eigen::Index n = input.rows();
  if (n > 64) {
    throw ScopeError("hermitian_eigensystem: dimension " + std::to_string(n) +
                     " exceeds supported maximum 64");
  }
  const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
  const double dev = hermiticity_deviation(input);
  if (!(dev <= 1e-10 * scale)) {
    throw HermiticityError("hermitian_eigensystem: input deviates from Hermitian by " +
                           std::to_string(dev));
  }

  // Symmetrize so the rotations see an exactly Hermitian matrix.
  ComplexMatrix a = 0.5 * (input + input.adjoint());
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  ComplexMatrix v = ComplexMatrix::Identity(n, n);

  const double total = a.norm();
  const double target = 1e-14 * total;
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && total > 0.0; ++sweep) {
    if (off_norm() < target) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double b = std::abs(apq);
        if (b == 0.0) continue;
        // P = diag(1, e^{-iφ}) makes the (p, q) block real symmetric; then a
        // real Jacobi rotation G diagonalizes it. W = P·G.
        const Complex phase = apq / b;  // e^{iφ}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * b);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const Complex w00 = c;
        const Complex w01 = s;
        const Complex w10 = -s * std::conj(phase);
        const Complex w11 = c * std::conj(phase);

        for (Eigen::Index k = 0; k < n; ++k) {  // a ← a·W
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * w00 + akq * w10;
          a(k, q) = akp * w01 + akq * w11;
        }
        for (Eigen::Index k = 0; k < n; ++k) {  // a ← W†·a
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = std::conj(w00) * apk + std::conj(w10) * aqk;
          a(q, k) = std::conj(w01) * apk + std::conj(w11) * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {  // v ← v·W
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * w00 + vkq * w10;
          v(k, q) = vkp * w01 + vkq * w11;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });

  Eigensystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

std::size_t PauliBasis::index_of(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::out_of_range("unknown Pauli label: " + std::string(label));
  return static_cast<std::size_t>(it - labels.begin());
}

PauliBasis pauli_basis(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 6) {
    throw ScopeError("pauli_basis: n_qubits must be in [1, 6], got " + std::to_string(n_qubits));
  }
  static constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};
  const ComplexMatrix singles[4] = {pauli::identity(), pauli::x(), pauli::y(), pauli::z()};

  PauliBasis basis;
  basis.n_qubits = n_qubits;
  const std::size_t count = std::size_t{1} << (2 * n_qubits);
  basis.strings.reserve(count);
  basis.labels.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::string label(static_cast<std::size_t>(n_qubits), 'I');
    ComplexMatrix m = ComplexMatrix::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q) {
      const int letter = static_cast<int>((idx >> (2 * (n_qubits - 1 - q))) & 3u);
      label[static_cast<std::size_t>(q)] = kLetters[letter];
      m = kron(m, singles[letter]);
    }
    const int dim = 1 << n_qubits;
    std::vector<int> cols(static_cast<std::size_t>(dim));
    std::vector<Complex> phases(static_cast<std::size_t>(dim));
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) {
        if (m(r, c) != Complex(0.0)) {
          cols[static_cast<std::size_t>(r)] = c;
          phases[static_cast<std::size_t>(r)] = m(r, c);
        }
      }
    }
    basis.strings.push_back(std::move(m));
    basis.labels.push_back(std::move(label));
    basis.column.push_back(std::move(cols));
    basis.phase.push_back(std::move(phases));
  }
  return basis;
}

ComplexVector pauli_decompose(const ComplexMatrix& m, const PauliBasis& basis) {
  const int dim = basis.dim();
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionError("pauli_decompose: expected " + std::to_string(dim) + "x" +
                         std::to_string(dim) + " matrix, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  ComplexVector out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    // Tr(P·m) = Σ_r P(r, col[r]) · m(col[r], r)
    Complex tr = 0.0;
    for (int r = 0; r < dim; ++r) {
      const int c = basis.column[k][static_cast<std::size_t>(r)];
      tr += basis.phase[k][static_cast<std::size_t>(r)] * m(c, r);
    }
    out[static_cast<Eigen::Index>(k)] = tr / static_cast<double>(dim);
  }
  return out;
}

ComplexMatrix pauli_reconstruct(const ComplexVector& coeffs, const PauliBasis& basis) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.size()) {
    throw DimensionError("pauli_reconstruct: expected " + std::to_string(basis.size()) +
                         " coefficients, got " + std::to_string(coeffs.size()));
  }
  const int dim = basis.dim();
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Complex ck = coeffs[static_cast<Eigen::Index>(k)];
    for (int r = 0; r < dim; ++r) {
      out(r, basis.column[k][static_cast<std::size_t>(r)]) += ck * basis.phase[k][static_cast<std::size_t>(r)];
    }
  }
  return out;
}

ComplexMatrix pauli_reconstruct(std::span<const double> coeffs, const PauliBasis& basis) {
  if (coeffs.size() != basis.size()) {
    throw DimensionError("pauli_reconstruct: expected " + std::to_string(basis.size()) +
                         " coefficients, got " + std::to_string(coeffs.size()));
  }
  const int dim = basis.dim();
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double ck = coeffs[k];
    for (int r = 0; r < dim; ++r) {
      out(r, basis.column[k][static_cast<std::size_t>(r)]) += ck * basis.phase[k][static_cast<std::size_t>(r)];
    }
  }
  return out;
}

}  // namespace cdpinn

#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cdpinn {

using Complex = std::complex<double>;

// Dense square complex matrix, row/column indexing as in Eigen. Every
// operator in the library (Hamiltonians, gauge potentials, Pauli strings)
// is carried by this type.
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace pauli {
ComplexMatrix identity();
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
}  // namespace pauli

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// a·b − b·a. Throws DimensionError unless both are square of equal size.
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

double frobenius_norm_sq(const ComplexMatrix& a);

ComplexMatrix dagger(const ComplexMatrix& a);

// max_ij |a_ij − conj(a_ji)|
double hermiticity_deviation(const ComplexMatrix& a);

struct Eigensystem {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // column k belongs to values[k]
};

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Sweeps over every (p, q) pair, zeroing the off-diagonal entry with a
/// phase-adjusted Givens rotation, until the off-diagonal Frobenius mass
/// drops below 1e-14·‖a‖_F. Eigenvalues are returned in ascending order; ties
/// keep the order in which the rotations left them, so eigenvectors inside a
/// degenerate subspace are an arbitrary orthonormal basis of that subspace.
///
/// Throws HermiticityError when a deviates from Hermitian by more than
/// 1e-10·max(1, max|a_ij|), DimensionError for non-square input and
/// ScopeError above dimension 64.
Eigensystem hermitian_eigensystem(const ComplexMatrix& a);

// The 4^n Pauli strings on n qubits, ordered lexicographically in I<X<Y<Z
// with the leftmost qubit most significant (II, IX, IY, IZ, XI, ...).
struct PauliBasis {
  int n_qubits = 0;
  std::vector<ComplexMatrix> strings;
  std::vector<std::string> labels;

  // Each string has exactly one nonzero per row: strings[k](r, column[k][r])
  // equals phase[k][r]. Used for O(4^n · 2^n) decompose/reconstruct.
  std::vector<std::vector<int>> column;
  std::vector<std::vector<Complex>> phase;

  int dim() const { return 1 << n_qubits; }
  std::size_t size() const { return strings.size(); }
  // Throws std::out_of_range for unknown labels.
  std::size_t index_of(std::string_view label) const;
};

// Throws ScopeError unless 1 <= n_qubits <= 6.
PauliBasis pauli_basis(int n_qubits);

// Coefficient of string P is Tr(P·m) / 2^n.
ComplexVector pauli_decompose(const ComplexMatrix& m, const PauliBasis& basis);

ComplexMatrix pauli_reconstruct(const ComplexVector& coeffs, const PauliBasis& basis);
// Real-coefficient form; the result is Hermitian by construction.
ComplexMatrix pauli_reconstruct(std::span<const double> coeffs, const PauliBasis& basis);

}  // namespace cdpinn

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdpinn/linalg.hpp"

namespace cdpinn {

// An interpolation problem: start from h_initial (easy ground state), end at
// h_final (target). Energies in Hartree.
struct ProblemSpec {
  int n_qubits = 0;
  ComplexMatrix h_initial;
  ComplexMatrix h_final;
  std::string label;
  std::optional<double> bond_distance;  // Å

  int dim() const { return 1 << n_qubits; }
};

inline bool operator==(const ProblemSpec& a, const ProblemSpec& b) {
  return a.n_qubits == b.n_qubits && a.label == b.label && a.bond_distance == b.bond_distance &&
         a.h_initial == b.h_initial && a.h_final == b.h_final;
}

// Bond distances with built-in H₂/STO-3G data.
const std::vector<double>& builtin_h2_distances();

// Hartree–Fock → FCI pair for H₂ in STO-3G at bond distance d (Å).
// Throws UnknownDistanceError unless d is one of builtin_h2_distances().
ProblemSpec builtin_h2(double d);

// Throws ValidationError("dimension" | "hermiticity" | "real" | "n_qubits").
void validate_problem(const ProblemSpec& p);

// JSON schema: {schema_version: 1, label, n_qubits, bond_distance_angstrom?,
// h_initial: {re: [[..]], im?: [[..]]}, h_final: {re, im?}}.
nlohmann::json problem_to_json(const ProblemSpec& p);
// Throws FormatError (parse) or ValidationError (invariants).
ProblemSpec problem_from_json(const nlohmann::json& j);

ProblemSpec load_problem(const std::filesystem::path& path);
void write_problem(const ProblemSpec& p, const std::filesystem::path& path);

// "h2:<d>" for a built-in, otherwise a path to a problem file.
ProblemSpec resolve_problem(const std::string& tag_or_path);

// ∂H_AD/∂λ = h_final − h_initial.
ComplexMatrix d_h_ad_d_lambda(const ProblemSpec& p);

}  // namespace cdpinn

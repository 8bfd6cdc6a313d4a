#include "cdpinn/problem.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cdpinn/errors.hpp"

namespace cdpinn {

namespace {

constexpr int kSchemaVersion = 1;

// HF diagonal (|00>, |01>, |10>, |11>) and the FCI X⊗X-type coupling; the
// FCI diagonal coincides with the HF diagonal.
struct H2Row {
  double d;
  std::array<double, 4> diag;
  double coupling;
};

constexpr std::array<H2Row, 4> kH2Table{{
    {1.0, {-0.5490812, -1.0661087, 0.00400595, -0.5490812}, 0.19679058},
    {1.5, {-0.6610488, -0.91087353, -0.3944683, -0.6610488}, 0.22953594},
    {2.0, {-0.66539884, -0.7837927, -0.5412806, -0.66539884}, 0.25913846},
    {2.5, {-0.649429, -0.7029436, -0.5944048, -0.649429}, 0.28221005},
}};

std::string distance_list() {
  std::ostringstream os;
  os << "h2:{";
  for (std::size_t i = 0; i < kH2Table.size(); ++i) {
    if (i) os << ',';
    os << std::fixed;
    os.precision(1);
    os << kH2Table[i].d;
  }
  os << '}';
  return os.str();
}

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  bool any_imag = false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r, c;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
      any_imag = any_imag || m(i, j).imag() != 0.0;
    }
    re.push_back(std::move(r));
    im.push_back(std::move(c));
  }
  nlohmann::json out{{"re", std::move(re)}};
  if (any_imag) out["im"] = std::move(im);
  return out;
}

ComplexMatrix matrix_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains("re")) {
    throw FormatError(std::string(name) + ": expected object with 're' block");
  }
  const auto re = j.at("re").get<std::vector<std::vector<double>>>();
  const std::size_t rows = re.size();
  if (rows == 0) throw FormatError(std::string(name) + ": empty matrix");
  std::vector<std::vector<double>> im;
  if (j.contains("im")) {
    im = j.at("im").get<std::vector<std::vector<double>>>();
    if (im.size() != rows) throw ValidationError("dimension", std::string(name) + ": im/re row count differ");
  }
  ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    if (re[i].size() != rows) throw ValidationError("dimension", std::string(name) + ": matrix is not square");
    if (!im.empty() && im[i].size() != rows) {
      throw ValidationError("dimension", std::string(name) + ": im block is not square");
    }
    for (std::size_t k = 0; k < rows; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = Complex(re[i][k], im.empty() ? 0.0 : im[i][k]);
    }
  }
  return m;
}

}  // namespace

const std::vector<double>& builtin_h2_distances() {
  static const std::vector<double> d{1.0, 1.5, 2.0, 2.5};
  return d;
}

ProblemSpec builtin_h2(double d) {
  for (const H2Row& row : kH2Table) {
    if (std::abs(row.d - d) < 1e-9) {
      ProblemSpec p;
      p.n_qubits = 2;
      p.h_initial = ComplexMatrix::Zero(4, 4);
      for (int i = 0; i < 4; ++i) p.h_initial(i, i) = row.diag[static_cast<std::size_t>(i)];
      p.h_final = p.h_initial;
      p.h_final(0, 3) = p.h_final(3, 0) = row.coupling;
      p.h_final(1, 2) = p.h_final(2, 1) = row.coupling;
      std::ostringstream label;
      label << "H2 STO-3G d=" << std::fixed;
      label.precision(1);
      label << row.d << " A";
      p.label = label.str();
      p.bond_distance = row.d;
      return p;
    }
  }
  throw UnknownDistanceError("no built-in H2 data for d=" + std::to_string(d) +
                             "; supported: " + distance_list());
}

void validate_problem(const ProblemSpec& p) {
  if (p.n_qubits < 1 || p.n_qubits > 6) {
    throw ValidationError("n_qubits", "n_qubits must be in [1, 6], got " + std::to_string(p.n_qubits));
  }
  const Eigen::Index dim = Eigen::Index{1} << p.n_qubits;
  for (const auto* m : {&p.h_initial, &p.h_final}) {
    if (m->rows() != dim || m->cols() != dim) {
      throw ValidationError("dimension", "expected " + std::to_string(dim) + "x" + std::to_string(dim) +
                                             " for n_qubits=" + std::to_string(p.n_qubits) + ", got " +
                                             std::to_string(m->rows()) + "x" + std::to_string(m->cols()));
    }
  }
  for (const auto& [m, name] : {std::pair{&p.h_initial, "h_initial"}, std::pair{&p.h_final, "h_final"}}) {
    if (!(hermiticity_deviation(*m) <= 1e-12)) {
      throw ValidationError("hermiticity", std::string(name) + " is not Hermitian");
    }
    if (!(m->imag().cwiseAbs().maxCoeff() <= 1e-12)) {
      throw ValidationError("real", std::string(name) + " has imaginary entries");
    }
  }
}

nlohmann::json problem_to_json(const ProblemSpec& p) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["label"] = p.label;
  j["n_qubits"] = p.n_qubits;
  if (p.bond_distance) j["bond_distance_angstrom"] = *p.bond_distance;
  j["h_initial"] = matrix_to_json(p.h_initial);
  j["h_final"] = matrix_to_json(p.h_final);
  return j;
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec p;
  try {
    if (!j.is_object()) throw FormatError("problem file must hold a JSON object");
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw UnsupportedVersion("problem schema_version " + std::to_string(version) + " is not supported");
    }
    p.label = j.value("label", std::string{});
    p.n_qubits = j.at("n_qubits").get<int>();
    if (j.contains("bond_distance_angstrom") && !j.at("bond_distance_angstrom").is_null()) {
      p.bond_distance = j.at("bond_distance_angstrom").get<double>();
    }
    p.h_initial = matrix_from_json(j.at("h_initial"), "h_initial");
    p.h_final = matrix_from_json(j.at("h_final"), "h_final");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed problem: ") + e.what());
  }
  validate_problem(p);
  return p;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open problem file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
  return problem_from_json(j);
}

void write_problem(const ProblemSpec& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write problem file " + path.string());
  out << problem_to_json(p).dump(2) << '\n';
}

ProblemSpec resolve_problem(const std::string& tag_or_path) {
  if (tag_or_path.rfind("h2:", 0) == 0) {
    const std::string num = tag_or_path.substr(3);
    double d = 0.0;
    try {
      std::size_t used = 0;
      d = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception&) {
      throw UnknownDistanceError("unknown problem tag '" + tag_or_path + "'; supported: " + distance_list());
    }
    try {
      return builtin_h2(d);
    } catch (const UnknownDistanceError&) {
      throw UnknownDistanceError("unknown problem tag '" + tag_or_path + "'; supported: " + distance_list());
    }
  }
  if (!std::filesystem::exists(tag_or_path)) {
    throw ConfigError("problem '" + tag_or_path + "' is neither a built-in tag (" + distance_list() +
                      ") nor an existing file");
  }
  return load_problem(tag_or_path);
}

ComplexMatrix d_h_ad_d_lambda(const ProblemSpec& p) { return p.h_final - p.h_initial; }

}  // namespace cdpinn

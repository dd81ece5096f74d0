#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "extremal/capacity.hpp"
#include "extremal/error.hpp"
#include "extremal/instance.hpp"
#include "extremal/mixture.hpp"
#include "extremal/report.hpp"
#include "extremal/sym_matrix.hpp"
#include "extremal/verify.hpp"

namespace extremal::io {

using json = nlohmann::json;

inline constexpr double kSymmetryTol = 1e-9;

/// Parses JSON text; syntax errors become InputError naming the source, line and column.
inline json parse_json(const std::string& text, const std::string& source = "input") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": malformed JSON: " + e.what());
  }
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json load_json(const std::string& path) { return parse_json(read_text(path), path); }

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

inline double to_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(where + ": non-finite number");
  return v;
}

inline Vector to_vector(const json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, to_number(j, where));
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = to_number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

/// Square matrix from nested rows, or a bare number for 1 x 1.
inline Matrix to_matrix(const json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, to_number(j, where));
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string row = where + "[" + std::to_string(i) + "]";
    const Vector r = to_vector(j[static_cast<std::size_t>(i)], row);
    if (r.size() != n) throw InputError(row + ": expected " + std::to_string(n) + " entries (square matrix)");
    m.row(i) = r.transpose();
  }
  return m;
}

/**
 * Symmetric matrix in one of three forms: {"dim": n, "rows": [[...]]},
 * nested rows, or a bare number. Asymmetry beyond kSymmetryTol (relative)
 * is rejected.
 */
inline SymMatrix to_sym(const json& j, const std::string& where) {
  Matrix m;
  if (j.is_object()) {
    m = to_matrix(field(j, "rows", where), where + ".rows");
    if (j.contains("dim")) {
      const double d = to_number(j["dim"], where + ".dim");
      if (d != static_cast<double>(m.rows())) throw InputError(where + ".dim: does not match the number of rows");
    }
  } else {
    m = to_matrix(j, where);
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw InputError(where + ": matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  return SymMatrix(m);
}

template <class F>
auto guarded(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(where + ": " + e.what());
  }
}

/// {"kz1": M, "kz2": M, "s": M, "mu": x}
inline ExtremalInstance to_instance(const json& j, const std::string& where = "instance") {
  ExtremalInstance inst{to_sym(field(j, "kz1", where), where + ".kz1"), to_sym(field(j, "kz2", where), where + ".kz2"),
                        to_sym(field(j, "s", where), where + ".s"), to_number(field(j, "mu", where), where + ".mu")};
  guarded(where, [&] { inst.validate(); });
  return inst;
}

/// {"weights": [...], "means": [[...]], "covs": [M, ...]}
inline GaussianMixture to_mixture(const json& j, const std::string& where = "mixture") {
  const Vector w = to_vector(field(j, "weights", where), where + ".weights");
  const json& means = field(j, "means", where);
  const json& covs = field(j, "covs", where);
  if (!means.is_array() || !covs.is_array() || means.size() != static_cast<std::size_t>(w.size()) ||
      covs.size() != static_cast<std::size_t>(w.size())) {
    throw InputError(where + ": 'weights', 'means' and 'covs' must be arrays of equal length");
  }
  std::vector<double> wv(w.data(), w.data() + w.size());
  std::vector<Vector> mv;
  std::vector<SymMatrix> kv;
  for (std::size_t i = 0; i < wv.size(); ++i) {
    mv.push_back(to_vector(means[i], where + ".means[" + std::to_string(i) + "]"));
    kv.push_back(to_sym(covs[i], where + ".covs[" + std::to_string(i) + "]"));
  }
  return guarded(where, [&] { return GaussianMixture(wv, mv, kv); });
}

/// {"kz1": M, "kz2": M, "s": M}
inline BcInstance to_bc_instance(const json& j, const std::string& where = "instance") {
  BcInstance inst{to_sym(field(j, "kz1", where), where + ".kz1"), to_sym(field(j, "kz2", where), where + ".kz2"),
                  to_sym(field(j, "s", where), where + ".s")};
  guarded(where, [&] { inst.validate(); });
  return inst;
}

/// {"ky1": M, "ky2": M, "d": M}
inline DscInstance to_dsc_instance(const json& j, const std::string& where = "instance") {
  DscInstance inst{to_sym(field(j, "ky1", where), where + ".ky1"), to_sym(field(j, "ky2", where), where + ".ky2"),
                   to_sym(field(j, "d", where), where + ".d")};
  guarded(where, [&] { inst.validate(); });
  return inst;
}

/// {"kz2": M, "kz": M, "s": M, "mu": x}
inline CounterexampleSpec to_counterexample_spec(const json& j, const std::string& where = "spec") {
  CounterexampleSpec spec{to_sym(field(j, "kz2", where), where + ".kz2"), to_sym(field(j, "kz", where), where + ".kz"),
                          to_sym(field(j, "s", where), where + ".s"), to_number(field(j, "mu", where), where + ".mu")};
  guarded(where, [&] { counterexample_kx_star(spec); });
  return spec;
}

/// Rows of comma-separated coordinates; blank lines and '#' comments skipped.
inline std::vector<Vector> read_csv_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<Vector> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
      if (!std::isfinite(row.back())) throw InputError(path + ":" + std::to_string(lineno) + ": non-finite value");
    }
    if (!out.empty() && static_cast<Eigen::Index>(row.size()) != out.front().size()) {
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(out.front().size()) +
                       " columns");
    }
    out.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  if (out.empty()) throw InputError(path + ": no samples");
  return out;
}

// ---- emission ----

inline json from_matrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

inline json from_sym(const SymMatrix& m) { return {{"dim", m.dim()}, {"rows", from_matrix(m.matrix())}}; }

/// Information-valued numbers are emitted in nats or bits, with the unit in the key.
struct Units {
  bool bits = false;
  const char* suffix() const { return bits ? "_bits" : "_nats"; }
  double operator()(double nats) const { return bits ? nats / std::log(2.0) : nats; }
  std::string key(const std::string& base) const { return base + suffix(); }
};

/// A report with its items; information-valued reports pass units so
/// the item keys carry them, other reports emit plain values.
inline json from_report(const CheckReport& r, const Units* units = nullptr) {
  const std::string sfx = units ? units->suffix() : "";
  auto conv = [&](double v) { return units ? (*units)(v) : v; };
  json items = json::array();
  for (const auto& c : r.items) {
    json it{{"name", c.name},
            {"value" + sfx, conv(c.value)},
            {"threshold" + sfx, conv(c.threshold)},
            {"stderr" + sfx, conv(c.stderr_)},
            {"passed", c.passed}};
    if (!c.note.empty()) it["note"] = c.note;
    items.push_back(it);
  }
  json out{{"name", r.name}, {"passed", r.passed()}, {"inconclusive", r.inconclusive}, {"items", items}};
  if (!r.note.empty()) out["note"] = r.note;
  return out;
}

}  // namespace extremal::io

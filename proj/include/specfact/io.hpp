#ifndef SPECFACT_IO_HPP
#define SPECFACT_IO_HPP

// Text formats of the command-line tool.
//
// Model file (JSON):
//   { "name": "...", "A": [[...], ...], "B": ..., "C": ..., "D": ...,
//     "tolerances": { "rank_rel_tol": ..., "residual_tol": ..., "circle_samples": ... } }
// Matrices are row-major nested arrays; [] is an empty matrix whose shape
// follows from the other blocks. "tolerances" and each of its keys are optional.
//
// Divisor spec file (JSON): either a list of specs or { "specs": [...] };
// empty text means no specs. Each spec may carry
//   "gamma_select": [indices] | "all" | "none"   or   "gamma_basis": [[vector], ...]
//   "a_select":     [indices] | "all" | "none"   or   "a_basis":     [[vector], ...]
//   "theta_grid":   count
// A missing part selects nothing.
//
// Writers emit a canonical layout (fixed key order, one matrix row per line,
// numbers with 17 significant digits) so write(read(f)) reproduces f.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "specfact/divisors.hpp"
#include "specfact/errors.hpp"
#include "specfact/matnum.hpp"
#include "specfact/statespace.hpp"
#include "specfact/tolerance.hpp"

namespace specfact::io {

using Json = nlohmann::ordered_json;

struct ToleranceOverrides {
  std::optional<double> rank_rel_tol;
  std::optional<double> residual_tol;
  std::optional<std::size_t> circle_samples;

  bool empty() const { return !rank_rel_tol && !residual_tol && !circle_samples; }

  void apply(ToleranceConfig& tol) const {
    if (rank_rel_tol) tol.rank_rel_tol = *rank_rel_tol;
    if (residual_tol) tol.residual_tol = *residual_tol;
    if (circle_samples) tol.circle_samples = *circle_samples;
  }
};

struct ModelFile {
  std::string name;
  Realization model;
  ToleranceOverrides tolerances;
};

struct AllBlocks {};

/// One part of a spec as written in the file; "all" is resolved against the
/// block structure of the conjugate phase function.
using PartEntry = std::variant<BlockSelection, AllBlocks, Matrix>;

struct SpecEntry {
  PartEntry gamma = BlockSelection{};
  PartEntry a = BlockSelection{};
  std::optional<std::size_t> theta_grid;
};

// ---------------------------------------------------------------- writing

inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

inline bool is_flat_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const auto& e : j)
    if (!is_scalar(e)) return false;
  return true;
}

inline void emit(std::ostream& os, const Json& j, int indent);

inline void emit_scalar(std::ostream& os, const Json& j) {
  if (j.is_number_float())
    os << format_double(j.get<double>());
  else
    os << j.dump();
}

inline void emit_flat(std::ostream& os, const Json& j) {
  os << '[';
  bool first = true;
  for (const auto& e : j) {
    if (!first) os << ", ";
    first = false;
    emit_scalar(os, e);
  }
  os << ']';
}

inline void emit(std::ostream& os, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  if (is_scalar(j)) {
    emit_scalar(os, j);
  } else if (is_flat_array(j)) {
    emit_flat(os, j);
  } else if (j.is_array()) {
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      os << pad;
      emit(os, j[i], indent + 2);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << std::string(static_cast<std::size_t>(indent), ' ') << ']';
  } else {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      os << pad << Json(it.key()).dump() << ": ";
      emit(os, it.value(), indent + 2);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << std::string(static_cast<std::size_t>(indent), ' ') << '}';
  }
}

}  // namespace detail

/// Canonical text of a JSON document, terminated by a newline.
inline std::string to_text(const Json& j) {
  std::ostringstream os;
  detail::emit(os, j, 0);
  os << '\n';
  return os.str();
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json complex_list_json(const Eigen::VectorXcd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(Json::array({v(i).real(), v(i).imag()}));
  return out;
}

inline Json realization_json(const Realization& r) {
  Json j;
  j["A"] = matrix_json(r.a());
  j["B"] = matrix_json(r.b());
  j["C"] = matrix_json(r.c());
  j["D"] = matrix_json(r.d());
  return j;
}

inline Json model_json(const ModelFile& f) {
  Json j;
  j["name"] = f.name;
  const Json blocks = realization_json(f.model);
  for (auto it = blocks.begin(); it != blocks.end(); ++it) j[it.key()] = it.value();
  if (!f.tolerances.empty()) {
    Json t = Json::object();
    if (f.tolerances.rank_rel_tol) t["rank_rel_tol"] = *f.tolerances.rank_rel_tol;
    if (f.tolerances.residual_tol) t["residual_tol"] = *f.tolerances.residual_tol;
    if (f.tolerances.circle_samples) t["circle_samples"] = *f.tolerances.circle_samples;
    j["tolerances"] = std::move(t);
  }
  return j;
}

inline std::string write_model(const ModelFile& f) { return to_text(model_json(f)); }

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::InvalidArgument, "cannot open " + path + " for writing");
  os << text;
  if (!os) fail(Errc::InvalidArgument, "failed writing " + path);
}

// ---------------------------------------------------------------- reading

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, origin + ": " + e.what());
  }
}

/// Row-major nested array -> matrix. [] is 0x0 and [[], []] is 2x0.
inline Matrix parse_matrix(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(Errc::ParseError, what + " must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  for (const auto& row : j) {
    if (!row.is_array()) fail(Errc::ParseError, what + " must be an array of rows");
    if (cols < 0) cols = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != cols)
      fail(Errc::ParseError, what + " has rows of different lengths");
  }
  Matrix m(rows, std::max<Index>(cols, 0));
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < m.cols(); ++k) {
      const Json& e = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      if (!e.is_number()) fail(Errc::ParseError, what + " has a non-numeric entry");
      m(i, k) = e.get<double>();
      if (!std::isfinite(m(i, k))) fail(Errc::ParseError, what + " has a non-finite entry");
    }
  return m;
}

inline ModelFile parse_model(const std::string& text, const std::string& origin = "model") {
  const Json j = parse_json(text, origin);
  if (!j.is_object()) fail(Errc::ParseError, origin + ": top level must be an object");
  for (const char* key : {"A", "B", "C", "D"})
    if (!j.contains(key)) fail(Errc::ParseError, origin + ": missing \"" + key + "\"");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "name" && k != "A" && k != "B" && k != "C" && k != "D" && k != "tolerances")
      fail(Errc::ParseError, origin + ": unknown key \"" + k + "\"");
  }

  ModelFile f;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail(Errc::ParseError, origin + ": name must be a string");
    f.name = j["name"].get<std::string>();
  }
  Matrix a = parse_matrix(j["A"], origin + ": A");
  Matrix b = parse_matrix(j["B"], origin + ": B");
  Matrix c = parse_matrix(j["C"], origin + ": C");
  const Matrix d = parse_matrix(j["D"], origin + ": D");
  // Empty blocks carry no column/row count in the text.
  const Index n = a.rows();
  if (n == 0) {
    if (b.size() == 0) b = Matrix(0, d.cols());
    if (c.size() == 0) c = Matrix(d.rows(), 0);
    if (a.cols() != 0) fail(Errc::ParseError, origin + ": A must be square");
  }
  try {
    f.model = Realization(std::move(a), std::move(b), std::move(c), d);
  } catch (const Error& e) {
    fail(Errc::ParseError, origin + ": " + e.what());
  }

  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    if (!t.is_object()) fail(Errc::ParseError, origin + ": tolerances must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      const std::string& k = it.key();
      const Json& v = it.value();
      if (k == "circle_samples") {
        if (!v.is_number_unsigned())
          fail(Errc::ParseError, origin + ": circle_samples must be a positive integer");
        f.tolerances.circle_samples = v.get<std::size_t>();
      } else if (k == "rank_rel_tol" || k == "residual_tol") {
        if (!v.is_number()) fail(Errc::ParseError, origin + ": " + k + " must be a number");
        (k == "rank_rel_tol" ? f.tolerances.rank_rel_tol : f.tolerances.residual_tol) =
            v.get<double>();
      } else {
        fail(Errc::ParseError, origin + ": unknown tolerance \"" + k + "\"");
      }
    }
  }
  return f;
}

inline ModelFile read_model(const std::string& path) { return parse_model(read_file(path), path); }

namespace detail {

inline PartEntry parse_part(const Json& spec, const std::string& part, const std::string& where) {
  const std::string sel_key = part + "_select";
  const std::string basis_key = part + "_basis";
  const bool has_sel = spec.contains(sel_key);
  const bool has_basis = spec.contains(basis_key);
  if (has_sel && has_basis)
    fail(Errc::ParseError, where + ": give either " + sel_key + " or " + basis_key + ", not both");
  if (has_basis) {
    // Listed vectors become the columns of the basis.
    const Matrix rows = parse_matrix(spec[basis_key], where + ": " + basis_key);
    return Matrix(rows.transpose());
  }
  if (!has_sel) return BlockSelection{};
  const Json& s = spec[sel_key];
  if (s.is_string()) {
    const std::string v = s.get<std::string>();
    if (v == "all") return AllBlocks{};
    if (v == "none") return BlockSelection{};
    fail(Errc::ParseError, where + ": " + sel_key + " must be \"all\", \"none\" or a list");
  }
  if (!s.is_array()) fail(Errc::ParseError, where + ": " + sel_key + " must be a list of indices");
  BlockSelection out;
  for (const auto& e : s) {
    if (!e.is_number_unsigned())
      fail(Errc::ParseError, where + ": " + sel_key + " entries must be non-negative integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

}  // namespace detail

inline std::vector<SpecEntry> parse_specs(const std::string& text,
                                          const std::string& origin = "specs") {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  const Json j = parse_json(text, origin);
  const Json* list = &j;
  if (j.is_object()) {
    if (!j.contains("specs") || j.size() != 1)
      fail(Errc::ParseError, origin + ": expected a list or an object with only \"specs\"");
    list = &j["specs"];
  }
  if (!list->is_array()) fail(Errc::ParseError, origin + ": specs must be a list");

  std::vector<SpecEntry> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const Json& s = (*list)[i];
    const std::string where = origin + ": spec " + std::to_string(i);
    if (!s.is_object()) fail(Errc::ParseError, where + " must be an object");
    for (auto it = s.begin(); it != s.end(); ++it) {
      const std::string& k = it.key();
      if (k != "gamma_select" && k != "gamma_basis" && k != "a_select" && k != "a_basis" &&
          k != "theta_grid")
        fail(Errc::ParseError, where + ": unknown key \"" + k + "\"");
    }
    SpecEntry e;
    e.gamma = detail::parse_part(s, "gamma", where);
    e.a = detail::parse_part(s, "a", where);
    if (s.contains("theta_grid")) {
      if (!s["theta_grid"].is_number_unsigned() || s["theta_grid"].get<std::size_t>() == 0)
        fail(Errc::ParseError, where + ": theta_grid must be a positive integer");
      e.theta_grid = s["theta_grid"].get<std::size_t>();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<SpecEntry> read_specs(const std::string& path) {
  return parse_specs(read_file(path), path);
}

/// Turns file entries into subspace specs for a given conjugate phase
/// function, expanding theta grids.
inline std::vector<SubspaceSpec> resolve_specs(const ConjugatePhase& cp,
                                               const std::vector<SpecEntry>& entries,
                                               const ToleranceConfig& tol = {}) {
  auto resolve = [](const Matrix& block, const PartEntry& part) -> PartSpec {
    if (std::holds_alternative<AllBlocks>(part)) {
      BlockSelection all(spectral_blocks(block).size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      return all;
    }
    if (const auto* sel = std::get_if<BlockSelection>(&part)) return *sel;
    return std::get<Matrix>(part);
  };
  std::vector<SubspaceSpec> out;
  for (const SpecEntry& e : entries) {
    SubspaceSpec spec{resolve(cp.gamma, e.gamma), resolve(cp.a_inv_t, e.a)};
    if (e.theta_grid) {
      for (SubspaceSpec& s : sample_continuum(cp, spec, *e.theta_grid, tol))
        out.push_back(std::move(s));
    } else {
      out.push_back(std::move(spec));
    }
  }
  return out;
}

}  // namespace specfact::io

#endif  // SPECFACT_IO_HPP

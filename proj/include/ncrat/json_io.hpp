#pragma once

// JSON readers and writers for the library's data types. Complex numbers
// are [re, im] pairs; readers also accept bare real numbers.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncrat/domainrep.hpp"
#include "ncrat/extension.hpp"
#include "ncrat/gnsbasis.hpp"
#include "ncrat/numkernel.hpp"
#include "ncrat/pencil.hpp"
#include "ncrat/psatz.hpp"
#include "ncrat/realization.hpp"
#include "ncrat/sdpcore.hpp"

namespace ncrat::json_io {

using json = nlohmann::ordered_json;

class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Scalars, vectors, matrices

inline json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw FormatError("expected a number or [re, im], got " + j.dump());
}

inline json to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline json to_json(const RVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// Reads [[entry, ...], ...]; `cols_hint` gives the width of an empty row list.
inline CMatrix matrix_from(const json& j, Eigen::Index cols_hint = 0) {
  if (!j.is_array()) throw FormatError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_hint;
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError("matrix rows must have equal length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = complex_from(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

inline CVector vector_from(const json& j) {
  if (!j.is_array()) throw FormatError("vector must be an array");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from(j[i]);
  return v;
}

// ---------------------------------------------------------------------------
// MatrixTuple: {"d","rows","cols","hermitian","matrices"}

inline json to_json(const MatrixTuple& x) {
  json out;
  out["d"] = x.d();
  out["rows"] = x.rows;
  out["cols"] = x.cols;
  MatrixTuple copy = x;
  copy.refresh_flags();
  out["hermitian"] = copy.hermitian;
  json mats = json::array();
  for (const auto& m : x.mats) mats.push_back(to_json(m));
  out["matrices"] = std::move(mats);
  return out;
}

inline MatrixTuple tuple_from(const json& j) {
  if (!j.is_object() || !j.contains("matrices")) throw FormatError("tuple needs a \"matrices\" field");
  const json& mats = j["matrices"];
  const Eigen::Index cols_hint = j.value("cols", 0);
  std::vector<CMatrix> ms;
  for (const auto& m : mats) ms.push_back(matrix_from(m, cols_hint));
  Eigen::Index rows = j.value("rows", ms.empty() ? 0 : ms[0].rows());
  Eigen::Index cols = j.value("cols", ms.empty() ? 0 : ms[0].cols());
  if (j.contains("d") && j["d"].get<int>() != static_cast<int>(ms.size())) {
    throw FormatError("tuple: d does not match the number of matrices");
  }
  MatrixTuple x(rows, cols, std::move(ms));
  x.refresh_flags();
  if (j.value("hermitian", false) && !x.hermitian) throw FormatError("tuple marked hermitian is not hermitian");
  return x;
}

// ---------------------------------------------------------------------------
// Pencils and realizations

inline json to_json(const Realization& r) {
  json out;
  out["e"] = r.size();
  out["u"] = to_json(r.u);
  out["v"] = to_json(r.v);
  json ms = json::array();
  for (const auto& m : r.pencil.coeffs) ms.push_back(to_json(m));
  out["M"] = std::move(ms);
  return out;
}

inline AffinePencil affine_from(const json& j) {
  if (!j.contains("M")) throw FormatError("pencil needs \"M\": [M0, M1, ..., Md]");
  std::vector<CMatrix> ms;
  for (const auto& m : j["M"]) ms.push_back(matrix_from(m));
  return AffinePencil(std::move(ms));
}

/// {"e","u","v","M"}: a linear representation u^* M^{-1} v.
inline LinearRep linear_rep_from(const json& j) {
  LinearRep rep;
  rep.pencil = affine_from(j);
  rep.u = vector_from(j.at("u"));
  rep.v = vector_from(j.at("v"));
  if (rep.u.size() != rep.pencil.size() || rep.v.size() != rep.pencil.size()) {
    throw FormatError("linear representation: u and v must have length e");
  }
  return rep;
}

inline HomogeneousPencil homogeneous_from(const json& j) {
  if (!j.contains("Lambda")) throw FormatError("pencil needs \"Lambda\": [Lambda1, ..., Lambdad]");
  std::vector<CMatrix> ms;
  for (const auto& m : j["Lambda"]) ms.push_back(matrix_from(m));
  return HomogeneousPencil(std::move(ms));
}

inline json to_json(const FullnessReport& r) {
  json out;
  out["verdict"] = to_string(r.verdict);
  out["trials_used"] = r.trials_used;
  json sizes = json::array();
  for (auto n : r.sizes_probed) sizes.push_back(n);
  out["sizes_probed"] = std::move(sizes);
  out["witness_sigma_min"] = r.witness_sigma_min;
  out["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
  return out;
}

/// {"e": size, "H": [H1, ..., Hd]}; a missing file means L = 1.
inline MonicHermitianPencil lmi_from(const json& j) {
  MonicHermitianPencil l;
  if (!j.contains("H")) throw FormatError("LMI needs \"H\": [H1, ..., Hd]");
  for (const auto& m : j["H"]) l.h.push_back(matrix_from(m));
  l.e = j.value("e", l.h.empty() ? Eigen::Index{1} : l.h[0].rows());
  l.validate();
  return l;
}

// ---------------------------------------------------------------------------
// Extensions

inline json to_json(const SideExtension& s) {
  json out;
  out["n"] = s.n;
  out["bound_used"] = s.bound_used;
  out["sigma_min"] = s.sigma_min;
  out["sigma_max"] = s.sigma_max;
  out["x_hat"] = to_json(s.x_hat);
  out["x_check"] = to_json(s.x_check);
  return out;
}

inline json to_json(const SquareExtension& s) {
  json out;
  out["mode"] = s.mode == SquareMode::blocks ? "blocks" : "sampling";
  out["n"] = s.n;
  out["bound_used"] = s.bound_used;
  out["sigma_min"] = s.sigma_min;
  out["sigma_max"] = s.sigma_max;
  out["z"] = to_json(s.z);
  return out;
}

inline json to_json(const HermitianExtension& s) {
  json out;
  out["n"] = s.n;
  out["bound_used"] = s.bound_used;
  out["sigma_min"] = s.sigma_min;
  out["sigma_max"] = s.sigma_max;
  out["E"] = to_json(s.e);
  out["z0_prime"] = to_json(s.z0_prime);
  out["z"] = to_json(s.z);
  out["x_tilde"] = to_json(s.x_tilde);
  return out;
}

inline json to_json(const NonHermitianExtension& s) {
  json out;
  out["n"] = s.n;
  out["sigma_min"] = s.sigma_min;
  out["sigma_max"] = s.sigma_max;
  out["x_tilde"] = to_json(s.x_tilde);
  return out;
}

// ---------------------------------------------------------------------------
// Expressions, bases, certificates, SDPs

inline json to_json(const ExprMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols; ++k) row.push_back(print(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json expr_list(const std::vector<Expr>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(print(e));
  return out;
}

inline json to_json(const FunctionBasis& b) {
  json out;
  out["level"] = b.level;
  out["dimension"] = b.dim();
  out["candidates"] = b.candidates;
  out["R"] = expr_list(b.rset.elements);
  out["basis"] = expr_list(b.exprs);
  json sizes = json::array(), weights = json::array();
  for (std::size_t k = 0; k < b.ip.samples.size(); ++k) {
    sizes.push_back(b.ip.samples[k].rows);
    weights.push_back(b.ip.weights[k]);
  }
  out["sample_sizes"] = std::move(sizes);
  out["weights"] = std::move(weights);
  out["gram"] = to_json(b.gram);
  return out;
}

inline json to_json(const QMCertificate& c) {
  json out;
  out["certified"] = c.certified;
  if (!c.reason.empty()) out["reason"] = c.reason;
  out["level"] = c.level;
  out["theoretical_level"] = c.theoretical_level;
  out["basis"] = expr_list(c.basis);
  out["H"] = to_json(c.h);
  if (c.g.size() > 0) out["G"] = to_json(c.g);
  out["squares"] = expr_list(c.squares);
  json vecs = json::array();
  for (const auto& v : c.vectors) vecs.push_back(expr_list(v));
  out["vectors"] = std::move(vecs);
  out["lambda_min"] = c.lambda_min;
  out["rank_H"] = c.rank_h;
  out["caratheodory_bound"] = c.caratheodory_bound;
  out["residual"] = c.residual;
  out["holdout_samples"] = c.holdout;
  out["constraint_rank"] = c.constraint_rank;
  out["sample_count"] = c.sample_count;
  out["sdp_status"] = to_string(c.sdp_status);
  out["sdp_gap"] = c.gap;
  out["sdp_iterations"] = c.sdp_iterations;
  return out;
}

inline json to_json(const OptResult& r) {
  json out;
  out["mu"] = r.mu;
  out["status"] = to_string(r.status);
  out["level"] = r.level;
  out["gap"] = r.gap;
  if (!r.diagnostics.empty()) out["diagnostics"] = r.diagnostics;
  out["certificate"] = to_json(r.certificate);
  return out;
}

inline json to_json(const SDPProblem& p) {
  json out;
  json dims = json::array();
  for (auto n : p.block_dims) dims.push_back(n);
  out["block_dims"] = std::move(dims);
  out["num_free"] = p.num_free;
  json obj = json::array();
  for (const auto& c : p.objective) obj.push_back(to_json(c));
  out["objective"] = std::move(obj);
  out["objective_free"] = to_json(p.objective_free);
  json cons = json::array();
  for (const auto& c : p.constraints) {
    json cj;
    json blocks = json::array();
    for (const auto& b : c.blocks) blocks.push_back(to_json(b));
    cj["blocks"] = std::move(blocks);
    cj["free"] = to_json(c.free);
    cj["rhs"] = c.rhs;
    cons.push_back(std::move(cj));
  }
  out["constraints"] = std::move(cons);
  return out;
}

inline json to_json(const SDPSolution& s) {
  json out;
  out["status"] = to_string(s.status);
  out["primal_objective"] = s.primal_objective;
  out["dual_objective"] = s.dual_objective;
  out["gap"] = s.gap;
  out["primal_infeasibility"] = s.primal_infeasibility;
  out["dual_infeasibility"] = s.dual_infeasibility;
  out["iterations"] = s.iterations;
  json blocks = json::array();
  for (const auto& b : s.blocks) blocks.push_back(to_json(b));
  out["blocks"] = std::move(blocks);
  out["free"] = to_json(s.free);
  out["dual"] = to_json(s.dual);
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline json read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace ncrat::json_io

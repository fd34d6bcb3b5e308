// ncrat: command-line front end. Machine output is JSON on stdout; human
// reports go to stderr or --report.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ncrat/domainrep.hpp"
#include "ncrat/extension.hpp"
#include "ncrat/gnsbasis.hpp"
#include "ncrat/json_io.hpp"
#include "ncrat/pencil.hpp"
#include "ncrat/psatz.hpp"
#include "ncrat/realization.hpp"
#include "ncrat/sdpcore.hpp"

namespace {

using namespace ncrat;
using json_io::json;

enum Exit { kOk = 0, kNegative = 1, kUsage = 2, kNumeric = 3 };

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::uint64_t seed = 0;
  double tol = kDefaultRankTol;
  double sdp_tol = 1e-9;
  double residual_tol = 1e-6;
  int level = 1;
  int trials = 8;
  int samples = 2;
  int vars = 0;
  bool real_symmetric = false;
  bool complex_vars = false;
  std::string report_path;
};

class Report {
 public:
  explicit Report(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open report file " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cerr; }

 private:
  std::ofstream file_;
};

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

/// Inline text or @file.
std::string expression_text(const std::string& arg) {
  return !arg.empty() && arg[0] == '@' ? read_text(arg.substr(1)) : arg;
}

int infer_vars(const std::string& text) {
  static const std::regex var("x([0-9]+)");
  int d = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), var); it != std::sregex_iterator(); ++it) {
    d = std::max(d, std::stoi((*it)[1].str()));
  }
  return d;
}

Expr parse_arg(const std::string& arg, const Common& c) {
  const std::string text = expression_text(arg);
  ParseOptions po;
  po.complex_variables = c.complex_vars;
  return parse(text, c.vars > 0 ? c.vars : std::max(1, infer_vars(text)), po);
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

SampleMode sample_mode(const Common& c) {
  return c.real_symmetric ? SampleMode::real_symmetric : SampleMode::hermitian;
}

PsatzOptions psatz_options(const Common& c) {
  PsatzOptions opt;
  opt.level = c.level;
  opt.seed = c.seed;
  opt.rank_tol = c.tol;
  opt.basis.rank_tol = c.tol;
  opt.sdp.tol = c.sdp_tol;
  opt.residual_tol = c.residual_tol;
  opt.samples_per_size = c.samples;
  return opt;
}

MonicHermitianPencil lmi_arg(const std::string& path) {
  return path.empty() ? MonicHermitianPencil::global() : json_io::lmi_from(json_io::read_file(path));
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_eval(const Common& c, const std::string& expr, const std::string& at, const std::string& scalars) {
  const Expr r = parse_arg(expr, c);
  MatrixTuple x;
  if (!at.empty()) {
    x = json_io::tuple_from(json_io::read_file(at));
  } else if (!scalars.empty()) {
    std::vector<CMatrix> ms;
    std::stringstream ss(scalars);
    std::string tok;
    while (std::getline(ss, tok, ',')) ms.push_back(CMatrix::Constant(1, 1, std::stod(tok)));
    x = MatrixTuple(1, 1, std::move(ms));
  } else {
    throw UsageError("eval needs --at TUPLE.json or --scalars a,b,...");
  }
  Report rep(c.report_path);
  json out;
  out["expr"] = print(r);
  out["n"] = x.rows;
  try {
    const CMatrix v = eval_expr(r, x);
    out["defined"] = true;
    out["value"] = json_io::to_json(v);
    emit(out);
    rep.out() << "evaluated " << print(r) << " at a " << x.rows << "x" << x.rows << " tuple\n";
    return kOk;
  } catch (const DomainError& e) {
    out["defined"] = false;
    out["error"] = "domain";
    out["subexpression"] = e.subexpression();
    out["sigma_min"] = e.sigma_min();
    emit(out);
    rep.out() << e.what() << '\n';
    return kNumeric;
  }
}

int cmd_realize(const Common& c, const std::string& expr) {
  const Expr r = parse_arg(expr, c);
  const Realization real = build_realization(r);
  json out = json_io::to_json(real);
  out["expr"] = print(r);
  out["size"] = real.size();
  out["expression_nodes"] = dag_size(r);
  emit(out);
  Report rep(c.report_path);
  rep.out() << "realization of size " << real.size() << " for " << print(r) << '\n';
  return kOk;
}

int cmd_full(const Common& c, const std::string& path) {
  const json j = json_io::read_file(path);
  FullnessReport fr;
  if (j.contains("Lambda")) {
    fr = is_full(json_io::homogeneous_from(j), c.trials, c.seed, c.tol);
  } else {
    fr = is_full(json_io::affine_from(j), c.trials, c.seed, c.tol);
  }
  emit(json_io::to_json(fr));
  Report rep(c.report_path);
  rep.out() << "fullness verdict: " << to_string(fr.verdict) << '\n';
  return kOk;
}

int cmd_extend(const Common& c, const std::string& kind, const std::string& path, const std::string& mode) {
  const json j = json_io::read_file(path);
  ExtensionOptions eo;
  eo.tol = c.tol;
  eo.fullness_trials = c.trials;
  Report rep(c.report_path);
  json out;
  out["kind"] = kind;
  auto expr_field = [&]() {
    if (!j.contains("expr")) throw UsageError("extension input needs \"expr\"");
    return parse_arg(j["expr"].get<std::string>(), c);
  };
  if (kind == "side") {
    const SideExtension s = extend_side(json_io::homogeneous_from(j), json_io::tuple_from(j.at("X")), c.seed, eo);
    out["result"] = json_io::to_json(s);
    rep.out() << "side completion with n = " << s.n << ", sigma_min = " << s.sigma_min << '\n';
  } else if (kind == "square") {
    const SquareMode m = mode == "blocks" ? SquareMode::blocks : SquareMode::sampling;
    const SquareExtension s =
        extend_square(json_io::homogeneous_from(j), json_io::tuple_from(j.at("Y")), json_io::tuple_from(j.at("Yp")),
                      json_io::tuple_from(j.at("Ypp")), m, c.seed, eo);
    out["result"] = json_io::to_json(s);
    rep.out() << "square completion (" << mode << ") with n = " << s.n << ", sigma_min = " << s.sigma_min << '\n';
  } else if (kind == "hermitian") {
    const HermitianExtension s =
        extend_hermitian(expr_field(), json_io::tuple_from(j.at("X")), json_io::tuple_from(j.at("Y")), c.seed, eo);
    out["result"] = json_io::to_json(s);
    rep.out() << "hermitian extension with n = " << s.n << ", sigma_min = " << s.sigma_min << '\n';
  } else if (kind == "nonhermitian") {
    const NonHermitianExtension s = extend_nonhermitian(expr_field(), json_io::tuple_from(j.at("X")), c.seed, eo);
    out["result"] = json_io::to_json(s);
    rep.out() << "domain completion with n = " << s.n << ", sigma_min = " << s.sigma_min << '\n';
  } else {
    throw UsageError("extend: unknown kind " + kind);
  }
  emit(out);
  return kOk;
}

int cmd_widen(const Common& c, const std::string& expr, const std::string& pencil_path, int witness_samples) {
  const Expr r = parse_arg(expr, c);
  std::optional<LinearRep> over;
  if (!pencil_path.empty()) over = json_io::linear_rep_from(json_io::read_file(pencil_path));
  const WidenResult w = widen_hdom(r, over, c.seed);
  const int d = std::max({r.max_variable(), w.expr.max_variable(), 1});
  // Gain witnesses: points where r is undefined and the widened form is not.
  // Scalar tuples over {-1, 0, 1} first (singular sets often pass through
  // them), then random hermitian tuples.
  json gains = json::array();
  auto try_point = [&](const MatrixTuple& x) {
    if (eval_defined(r, x)) return;
    try {
      const CMatrix v = eval_expr(w.expr, x);
      json g;
      g["point"] = json_io::to_json(x);
      g["value"] = json_io::to_json(v);
      gains.push_back(std::move(g));
    } catch (const DomainError&) {
    }
  };
  if (d <= 6) {
    long total = 1;
    for (int j = 0; j < d; ++j) total *= 3;
    for (long code = 0; code < total && gains.size() < 8; ++code) {
      std::vector<CMatrix> ms;
      long k = code;
      for (int j = 0; j < d; ++j, k /= 3) ms.push_back(CMatrix::Constant(1, 1, static_cast<double>(k % 3) - 1.0));
      try_point(MatrixTuple(1, 1, std::move(ms)));
    }
  }
  for (int k = 0; k < witness_samples && gains.size() < 8; ++k) {
    try_point(random_tuple(d, 1 + k % 3, 1 + k % 3, sample_mode(c), derive_seed(c.seed, 500 + k)));
  }
  json out;
  out["expr"] = print(w.expr);
  out["original"] = print(r);
  out["pencil_size"] = w.pencil_size;
  out["dag_nodes"] = w.dag_nodes;
  out["gain_witnesses"] = std::move(gains);
  emit(out);
  Report rep(c.report_path);
  rep.out() << "widened representative with " << w.dag_nodes << " distinct nodes, "
            << out["gain_witnesses"].size() << " gain witness(es)\n";
  return kOk;
}

int cmd_basis(const Common& c, const std::string& expr) {
  const Expr r = parse_arg(expr, c);
  BasisOptions bo;
  bo.rank_tol = c.tol;
  bo.samples_per_size = c.samples;
  const FunctionBasis b = build_basis(build_R(r, c.vars > 0 ? c.vars : -1), c.level, c.seed, bo);
  emit(json_io::to_json(b));
  Report rep(c.report_path);
  rep.out() << "V_" << c.level << " has dimension " << b.dim() << " (" << b.candidates << " words)\n";
  return kOk;
}

void report_certificate(std::ostream& os, const QMCertificate& cert) {
  os << "level " << cert.level << " (theoretical completeness level " << cert.theoretical_level << ")\n";
  os << "basis dimension " << cert.basis.size() << ", constraint rank " << cert.constraint_rank << ", "
     << cert.sample_count << " samples\n";
  if (!cert.squares.empty() || !cert.vectors.empty()) {
    os << cert.squares.size() << " square(s):\n";
    for (const auto& s : cert.squares) os << "  s = " << print(s) << '\n';
    for (const auto& v : cert.vectors) {
      os << "  v = [";
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << print(v[i]);
      os << "]\n";
    }
  }
  os << "held-out residual " << cert.residual << " over " << cert.holdout << " samples\n";
}

int cmd_certify(const Common& c, const std::string& expr, const std::string& lmi, int budget) {
  const Expr r = parse_arg(expr, c);
  const MonicHermitianPencil l = lmi_arg(lmi);
  const QMCertificate cert = certify_qm(r, l, psatz_options(c));
  Report rep(c.report_path);
  json out;
  out["expr"] = print(r);
  out["certified"] = cert.certified;
  out["certificate"] = json_io::to_json(cert);
  if (cert.certified) {
    emit(out);
    rep.out() << "certified: " << cert.squares.size() << " square(s)";
    if (!cert.vectors.empty()) rep.out() << " and " << cert.vectors.size() << " localizing term(s)";
    rep.out() << '\n';
    report_certificate(rep.out(), cert);
    return kOk;
  }
  ViolationBudget vb;
  vb.max_size = budget;
  const auto w = find_violation(r, l, vb, c.seed);
  if (w) {
    out["violation"] = json{{"min_eigenvalue", w->min_eigenvalue}, {"point", json_io::to_json(w->x)}};
  } else {
    out["violation"] = nullptr;
  }
  emit(out);
  rep.out() << "not certified at level " << c.level << ": " << cert.reason << '\n';
  if (w) rep.out() << "violation found at size " << w->x.rows << ", min eigenvalue " << w->min_eigenvalue << '\n';
  return kNegative;
}

int cmd_optimize(const Common& c, const std::string& expr, const std::string& lmi, bool inf) {
  const Expr r = parse_arg(expr, c);
  const MonicHermitianPencil l = lmi_arg(lmi);
  Report rep(c.report_path);
  json out;
  out["expr"] = print(r);
  out["direction"] = inf ? "inf" : "sup";
  try {
    const OptResult res = optimize_eig(r, l, inf ? OptDirection::inf : OptDirection::sup, psatz_options(c));
    const json rj = json_io::to_json(res);
    for (auto it = rj.begin(); it != rj.end(); ++it) out[it.key()] = it.value();
    emit(out);
    if (res.status == OptStatus::optimal) {
      rep.out() << "μ=" << fixed6(res.mu) << '\n';
      rep.out() << "SDP gap " << res.gap << '\n';
      report_certificate(rep.out(), res.certificate);
      return kOk;
    }
    rep.out() << to_string(res.status) << ": " << res.diagnostics << '\n';
    return res.status == OptStatus::infeasible_at_level ? kNegative : kNumeric;
  } catch (const UnboundedError& e) {
    out["status"] = "unbounded-at-level";
    out["level"] = c.level;
    emit(out);
    rep.out() << e.what() << '\n';
    return kNegative;
  }
}

int cmd_export(const Common& c, const std::string& expr, const std::string& lmi, const std::string& task,
               const std::string& path) {
  const Expr r = parse_arg(expr, c);
  QMTask t = QMTask::certify;
  if (task == "sup") t = QMTask::sup;
  else if (task == "inf") t = QMTask::inf;
  else if (task != "certify") throw UsageError("export-sdpa: --task must be certify, sup or inf");
  const SDPProblem p = qm_sdp(r, lmi_arg(lmi), t, psatz_options(c));
  export_sdpa(p, path);
  json out;
  out["path"] = path;
  out["task"] = task;
  json dims = json::array();
  for (auto n : p.block_dims) dims.push_back(n);
  out["complex_blocks"] = std::move(dims);
  out["free"] = p.num_free;
  out["constraints"] = p.constraints.size();
  emit(out);
  Report rep(c.report_path);
  rep.out() << "wrote " << path << " (" << p.constraints.size() << " constraints)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncrat: noncommutative rational functions, realizations, extensions and positivity certificates"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "random seed")->envname("NCRAT_SEED")->capture_default_str();
    sub->add_option("--tol", c.tol, "rank / singularity tolerance (relative)")->envname("NCRAT_TOL")
        ->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--sdp-tol", c.sdp_tol, "SDP gap and feasibility target")->envname("NCRAT_SDP_TOL")
        ->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--residual-tol", c.residual_tol, "held-out certificate residual tolerance")
        ->envname("NCRAT_RESIDUAL_TOL")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--level", c.level, "level l of the basis V_l")->envname("NCRAT_LEVEL")
        ->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--trials", c.trials, "trial budget for randomized searches")->envname("NCRAT_TRIALS")
        ->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--samples", c.samples, "samples per size")->envname("NCRAT_SAMPLES")
        ->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("-d,--vars", c.vars, "number of variables (default: largest index used)")
        ->envname("NCRAT_VARS")->capture_default_str();
    sub->add_flag("--real-symmetric", c.real_symmetric, "sample real symmetric instead of hermitian tuples")
        ->envname("NCRAT_REAL_SYMMETRIC");
    sub->add_flag("--complex-vars", c.complex_vars, "read x_j as non-hermitian (x_j = a_j + i b_j)")
        ->envname("NCRAT_COMPLEX_VARS");
    sub->add_option("--report", c.report_path, "write the human-readable report here instead of stderr")
        ->envname("NCRAT_REPORT");
  };

  std::string expr, at, scalars, path, lmi, kind, mode = "sampling", task = "certify", out_path;
  int witness_samples = 200, budget = 4;
  bool sup = false, inf = false;
  std::function<int()> action;

  auto* eval = app.add_subcommand("eval", "evaluate an expression at a tuple");
  eval->add_option("expr", expr, "expression or @file")->required();
  eval->add_option("--at", at, "tuple JSON file");
  eval->add_option("--scalars", scalars, "comma-separated 1x1 tuple, e.g. 0,1,1,1");
  add_common(eval);
  eval->callback([&] { action = [&] { return cmd_eval(c, expr, at, scalars); }; });

  auto* realize = app.add_subcommand("realize", "build a realization u^* M^{-1} v");
  realize->add_option("expr", expr, "expression or @file")->required();
  add_common(realize);
  realize->callback([&] { action = [&] { return cmd_realize(c, expr); }; });

  auto* full = app.add_subcommand("full", "probabilistic fullness test of a pencil");
  full->add_option("pencil", path, "pencil JSON ({\"Lambda\": [...]} or {\"M\": [...]})")->required();
  add_common(full);
  full->callback([&] { action = [&] { return cmd_full(c, path); }; });

  auto* extend = app.add_subcommand("extend", "extension of matrix tuples");
  extend->add_option("kind", kind, "side | square | hermitian | nonhermitian")
      ->required()->check(CLI::IsMember({"side", "square", "hermitian", "nonhermitian"}));
  extend->add_option("input", path, "input JSON")->required();
  extend->add_option("--mode", mode, "square completion mode")
      ->check(CLI::IsMember({"blocks", "sampling"}))->capture_default_str();
  add_common(extend);
  extend->callback([&] { action = [&] { return cmd_extend(c, kind, path, mode); }; });

  auto* widen = app.add_subcommand("widen", "representative with a larger hermitian domain");
  widen->add_option("expr", expr, "expression or @file")->required();
  widen->add_option("--pencil", path, "linear representation JSON {\"u\",\"v\",\"M\"}");
  widen->add_option("--witness-samples", witness_samples, "random points tried for gain witnesses")
      ->capture_default_str();
  add_common(widen);
  widen->callback([&] { action = [&] { return cmd_widen(c, expr, path, witness_samples); }; });

  auto* basis = app.add_subcommand("basis", "numeric basis of V_l");
  basis->add_option("expr", expr, "expression or @file")->required();
  add_common(basis);
  basis->callback([&] { action = [&] { return cmd_basis(c, expr); }; });

  auto* certify = app.add_subcommand("certify", "quadratic module certificate at level l");
  certify->add_option("expr", expr, "expression or @file")->required();
  certify->add_option("--lmi", lmi, "monic pencil JSON {\"e\", \"H\": [...]} (default L = 1)");
  certify->add_option("--witness-budget", budget, "largest size for the violation search")->capture_default_str();
  add_common(certify);
  certify->callback([&] { action = [&] { return cmd_certify(c, expr, lmi, budget); }; });

  auto* optimize = app.add_subcommand("optimize", "eigenvalue supremum / infimum at level l");
  optimize->add_option("expr", expr, "expression or @file")->required();
  optimize->add_option("--lmi", lmi, "monic pencil JSON (default L = 1)");
  auto* fsup = optimize->add_flag("--sup", sup, "maximal eigenvalue (default)");
  optimize->add_flag("--inf", inf, "minimal eigenvalue")->excludes(fsup);
  add_common(optimize);
  optimize->callback([&] { action = [&] { return cmd_optimize(c, expr, lmi, inf); }; });

  auto* exp = app.add_subcommand("export-sdpa", "write the level-l SDP in SDPA sparse format");
  exp->add_option("expr", expr, "expression or @file")->required();
  exp->add_option("--lmi", lmi, "monic pencil JSON (default L = 1)");
  exp->add_option("--task", task, "certify | sup | inf")->capture_default_str();
  exp->add_option("-o,--out", out_path, "output .dat-s path")->required();
  add_common(exp);
  exp->callback([&] { action = [&] { return cmd_export(c, expr, lmi, task, out_path); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return action ? action() : kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json_io::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << '\n';
    return kUsage;
  } catch (const HypothesisError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NotHermitianError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NotInvertibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
}

#pragma once

#include "opsplit/product_space.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace opsplit {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Vector / matrix encoding: vectors as arrays, matrices as row-major nested
// arrays. Numbers use the library's shortest round-trip decimal form.

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at '" + path + "': " + what);
}

inline const Json& require_field(const Json& j, const std::string& name,
                                 const std::string& path) {
  if (!j.is_object()) config_fail(path, "expected an object");
  auto it = j.find(name);
  if (it == j.end()) config_fail(path + "." + name, "missing required field");
  return *it;
}

inline double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

inline long as_long(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) config_fail(path, "expected an integer");
  return j.get<long>();
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) config_fail(path, "expected a string");
  return j.get<std::string>();
}

inline Vector vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) config_fail(path, "expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = as_double(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) config_fail(path, "expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  Matrix m;
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) config_fail(path + "[" + std::to_string(i) + "]", "expected a row array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols) {
      config_fail(path + "[" + std::to_string(i) + "]", "ragged matrix rows");
    }
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = as_double(row[static_cast<std::size_t>(k)],
                          path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
  }
  if (rows == 0) m.resize(0, 0);
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ConvexSet <-> JSON ("kind" tag + variant fields).

Json to_json(const ConvexSet& set);

namespace detail {

struct SetToJson {
  Json operator()(const OrthantSet& s) const {
    Json signs = Json::array();
    for (Index i = 0; i < s.signs.size(); ++i) signs.push_back(s.signs[i]);
    return Json{{"kind", "orthant"}, {"signs", signs}};
  }
  Json operator()(const BoxSet& s) const {
    return Json{{"kind", "box"}, {"lo", to_json(s.lo)}, {"hi", to_json(s.hi)}};
  }
  Json operator()(const AffineSubspaceSet& s) const {
    return Json{{"kind", "affine_subspace"},
                {"offset", to_json(s.offset)},
                {"span", to_json(s.basis)}};
  }
  Json operator()(const HalfspaceSet& s) const {
    return Json{{"kind", "halfspace"}, {"normal", to_json(s.normal)}, {"rhs", s.rhs}};
  }
  Json operator()(const BallSet& s) const {
    return Json{{"kind", "ball"}, {"center", to_json(s.center)}, {"radius", s.radius}};
  }
  Json operator()(const HyperbolaEpigraphSet&) const {
    return Json{{"kind", "hyperbola_epigraph"}};
  }
  Json operator()(const DiagonalSet& s) const {
    return Json{{"kind", "diagonal"}, {"blocks", s.blocks}, {"block_dim", s.block_dim}};
  }
  Json operator()(const TranslateSet& s) const {
    return Json{{"kind", "translate"}, {"shift", to_json(s.shift)}, {"inner", to_json(s.inner)}};
  }
  Json operator()(const ProductSet& s) const {
    Json parts = Json::array();
    for (const auto& p : s.parts) parts.push_back(to_json(p));
    return Json{{"kind", "product"}, {"parts", parts}};
  }
};

}  // namespace detail

inline Json to_json(const ConvexSet& set) {
  return std::visit(detail::SetToJson{}, set.node());
}

inline ConvexSet set_from_json(const Json& j, const std::string& path = "set") {
  const std::string kind = detail::as_string(detail::require_field(j, "kind", path), path + ".kind");
  try {
    if (kind == "orthant") {
      const Json& signs = detail::require_field(j, "signs", path);
      if (!signs.is_array()) detail::config_fail(path + ".signs", "expected an array");
      Eigen::VectorXi s(static_cast<Index>(signs.size()));
      for (std::size_t i = 0; i < signs.size(); ++i) {
        s[static_cast<Index>(i)] = static_cast<int>(
            detail::as_long(signs[i], path + ".signs[" + std::to_string(i) + "]"));
      }
      return ConvexSet::orthant(std::move(s));
    }
    if (kind == "box") {
      return ConvexSet::box(detail::vector_from_json(detail::require_field(j, "lo", path), path + ".lo"),
                            detail::vector_from_json(detail::require_field(j, "hi", path), path + ".hi"));
    }
    if (kind == "affine_subspace") {
      return ConvexSet::affine_subspace(
          detail::vector_from_json(detail::require_field(j, "offset", path), path + ".offset"),
          detail::matrix_from_json(detail::require_field(j, "span", path), path + ".span"));
    }
    if (kind == "point") {
      return ConvexSet::point(
          detail::vector_from_json(detail::require_field(j, "value", path), path + ".value"));
    }
    if (kind == "full_space") {
      return ConvexSet::full_space(
          detail::as_long(detail::require_field(j, "dim", path), path + ".dim"));
    }
    if (kind == "halfspace") {
      return ConvexSet::halfspace(
          detail::vector_from_json(detail::require_field(j, "normal", path), path + ".normal"),
          detail::as_double(detail::require_field(j, "rhs", path), path + ".rhs"));
    }
    if (kind == "ball") {
      return ConvexSet::ball(
          detail::vector_from_json(detail::require_field(j, "center", path), path + ".center"),
          detail::as_double(detail::require_field(j, "radius", path), path + ".radius"));
    }
    if (kind == "hyperbola_epigraph") return ConvexSet::hyperbola_epigraph();
    if (kind == "diagonal") {
      return ConvexSet::diagonal(
          detail::as_long(detail::require_field(j, "blocks", path), path + ".blocks"),
          detail::as_long(detail::require_field(j, "block_dim", path), path + ".block_dim"));
    }
    if (kind == "translate") {
      ConvexSet inner = set_from_json(detail::require_field(j, "inner", path), path + ".inner");
      return ConvexSet::translate(
          std::move(inner),
          detail::vector_from_json(detail::require_field(j, "shift", path), path + ".shift"));
    }
    if (kind == "product") {
      const Json& parts = detail::require_field(j, "parts", path);
      if (!parts.is_array()) detail::config_fail(path + ".parts", "expected an array");
      std::vector<ConvexSet> sets;
      sets.reserve(parts.size());
      for (std::size_t i = 0; i < parts.size(); ++i) {
        sets.push_back(set_from_json(parts[i], path + ".parts[" + std::to_string(i) + "]"));
      }
      return ConvexSet::product(std::move(sets));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    detail::config_fail(path, e.what());
  }
  detail::config_fail(path + ".kind", "unknown set kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// MonotoneOp <-> JSON.

Json to_json(const MonotoneOp& op);

namespace detail {

struct OpToJson {
  Json operator()(const AffineOpNode& n) const {
    return Json{{"kind", "affine"},
                {"matrix", to_json(n.map.linear().matrix())},
                {"offset", to_json(n.map.offset())}};
  }
  Json operator()(const ConstOpNode& n) const {
    return Json{{"kind", "constant"}, {"value", to_json(n.value)}};
  }
  Json operator()(const NormalConeNode& n) const {
    return Json{{"kind", "normal_cone"}, {"set", to_json(n.set)}};
  }
  Json operator()(const GradHalfDistSqNode& n) const {
    return Json{{"kind", "grad_half_dist_sq"}, {"set", to_json(n.set)}};
  }
  Json operator()(const ScaledNode& n) const {
    return Json{{"kind", "scaled"}, {"alpha", n.alpha}, {"inner", to_json(n.inner)}};
  }
  Json operator()(const InnerShiftNode& n) const {
    return Json{{"kind", "inner_shift"}, {"shift", to_json(n.shift)}, {"inner", to_json(n.inner)}};
  }
  Json operator()(const OuterShiftNode& n) const {
    return Json{{"kind", "outer_shift"}, {"shift", to_json(n.shift)}, {"inner", to_json(n.inner)}};
  }
  Json operator()(const BlockDiagNode& n) const {
    Json parts = Json::array();
    for (const auto& p : n.parts) parts.push_back(to_json(p));
    return Json{{"kind", "block_diag"}, {"parts", parts}};
  }
};

}  // namespace detail

inline Json to_json(const MonotoneOp& op) {
  return std::visit(detail::OpToJson{}, op.node());
}

inline MonotoneOp op_from_json(const Json& j, const std::string& path = "op") {
  const std::string kind = detail::as_string(detail::require_field(j, "kind", path), path + ".kind");
  try {
    if (kind == "affine") {
      return MonotoneOp::affine(
          detail::matrix_from_json(detail::require_field(j, "matrix", path), path + ".matrix"),
          detail::vector_from_json(detail::require_field(j, "offset", path), path + ".offset"));
    }
    if (kind == "constant") {
      return MonotoneOp::constant(
          detail::vector_from_json(detail::require_field(j, "value", path), path + ".value"));
    }
    if (kind == "normal_cone") {
      return MonotoneOp::normal_cone(
          set_from_json(detail::require_field(j, "set", path), path + ".set"));
    }
    if (kind == "grad_half_dist_sq") {
      return MonotoneOp::grad_half_dist_sq(
          set_from_json(detail::require_field(j, "set", path), path + ".set"));
    }
    if (kind == "scaled") {
      return MonotoneOp::scaled(
          detail::as_double(detail::require_field(j, "alpha", path), path + ".alpha"),
          op_from_json(detail::require_field(j, "inner", path), path + ".inner"));
    }
    if (kind == "inner_shift") {
      return MonotoneOp::inner_shift(
          detail::vector_from_json(detail::require_field(j, "shift", path), path + ".shift"),
          op_from_json(detail::require_field(j, "inner", path), path + ".inner"));
    }
    if (kind == "outer_shift") {
      return MonotoneOp::outer_shift(
          detail::vector_from_json(detail::require_field(j, "shift", path), path + ".shift"),
          op_from_json(detail::require_field(j, "inner", path), path + ".inner"));
    }
    if (kind == "block_diag") {
      const Json& parts = detail::require_field(j, "parts", path);
      if (!parts.is_array()) detail::config_fail(path + ".parts", "expected an array");
      std::vector<MonotoneOp> ops;
      ops.reserve(parts.size());
      for (std::size_t i = 0; i < parts.size(); ++i) {
        ops.push_back(op_from_json(parts[i], path + ".parts[" + std::to_string(i) + "]"));
      }
      return MonotoneOp::block_diag(std::move(ops));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    detail::config_fail(path, e.what());
  }
  detail::config_fail(path + ".kind", "unknown operator kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// RunConfig: one problem per file, three mutually exclusive problem forms.

struct PairSpec {
  MonotoneOp a;
  MonotoneOp b;
};

struct ProductSpec {
  std::vector<MonotoneOp> ops;
  std::vector<double> alphas;
};

struct MapSpec {
  ConvexSet u;
  ConvexSet v;
};

struct RunConfig {
  Index dim = 0;
  std::variant<PairSpec, ProductSpec, MapSpec> problem;
  Vector x0;                           // defaults to zeros(dim)
  double tol = 1e-8;
  long max_iter = 100000;
  double divergence_threshold = 1e8;
  std::uint64_t seed = 42;
  std::optional<std::string> out_dir;  // overridable by the CLI flag

  RunConfig() : problem(MapSpec{ConvexSet::full_space(1), ConvexSet::full_space(1)}) {}
};

inline RunConfig config_from_json(const Json& j) {
  RunConfig cfg;
  cfg.dim = detail::as_long(detail::require_field(j, "dim", "config"), "config.dim");
  if (cfg.dim < 1) detail::config_fail("config.dim", "must be >= 1");

  const bool has_pair = j.contains("a") || j.contains("b");
  const bool has_product = j.contains("product");
  const bool has_map = j.contains("map");
  if (has_pair + has_product + has_map != 1) {
    detail::config_fail("config",
                        "exactly one of {a/b, product, map} must describe the problem");
  }
  if (has_pair) {
    cfg.problem = PairSpec{op_from_json(detail::require_field(j, "a", "config"), "config.a"),
                           op_from_json(detail::require_field(j, "b", "config"), "config.b")};
  } else if (has_product) {
    const Json& prod = detail::require_field(j, "product", "config");
    const Json& ops = detail::require_field(prod, "ops", "config.product");
    const Json& alphas = detail::require_field(prod, "alphas", "config.product");
    if (!ops.is_array() || !alphas.is_array()) {
      detail::config_fail("config.product", "ops and alphas must be arrays");
    }
    ProductSpec spec;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      spec.ops.push_back(op_from_json(ops[i], "config.product.ops[" + std::to_string(i) + "]"));
    }
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      spec.alphas.push_back(
          detail::as_double(alphas[i], "config.product.alphas[" + std::to_string(i) + "]"));
    }
    cfg.problem = std::move(spec);
  } else {
    const Json& map = detail::require_field(j, "map", "config");
    cfg.problem = MapSpec{set_from_json(detail::require_field(map, "u", "config.map"), "config.map.u"),
                          set_from_json(detail::require_field(map, "v", "config.map"), "config.map.v")};
  }

  if (j.contains("x0")) {
    cfg.x0 = detail::vector_from_json(j["x0"], "config.x0");
  } else {
    cfg.x0 = Vector::Zero(cfg.dim);
  }
  if (cfg.x0.size() != cfg.dim) {
    detail::config_fail("config.x0", "length " + std::to_string(cfg.x0.size()) +
                                         " does not match dim " + std::to_string(cfg.dim));
  }
  if (j.contains("tol")) cfg.tol = detail::as_double(j["tol"], "config.tol");
  if (j.contains("max_iter")) cfg.max_iter = detail::as_long(j["max_iter"], "config.max_iter");
  if (j.contains("divergence_threshold")) {
    cfg.divergence_threshold =
        detail::as_double(j["divergence_threshold"], "config.divergence_threshold");
  }
  if (j.contains("seed")) {
    cfg.seed = static_cast<std::uint64_t>(detail::as_long(j["seed"], "config.seed"));
  }
  if (j.contains("out_dir")) cfg.out_dir = detail::as_string(j["out_dir"], "config.out_dir");
  if (!(cfg.tol > 0.0)) detail::config_fail("config.tol", "must be > 0");
  if (cfg.max_iter < 1) detail::config_fail("config.max_iter", "must be >= 1");
  if (!(cfg.divergence_threshold > 0.0)) {
    detail::config_fail("config.divergence_threshold", "must be > 0");
  }
  return cfg;
}

inline Json to_json(const RunConfig& cfg) {
  Json j{{"dim", cfg.dim},
         {"x0", to_json(cfg.x0)},
         {"tol", cfg.tol},
         {"max_iter", cfg.max_iter},
         {"divergence_threshold", cfg.divergence_threshold},
         {"seed", cfg.seed}};
  if (cfg.out_dir) j["out_dir"] = *cfg.out_dir;
  if (const auto* pair = std::get_if<PairSpec>(&cfg.problem)) {
    j["a"] = to_json(pair->a);
    j["b"] = to_json(pair->b);
  } else if (const auto* prod = std::get_if<ProductSpec>(&cfg.problem)) {
    Json ops = Json::array();
    for (const auto& op : prod->ops) ops.push_back(to_json(op));
    j["product"] = Json{{"ops", ops}, {"alphas", prod->alphas}};
  } else if (const auto* map = std::get_if<MapSpec>(&cfg.problem)) {
    j["map"] = Json{{"u", to_json(map->u)}, {"v", to_json(map->v)}};
  }
  return j;
}

inline RunConfig load_config_file(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ConfigError("cannot open config file '" + file_path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + file_path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// Feasibility-pair problems become GradHalfDistSq(U) + NormalCone(V), whose
// forward-backward map is exactly P_V after P_U. Pair and product configs map
// to their natural two-operator forms (products are lifted).
struct BuiltProblem {
  SplitProblem problem;
  Vector x0;                 // lifted when the config was a product
  std::size_t blocks = 1;    // product block count (1 otherwise)
};

inline BuiltProblem build_problem(const RunConfig& cfg,
                                  const ToleranceConfig& tol = default_tolerances()) {
  if (const auto* pair = std::get_if<PairSpec>(&cfg.problem)) {
    if (pair->a.dim() != cfg.dim || pair->b.dim() != cfg.dim) {
      detail::config_fail("config", "operator dimensions do not match dim");
    }
    return BuiltProblem{SplitProblem(pair->a, pair->b, true, tol), cfg.x0, 1};
  }
  if (const auto* prod = std::get_if<ProductSpec>(&cfg.problem)) {
    ProductProblem pp(prod->ops, prod->alphas);
    if (pp.block_dim != cfg.dim) {
      detail::config_fail("config.product", "operator dimensions do not match dim");
    }
    return BuiltProblem{build_lifted_problem(pp, true, tol), lift(cfg.x0, pp.count()),
                        pp.count()};
  }
  const auto& map = std::get<MapSpec>(cfg.problem);
  if (map.u.dim() != cfg.dim || map.v.dim() != cfg.dim) {
    detail::config_fail("config.map", "set dimensions do not match dim");
  }
  return BuiltProblem{SplitProblem(MonotoneOp::grad_half_dist_sq(map.u),
                                   MonotoneOp::normal_cone(map.v), true, tol),
                      cfg.x0, 1};
}

// ---------------------------------------------------------------------------
// Report serialization.

inline Json to_json(const IterationTrace& t) {
  return Json{{"stop_reason", to_string(t.stop_reason)},
              {"total_iterations", t.total_iterations},
              {"recorded_points", t.indices.size()},
              {"final_point", to_json(t.final_point())},
              {"final_step_norm", t.final_step_norm}};
}

inline Json to_json(const Solution& s) {
  return Json{{"z", to_json(s.z)},
              {"primal_residual", s.primal_residual},
              {"dual_point", to_json(s.dual_point)},
              {"trace", to_json(s.trace)}};
}

inline Json to_json(const DisplacementEstimate& e) {
  return Json{{"v", to_json(e.v)},
              {"iterations", e.iterations},
              {"last_residual", e.last_residual},
              {"monotone_ok", e.monotone_ok},
              {"stages_run", e.stages_run},
              {"accepted_early", e.accepted_early}};
}

inline Json to_json(const NormalSolveReport& r) {
  return Json{{"status", to_string(r.status)},
              {"v", to_json(r.v)},
              {"z", to_json(r.z)},
              {"residual", r.residual},
              {"used_closed_form", r.used_closed_form},
              {"estimate", to_json(r.estimate)},
              {"trace", to_json(r.trace)}};
}

// ---------------------------------------------------------------------------
// Trace CSV. Header: n,step_norm,displacement_residual,x_0,...,x_{d-1}.
// Every recorded point has a step norm except the final one; the
// displacement_residual column is empty unless the run tracked a candidate v.
// All doubles use fixed 17-significant-digit formatting so identical runs
// produce identical bytes.

inline void write_trace_csv(std::ostream& out, const IterationTrace& t, Index dim) {
  out << "n,step_norm,displacement_residual";
  for (Index k = 0; k < dim; ++k) out << ",x_" << k;
  out << "\n";
  for (std::size_t i = 0; i < t.iterates.size(); ++i) {
    out << t.indices[i] << ",";
    if (i < t.step_norms.size()) out << format_double(t.step_norms[i]);
    out << ",";
    if (i < t.displacement_residuals.size()) out << format_double(t.displacement_residuals[i]);
    for (Index k = 0; k < dim; ++k) out << "," << format_double(t.iterates[i][k]);
    out << "\n";
  }
}

inline void write_trace_csv_file(const std::string& file_path, const IterationTrace& t,
                                 Index dim) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw Error("cannot open trace file '" + file_path + "' for writing");
  write_trace_csv(out, t, dim);
}

inline void write_json_file(const std::string& file_path, const Json& j) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + file_path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace opsplit

#include "qdi/problem_io.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

namespace qdi {

namespace {

struct BuiltinSource {
  const char* name;
  const char* yaml;
};

constexpr BuiltinSource kBuiltinSources[] = {
#include "builtin_problems.inc"
};

// Per-coordinate channels see their psi_i as psi1.
Expression remap_psi(const Expression& e, int from) {
  switch (e.op()) {
    case Op::Const: return e;
    case Op::Var:
      if (e.var().kind == VarKind::Psi && e.var().index == from) return Expression::variable({VarKind::Psi, 0});
      return e;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return Expression::binary(e.op(), remap_psi(e.lhs(), from), remap_psi(e.rhs(), from));
    default: return Expression::unary(e.op(), remap_psi(e.lhs(), from));
  }
}

bool references_other_psi(const Expression& e, int allowed) {
  switch (e.op()) {
    case Op::Const: return false;
    case Op::Var: return e.var().kind == VarKind::Psi && e.var().index != allowed;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return references_other_psi(e.lhs(), allowed) || references_other_psi(e.rhs(), allowed);
    default: return references_other_psi(e.lhs(), allowed);
  }
}

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  ProblemSpec read(const YAML::Node& root) {
    if (!root.IsMap()) throw ModelError("document", "expected a mapping at top level");
    ProblemSpec spec;
    spec.name = scalar_or(root, "name", std::string("unnamed"));
    spec.description = scalar_or(root, "description", std::string());

    const YAML::Node dims = require(root, "dims");
    spec.n = as<int>(require(dims, "n"), "dims.n");
    spec.nu = dims["nu"] ? as<int>(dims["nu"], "dims.nu") : 0;
    if (spec.n < 1) throw ModelError("dims.n", "state dimension must be positive");
    if (spec.nu < 0) throw ModelError("dims.nu", "control dimension must be non-negative");

    spec.horizon = as<double>(require(root, "horizon"), "horizon");

    const YAML::Node x0 = require(root, "x0");
    if (!x0.IsSequence()) throw ModelError("x0", "expected a list");
    if (static_cast<int>(x0.size()) != spec.n)
      throw ModelError("x0", "dimension mismatch: expected " + std::to_string(spec.n) + " entries, got " +
                                 std::to_string(x0.size()));
    spec.x0.resize(spec.n);
    for (int i = 0; i < spec.n; ++i) spec.x0[i] = as<double>(x0[i], "x0");

    if (const YAML::Node terminal = root["terminal"]) {
      if (!terminal.IsSequence()) throw ModelError("terminal", "expected a list of {index, value}");
      for (const auto& item : terminal) {
        const int index = as<int>(require(item, "index", "terminal"), "terminal.index");
        if (index < 1 || index > spec.n)
          throw ModelError("terminal", "dimension mismatch: index " + std::to_string(index) + " outside 1.." +
                                           std::to_string(spec.n));
        spec.terminal.push_back({index - 1, as<double>(require(item, "value", "terminal"), "terminal.value")});
      }
    }

    const Dimensions state_dims{spec.n, spec.nu, false, false};
    if (const YAML::Node surface = root["surface"]) {
      for (const auto& item : sequence(surface, "surface"))
        spec.surface.push_back(function(item, state_dims, spec, "surface"));
    }

    const std::string mode = scalar_or(root, "mode", std::string("per_coordinate"));
    if (mode == "sphere") {
      const Dimensions dims_psi{spec.n, spec.nu, true, false};
      spec.sphere = support(require(root, "support"), SupportMode::Sphere, dims_psi, spec, -1, "support");
      if (root["channels"]) throw ModelError("channels", "not allowed in sphere mode");
    } else if (mode == "per_coordinate") {
      read_channels(require(root, "channels"), spec);
    } else {
      throw ModelError("mode", "expected 'per_coordinate' or 'sphere', got '" + mode + "'");
    }

    if (const YAML::Node cost = root["cost"]) {
      const Dimensions cost_dims{spec.n, spec.nu, false, false};
      spec.cost = terms(require(cost, "max_terms", "cost"), cost_dims, spec, "cost.max_terms");
    }
    if (root["penalty"]) spec.penalty = as<double>(root["penalty"], "penalty");

    if (const YAML::Node init = root["initial"]) {
      const Dimensions time_dims{spec.n, spec.nu, false, true};
      auto guess = [&](const char* key) {
        std::vector<Expression> out;
        if (const YAML::Node list = init[key]) {
          for (const auto& item : sequence(list, std::string("initial.") + key))
            out.push_back(expression(item, time_dims, std::string("initial.") + key));
        }
        return out;
      };
      spec.initial.x = guess("x");
      spec.initial.z = guess("z");
      spec.initial.u = guess("u");
    }

    if (const YAML::Node solver = root["solver"]) read_solver(solver, spec.solver);

    spec.validate();
    return spec;
  }

 private:
  template <typename T>
  T as(const YAML::Node& node, const std::string& field) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      throw ModelError(field, "cannot convert '" + (node.IsScalar() ? node.Scalar() : std::string("<node>")) + "'" +
                                  where(node));
    }
  }

  template <typename T>
  T scalar_or(const YAML::Node& root, const char* key, T fallback) const {
    return root[key] ? as<T>(root[key], key) : fallback;
  }

  YAML::Node require(const YAML::Node& parent, const char* key, const std::string& context = {}) const {
    const YAML::Node node = parent[key];
    if (!node) throw ModelError(context.empty() ? key : context + "." + key, "missing" + where(parent));
    return node;
  }

  YAML::Node sequence(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) throw ModelError(field, "expected a list" + where(node));
    return node;
  }

  std::string where(const YAML::Node& node) const {
    const auto mark = node.Mark();
    if (mark.line < 0) return " (" + origin_ + ")";
    return " (" + origin_ + ":" + std::to_string(mark.line + 1) + ")";
  }

  Expression expression(const YAML::Node& node, const Dimensions& dims, const std::string& field) const {
    const std::string text = as<std::string>(node, field);
    try {
      return parse_expression(text, dims);
    } catch (const ParseError& err) {
      throw ModelError(field, std::string(err.what()) + " in \"" + text + "\"" + where(node));
    }
  }

  SmoothFunction function(const YAML::Node& node, const Dimensions& dims, const ProblemSpec& spec,
                          const std::string& field) const {
    Expression e = expression(node, dims, field);
    return SmoothFunction(std::move(e), spec.n, spec.nu, node.as<std::string>());
  }

  std::vector<SupportModel::Term> terms(const YAML::Node& node, const Dimensions& dims, const ProblemSpec& spec,
                                        const std::string& field, int psi_coordinate = -1) const {
    std::vector<SupportModel::Term> out;
    for (const auto& term_node : sequence(node, field)) {
      SupportModel::Term term;
      for (const auto& item : sequence(term_node, field)) {
        Expression e = expression(item, dims, field);
        if (psi_coordinate >= 0) {
          if (references_other_psi(e, psi_coordinate))
            throw ModelError(field, "channel " + std::to_string(psi_coordinate + 1) + " may only reference psi" +
                                        std::to_string(psi_coordinate + 1) + where(item));
          e = remap_psi(e, psi_coordinate);
        }
        term.emplace_back(std::move(e), spec.n, spec.nu, item.as<std::string>());
      }
      out.push_back(std::move(term));
    }
    return out;
  }

  SupportModel support(const YAML::Node& node, SupportMode mode, const Dimensions& dims, const ProblemSpec& spec,
                       int psi_coordinate, const std::string& field) const {
    SupportModel m;
    m.mode = mode;
    const Dimensions max_dims{dims.n, dims.nu, mode == SupportMode::Sphere, false};
    if (node["max_terms"]) m.max_terms = terms(node["max_terms"], max_dims, spec, field + ".max_terms", psi_coordinate);
    if (node["min_terms"]) m.min_terms = terms(node["min_terms"], dims, spec, field + ".min_terms", psi_coordinate);
    if (m.empty()) throw ModelError(field, "support model needs max_terms or min_terms" + where(node));
    return m;
  }

  void read_channels(const YAML::Node& node, ProblemSpec& spec) const {
    sequence(node, "channels");
    if (static_cast<int>(node.size()) != spec.n)
      throw ModelError("channels", "dimension mismatch: expected " + std::to_string(spec.n) + " channels, got " +
                                       std::to_string(node.size()));
    const Dimensions dims{spec.n, spec.nu, true, false};
    for (int i = 0; i < spec.n; ++i) {
      const YAML::Node item = node[i];
      const std::string field = "channels[" + std::to_string(i + 1) + "]";
      Channel ch;
      ch.coordinate = i;
      if (item["equation"]) {
        ch.kind = Channel::Kind::Equation;
        ch.rhs = function(item["equation"], Dimensions{spec.n, spec.nu, false, false}, spec, field + ".equation");
      } else if (item["inclusion"]) {
        ch.kind = Channel::Kind::Inclusion;
        ch.support = support(item["inclusion"], SupportMode::PerCoordinate, dims, spec, i, field + ".inclusion");
      } else {
        throw ModelError(field, "expected 'inclusion' or 'equation'" + where(item));
      }
      spec.channels.push_back(std::move(ch));
    }
  }

  void read_solver(const YAML::Node& node, SolverParams& s) const {
    if (!node.IsMap()) throw ModelError("solver", "expected a mapping" + where(node));
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      const std::string field = "solver." + key;
      if (key == "n_grid") s.n_grid = as<int>(kv.second, field);
      else if (key == "delta") s.delta = as<double>(kv.second, field);
      else if (key == "eps") s.eps = as<double>(kv.second, field);
      else if (key == "gamma_max") s.gamma_max = as<double>(kv.second, field);
      else if (key == "max_iter") s.max_iter = as<int>(kv.second, field);
      else if (key == "line_search_samples") s.line_search_samples = as<int>(kv.second, field);
      else if (key == "sphere_samples") s.sphere_samples = as<int>(kv.second, field);
      else if (key == "sphere_polar") s.sphere_polar = as<int>(kv.second, field);
      else if (key == "seed") s.seed = as<unsigned>(kv.second, field);
      else if (key == "certificate_tol") s.certificate_tol = as<double>(kv.second, field);
      else throw ModelError(field, "unknown solver parameter" + where(kv.first));
    }
  }

  std::string origin_;
};

}  // namespace

ProblemSpec parse_problem(std::string_view text, std::string_view origin) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& err) {
    throw ModelError("document", std::string(origin) + ": " + err.what());
  }
  return Reader(std::string(origin)).read(root);
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("file", "file not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), path.string());
}

const std::vector<BuiltinExample>& builtin_catalog() {
  static const std::vector<BuiltinExample> catalog = [] {
    std::vector<BuiltinExample> out;
    for (const auto& src : kBuiltinSources) {
      const YAML::Node root = YAML::Load(src.yaml);
      out.push_back({src.name, root["description"] ? root["description"].as<std::string>() : std::string(),
                     std::string_view(src.yaml)});
    }
    return out;
  }();
  return catalog;
}

std::vector<ProblemSpec> builtin_examples() {
  std::vector<ProblemSpec> out;
  for (const auto& ex : builtin_catalog()) out.push_back(parse_problem(ex.source, ex.name));
  return out;
}

bool is_builtin_example(std::string_view name) {
  for (const auto& ex : builtin_catalog())
    if (ex.name == name) return true;
  return false;
}

ProblemSpec builtin_example(std::string_view name) {
  for (const auto& ex : builtin_catalog())
    if (ex.name == name) return parse_problem(ex.source, ex.name);
  throw ModelError("example", "unknown built-in example '" + std::string(name) + "'");
}

ProblemSpec resolve_problem(std::string_view name_or_path) {
  if (is_builtin_example(name_or_path)) return builtin_example(name_or_path);
  return load_problem(std::filesystem::path(name_or_path));
}

}  // namespace qdi

#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdi/descent.hpp"
#include "qdi/problem_io.hpp"

namespace qdi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<int> n_grid;
  std::optional<double> delta;
  std::optional<double> eps;
  std::optional<double> gamma_max;
  std::optional<double> lambda;
  std::optional<int> max_iter;
  std::optional<unsigned> seed;

  void add_to(CLI::App& app) {
    app.add_option("--n-grid", n_grid, "Grid nodes (default 11, step 0.1 on [0, 1])");
    app.add_option("--delta", delta, "Activity tolerance for max/min branches (default 1e-3)");
    app.add_option("--eps", eps, "Stationarity tolerance on the node deviation (default 1e-2)");
    app.add_option("--gamma-max", gamma_max, "Line-search interval [0, gamma-max] (default 1)");
    app.add_option("--lambda", lambda, "Penalty weight of I when a cost term exists (default from problem)");
    app.add_option("--max-iter", max_iter, "Iteration limit (default 500)");
    app.add_option("--seed", seed, "Rotation of the sphere sampling lattice (default 0)");
  }

  void apply(ProblemSpec& spec) const {
    if (n_grid) spec.solver.n_grid = *n_grid;
    if (delta) spec.solver.delta = *delta;
    if (eps) spec.solver.eps = *eps;
    if (gamma_max) spec.solver.gamma_max = *gamma_max;
    if (lambda) spec.penalty = *lambda;
    if (max_iter) spec.solver.max_iter = *max_iter;
    if (seed) spec.solver.seed = *seed;
    spec.validate();
  }
};

std::vector<std::string> state_columns(const ProblemSpec& spec) {
  std::vector<std::string> names;
  for (int i = 1; i <= spec.n; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= spec.n; ++i) names.push_back("z" + std::to_string(i));
  for (int i = 1; i <= spec.nu; ++i) names.push_back("u" + std::to_string(i));
  return names;
}

std::vector<std::string> residual_columns(const ProblemSpec& spec) {
  if (spec.sphere_mode()) return {"h"};
  std::vector<std::string> names;
  for (int i = 1; i <= spec.n; ++i) names.push_back("h" + std::to_string(i));
  return names;
}

void write_trajectory(const fs::path& path, const EvalState& s) {
  std::vector<std::string> names = state_columns(s.spec());
  for (auto& n : residual_columns(s.spec())) names.push_back(std::move(n));
  const GridFunction h(s.grid(), s.h());
  const GridFunction* parts[] = {&s.x(), &s.z(), &s.u(), &h};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_csv(os, names, hstack(parts));
}

json terms_json(const ObjectiveTerms& t) {
  return {{"objective", t.objective}, {"I", t.I},           {"phi", t.phi}, {"chi", t.chi},
          {"omega", t.omega},         {"upsilon", t.upsilon}, {"cost", t.cost}};
}

json params_json(const ProblemSpec& spec) {
  const auto& p = spec.solver;
  return {{"n_grid", p.n_grid}, {"delta", p.delta},       {"eps", p.eps},   {"gamma_max", p.gamma_max},
          {"lambda", spec.penalty}, {"max_iter", p.max_iter}, {"seed", p.seed}};
}

int exit_for(SolveStatus status) {
  return status == SolveStatus::Solution || status == SolveStatus::Stationary ? kOk : kNotConverged;
}

int cmd_solve(const std::string& problem, const Overrides& overrides, const std::string& out_dir, bool quiet,
              std::ostream& out, std::ostream& err) {
  ProblemSpec spec = resolve_problem(problem);
  overrides.apply(spec);

  int warnings = 0;
  SolveOptions options;
  options.on_warning = [&](const std::string& message) {
    ++warnings;
    if (!quiet) err << "warning: " << message << '\n';
  };
  if (!quiet) {
    options.on_iteration = [&](const IterationRecord& r) {
      out << "k=" << std::setw(4) << r.k << "  objective=" << std::setprecision(6) << std::scientific
          << r.terms.objective << "  deviation=" << r.deviation << "  gamma=" << r.gamma << std::defaultfloat
          << '\n';
    };
  }
  const SolveResult result = solve(spec, options);
  const EvalState& s = result.final_state;

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_trajectory(dir / "trajectory.csv", s);
  {
    std::ofstream os(dir / "history.csv");
    write_history_csv(os, result.history);
  }

  const IterationRecord& last = result.history.back();
  json boundary = json::array();
  for (std::size_t j = 0; j < spec.terminal.size(); ++j) {
    const auto& tc = spec.terminal[j];
    boundary.push_back({{"index", tc.index + 1},
                        {"target", tc.value},
                        {"x_T", s.x().values()(s.grid().size() - 1, tc.index)},
                        {"integrated", tc.value + s.terminal_residual()[static_cast<Eigen::Index>(j)]}});
  }
  json max_h = json::array();
  for (Eigen::Index c = 0; c < s.h().cols(); ++c) max_h.push_back(s.h().col(c).maxCoeff());
  const json summary = {{"problem", spec.name},
                        {"status", std::string(to_string(result.status))},
                        {"iterations", last.k},
                        {"terms", terms_json(last.terms)},
                        {"max_deviation", last.deviation},
                        {"boundary_error", boundary_error(s)},
                        {"terminal", boundary},
                        {"max_h", max_h},
                        {"nonunique_warnings", warnings},
                        {"parameters", params_json(spec)}};
  {
    std::ofstream os(dir / "summary.json");
    os << summary.dump(2) << '\n';
  }

  out << "status:         " << to_string(result.status) << '\n'
      << "iterations:     " << last.k << '\n'
      << "objective:      " << last.terms.objective << '\n'
      << "boundary error: " << boundary_error(s) << '\n'
      << "max deviation:  " << last.deviation << '\n'
      << "output:         " << dir.string() << '\n';
  return exit_for(result.status);
}

EvalState read_state(const ProblemSpec& spec, const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ModelError("state", "file not found: " + path.string());
  const CsvTable table = read_csv(is);
  const auto rows = static_cast<int>(table.rows.rows());
  if (rows < 2) throw ModelError("state", "need at least 2 rows");
  const TimeGrid grid(spec.horizon, rows);
  for (int k = 0; k < rows; ++k) {
    if (std::abs(table.rows(k, 0) - grid.node(k)) > 1e-9 * std::max(1.0, spec.horizon))
      throw ModelError("state", "row " + std::to_string(k + 2) + ": t = " + std::to_string(table.rows(k, 0)) +
                                    " is not node " + std::to_string(k) + " of a uniform grid on [0, " +
                                    std::to_string(spec.horizon) + "]");
  }
  auto column = [&](const std::string& name) -> Eigen::VectorXd {
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (table.header[c] == name) return table.rows.col(static_cast<Eigen::Index>(c));
    throw ModelError("state", "missing column '" + name + "'");
  };
  GridFunction x(grid, spec.n);
  GridFunction z(grid, spec.n);
  GridFunction u(grid, spec.nu);
  for (int i = 0; i < spec.n; ++i) {
    x.values().col(i) = column("x" + std::to_string(i + 1));
    z.values().col(i) = column("z" + std::to_string(i + 1));
  }
  for (int i = 0; i < spec.nu; ++i) u.values().col(i) = column("u" + std::to_string(i + 1));
  return EvalState(spec, std::move(x), std::move(z), std::move(u));
}

int cmd_check(const std::string& problem, const std::string& state_path, const Overrides& overrides,
              std::optional<int> dump_node, std::ostream& out) {
  ProblemSpec spec = resolve_problem(problem);
  overrides.apply(spec);
  const EvalState s = read_state(spec, state_path);
  spec.solver.n_grid = s.grid().size();

  const DirectionField dir = direction_field(s);
  const ObjectiveTerms terms = eval_terms(s);
  const Eigen::VectorXd w = s.grid().trapezoid_weights();

  std::vector<std::string> hnames = residual_columns(spec);
  out << "node,t";
  for (const auto& n : hnames) out << ',' << n;
  out << ",surface,coupling,deviation\n";
  const auto precision = out.precision(6);
  for (int k = 0; k < s.grid().size(); ++k) {
    double surface = 0.0;
    const Eigen::VectorXd xk = s.x().node_value(k);
    const Eigen::VectorXd uk = s.u().node_value(k);
    const Point p{{xk.data(), static_cast<std::size_t>(xk.size())}, {}, {uk.data(), static_cast<std::size_t>(uk.size())}, 0.0};
    for (const auto& e : spec.surface) surface = std::max(surface, std::abs(e.value(p)));
    out << k << ',' << s.grid().node(k);
    for (Eigen::Index c = 0; c < s.h().cols(); ++c) out << ',' << s.h()(k, c);
    out << ',' << surface << ',' << s.coupling_residual().row(k).norm() << ','
        << dir.node_deviation[static_cast<std::size_t>(k)] << '\n';
  }
  out.precision(precision);

  const bool stationary = stationarity_check(dir.max_deviation, spec.solver);
  out << "phi=" << terms.phi << " chi=" << terms.chi << " omega=" << terms.omega << " upsilon=" << terms.upsilon
      << " cost=" << terms.cost << " objective=" << terms.objective << '\n'
      << "boundary error: " << boundary_error(s) << '\n'
      << "max deviation:  " << dir.max_deviation << " (eps " << spec.solver.eps << ")\n"
      << "stationarity:   " << (stationary ? "holds" : "violated") << '\n';
  if (stationary)
    out << "certificate:    "
        << (terms.objective <= spec.solver.certificate_tol ? "solution" : "stationary point with positive objective")
        << '\n';

  if (dump_node) {
    if (*dump_node < 0 || *dump_node >= s.grid().size())
      throw ModelError("--dump-node", "node index out of range 0.." + std::to_string(s.grid().size() - 1));
    out << "node " << *dump_node << ":\n";
    dump(out, assemble_pointwise(s, *dump_node));
  }
  return stationary ? kOk : kNotConverged;
}

int cmd_examples(const std::string& filter, std::ostream& out, std::ostream& err) {
  int shown = 0;
  for (const auto& ex : builtin_catalog()) {
    if (!filter.empty() && ex.name.find(filter) == std::string::npos) continue;
    out << std::left << std::setw(14) << ex.name << ' ' << ex.description << '\n';
    ++shown;
  }
  if (shown == 0) {
    err << "error: no built-in example matches '" << filter << "'\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trajectories of differential inclusions by quasidifferential descent", "qdi"};
  app.require_subcommand(1);

  std::string problem;
  std::string out_dir = "qdi_out";
  std::string state_path;
  std::string filter;
  bool quiet = false;
  std::optional<int> dump_node;
  Overrides solve_overrides;
  Overrides check_overrides;

  auto* solve_cmd = app.add_subcommand("solve", "Run the descent and write trajectory.csv, history.csv, summary.json");
  solve_cmd->add_option("problem", problem, "Problem file or built-in example name")->required();
  solve_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  solve_cmd->add_flag("-q,--quiet", quiet, "Only print the summary");
  solve_overrides.add_to(*solve_cmd);

  auto* check_cmd = app.add_subcommand("check", "Report residuals and stationarity of a stored state");
  check_cmd->add_option("problem", problem, "Problem file or built-in example name")->required();
  check_cmd->add_option("--state", state_path, "trajectory.csv to check")->required();
  check_cmd->add_option("--dump-node", dump_node, "Also print the quasidifferential at this node (0-based)");
  check_overrides.add_to(*check_cmd);

  auto* examples_cmd = app.add_subcommand("examples", "List built-in examples");
  examples_cmd->add_option("filter", filter, "Substring of the example name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }

  try {
    if (*solve_cmd) return cmd_solve(problem, solve_overrides, out_dir, quiet, out, err);
    if (*check_cmd) return cmd_check(problem, state_path, check_overrides, dump_node, out);
    return cmd_examples(filter, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace qdi::cli

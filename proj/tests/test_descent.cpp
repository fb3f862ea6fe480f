#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qdi/descent.hpp"
#include "support.hpp"

using namespace qdi;

namespace {

const char* kSmooth = R"(
name: smooth
dims: {n: 2, nu: 1}
horizon: 1
x0: [0, 0]
terminal:
  - {index: 1, value: 1}
channels:
  - equation: "x2"
  - equation: "u1"
solver: {max_iter: 50}
)";

}  // namespace

TEST_CASE("line search finds the minimizer of a parabola") {
  SolverParams params;
  for (double target : {0.0137, 0.3, 0.71, 0.999}) {
    auto f = [target](double g) { return (g - target) * (g - target); };
    const double g = line_search(f, f(0.0), params);
    CHECK(std::abs(g - target) <= 1e-4);
  }
  params.gamma_max = 0.2;
  auto f = [](double g) { return (g - 0.5) * (g - 0.5); };
  CHECK(line_search(f, f(0.0), params) == doctest::Approx(0.2).epsilon(1e-5));
}

TEST_CASE("line search on monotone and flat functions") {
  const SolverParams params;
  CHECK(line_search([](double g) { return -g; }, 0.0, params) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(line_search([](double) { return 1.0; }, 1.0, params) == 0.0);
  CHECK(line_search([](double g) { return g; }, 0.0, params) == 0.0);
  // Improvement only below the first sample spacing.
  const double g = line_search([](double x) { return std::abs(x - 1e-4) - 1e-4; }, 0.0, params);
  CHECK(g > 0.0);
  CHECK(g < 2e-4);
}

TEST_CASE("line search skips infinite trial values") {
  const SolverParams params;
  auto f = [](double g) { return g > 0.5 ? std::numeric_limits<double>::infinity() : (g - 0.4) * (g - 0.4); };
  CHECK(std::abs(line_search(f, 0.16, params) - 0.4) <= 1e-4);
}

TEST_CASE("trial points outside the domain do not abort the search") {
  const ProblemSpec spec = parse_problem(R"y(
name: root
dims: {n: 1}
horizon: 1
x0: [1]
channels:
  - equation: "sqrt(x1)"
)y");
  const EvalState s = EvalState::initial(spec);
  GridFunction g(s.grid(), 2);
  g.values().col(0).setConstant(-4.0);
  const double gamma = line_search(s, g);
  CHECK(gamma >= 0.0);
  CHECK(gamma <= 0.25);
}

TEST_CASE("zero direction gives a zero step") {
  const ProblemSpec spec = builtin_example("example71");
  const EvalState s = EvalState::initial(spec);
  const GridFunction zero(s.grid(), spec.decision_dim());
  CHECK(line_search(s, zero) == 0.0);
  CHECK(stationarity_measure(s, zero) == 0.0);
}

TEST_CASE("starting at an exact solution terminates immediately") {
  const ProblemSpec spec = builtin_example("dryfriction");
  const TimeGrid grid(spec.horizon, spec.solver.n_grid);
  GridFunction x(grid, 1), z(grid, 1), u(grid, 0);
  for (int k = 0; k < grid.size(); ++k) {
    x.values()(k, 0) = 0.5 * grid.node(k);
    z.values()(k, 0) = 0.5;
  }
  const SolveResult r = solve(spec, EvalState(spec, x, z, u));
  CHECK(r.status == SolveStatus::Solution);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].k == 1);
  CHECK(r.history[0].gamma == 0.0);
  CHECK(r.history[0].deviation < 1e-12);
}

TEST_CASE("smooth problem: objective drops tenfold within 50 iterations") {
  const ProblemSpec spec = parse_problem(kSmooth);
  const SolveResult r = solve(spec);
  REQUIRE(r.history.size() >= 2);
  const double first = r.history.front().terms.objective;
  const double last = r.history.back().terms.objective;
  CHECK(last <= first / 10);
  CHECK(static_cast<int>(r.history.size()) <= 51);
}

TEST_CASE("history is monotone and well formed") {
  for (const char* name : {"example71", "dryfriction", "pendulum"}) {
    const ProblemSpec spec = builtin_example(name);
    std::vector<IterationRecord> seen;
    SolveOptions opts;
    opts.on_iteration = [&](const IterationRecord& rec) { seen.push_back(rec); };
    const SolveResult r = solve(spec, opts);
    REQUIRE(!r.history.empty());
    CHECK(seen.size() == r.history.size());
    for (std::size_t i = 0; i < r.history.size(); ++i) {
      CHECK(r.history[i].k == static_cast<int>(i) + 1);
      if (i + 1 < r.history.size()) {
        CHECK(r.history[i].gamma > 0.0);
        CHECK(r.history[i + 1].terms.objective < r.history[i].terms.objective);
      }
    }
    CHECK(r.history.back().gamma == 0.0);
    CHECK(r.history.back().terms.objective == doctest::Approx(eval_objective(r.final_state)));
    CHECK(r.status != SolveStatus::MaxIter);
  }
}

TEST_CASE("stationarity measure is negative along the descent field") {
  const ProblemSpec spec = builtin_example("example71");
  const EvalState s = EvalState::initial(spec);
  const DirectionField field = direction_field(s);
  CHECK(field.max_deviation > spec.solver.eps);
  CHECK(field.node_deviation.size() == static_cast<std::size_t>(s.grid().size()));
  CHECK(stationarity_measure(s, field.G) < 0.0);
  CHECK_FALSE(stationarity_check(field.max_deviation, spec.solver));
  CHECK(stationarity_check(spec.solver.eps / 2, spec.solver));
}

TEST_CASE("step moves every slot") {
  const ProblemSpec spec = builtin_example("example73");
  const EvalState s = EvalState::initial(spec);
  GridFunction g(s.grid(), spec.decision_dim());
  g.values().setOnes();
  const EvalState t = step(s, g, 0.25);
  CHECK((t.x().values() - s.x().values()).isConstant(0.25));
  CHECK((t.z().values() - s.z().values()).isConstant(0.25));
  CHECK((t.u().values() - s.u().values()).isConstant(0.25));
}

TEST_CASE("max_iter bounds accepted steps") {
  ProblemSpec spec = builtin_example("example71");
  spec.solver.max_iter = 3;
  const SolveResult r = solve(spec);
  CHECK(r.status == SolveStatus::MaxIter);
  CHECK(r.history.size() == 4);
}

TEST_CASE("solve is deterministic") {
  const ProblemSpec spec = builtin_example("example72");
  const SolveResult a = solve(spec);
  const SolveResult b = solve(spec);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].terms.objective == b.history[i].terms.objective);
  CHECK(a.final_state.x().values() == b.final_state.x().values());
}

TEST_CASE("history csv") {
  const ProblemSpec spec = builtin_example("dryfriction");
  const SolveResult r = solve(spec);
  std::ostringstream os;
  write_history_csv(os, r.history);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "k,objective,phi,chi,omega,upsilon,cost,deviation,gamma");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == static_cast<int>(r.history.size()));
}

TEST_CASE("status names") {
  CHECK(to_string(SolveStatus::Solution) == "solution");
  CHECK(to_string(SolveStatus::Stationary) == "stationary");
  CHECK(to_string(SolveStatus::MaxIter) == "max_iter");
  CHECK(to_string(SolveStatus::Stalled) == "stalled");
}

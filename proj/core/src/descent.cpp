#include "qdi/descent.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <ostream>

namespace qdi {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr double kInf = std::numeric_limits<double>::infinity();

double objective_or_inf(const EvalState& s, const GridFunction& G, double gamma) {
  try {
    const double v = eval_objective(step(s, G, gamma));
    return std::isnan(v) ? kInf : v;
  } catch (const DomainError&) {
    return kInf;
  }
}

template <typename F>
std::pair<double, double> golden_min(F&& f, double a, double b, double width) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > width) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Solution: return "solution";
    case SolveStatus::Stationary: return "stationary";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Stalled: return "stalled";
  }
  return "unknown";
}

DirectionField direction_field(const EvalState& s) {
  const TimeGrid& grid = s.grid();
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(grid.size()));
  DirectionField out{GridFunction(grid, s.spec().decision_dim()), 0.0, {}};
  for (int k = 0; k < grid.size(); ++k) {
    NodeDirection nd;
    try {
      nd = node_direction(assemble_pointwise(s, k));
    } catch (const NumericalError& err) {
      throw NumericalError("node " + std::to_string(k) + ": " + err.what());
    }
    samples.push_back({grid.node(k), std::move(nd.G)});
    out.node_deviation.push_back(nd.deviation);
    out.max_deviation = std::max(out.max_deviation, nd.deviation);
  }
  out.G = interpolate_directions(grid, samples);
  return out;
}

bool stationarity_check(double max_deviation, const SolverParams& params) { return max_deviation <= params.eps; }

EvalState step(const EvalState& s, const GridFunction& G, double gamma) {
  const int n = s.spec().n;
  const int nu = s.spec().nu;
  if (G.components() != 2 * n + nu || !(G.grid() == s.grid()))
    throw std::invalid_argument("step: direction does not match the state");
  GridFunction x(s.grid(), s.x().values() + gamma * G.values().leftCols(n));
  GridFunction z(s.grid(), s.z().values() + gamma * G.values().middleCols(n, n));
  GridFunction u(s.grid(), s.u().values() + gamma * G.values().rightCols(nu));
  return EvalState(s.spec(), std::move(x), std::move(z), std::move(u));
}

double line_search(const std::function<double(double)>& f, double f0, const SolverParams& params) {
  const double gmax = params.gamma_max;
  const int m = params.line_search_samples;
  const double spacing = gmax / (m - 1);

  double best_gamma = 0.0;
  double best = f0;
  int best_i = 0;
  for (int i = 1; i < m; ++i) {
    const double g = i == m - 1 ? gmax : i * spacing;
    const double v = f(g);
    if (v < best) {
      best = v;
      best_gamma = g;
      best_i = i;
    }
  }

  if (best_i > 0) {
    const double lo = (best_i - 1) * spacing;
    const double hi = std::min(gmax, (best_i + 1) * spacing);
    const auto [g, v] = golden_min(f, lo, hi, 1e-6 * gmax);
    if (v < best && g > 0.0) {
      best = v;
      best_gamma = g;
    }
    return best_gamma;
  }

  const auto [g0, v0] = golden_min(f, 0.0, spacing, 1e-6 * gmax);
  if (v0 < f0 && g0 > 0.0) return g0;
  for (double g = 0.5 * spacing; g >= 1e-12 * gmax; g *= 0.5) {
    if (f(g) < f0) return g;
  }
  return 0.0;
}

double line_search(const EvalState& s, const GridFunction& G) {
  if (G.values().isZero(0.0)) return 0.0;
  const double f0 = eval_objective(s);
  return line_search([&](double g) { return objective_or_inf(s, G, g); }, f0, s.spec().solver);
}

double stationarity_measure(const EvalState& s, const GridFunction& G) {
  const double norm = l2_norm(G);
  if (norm == 0.0) return 0.0;
  constexpr double tau = 1e-7;
  const double f0 = eval_objective(s);
  const double f1 = objective_or_inf(s, G, tau / norm);
  return (f1 - f0) / tau;
}

SolveResult solve(const ProblemSpec& spec, const SolveOptions& options) {
  return solve(spec, EvalState::initial(spec), options);
}

SolveResult solve(const ProblemSpec& spec, EvalState initial, const SolveOptions& options) {
  const SolverParams& params = spec.solver;
  auto warn = [&](const std::string& message) {
    if (options.on_warning) {
      options.on_warning(message);
    } else {
      std::cerr << "warning: " << message << '\n';
    }
  };

  SolveResult result{std::move(initial), {}, SolveStatus::MaxIter};
  EvalState& state = result.final_state;
  for (int k = 1;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.terms = eval_terms(state);
    rec.nonunique = state.nonunique_count();
    if (rec.nonunique > 0)
      warn("iteration " + std::to_string(k) + ": maximizing psi not unique at " + std::to_string(rec.nonunique) +
           " node(s); using the first in sampling order");

    const DirectionField dir = [&] {
      try {
        return direction_field(state);
      } catch (const NumericalError& err) {
        throw NumericalError("iteration " + std::to_string(k) + ", " + err.what());
      } catch (const DomainError& err) {
        throw DomainError("iteration " + std::to_string(k) + ", " + err.message(), err.subexpression());
      }
    }();
    rec.deviation = dir.max_deviation;

    auto finish = [&](SolveStatus status) {
      result.status = status;
      result.history.push_back(rec);
      if (options.on_iteration) options.on_iteration(rec);
    };

    if (stationarity_check(dir.max_deviation, params)) {
      finish(rec.terms.objective <= params.certificate_tol ? SolveStatus::Solution : SolveStatus::Stationary);
      break;
    }
    if (k > params.max_iter) {
      finish(SolveStatus::MaxIter);
      break;
    }
    const double gamma = line_search(state, dir.G);
    if (gamma == 0.0) {
      finish(SolveStatus::Stalled);
      break;
    }
    rec.gamma = gamma;
    rec.measure = stationarity_measure(state, dir.G);
    result.history.push_back(rec);
    if (options.on_iteration) options.on_iteration(rec);
    state = step(state, dir.G, gamma);
  }
  return result;
}

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history) {
  os << "k,objective,phi,chi,omega,upsilon,cost,deviation,gamma\n";
  const auto precision = os.precision(12);
  for (const auto& r : history) {
    const auto& t = r.terms;
    os << r.k << ',' << t.objective << ',' << t.phi << ',' << t.chi << ',' << t.omega << ',' << t.upsilon << ','
       << t.cost << ',' << r.deviation << ',' << r.gamma << '\n';
  }
  os.precision(precision);
}

}  // namespace qdi

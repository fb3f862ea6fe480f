#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qdi/functional.hpp"
#include "qdi/geometry.hpp"

namespace qdi {

enum class SolveStatus { Solution, Stationary, MaxIter, Stalled };

std::string_view to_string(SolveStatus status);

struct IterationRecord {
  int k = 0;                   // 1-based
  ObjectiveTerms terms;        // at the iterate before the step
  double deviation = 0.0;      // max node deviation
  double gamma = 0.0;          // accepted step; 0 on the final record
  double measure = 0.0;        // directional derivative along G / |G|
  int nonunique = 0;           // nodes with a non-unique sphere maximizer
};

struct DirectionField {
  GridFunction G;  // 2n + nu components: x | z | u
  double max_deviation = 0.0;
  std::vector<double> node_deviation;
};

/// node_direction at every node, joined into a piecewise-linear field.
DirectionField direction_field(const EvalState& s);

bool stationarity_check(double max_deviation, const SolverParams& params);

/// (x, z, u) + gamma G.
EvalState step(const EvalState& s, const GridFunction& G, double gamma);

/// Approximate minimizer on [0, gamma_max] of a scalar function with f(0) = f0:
/// a scan of `line_search_samples` points, then golden section in the bracket
/// around the best sample down to width 1e-6 gamma_max. When no sample improves,
/// golden section on the first spacing, then halving down to 1e-12 gamma_max. Returns 0 if nothing improves.
double line_search(const std::function<double(double)>& f, double f0, const SolverParams& params);

/// Line search of the objective along G. Trial points outside an expression's domain count as +inf.
double line_search(const EvalState& s, const GridFunction& G);

/// Forward-difference derivative of the objective along G / |G|; 0 for G = 0.
double stationarity_measure(const EvalState& s, const GridFunction& G);

struct SolveOptions {
  std::function<void(const IterationRecord&)> on_iteration;
  std::function<void(const std::string&)> on_warning;  // defaults to standard error
};

struct SolveResult {
  EvalState final_state;  // refers to the spec passed to solve
  std::vector<IterationRecord> history;
  SolveStatus status = SolveStatus::MaxIter;
};

/// Descent from the spec's initial state. Every iteration is recorded; the last
/// record describes the final state and has gamma = 0.
SolveResult solve(const ProblemSpec& spec, const SolveOptions& options = {});
SolveResult solve(const ProblemSpec& spec, EvalState initial, const SolveOptions& options = {});

/// Columns k, objective, phi, chi, omega, upsilon, cost, deviation, gamma.
void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history);

}  // namespace qdi

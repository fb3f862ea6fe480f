#include "qdi/model.hpp"

#include <algorithm>
#include <limits>

namespace qdi {

SmoothFunction::SmoothFunction(Expression expr, int n, int nu, std::string source)
    : expr_(std::move(expr)), source_(std::move(source)) {
  if (source_.empty()) source_ = expr_.to_string();
  dx_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dx_.push_back(differentiate(expr_, {VarKind::X, i}));
  du_.reserve(static_cast<std::size_t>(nu));
  for (int i = 0; i < nu; ++i) du_.push_back(differentiate(expr_, {VarKind::U, i}));
}

void SmoothFunction::gradient(const Point& p, std::span<double> gx, std::span<double> gu) const {
  for (std::size_t i = 0; i < dx_.size() && i < gx.size(); ++i)
    gx[i] = dx_[i].is_constant(0.0) ? 0.0 : eval(dx_[i], p);
  for (std::size_t i = 0; i < du_.size() && i < gu.size(); ++i)
    gu[i] = du_[i].is_constant(0.0) ? 0.0 : eval(du_[i], p);
}

double eval_max_branch(const SupportModel& m, const SmoothFunction& f, const Point& p) {
  const double v = f.value(p);
  return m.mode == SupportMode::PerCoordinate ? v * p.psi[0] : v;
}

double eval_support(const SupportModel& m, std::span<const double> x, std::span<const double> psi,
                    std::span<const double> u) {
  const Point p{x, psi, u, 0.0};
  double total = 0.0;
  for (const auto& term : m.max_terms) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& f : term) best = std::max(best, eval_max_branch(m, f, p));
    total += best;
  }
  for (const auto& term : m.min_terms) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : term) best = std::min(best, g.value(p));
    total += best;
  }
  return total;
}

namespace {

void check_term_list(const std::vector<SupportModel::Term>& terms, const std::string& field) {
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (terms[j].empty()) throw ModelError(field + "[" + std::to_string(j) + "]", "empty term");
  }
}

void check_support(const SupportModel& m, const std::string& field) {
  if (m.empty()) throw ModelError(field, "support model needs at least one term");
  check_term_list(m.max_terms, field + ".max_terms");
  check_term_list(m.min_terms, field + ".min_terms");
  if (m.mode == SupportMode::PerCoordinate) {
    for (const auto& term : m.max_terms) {
      for (const auto& f : term) {
        if (f.expression().references(VarKind::Psi))
          throw ModelError(field + ".max_terms", "max-term functions are multiplied by psi and must not reference it: " +
                                                     f.source());
      }
    }
  }
}

}  // namespace

void ProblemSpec::validate() const {
  if (n < 1) throw ModelError("dims.n", "state dimension must be positive");
  if (nu < 0) throw ModelError("dims.nu", "control dimension must be non-negative");
  if (!(horizon > 0.0)) throw ModelError("horizon", "must be positive");
  if (x0.size() != n)
    throw ModelError("x0", "expected " + std::to_string(n) + " entries, got " + std::to_string(x0.size()));
  if (static_cast<int>(terminal.size()) > n) throw ModelError("terminal", "more conditions than coordinates");
  for (const auto& tc : terminal) {
    if (tc.index < 0 || tc.index >= n)
      throw ModelError("terminal", "index " + std::to_string(tc.index + 1) + " out of range 1.." + std::to_string(n));
  }
  for (std::size_t a = 0; a < terminal.size(); ++a)
    for (std::size_t b = a + 1; b < terminal.size(); ++b)
      if (terminal[a].index == terminal[b].index)
        throw ModelError("terminal", "duplicate index " + std::to_string(terminal[a].index + 1));

  if (sphere) {
    if (!channels.empty()) throw ModelError("channels", "sphere mode takes a single support model, not channels");
    if (sphere->mode != SupportMode::Sphere) throw ModelError("support", "sphere model has per-coordinate mode");
    if (n > 3) throw ModelError("dims.n", "sphere mode supports n <= 3");
    check_support(*sphere, "support");
  } else {
    if (static_cast<int>(channels.size()) != n)
      throw ModelError("channels", "expected " + std::to_string(n) + " channels, got " + std::to_string(channels.size()));
    for (int i = 0; i < n; ++i) {
      const Channel& ch = channels[static_cast<std::size_t>(i)];
      const std::string field = "channels[" + std::to_string(i + 1) + "]";
      if (ch.coordinate != i) throw ModelError(field, "channel coordinate mismatch");
      if (ch.kind == Channel::Kind::Inclusion) {
        if (ch.support.mode != SupportMode::PerCoordinate) throw ModelError(field, "expected per-coordinate support");
        check_support(ch.support, field);
      }
    }
  }
  check_term_list(cost, "cost.max_terms");
  if (has_cost() && !(penalty > 0.0)) throw ModelError("penalty", "must be positive");

  const auto& s = solver;
  if (s.n_grid < 2) throw ModelError("solver.n_grid", "need at least 2 nodes");
  if (!(s.delta > 0.0)) throw ModelError("solver.delta", "must be positive");
  if (!(s.eps > 0.0)) throw ModelError("solver.eps", "must be positive");
  if (!(s.gamma_max > 0.0)) throw ModelError("solver.gamma_max", "must be positive");
  if (s.max_iter < 1) throw ModelError("solver.max_iter", "must be at least 1");
  if (s.line_search_samples < 2) throw ModelError("solver.line_search_samples", "need at least 2 samples");
  if (s.sphere_samples < 8) throw ModelError("solver.sphere_samples", "need at least 8 samples");
  if (s.sphere_polar < 4) throw ModelError("solver.sphere_polar", "need at least 4 rings");

  auto check_guess = [&](const std::vector<Expression>& g, int size, const std::string& field) {
    if (!g.empty() && static_cast<int>(g.size()) != size)
      throw ModelError(field, "expected " + std::to_string(size) + " entries");
  };
  check_guess(initial.x, n, "initial.x");
  check_guess(initial.z, n, "initial.z");
  check_guess(initial.u, nu, "initial.u");
}

}  // namespace qdi

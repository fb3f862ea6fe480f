#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdi/expr.hpp"

namespace qdi {

/// An expression together with its symbolic partial derivatives in x and u.
class SmoothFunction {
 public:
  SmoothFunction() = default;
  SmoothFunction(Expression expr, int n, int nu, std::string source = {});

  const Expression& expression() const { return expr_; }
  const std::string& source() const { return source_; }

  double value(const Point& p) const { return eval(expr_, p); }

  /// Writes d/dx into gx (size n) and d/du into gu (size nu).
  void gradient(const Point& p, std::span<double> gx, std::span<double> gu) const;

 private:
  Expression expr_;
  std::vector<Expression> dx_;
  std::vector<Expression> du_;
  std::string source_;
};

enum class SupportMode {
  PerCoordinate,  // psi_i in {-1, +1}; max-term functions are multiplied by psi_i
  Sphere,         // psi on the unit sphere S_n; every function sees the full psi vector
};

/// Support function written as a sum of max-terms plus a sum of min-terms.
///
/// Per-coordinate mode evaluates  sum_j max_q f_jq(x) psi  +  sum_j min_p g_jp(x, psi)
/// with scalar psi (the channel's psi_i is stored as psi1 internally).
/// Sphere mode evaluates          sum_j max_q f_jq(x, psi) +  sum_j min_p g_jp(x, psi).
struct SupportModel {
  using Term = std::vector<SmoothFunction>;

  SupportMode mode = SupportMode::PerCoordinate;
  std::vector<Term> max_terms;
  std::vector<Term> min_terms;

  bool empty() const { return max_terms.empty() && min_terms.empty(); }
};

/// Value of one term function at (x, u, psi), including the psi factor of
/// per-coordinate max-terms.
double eval_max_branch(const SupportModel& m, const SmoothFunction& f, const Point& p);

/// Support value c(F(x), psi). `psi` has size 1 in per-coordinate mode, n in sphere mode.
double eval_support(const SupportModel& m, std::span<const double> x, std::span<const double> psi,
                    std::span<const double> u = {});

struct Channel {
  enum class Kind { Inclusion, Equation };

  Kind kind = Kind::Inclusion;
  int coordinate = 0;      // 0-based state index i
  SupportModel support;    // Inclusion: x'_i in F_i(x)
  SmoothFunction rhs;      // Equation:  x'_i = rhs(x, u)
};

struct SolverParams {
  int n_grid = 11;
  double delta = 1e-3;       // activity tolerance for max/min branches
  double eps = 1e-2;         // stationarity tolerance (Hausdorff deviation)
  double gamma_max = 1.0;    // line-search interval [0, gamma_max]
  int max_iter = 500;
  int line_search_samples = 33;
  int sphere_samples = 720;  // circle samples (n = 2); azimuth count on S^2 (n = 3)
  int sphere_polar = 64;     // polar rings on S^2 (n = 3)
  unsigned seed = 0;         // rotates the sphere sampling lattice
  double certificate_tol = 1e-8;  // objective below this at stationarity certifies a solution
};

/// Optional initial guess as functions of t; empty vectors mean the defaults
/// x = x0, z = 0, u = 0.
struct InitialGuess {
  std::vector<Expression> x;
  std::vector<Expression> z;
  std::vector<Expression> u;
};

struct TerminalCondition {
  int index = 0;  // 0-based
  double value = 0.0;
};

struct ProblemSpec {
  std::string name;
  std::string description;

  int n = 0;
  int nu = 0;
  double horizon = 1.0;
  Eigen::VectorXd x0;
  std::vector<TerminalCondition> terminal;
  std::vector<SmoothFunction> surface;

  std::vector<Channel> channels;        // per-coordinate mode: one per state coordinate
  std::optional<SupportModel> sphere;   // sphere mode: one model for the whole velocity

  std::vector<SupportModel::Term> cost;  // integrand sum_j max_q c_jq(x, u); empty = none
  double penalty = 1.0;                  // lambda in  cost + lambda * I

  SolverParams solver;
  InitialGuess initial;

  bool has_cost() const { return !cost.empty(); }
  bool sphere_mode() const { return sphere.has_value(); }
  int decision_dim() const { return 2 * n + nu; }

  /// Throws ModelError naming the first violated invariant.
  void validate() const;
};

}  // namespace qdi

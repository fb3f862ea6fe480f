#pragma once

// Merit functional I = phi + chi + omega + upsilon and the penalized objective
// cost + lambda * I, evaluated on grid functions with the trapezoid rule.
//
//   phi     = 1/2 int |h(x, z)|^2         h_i = distance from z_i to F_i(x)
//   chi     = 1/2 sum_{j in J} (x0_j + int z_j - xT_j)^2
//   omega   = 1/2 int |e(x)|^2
//   upsilon = 1/2 int |x - x0 - int_0^t z|^2

#include <span>

#include <Eigen/Dense>

#include "qdi/model.hpp"
#include "qdi/trajectory.hpp"

namespace qdi {

struct PsiStar {
  double psi = 1.0;  // maximizer in {-1, +1}; +1 when h = 0
  double h = 0.0;
};

/// Active normal and distance for a per-coordinate channel at one node.
/// Equation channels return psi = sign(z_i - rhs) (sign(0) = +1) and h = |z_i - rhs|.
PsiStar psi_star(const Channel& channel, std::span<const double> x_t, double z_i,
                 std::span<const double> u_t = {});

struct SpherePsiStar {
  Eigen::VectorXd psi;  // unit vector; e_1 when h = 0
  double h = 0.0;
  bool unique = true;
};

/// Maximizes <z, psi> - c(F(x), psi) over the unit sphere (n = 2 or 3) by
/// dense sampling and golden-section polish of every sampled local maximum.
/// unique = false when a second local maximum, farther than the polish window,
/// comes within 1e-6 of the best; the first one in sampling order is returned.
SpherePsiStar psi_star_sphere(const SupportModel& model, std::span<const double> x_t, std::span<const double> z_t,
                              std::span<const double> u_t, const SolverParams& params);

/// Snapshot of (x, z, u) with every derived quantity filled on construction.
/// Changing the trajectory means building a new state, so caches never go stale.
class EvalState {
 public:
  EvalState(const ProblemSpec& spec, GridFunction x, GridFunction z, GridFunction u);

  /// The problem's initial guess, or x = x0, z = 0, u = 0.
  static EvalState initial(const ProblemSpec& spec);

  const ProblemSpec& spec() const { return *spec_; }
  const TimeGrid& grid() const { return x_.grid(); }

  const GridFunction& x() const { return x_; }
  const GridFunction& z() const { return z_; }
  const GridFunction& u() const { return u_; }

  /// Row k: integral of z over [0, t_k].
  const GridFunction& z_integral() const { return z_int_; }

  /// Row k: x(t_k) - x0 - int_0^{t_k} z.
  const Eigen::MatrixXd& coupling_residual() const { return coupling_; }

  /// Per node (rows) and channel (columns); a single column in sphere mode.
  const Eigen::MatrixXd& h() const { return h_; }

  /// Row k is psi* at node k: +-1 per coordinate, or the sphere maximizer.
  const Eigen::MatrixXd& psi() const { return psi_; }

  /// Nodes where the sphere maximizer was not unique.
  int nonunique_count() const { return nonunique_; }

  /// x0_j + int z_j - xT_j for each terminal condition, in spec order.
  const Eigen::VectorXd& terminal_residual() const { return terminal_; }

  /// Stacked decision vector (x_k, z_k, u_k) at node k.
  Eigen::VectorXd decision(int k) const;

  /// Riesz representative of the upsilon gradient in z, row k (exact discrete adjoint).
  const Eigen::MatrixXd& upsilon_z_gradient() const { return upsilon_grad_z_; }

 private:
  void fill();

  const ProblemSpec* spec_;
  GridFunction x_;
  GridFunction z_;
  GridFunction u_;
  GridFunction z_int_;
  Eigen::MatrixXd coupling_;
  Eigen::MatrixXd h_;
  Eigen::MatrixXd psi_;
  Eigen::VectorXd terminal_;
  Eigen::MatrixXd upsilon_grad_z_;
  int nonunique_ = 0;
};

double eval_upsilon(const EvalState& s);
double eval_chi(const EvalState& s);
double eval_omega(const EvalState& s);
double eval_phi(const EvalState& s);
double eval_I(const EvalState& s);

/// Integral of the cost integrand; 0 without a cost term.
double eval_cost(const EvalState& s);

/// cost + lambda * I with a cost term, I otherwise.
double eval_objective(const EvalState& s);

struct ObjectiveTerms {
  double phi = 0.0;
  double chi = 0.0;
  double omega = 0.0;
  double upsilon = 0.0;
  double cost = 0.0;
  double I = 0.0;
  double objective = 0.0;
};

ObjectiveTerms eval_terms(const EvalState& s);

/// Pointwise gradients of the smooth terms, in the trapezoid L2 metric so that
/// sum_k w_k <gradient_k, g_k> is the exact directional derivative of the
/// discrete functional.
struct SmoothGradients {
  Eigen::VectorXd chi_z;    // n: z-slots of chi (same at every node)
  Eigen::VectorXd omega_x;  // n: x-slots of omega
  Eigen::VectorXd omega_u;  // nu: u-slots of omega
  Eigen::VectorXd upsilon;  // 2n: (x-slots, z-slots) of upsilon
};

SmoothGradients smooth_gradients(const EvalState& s, int k);

/// Largest |x_j(T) - xT_j| and |x(0) - x0|.
double boundary_error(const EvalState& s);

}  // namespace qdi

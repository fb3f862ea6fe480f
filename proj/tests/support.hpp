#pragma once

// Shared helpers for the unit and acceptance tests.

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdi/functional.hpp"
#include "qdi/problem_io.hpp"
#include "qdi/quasidiff.hpp"

namespace qdi::testing {

inline Eigen::VectorXd random_vector(std::mt19937& rng, int d, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = u(rng);
  return v;
}

inline Eigen::MatrixXd random_cloud(std::mt19937& rng, int d, int m, double scale = 1.0) {
  Eigen::MatrixXd P(d, m);
  for (int j = 0; j < m; ++j) P.col(j) = random_vector(rng, d, scale);
  return P;
}

struct OracleProjection {
  Eigen::VectorXd point;
  double distance = std::numeric_limits<double>::infinity();
};

// Projection onto co(P) by brute force over affinely independent subsets:
// each subset's affine projection comes from the KKT system
//   [P_S^T P_S  1] [a ]   [P_S^T t]
//   [1^T        0] [mu] = [1      ]
// and is kept only when every weight is nonnegative.
inline OracleProjection qp_projection(const Eigen::VectorXd& t, const Eigen::MatrixXd& P) {
  const int m = static_cast<int>(P.cols());
  const int d = static_cast<int>(P.rows());
  OracleProjection best;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    const int s = static_cast<int>(idx.size());
    if (s > d + 1) continue;
    Eigen::MatrixXd PS(d, s);
    for (int i = 0; i < s; ++i) PS.col(i) = P.col(idx[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(s + 1, s + 1);
    K.topLeftCorner(s, s) = PS.transpose() * PS;
    K.topRightCorner(s, 1).setOnes();
    K.bottomLeftCorner(1, s).setOnes();
    Eigen::VectorXd rhs(s + 1);
    rhs.head(s) = PS.transpose() * t;
    rhs[s] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd a = sol.head(s);
    if (a.minCoeff() < -1e-12) continue;
    const Eigen::VectorXd p = PS * a;
    const double dist = (p - t).norm();
    if (dist < best.distance) {
      best.distance = dist;
      best.point = p;
    }
  }
  return best;
}

// Largest distance from a point of W to co(V), by the oracle.
inline double brute_deviation(const Eigen::MatrixXd& W, const Eigen::MatrixXd& V) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < W.cols(); ++c) worst = std::max(worst, qp_projection(W.col(c), V).distance);
  return worst;
}

inline GridFunction random_grid_function(std::mt19937& rng, const TimeGrid& grid, int d, double scale) {
  GridFunction f(grid, d);
  for (int k = 0; k < grid.size(); ++k) f.values().row(k) = random_vector(rng, d, scale).transpose();
  return f;
}

inline EvalState random_state(std::mt19937& rng, const ProblemSpec& spec, double scale = 2.0) {
  const TimeGrid grid(spec.horizon, spec.solver.n_grid);
  return EvalState(spec, random_grid_function(rng, grid, spec.n, scale), random_grid_function(rng, grid, spec.n, scale),
                   random_grid_function(rng, grid, spec.nu, scale));
}

// Gap between the two extreme entries; infinite for a single entry.
inline double top_gap(std::vector<double> v, bool largest) {
  if (v.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end());
  return largest ? v[v.size() - 1] - v[v.size() - 2] : v[1] - v[0];
}

// Smallest distance of the state to any kink of the merit integrand or cost:
// ties between max or min branches, the switch of psi*, the h = 0 corner, and
// the sign of the coordinates listed in `sign_coords` (for sgn inside equations).
inline double branch_margin(const EvalState& s, std::span<const int> sign_coords = {}) {
  const ProblemSpec& spec = s.spec();
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.grid().size(); ++k) {
    const Eigen::VectorXd x = s.x().node_value(k);
    const Eigen::VectorXd z = s.z().node_value(k);
    const Eigen::VectorXd u = s.u().node_value(k);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    const std::span<const double> us(u.data(), static_cast<std::size_t>(u.size()));
    for (int c : sign_coords) margin = std::min(margin, std::abs(x[c]));
    auto term_gaps = [&](const SupportModel& m, std::span<const double> psi) {
      const Point p{xs, psi, us, 0.0};
      for (const auto& term : m.max_terms) {
        std::vector<double> v;
        for (const auto& f : term) v.push_back(eval_max_branch(m, f, p));
        margin = std::min(margin, top_gap(v, true));
      }
      for (const auto& term : m.min_terms) {
        std::vector<double> v;
        for (const auto& f : term) v.push_back(f.value(p));
        margin = std::min(margin, top_gap(v, false));
      }
    };
    if (spec.sphere_mode()) {
      const Eigen::VectorXd psi = s.psi().row(k).transpose();
      if (s.h()(k, 0) > 0) term_gaps(*spec.sphere, {psi.data(), static_cast<std::size_t>(psi.size())});
      margin = std::min(margin, s.h()(k, 0) > 0 ? s.h()(k, 0) : 1.0);
    } else {
      for (const auto& ch : spec.channels) {
        if (ch.kind == Channel::Kind::Equation) continue;
        const double zi = z[ch.coordinate];
        const double plus[1] = {1.0};
        const double minus[1] = {-1.0};
        const double lp = zi - eval_support(ch.support, xs, plus, us);
        const double lm = -zi - eval_support(ch.support, xs, minus, us);
        margin = std::min(margin, std::abs(std::max(lp, lm)));
        if (std::max(lp, lm) > 0) {
          margin = std::min(margin, std::abs(lp - lm));
          term_gaps(ch.support, lp >= lm ? std::span<const double>(plus) : std::span<const double>(minus));
        }
      }
    }
    if (spec.has_cost()) {
      const Point p{xs, {}, us, 0.0};
      for (const auto& term : spec.cost) {
        std::vector<double> v;
        for (const auto& f : term) v.push_back(f.value(p));
        margin = std::min(margin, top_gap(v, true));
      }
    }
  }
  return margin;
}

// Quasidifferential directional derivative of the discrete objective along g,
// sum_k w_k (max_A <v, g_k> + min_B <w, g_k>).
inline double quasi_derivative(const EvalState& s, const GridFunction& g) {
  const Eigen::VectorXd w = s.grid().trapezoid_weights();
  double total = 0.0;
  for (int k = 0; k < s.grid().size(); ++k)
    total += w[k] * assemble_pointwise(s, k).directional_derivative(g.node_value(k));
  return total;
}

inline EvalState shifted(const EvalState& s, const GridFunction& g, double eps) {
  const int n = s.spec().n;
  const int nu = s.spec().nu;
  const TimeGrid& grid = s.grid();
  GridFunction gx(grid, g.values().leftCols(n));
  GridFunction gz(grid, g.values().middleCols(n, n));
  GridFunction gu(grid, g.values().rightCols(nu));
  return EvalState(s.spec(), axpy(eps, gx, s.x()), axpy(eps, gz, s.z()), axpy(eps, gu, s.u()));
}

inline double central_difference(const EvalState& s, const GridFunction& g, double eps = 1e-6) {
  return (eval_objective(shifted(s, g, eps)) - eval_objective(shifted(s, g, -eps))) / (2 * eps);
}

inline double forward_difference(const EvalState& s, const GridFunction& g, double eps = 1e-7) {
  return (eval_objective(shifted(s, g, eps)) - eval_objective(s)) / eps;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace qdi::testing

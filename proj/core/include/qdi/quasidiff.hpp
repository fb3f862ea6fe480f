#pragma once

// Pointwise quasidifferential (A, B) of the merit integrand at a grid node.
// Vectors live in R^d, d = 2n + nu, with slots ordered x | z | u.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdi/functional.hpp"

namespace qdi {

inline constexpr std::size_t kMaxCombinations = 4096;

/// base + sum_j co(generator set j), kept in generator form.
class GeneratorPolytope {
 public:
  explicit GeneratorPolytope(int dimension = 0);

  int dimension() const { return static_cast<int>(base_.size()); }
  const Eigen::VectorXd& base() const { return base_; }
  Eigen::VectorXd& base() { return base_; }

  /// Each matrix is d x m, one point per column.
  const std::vector<Eigen::MatrixXd>& generators() const { return sets_; }

  /// Adds co(points). Points closer than 1e-12 are merged; a singleton is folded into the base.
  void add_generator_set(std::span<const Eigen::VectorXd> points);

  GeneratorPolytope& operator+=(const GeneratorPolytope& other);
  GeneratorPolytope scaled(double c) const;
  GeneratorPolytope negated() const { return scaled(-1.0); }

  /// Product of generator set sizes (1 for a single point).
  std::size_t combination_count() const;

  /// base plus every choice of one point per set, as columns, in odometer order
  /// (last set varies fastest). Throws NumericalError beyond `cap` combinations.
  Eigen::MatrixXd enumerate_points(std::size_t cap = kMaxCombinations) const;

  /// max over the set of <p, g>.
  double support(const Eigen::VectorXd& g) const;

  bool is_point() const { return sets_.empty(); }

 private:
  Eigen::VectorXd base_;
  std::vector<Eigen::MatrixXd> sets_;
};

struct QuasiDiffPair {
  GeneratorPolytope A;  // subdifferential
  GeneratorPolytope B;  // superdifferential

  /// max_A <v, g> + min_B <w, g>.
  double directional_derivative(const Eigen::VectorXd& g) const;
};

/// Indices within delta of the maximum (minimum). Throws std::invalid_argument on empty input.
std::vector<int> delta_active_max(std::span<const double> values, double delta);
std::vector<int> delta_active_min(std::span<const double> values, double delta);

/// One node's data: x, z (size n) and u (size nu).
struct NodeInput {
  std::span<const double> x;
  std::span<const double> z;
  std::span<const double> u;

  int n() const { return static_cast<int>(x.size()); }
  int nu() const { return static_cast<int>(u.size()); }
  int dimension() const { return 2 * n() + nu(); }
};

/// Superdifferential of h_i^2 / 2 for a per-coordinate channel: base h psi e_{n+i}
/// plus one set {-h psi grad f_q : q delta-active} per max-term. Zero for h = 0
/// and for equation channels.
GeneratorPolytope superdiff_h2(const Channel& channel, const NodeInput& at, double psi, double h, double delta);

/// Subdifferential of h_i^2 / 2: one set {-h grad g_p(x, psi) : p delta-active} per
/// min-term. Equation channels give the single point h psi (e_{n+i} - grad rhs).
GeneratorPolytope subdiff_h2(const Channel& channel, const NodeInput& at, double psi, double h, double delta);

/// Sphere-mode counterparts, with psi the maximizing unit vector.
GeneratorPolytope superdiff_h2_sphere(const SupportModel& model, const NodeInput& at,
                                      const Eigen::VectorXd& psi, double h, double delta);
GeneratorPolytope subdiff_h2_sphere(const SupportModel& model, const NodeInput& at,
                                    const Eigen::VectorXd& psi, double h, double delta);

/// Convex subdifferential of sum_j max_q c_jq(x, u): gradients of the delta-active branches.
GeneratorPolytope subdiff_cost(const std::vector<SupportModel::Term>& cost, const NodeInput& at, double delta);

/// (A, B) at node k. With a cost term every I contribution is scaled by lambda.
/// Domain errors are rethrown with the node index.
QuasiDiffPair assemble_pointwise(const EvalState& s, int k);

/// Human-readable listing: dimension, base and generator sets of A and B.
void dump(std::ostream& os, const QuasiDiffPair& pair);

}  // namespace qdi

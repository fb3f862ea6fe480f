#pragma once

#include <Eigen/Dense>

#include "qdi/quasidiff.hpp"

namespace qdi {

struct NearestPoint {
  Eigen::VectorXd point;
  double distance = 0.0;
  Eigen::VectorXd weights;  // convex weights over the cloud columns
};

/// Euclidean projection of `target` onto co(cloud columns) by Wolfe's
/// minimum-norm-point algorithm. Stops when ||x||^2 - min_j <x, p_j> <= 1e-10 max_j ||p_j||^2
/// (points shifted by the target). Throws NumericalError after 10^4 iterations.
NearestPoint nearest_point(const Eigen::VectorXd& target, const Eigen::MatrixXd& cloud);

struct Deviation {
  double value = 0.0;
  Eigen::VectorXd worst;       // point of the first set farthest from the second
  Eigen::VectorXd projection;  // its nearest point in the second set
};

/// max over enumerated points w of `from` of dist(w, co(to)). Ties keep the first point.
Deviation hausdorff_deviation(const GeneratorPolytope& from, const GeneratorPolytope& to);

struct NodeDirection {
  Eigen::VectorXd G;
  double deviation = 0.0;
};

/// Worst point b of -B, its projection a onto A; G = b - a and deviation = |b - a|.
NodeDirection node_direction(const QuasiDiffPair& pair);

}  // namespace qdi

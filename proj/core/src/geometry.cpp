#include "qdi/geometry.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace qdi {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kGapTolerance = 1e-10;
constexpr double kWeightFloor = 1e-15;

// Minimum-norm point of the affine hull of the selected columns, as weights summing to 1.
Eigen::VectorXd affine_min_norm(const Eigen::MatrixXd& P, const std::vector<int>& corral) {
  const auto m = static_cast<Eigen::Index>(corral.size());
  Eigen::VectorXd alpha(m);
  if (m == 1) {
    alpha[0] = 1.0;
    return alpha;
  }
  const Eigen::VectorXd p0 = P.col(corral[0]);
  Eigen::MatrixXd D(P.rows(), m - 1);
  for (Eigen::Index i = 1; i < m; ++i) D.col(i - 1) = P.col(corral[static_cast<std::size_t>(i)]) - p0;
  const Eigen::VectorXd beta = D.colPivHouseholderQr().solve(-p0);
  alpha[0] = 1.0 - beta.sum();
  alpha.tail(m - 1) = beta;
  return alpha;
}

}  // namespace

NearestPoint nearest_point(const Eigen::VectorXd& target, const Eigen::MatrixXd& cloud) {
  if (cloud.cols() == 0) throw std::invalid_argument("nearest_point: empty cloud");
  if (cloud.rows() != target.size()) throw std::invalid_argument("nearest_point: dimension mismatch");
  const Eigen::MatrixXd P = cloud.colwise() - target;
  const double scale = std::max(P.colwise().squaredNorm().maxCoeff(), 1e-300);

  std::vector<int> corral;
  std::vector<double> lambda;
  Eigen::Index start = 0;
  P.colwise().squaredNorm().minCoeff(&start);
  corral.push_back(static_cast<int>(start));
  lambda.push_back(1.0);
  Eigen::VectorXd x = P.col(start);

  int iter = 0;
  for (;; ++iter) {
    if (iter >= kMaxIterations)
      throw NumericalError("nearest_point: no convergence after " + std::to_string(kMaxIterations) +
                           " iterations (" + std::to_string(cloud.cols()) + " points, dimension " +
                           std::to_string(cloud.rows()) + ", |x| = " + std::to_string(x.norm()) + ")");
    Eigen::Index j = 0;
    const double lowest = (P.transpose() * x).minCoeff(&j);
    if (x.squaredNorm() - lowest <= kGapTolerance * scale) break;
    if (std::find(corral.begin(), corral.end(), static_cast<int>(j)) != corral.end()) break;
    corral.push_back(static_cast<int>(j));
    lambda.push_back(0.0);

    for (;;) {
      const Eigen::VectorXd alpha = affine_min_norm(P, corral);
      if (alpha.minCoeff() > kWeightFloor) {
        lambda.assign(alpha.data(), alpha.data() + alpha.size());
        break;
      }
      // Step from lambda toward alpha until the first weight hits zero, then drop it.
      double theta = 1.0;
      for (std::size_t i = 0; i < corral.size(); ++i) {
        const double a = alpha[static_cast<Eigen::Index>(i)];
        if (a <= kWeightFloor) theta = std::min(theta, lambda[i] / (lambda[i] - a));
      }
      std::vector<int> next_corral;
      std::vector<double> next_lambda;
      for (std::size_t i = 0; i < corral.size(); ++i) {
        const double w = lambda[i] + theta * (alpha[static_cast<Eigen::Index>(i)] - lambda[i]);
        if (w > kWeightFloor) {
          next_corral.push_back(corral[i]);
          next_lambda.push_back(w);
        }
      }
      if (next_corral.empty()) {  // rounding only; keep the newest point
        next_corral.push_back(corral.back());
        next_lambda.push_back(1.0);
      }
      corral = std::move(next_corral);
      lambda = std::move(next_lambda);
      if (++iter >= kMaxIterations) break;
    }
    x.setZero();
    for (std::size_t i = 0; i < corral.size(); ++i) x += lambda[i] * P.col(corral[i]);
  }

  NearestPoint out;
  out.weights = Eigen::VectorXd::Zero(cloud.cols());
  double total = 0.0;
  for (double w : lambda) total += w;
  for (std::size_t i = 0; i < corral.size(); ++i) out.weights[corral[i]] = lambda[i] / total;
  out.point = cloud * out.weights;
  out.distance = (out.point - target).norm();
  return out;
}

Deviation hausdorff_deviation(const GeneratorPolytope& from, const GeneratorPolytope& to) {
  if (from.dimension() != to.dimension()) throw std::invalid_argument("hausdorff_deviation: dimension mismatch");
  const Eigen::MatrixXd W = from.enumerate_points();
  const Eigen::MatrixXd V = to.enumerate_points();
  Deviation out;
  out.value = -1.0;
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    const Eigen::VectorXd w = W.col(c);
    NearestPoint np = V.cols() == 1 ? NearestPoint{V.col(0), (V.col(0) - w).norm(), {}} : nearest_point(w, V);
    if (np.distance > out.value) {
      out.value = np.distance;
      out.worst = w;
      out.projection = std::move(np.point);
    }
  }
  return out;
}

NodeDirection node_direction(const QuasiDiffPair& pair) {
  const Deviation dev = hausdorff_deviation(pair.B.negated(), pair.A);
  return {dev.worst - dev.projection, dev.value};
}

}  // namespace qdi

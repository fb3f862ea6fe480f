#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qdi {

/// Uniform partition t_k = k T / (N - 1), k = 0..N-1.
class TimeGrid {
 public:
  TimeGrid(double horizon, int nodes);

  double horizon() const { return horizon_; }
  int size() const { return nodes_; }
  double step() const { return horizon_ / (nodes_ - 1); }
  double node(int k) const { return k == nodes_ - 1 ? horizon_ : k * step(); }

  /// Composite trapezoid weights (h/2, h, ..., h, h/2).
  Eigen::VectorXd trapezoid_weights() const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.horizon_ == b.horizon_ && a.nodes_ == b.nodes_;
  }

 private:
  double horizon_;
  int nodes_;
};

/// Vector function sampled on a TimeGrid, read as its piecewise-linear interpolant.
/// values() is N x d: one row per node.
class GridFunction {
 public:
  GridFunction(TimeGrid grid, int components);
  GridFunction(TimeGrid grid, Eigen::MatrixXd values);

  const TimeGrid& grid() const { return grid_; }
  int components() const { return static_cast<int>(values_.cols()); }
  int size() const { return static_cast<int>(values_.rows()); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  Eigen::VectorXd node_value(int k) const { return values_.row(k).transpose(); }

  /// Linear interpolant at t. Throws std::out_of_range outside [0, T].
  Eigen::VectorXd operator()(double t) const;

 private:
  TimeGrid grid_;
  Eigen::MatrixXd values_;
};

/// Trapezoid prefix sums: row k holds the integral of z over [0, t_k].
GridFunction cumulative_integral(const GridFunction& z);

/// Composite trapezoid integral of every component over [0, T].
Eigen::VectorXd quadrature(const GridFunction& f);

/// Quadrature of a single-component function.
double quadrature_scalar(const GridFunction& f);

struct Sample {
  double t;
  Eigen::VectorXd value;
};

/// Piecewise-linear function through samples taken at every node of `grid`.
GridFunction interpolate_directions(const TimeGrid& grid, std::span<const Sample> samples);

/// Nodewise a * x + y. Throws std::invalid_argument on grid or width mismatch.
GridFunction axpy(double a, const GridFunction& x, const GridFunction& y);

/// Trapezoid L2 inner product and norm (the metric the descent works in).
double inner_product(const GridFunction& a, const GridFunction& b);
double l2_norm(const GridFunction& f);

/// Exact L2 norm of the piecewise-linear interpolant.
double l2_norm_interpolant(const GridFunction& f);

/// Columns side by side; all inputs must share a grid.
GridFunction hstack(std::span<const GridFunction* const> parts);

struct CsvTable {
  std::vector<std::string> header;  // header[0] == "t"
  Eigen::MatrixXd rows;             // includes the t column
};

/// Header "t,<names>", one row per node, 12 significant digits.
void write_csv(std::ostream& os, std::span<const std::string> names, const GridFunction& f);

CsvTable read_csv(std::istream& is);

}  // namespace qdi

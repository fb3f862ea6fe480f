#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "qdi/trajectory.hpp"
#include "support.hpp"

using namespace qdi;

namespace {

GridFunction sample(const TimeGrid& grid, int d, const std::function<double(double, int)>& f) {
  GridFunction g(grid, d);
  for (int k = 0; k < grid.size(); ++k)
    for (int c = 0; c < d; ++c) g.values()(k, c) = f(grid.node(k), c);
  return g;
}

// Squared L2 distance between the interpolant of f and g on [0, T], by
// 3-point Gauss-Legendre on every piece between nodes and breakpoints.
double squared_error(const GridFunction& f, const std::function<double(double)>& g, std::vector<double> breaks) {
  const double nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  for (int k = 0; k < f.size(); ++k) breaks.push_back(f.grid().node(k));
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (b - a <= 0) continue;
    for (int q = 0; q < 3; ++q) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * nodes[q];
      const double e = f(t)[0] - g(t);
      total += 0.5 * (b - a) * weights[q] * e * e;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("grid nodes and weights") {
  const TimeGrid grid(1.0, 11);
  CHECK(grid.step() == doctest::Approx(0.1));
  CHECK(grid.node(10) == 1.0);
  const Eigen::VectorXd w = grid.trapezoid_weights();
  CHECK(w[0] == doctest::Approx(0.05));
  CHECK(w[5] == doctest::Approx(0.1));
  CHECK(w.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(TimeGrid(0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(1.0, 1), std::invalid_argument);
}

TEST_CASE("quadrature is exact for linear functions and second order otherwise") {
  const TimeGrid grid(2.0, 9);
  const GridFunction lin = sample(grid, 1, [](double t, int) { return 3 * t - 1; });
  CHECK(quadrature_scalar(lin) == doctest::Approx(4.0));
  const GridFunction cum = cumulative_integral(lin);
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    CHECK(cum.values()(k, 0) == doctest::Approx(1.5 * t * t - t));
  }
  CHECK(cum.values()(grid.size() - 1, 0) == quadrature(lin)[0]);

  double previous = 1.0;
  for (int n : {11, 21, 41, 81}) {
    const GridFunction sq = sample(TimeGrid(1.0, n), 1, [](double t, int) { return std::sin(3 * t); });
    const double err = std::abs(quadrature_scalar(sq) - (1 - std::cos(3.0)) / 3);
    CHECK(err < previous / 3.5);
    previous = err;
  }
}

TEST_CASE("interpolation evaluates the piecewise-linear function") {
  const TimeGrid grid(1.0, 5);
  const GridFunction f = sample(grid, 2, [](double t, int c) { return c == 0 ? t * t : 1.0 - t; });
  CHECK(f(0.25)[0] == doctest::Approx(0.0625));
  CHECK(f(0.125)[0] == doctest::Approx(0.5 * 0.0625));
  CHECK(f(1.0)[1] == doctest::Approx(0.0));
  CHECK(f(0.6)[1] == doctest::Approx(0.4));
  CHECK_THROWS_AS(f(1.5), std::out_of_range);
  CHECK_THROWS_AS(f(-0.1), std::out_of_range);
}

TEST_CASE("interpolate_directions validates samples") {
  const TimeGrid grid(1.0, 3);
  std::vector<Sample> samples{{0.0, Eigen::Vector2d(1, 2)}, {0.5, Eigen::Vector2d(3, 4)}, {1.0, Eigen::Vector2d(5, 6)}};
  const GridFunction g = interpolate_directions(grid, samples);
  CHECK(g.values()(1, 1) == 4.0);
  samples[1].t = 0.4;
  CHECK_THROWS_AS(interpolate_directions(grid, samples), std::invalid_argument);
  samples.pop_back();
  CHECK_THROWS_AS(interpolate_directions(grid, samples), std::invalid_argument);
}

TEST_CASE("norms and inner products") {
  const TimeGrid grid(1.0, 11);
  const GridFunction one = sample(grid, 1, [](double, int) { return 1.0; });
  const GridFunction t = sample(grid, 1, [](double s, int) { return s; });
  CHECK(l2_norm(one) == doctest::Approx(1.0));
  CHECK(inner_product(one, t) == doctest::Approx(0.5));
  // Exact norm of the interpolant of t: sqrt(1/3).
  CHECK(l2_norm_interpolant(t) == doctest::Approx(std::sqrt(1.0 / 3.0)));
  const GridFunction s = axpy(2.0, t, one);
  CHECK(s.values()(10, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(axpy(1.0, t, GridFunction(TimeGrid(1.0, 5), 1)), std::invalid_argument);
}

TEST_CASE("csv round trip") {
  const TimeGrid grid(1.0, 6);
  const GridFunction f = sample(grid, 2, [](double t, int c) { return c ? std::exp(t) / 3 : -t / 7; });
  std::stringstream ss;
  const std::string names[] = {"a", "b"};
  write_csv(ss, names, f);
  const CsvTable table = read_csv(ss);
  REQUIRE(table.header.size() == 3);
  CHECK(table.header[0] == "t");
  CHECK(table.header[2] == "b");
  CHECK(table.rows.rows() == 6);
  for (int k = 0; k < 6; ++k)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(table.rows(k, c + 1) - f.values()(k, c)) <= 1e-12);

  std::stringstream bad("t,a\n0,1\n0.5,oops\n");
  CHECK_THROWS_AS(read_csv(bad), std::runtime_error);
  std::stringstream ragged("t,a\n0,1,2\n");
  CHECK_THROWS_AS(read_csv(ragged), std::runtime_error);
}

TEST_CASE("hstack joins columns") {
  const TimeGrid grid(1.0, 3);
  const GridFunction a = sample(grid, 1, [](double t, int) { return t; });
  const GridFunction b = sample(grid, 2, [](double, int c) { return c; });
  const GridFunction* parts[] = {&a, &b};
  const GridFunction s = hstack(parts);
  CHECK(s.components() == 3);
  CHECK(s.values()(2, 0) == 1.0);
  CHECK(s.values()(2, 2) == 1.0);
}

TEST_CASE("interpolation error of a step shrinks linearly in the squared norm") {
  // Squared L2 error of the interpolant of a unit step is h (th^3 + (1 - th)^3) / 3,
  // th the position of the jump inside its cell.
  for (double jump : {0.5, 1.0 / 3.0, 0.53}) {
    auto step = [jump](double t) { return t >= jump ? 1.0 : 0.0; };
    double previous = std::numeric_limits<double>::infinity();
    for (int n : {11, 21, 41, 81}) {
      const TimeGrid grid(1.0, n);
      const GridFunction f = sample(grid, 1, [&](double t, int) { return step(t); });
      const double err = squared_error(f, step, {jump});
      const double h = grid.step();
      const double th = jump / h - std::floor(jump / h + 1e-12);
      const double expected = th < 1e-9 ? h / 3 : h * (std::pow(th, 3) + std::pow(1 - th, 3)) / 3;
      CHECK(err == doctest::Approx(expected).epsilon(1e-9));
      CHECK(err < previous);
      previous = err;
    }
  }
}

TEST_CASE("smooth fields converge at second order") {
  double previous = 1.0;
  for (int n : {11, 21, 41, 81}) {
    const TimeGrid grid(1.0, n);
    auto g = [](double t) { return std::sin(4 * t); };
    const GridFunction f = sample(grid, 1, [&](double t, int) { return g(t); });
    const double err = squared_error(f, g, {});
    CHECK(err < previous / 10);
    previous = err;
  }
}

#include "qdi/trajectory.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qdi {

TimeGrid::TimeGrid(double horizon, int nodes) : horizon_(horizon), nodes_(nodes) {
  if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
  if (nodes < 2) throw std::invalid_argument("TimeGrid: need at least 2 nodes");
}

Eigen::VectorXd TimeGrid::trapezoid_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(nodes_, step());
  w[0] *= 0.5;
  w[nodes_ - 1] *= 0.5;
  return w;
}

GridFunction::GridFunction(TimeGrid grid, int components)
    : grid_(grid), values_(Eigen::MatrixXd::Zero(grid.size(), components)) {}

GridFunction::GridFunction(TimeGrid grid, Eigen::MatrixXd values) : grid_(grid), values_(std::move(values)) {
  if (values_.rows() != grid_.size())
    throw std::invalid_argument("GridFunction: " + std::to_string(values_.rows()) + " rows for " +
                                std::to_string(grid_.size()) + " nodes");
}

Eigen::VectorXd GridFunction::operator()(double t) const {
  const double T = grid_.horizon();
  if (!(t >= 0.0 && t <= T)) throw std::out_of_range("GridFunction: t = " + std::to_string(t) + " outside [0, T]");
  const double h = grid_.step();
  int k = static_cast<int>(std::floor(t / h));
  if (k >= grid_.size() - 1) k = grid_.size() - 2;
  const double s = (t - grid_.node(k)) / h;
  return ((1.0 - s) * values_.row(k) + s * values_.row(k + 1)).transpose();
}

GridFunction cumulative_integral(const GridFunction& z) {
  const double h = z.grid().step();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(z.size(), z.components());
  for (int k = 1; k < z.size(); ++k)
    out.row(k) = out.row(k - 1) + 0.5 * h * (z.values().row(k - 1) + z.values().row(k));
  return GridFunction(z.grid(), std::move(out));
}

Eigen::VectorXd quadrature(const GridFunction& f) {
  // Same accumulation order as cumulative_integral so both agree bit for bit.
  return cumulative_integral(f).values().row(f.size() - 1).transpose();
}

double quadrature_scalar(const GridFunction& f) {
  if (f.components() != 1) throw std::invalid_argument("quadrature_scalar: expected one component");
  return quadrature(f)[0];
}

GridFunction interpolate_directions(const TimeGrid& grid, std::span<const Sample> samples) {
  if (static_cast<int>(samples.size()) != grid.size())
    throw std::invalid_argument("interpolate_directions: need one sample per grid node");
  const int d = samples.empty() ? 0 : static_cast<int>(samples.front().value.size());
  Eigen::MatrixXd values(grid.size(), d);
  const double tol = 1e-12 * grid.horizon();
  for (int k = 0; k < grid.size(); ++k) {
    const Sample& s = samples[static_cast<std::size_t>(k)];
    if (std::abs(s.t - grid.node(k)) > tol)
      throw std::invalid_argument("interpolate_directions: sample " + std::to_string(k) + " is off the grid");
    if (s.value.size() != d) throw std::invalid_argument("interpolate_directions: ragged samples");
    values.row(k) = s.value.transpose();
  }
  return GridFunction(grid, std::move(values));
}

GridFunction axpy(double a, const GridFunction& x, const GridFunction& y) {
  if (!(x.grid() == y.grid())) throw std::invalid_argument("axpy: grid mismatch");
  if (x.components() != y.components()) throw std::invalid_argument("axpy: component mismatch");
  return GridFunction(y.grid(), a * x.values() + y.values());
}

double inner_product(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid()) || a.components() != b.components())
    throw std::invalid_argument("inner_product: shape mismatch");
  const Eigen::VectorXd w = a.grid().trapezoid_weights();
  return w.dot(a.values().cwiseProduct(b.values()).rowwise().sum());
}

double l2_norm(const GridFunction& f) { return std::sqrt(inner_product(f, f)); }

double l2_norm_interpolant(const GridFunction& f) {
  // On each interval the square of a linear function integrates to h (a^2 + ab + b^2) / 3.
  const double h = f.grid().step();
  const auto& v = f.values();
  double total = 0.0;
  for (int k = 0; k + 1 < f.size(); ++k) {
    const auto a = v.row(k);
    const auto b = v.row(k + 1);
    total += h * (a.squaredNorm() + a.dot(b) + b.squaredNorm()) / 3.0;
  }
  return std::sqrt(total);
}

GridFunction hstack(std::span<const GridFunction* const> parts) {
  if (parts.empty()) throw std::invalid_argument("hstack: nothing to stack");
  const TimeGrid grid = parts.front()->grid();
  int width = 0;
  for (const auto* p : parts) {
    if (!(p->grid() == grid)) throw std::invalid_argument("hstack: grid mismatch");
    width += p->components();
  }
  Eigen::MatrixXd values(grid.size(), width);
  int col = 0;
  for (const auto* p : parts) {
    values.middleCols(col, p->components()) = p->values();
    col += p->components();
  }
  return GridFunction(grid, std::move(values));
}

void write_csv(std::ostream& os, std::span<const std::string> names, const GridFunction& f) {
  if (static_cast<int>(names.size()) != f.components()) throw std::invalid_argument("write_csv: name count mismatch");
  os << "t";
  for (const auto& name : names) os << ',' << name;
  os << '\n';
  std::ostringstream line;
  line << std::setprecision(12);
  for (int k = 0; k < f.size(); ++k) {
    line.str({});
    line << f.grid().node(k);
    for (int c = 0; c < f.components(); ++c) line << ',' << f.values()(k, c);
    os << line.str() << '\n';
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: empty input");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      table.header.push_back(cell);
    }
  }
  if (table.header.empty() || table.header.front() != "t") throw std::runtime_error("csv: first column must be 't'");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (row.size() != table.header.size())
      throw std::runtime_error("csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(table.header.size()) + " fields, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  table.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

}  // namespace qdi

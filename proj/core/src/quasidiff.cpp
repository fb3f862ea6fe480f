#include "qdi/quasidiff.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace qdi {

namespace {

constexpr double kMergeTolerance = 1e-12;

std::span<const double> span_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Gradient of f placed in the x- and u-slots of a d-vector.
Eigen::VectorXd slot_gradient(const SmoothFunction& f, const Point& p, const NodeInput& at) {
  const int n = at.n();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(at.dimension());
  f.gradient(p, {g.data(), static_cast<std::size_t>(n)},
             {g.data() + 2 * n, static_cast<std::size_t>(at.nu())});
  return g;
}

DomainError at_node(const DomainError& err, int k) {
  return DomainError("node " + std::to_string(k) + ": " + err.message(), err.subexpression());
}

// For each term: values of every branch, delta-active filter, one generator set.
template <typename Value, typename Point_>
void add_term_sets(GeneratorPolytope& out, const std::vector<SupportModel::Term>& terms, bool maximize,
                   Value&& value, const Point_& p, const NodeInput& at, double scale, double delta) {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> points;
  for (const auto& term : terms) {
    values.clear();
    for (const auto& f : term) values.push_back(value(f));
    const auto active = maximize ? delta_active_max(values, delta) : delta_active_min(values, delta);
    points.clear();
    for (int q : active) points.push_back(scale * slot_gradient(term[static_cast<std::size_t>(q)], p, at));
    out.add_generator_set(points);
  }
}

}  // namespace

GeneratorPolytope::GeneratorPolytope(int dimension) : base_(Eigen::VectorXd::Zero(dimension)) {}

void GeneratorPolytope::add_generator_set(std::span<const Eigen::VectorXd> points) {
  if (points.empty()) throw std::invalid_argument("add_generator_set: empty set");
  std::vector<const Eigen::VectorXd*> kept;
  for (const auto& p : points) {
    if (p.size() != base_.size()) throw std::invalid_argument("add_generator_set: dimension mismatch");
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Eigen::VectorXd* q) {
      return (*q - p).lpNorm<Eigen::Infinity>() <= kMergeTolerance;
    });
    if (!dup) kept.push_back(&p);
  }
  if (kept.size() == 1) {
    base_ += *kept.front();
    return;
  }
  Eigen::MatrixXd set(base_.size(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) set.col(static_cast<Eigen::Index>(j)) = *kept[j];
  sets_.push_back(std::move(set));
}

GeneratorPolytope& GeneratorPolytope::operator+=(const GeneratorPolytope& other) {
  if (other.dimension() != dimension()) throw std::invalid_argument("GeneratorPolytope: dimension mismatch");
  base_ += other.base_;
  sets_.insert(sets_.end(), other.sets_.begin(), other.sets_.end());
  return *this;
}

GeneratorPolytope GeneratorPolytope::scaled(double c) const {
  GeneratorPolytope out(dimension());
  out.base_ = c * base_;
  if (c == 0.0) return out;
  out.sets_.reserve(sets_.size());
  for (const auto& s : sets_) out.sets_.push_back(c * s);
  return out;
}

std::size_t GeneratorPolytope::combination_count() const {
  std::size_t count = 1;
  for (const auto& s : sets_) {
    const auto m = static_cast<std::size_t>(s.cols());
    if (count > std::numeric_limits<std::size_t>::max() / m) return std::numeric_limits<std::size_t>::max();
    count *= m;
  }
  return count;
}

Eigen::MatrixXd GeneratorPolytope::enumerate_points(std::size_t cap) const {
  const std::size_t count = combination_count();
  if (count > cap)
    throw NumericalError("generator polytope has " + std::to_string(count) + " point combinations (cap " +
                         std::to_string(cap) + ")");
  Eigen::MatrixXd out(base_.size(), static_cast<Eigen::Index>(count));
  std::vector<Eigen::Index> digit(sets_.size(), 0);
  for (std::size_t c = 0; c < count; ++c) {
    Eigen::VectorXd p = base_;
    for (std::size_t j = 0; j < sets_.size(); ++j) p += sets_[j].col(digit[j]);
    out.col(static_cast<Eigen::Index>(c)) = p;
    for (std::size_t j = sets_.size(); j-- > 0;) {
      if (++digit[j] < sets_[j].cols()) break;
      digit[j] = 0;
    }
  }
  return out;
}

double GeneratorPolytope::support(const Eigen::VectorXd& g) const {
  double total = base_.dot(g);
  for (const auto& s : sets_) total += (s.transpose() * g).maxCoeff();
  return total;
}

double QuasiDiffPair::directional_derivative(const Eigen::VectorXd& g) const {
  return A.support(g) - B.support(-g);
}

std::vector<int> delta_active_max(std::span<const double> values, double delta) {
  if (values.empty()) throw std::invalid_argument("delta_active_max: no values");
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= best - delta) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> delta_active_min(std::span<const double> values, double delta) {
  if (values.empty()) throw std::invalid_argument("delta_active_min: no values");
  const double best = *std::min_element(values.begin(), values.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= best + delta) out.push_back(static_cast<int>(i));
  return out;
}

GeneratorPolytope superdiff_h2(const Channel& channel, const NodeInput& at, double psi, double h, double delta) {
  GeneratorPolytope out(at.dimension());
  if (h == 0.0 || channel.kind == Channel::Kind::Equation) return out;
  out.base()[at.n() + channel.coordinate] = h * psi;
  const double psi_arr[1] = {psi};
  const Point p{at.x, psi_arr, at.u, 0.0};
  add_term_sets(
      out, channel.support.max_terms, true, [&](const SmoothFunction& f) { return f.value(p) * psi; }, p, at,
      -h * psi, delta);
  return out;
}

GeneratorPolytope subdiff_h2(const Channel& channel, const NodeInput& at, double psi, double h, double delta) {
  GeneratorPolytope out(at.dimension());
  if (h == 0.0) return out;
  const double psi_arr[1] = {psi};
  const Point p{at.x, psi_arr, at.u, 0.0};
  if (channel.kind == Channel::Kind::Equation) {
    out.base() = -h * psi * slot_gradient(channel.rhs, p, at);
    out.base()[at.n() + channel.coordinate] += h * psi;
    return out;
  }
  add_term_sets(
      out, channel.support.min_terms, false, [&](const SmoothFunction& g) { return g.value(p); }, p, at, -h, delta);
  return out;
}

GeneratorPolytope superdiff_h2_sphere(const SupportModel& model, const NodeInput& at, const Eigen::VectorXd& psi,
                                      double h, double delta) {
  GeneratorPolytope out(at.dimension());
  if (h == 0.0) return out;
  out.base().segment(at.n(), at.n()) = h * psi;
  const Point p{at.x, span_of(psi), at.u, 0.0};
  add_term_sets(
      out, model.max_terms, true, [&](const SmoothFunction& f) { return f.value(p); }, p, at, -h, delta);
  return out;
}

GeneratorPolytope subdiff_h2_sphere(const SupportModel& model, const NodeInput& at, const Eigen::VectorXd& psi,
                                    double h, double delta) {
  GeneratorPolytope out(at.dimension());
  if (h == 0.0) return out;
  const Point p{at.x, span_of(psi), at.u, 0.0};
  add_term_sets(
      out, model.min_terms, false, [&](const SmoothFunction& g) { return g.value(p); }, p, at, -h, delta);
  return out;
}

GeneratorPolytope subdiff_cost(const std::vector<SupportModel::Term>& cost, const NodeInput& at, double delta) {
  GeneratorPolytope out(at.dimension());
  const Point p{at.x, {}, at.u, 0.0};
  add_term_sets(
      out, cost, true, [&](const SmoothFunction& c) { return c.value(p); }, p, at, 1.0, delta);
  return out;
}

QuasiDiffPair assemble_pointwise(const EvalState& s, int k) {
  const ProblemSpec& spec = s.spec();
  const int n = spec.n;
  const double delta = spec.solver.delta;
  const Eigen::VectorXd x = s.x().node_value(k);
  const Eigen::VectorXd z = s.z().node_value(k);
  const Eigen::VectorXd u = s.u().node_value(k);
  const NodeInput at{span_of(x), span_of(z), span_of(u)};
  const int d = at.dimension();

  QuasiDiffPair pair{GeneratorPolytope(d), GeneratorPolytope(d)};
  try {
    if (spec.sphere_mode()) {
      const Eigen::VectorXd psi = s.psi().row(k).transpose();
      const double h = s.h()(k, 0);
      pair.A += subdiff_h2_sphere(*spec.sphere, at, psi, h, delta);
      pair.B += superdiff_h2_sphere(*spec.sphere, at, psi, h, delta);
    } else {
      for (int i = 0; i < n; ++i) {
        const Channel& ch = spec.channels[static_cast<std::size_t>(i)];
        const double psi = s.psi()(k, i);
        const double h = s.h()(k, i);
        pair.A += subdiff_h2(ch, at, psi, h, delta);
        pair.B += superdiff_h2(ch, at, psi, h, delta);
      }
    }

    const SmoothGradients g = smooth_gradients(s, k);
    Eigen::VectorXd& base = pair.A.base();
    base.head(n) += g.omega_x + g.upsilon.head(n);
    base.segment(n, n) += g.chi_z + g.upsilon.tail(n);
    base.tail(spec.nu) += g.omega_u;

    if (spec.has_cost()) {
      pair.A = pair.A.scaled(spec.penalty);
      pair.B = pair.B.scaled(spec.penalty);
      pair.A += subdiff_cost(spec.cost, at, delta);
    }
  } catch (const DomainError& err) {
    throw at_node(err, k);
  }
  return pair;
}

namespace {

void dump_polytope(std::ostream& os, const char* name, const GeneratorPolytope& p) {
  auto row = [&](const Eigen::VectorXd& v) {
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ']';
  };
  os << name << ": base ";
  row(p.base());
  os << ", " << p.generators().size() << " generator set(s)\n";
  for (std::size_t j = 0; j < p.generators().size(); ++j) {
    const auto& set = p.generators()[j];
    os << "  set " << j + 1 << ':';
    for (Eigen::Index c = 0; c < set.cols(); ++c) {
      os << ' ';
      row(set.col(c));
    }
    os << '\n';
  }
}

}  // namespace

void dump(std::ostream& os, const QuasiDiffPair& pair) {
  const auto precision = os.precision(6);
  os << "dimension " << pair.A.dimension() << '\n';
  dump_polytope(os, "A", pair.A);
  dump_polytope(os, "B", pair.B);
  os.precision(precision);
}

}  // namespace qdi

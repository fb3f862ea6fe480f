#include "qdi/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace qdi {

namespace {

std::span<const double> span_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

constexpr double kGolden = 0.6180339887498949;
constexpr double kTieTolerance = 1e-6;
constexpr double kPolishWidth = 1e-8;
constexpr std::size_t kMaxPolished = 8;

// Maximizes f on [a, b] to the given width; returns (argmax, value).
template <typename F>
std::pair<double, double> golden_max(F&& f, double a, double b, double width) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > width) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

double lattice_offset(unsigned seed, double spacing) {
  if (seed == 0) return 0.0;
  std::mt19937 rng(seed);
  return std::uniform_real_distribution<double>(0.0, spacing)(rng);
}

struct Candidate {
  Eigen::VectorXd psi;
  double value;
  std::size_t order;  // position in sampling order
};

SpherePsiStar settle(std::vector<Candidate> refined, double window_angle, int n) {
  SpherePsiStar out;
  out.psi = Eigen::VectorXd::Unit(n, 0);
  if (refined.empty()) return out;
  const auto best = std::max_element(refined.begin(), refined.end(),
                                     [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  if (!(best->value > 0.0)) return out;

  // Near-ties: keep the earliest in sampling order, flag distinct ones.
  const Candidate* first = &*best;
  for (const auto& c : refined) {
    if (c.value >= best->value - kTieTolerance && c.order < first->order) first = &c;
  }
  for (const auto& c : refined) {
    if (c.value < best->value - kTieTolerance) continue;
    const double cosang = std::clamp(c.psi.dot(first->psi), -1.0, 1.0);
    if (std::acos(cosang) > window_angle) out.unique = false;
  }
  out.psi = first->psi;
  out.h = best->value;
  return out;
}

SpherePsiStar sphere_search_1d(const SupportModel& model, std::span<const double> x, std::span<const double> z,
                               std::span<const double> u) {
  SpherePsiStar out;
  out.psi = Eigen::VectorXd::Ones(1);
  double best = 0.0;
  for (double s : {1.0, -1.0}) {
    const double psi[1] = {s};
    const double l = z[0] * s - eval_support(model, x, psi, u);
    if (l > best) {
      best = l;
      out.psi[0] = s;
    }
  }
  out.h = best;
  return out;
}

SpherePsiStar sphere_search_2d(const SupportModel& model, std::span<const double> x, std::span<const double> z,
                               std::span<const double> u, const SolverParams& params) {
  const int m = params.sphere_samples;
  const double spacing = 2.0 * std::numbers::pi / m;
  const double offset = lattice_offset(params.seed, spacing);
  auto ell = [&](double theta) {
    const double psi[2] = {std::cos(theta), std::sin(theta)};
    return z[0] * psi[0] + z[1] * psi[1] - eval_support(model, x, psi, u);
  };

  std::vector<double> values(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) values[static_cast<std::size_t>(j)] = ell(offset + j * spacing);

  std::vector<std::size_t> peaks;
  for (int j = 0; j < m; ++j) {
    const double v = values[static_cast<std::size_t>(j)];
    const double left = values[static_cast<std::size_t>((j + m - 1) % m)];
    const double right = values[static_cast<std::size_t>((j + 1) % m)];
    if (v > left && v >= right) peaks.push_back(static_cast<std::size_t>(j));
  }
  if (peaks.empty()) peaks.push_back(0);  // constant on the circle
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  if (peaks.size() > kMaxPolished) peaks.resize(kMaxPolished);

  std::vector<Candidate> refined;
  for (std::size_t j : peaks) {
    const double center = offset + static_cast<double>(j) * spacing;
    auto [theta, value] = golden_max(ell, center - spacing, center + spacing, kPolishWidth);
    if (values[j] > value) {
      theta = center;
      value = values[j];
    }
    Eigen::VectorXd psi(2);
    psi << std::cos(theta), std::sin(theta);
    refined.push_back({std::move(psi), value, j});
  }
  return settle(std::move(refined), 2.0 * spacing, 2);
}

SpherePsiStar sphere_search_3d(const SupportModel& model, std::span<const double> x, std::span<const double> z,
                               std::span<const double> u, const SolverParams& params) {
  const int rings = params.sphere_polar;
  const int m = params.sphere_samples;
  const double dpolar = std::numbers::pi / rings;
  const double dazim = 2.0 * std::numbers::pi / m;
  const double offset = lattice_offset(params.seed, dazim);
  auto direction = [](double polar, double azim) {
    Eigen::VectorXd psi(3);
    psi << std::sin(polar) * std::cos(azim), std::sin(polar) * std::sin(azim), std::cos(polar);
    return psi;
  };
  auto ell = [&](double polar, double azim) {
    const Eigen::VectorXd psi = direction(polar, azim);
    return z[0] * psi[0] + z[1] * psi[1] + z[2] * psi[2] - eval_support(model, x, span_of(psi), u);
  };

  Eigen::MatrixXd values(rings, m);
  for (int i = 0; i < rings; ++i)
    for (int j = 0; j < m; ++j) values(i, j) = ell((i + 0.5) * dpolar, offset + j * dazim);

  struct Peak {
    int i, j;
    double v;
  };
  std::vector<Peak> peaks;
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = values(i, j);
      const bool up = i == 0 || v >= values(i - 1, j);
      const bool down = i == rings - 1 || v >= values(i + 1, j);
      const bool left = v > values(i, (j + m - 1) % m);
      const bool right = v >= values(i, (j + 1) % m);
      if (up && down && left && right) peaks.push_back({i, j, v});
    }
  }
  if (peaks.empty()) peaks.push_back({0, 0, values(0, 0)});
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.v > b.v; });
  if (peaks.size() > kMaxPolished) peaks.resize(kMaxPolished);

  std::vector<Candidate> refined;
  for (const auto& p : peaks) {
    double polar = (p.i + 0.5) * dpolar;
    double azim = offset + p.j * dazim;
    double value = p.v;
    double window = std::max(dpolar, dazim);
    // Cyclic golden-section in (polar, azimuth), shrinking the window each sweep.
    while (window > kPolishWidth) {
      auto [np, vp] = golden_max([&](double a) { return ell(a, azim); }, polar - window, polar + window,
                                 kPolishWidth);
      if (vp >= value) {
        polar = np;
        value = vp;
      }
      const double scale = std::max(std::abs(std::sin(polar)), 0.05);
      auto [na, va] = golden_max([&](double b) { return ell(polar, b); }, azim - window / scale,
                                 azim + window / scale, kPolishWidth);
      if (va >= value) {
        azim = na;
        value = va;
      }
      window *= 0.25;
    }
    refined.push_back({direction(polar, azim), value, static_cast<std::size_t>(p.i * m + p.j)});
  }
  return settle(std::move(refined), 2.0 * std::max(dpolar, dazim), 3);
}

DomainError at_node(const DomainError& err, int k) {
  return DomainError("node " + std::to_string(k) + ": " + err.message(), err.subexpression());
}

}  // namespace

PsiStar psi_star(const Channel& channel, std::span<const double> x_t, double z_i, std::span<const double> u_t) {
  if (channel.kind == Channel::Kind::Equation) {
    const double r = z_i - channel.rhs.value(Point{x_t, {}, u_t, 0.0});
    return {r >= 0.0 ? 1.0 : -1.0, std::abs(r)};
  }
  const double plus[1] = {1.0};
  const double minus[1] = {-1.0};
  const double l_plus = z_i - eval_support(channel.support, x_t, plus, u_t);
  const double l_minus = -z_i - eval_support(channel.support, x_t, minus, u_t);
  PsiStar out;
  if (l_plus <= 0.0 && l_minus <= 0.0) return out;
  if (l_minus > l_plus) {
    out.psi = -1.0;
    out.h = l_minus;
  } else {
    out.h = l_plus;
  }
  return out;
}

SpherePsiStar psi_star_sphere(const SupportModel& model, std::span<const double> x_t, std::span<const double> z_t,
                              std::span<const double> u_t, const SolverParams& params) {
  switch (z_t.size()) {
    case 1: return sphere_search_1d(model, x_t, z_t, u_t);
    case 2: return sphere_search_2d(model, x_t, z_t, u_t, params);
    case 3: return sphere_search_3d(model, x_t, z_t, u_t, params);
    default: throw ModelError("support", "sphere search needs 1 <= n <= 3");
  }
}

// ---------------------------------------------------------------------------
// EvalState

EvalState::EvalState(const ProblemSpec& spec, GridFunction x, GridFunction z, GridFunction u)
    : spec_(&spec), x_(std::move(x)), z_(std::move(z)), u_(std::move(u)), z_int_(z_.grid(), spec.n) {
  if (!(x_.grid() == z_.grid()) || !(x_.grid() == u_.grid()))
    throw std::invalid_argument("EvalState: x, z and u must share a grid");
  if (x_.components() != spec.n || z_.components() != spec.n || u_.components() != spec.nu)
    throw std::invalid_argument("EvalState: component counts do not match the problem dimensions");
  fill();
}

EvalState EvalState::initial(const ProblemSpec& spec) {
  const TimeGrid grid(spec.horizon, spec.solver.n_grid);
  GridFunction x(grid, spec.n);
  GridFunction z(grid, spec.n);
  GridFunction u(grid, spec.nu);
  auto fill_guess = [&](const std::vector<Expression>& guess, GridFunction& f) {
    for (int k = 0; k < grid.size(); ++k) {
      const Point p{{}, {}, {}, grid.node(k)};
      for (std::size_t c = 0; c < guess.size(); ++c) f.values()(k, static_cast<int>(c)) = eval(guess[c], p);
    }
  };
  if (spec.initial.x.empty()) {
    x.values().rowwise() = spec.x0.transpose();
  } else {
    fill_guess(spec.initial.x, x);
  }
  fill_guess(spec.initial.z, z);
  fill_guess(spec.initial.u, u);
  return EvalState(spec, std::move(x), std::move(z), std::move(u));
}

Eigen::VectorXd EvalState::decision(int k) const {
  const int n = spec_->n;
  Eigen::VectorXd v(2 * n + spec_->nu);
  v.head(n) = x_.values().row(k).transpose();
  v.segment(n, n) = z_.values().row(k).transpose();
  v.tail(spec_->nu) = u_.values().row(k).transpose();
  return v;
}

void EvalState::fill() {
  const ProblemSpec& spec = *spec_;
  const int N = x_.size();
  const int n = spec.n;

  z_int_ = cumulative_integral(z_);
  coupling_ = x_.values() - z_int_.values();
  coupling_.rowwise() -= spec.x0.transpose();

  const Eigen::VectorXd zq = z_int_.values().row(N - 1).transpose();
  terminal_.resize(static_cast<Eigen::Index>(spec.terminal.size()));
  for (std::size_t j = 0; j < spec.terminal.size(); ++j) {
    const auto& tc = spec.terminal[j];
    terminal_[static_cast<Eigen::Index>(j)] = spec.x0[tc.index] + zq[tc.index] - tc.value;
  }

  const int columns = spec.sphere_mode() ? 1 : n;
  h_.setZero(N, columns);
  psi_.setZero(N, n);
  nonunique_ = 0;
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd xk = x_.values().row(k).transpose();
    const Eigen::VectorXd zk = z_.values().row(k).transpose();
    const Eigen::VectorXd uk = u_.values().row(k).transpose();
    try {
      if (spec.sphere_mode()) {
        const SpherePsiStar ps = psi_star_sphere(*spec.sphere, span_of(xk), span_of(zk), span_of(uk), spec.solver);
        h_(k, 0) = ps.h;
        psi_.row(k) = ps.psi.transpose();
        if (!ps.unique) ++nonunique_;
      } else {
        for (int i = 0; i < n; ++i) {
          const PsiStar ps = psi_star(spec.channels[static_cast<std::size_t>(i)], span_of(xk), zk[i], span_of(uk));
          h_(k, i) = ps.h;
          psi_(k, i) = ps.psi;
        }
      }
    } catch (const DomainError& err) {
      throw at_node(err, k);
    }
  }

  // d upsilon_h / d z_m = -sum_k w_k r_k W_km with W the cumulative trapezoid
  // weights; dividing by w_m gives the representative in the trapezoid metric.
  const Eigen::VectorXd w = grid().trapezoid_weights();
  const double hstep = grid().step();
  upsilon_grad_z_.setZero(N, n);
  Eigen::RowVectorXd tail = Eigen::RowVectorXd::Zero(n);  // sum_{m > k} w_m r_m
  for (int k = N - 1; k >= 0; --k) {
    Eigen::RowVectorXd s = hstep * tail;
    if (k == 0) {
      s *= 0.5;
    } else {
      s += 0.5 * hstep * w[k] * coupling_.row(k);
    }
    upsilon_grad_z_.row(k) = -s / w[k];
    tail += w[k] * coupling_.row(k);
  }
}

// ---------------------------------------------------------------------------
// Functional terms

double eval_upsilon(const EvalState& s) {
  const Eigen::VectorXd w = s.grid().trapezoid_weights();
  return 0.5 * w.dot(s.coupling_residual().rowwise().squaredNorm());
}

double eval_chi(const EvalState& s) { return 0.5 * s.terminal_residual().squaredNorm(); }

double eval_omega(const EvalState& s) {
  const ProblemSpec& spec = s.spec();
  if (spec.surface.empty()) return 0.0;
  const Eigen::VectorXd w = s.grid().trapezoid_weights();
  double total = 0.0;
  for (int k = 0; k < s.grid().size(); ++k) {
    const Eigen::VectorXd xk = s.x().node_value(k);
    const Eigen::VectorXd uk = s.u().node_value(k);
    const Point p{span_of(xk), {}, span_of(uk), 0.0};
    double sq = 0.0;
    try {
      for (const auto& e : spec.surface) {
        const double v = e.value(p);
        sq += v * v;
      }
    } catch (const DomainError& err) {
      throw at_node(err, k);
    }
    total += w[k] * sq;
  }
  return 0.5 * total;
}

double eval_phi(const EvalState& s) {
  const Eigen::VectorXd w = s.grid().trapezoid_weights();
  return 0.5 * w.dot(s.h().rowwise().squaredNorm());
}

double eval_I(const EvalState& s) { return eval_phi(s) + eval_chi(s) + eval_omega(s) + eval_upsilon(s); }

double eval_cost(const EvalState& s) {
  const ProblemSpec& spec = s.spec();
  if (!spec.has_cost()) return 0.0;
  const Eigen::VectorXd w = s.grid().trapezoid_weights();
  double total = 0.0;
  for (int k = 0; k < s.grid().size(); ++k) {
    const Eigen::VectorXd xk = s.x().node_value(k);
    const Eigen::VectorXd uk = s.u().node_value(k);
    const Point p{span_of(xk), {}, span_of(uk), 0.0};
    double integrand = 0.0;
    try {
      for (const auto& term : spec.cost) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& f : term) best = std::max(best, f.value(p));
        integrand += best;
      }
    } catch (const DomainError& err) {
      throw at_node(err, k);
    }
    total += w[k] * integrand;
  }
  return total;
}

double eval_objective(const EvalState& s) {
  if (!s.spec().has_cost()) return eval_I(s);
  return eval_cost(s) + s.spec().penalty * eval_I(s);
}

ObjectiveTerms eval_terms(const EvalState& s) {
  ObjectiveTerms t;
  t.phi = eval_phi(s);
  t.chi = eval_chi(s);
  t.omega = eval_omega(s);
  t.upsilon = eval_upsilon(s);
  t.I = t.phi + t.chi + t.omega + t.upsilon;
  if (s.spec().has_cost()) {
    t.cost = eval_cost(s);
    t.objective = t.cost + s.spec().penalty * t.I;
  } else {
    t.objective = t.I;
  }
  return t;
}

SmoothGradients smooth_gradients(const EvalState& s, int k) {
  const ProblemSpec& spec = s.spec();
  const int n = spec.n;
  SmoothGradients g;
  g.chi_z = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < spec.terminal.size(); ++j)
    g.chi_z[spec.terminal[j].index] = s.terminal_residual()[static_cast<Eigen::Index>(j)];

  g.omega_x = Eigen::VectorXd::Zero(n);
  g.omega_u = Eigen::VectorXd::Zero(spec.nu);
  if (!spec.surface.empty()) {
    const Eigen::VectorXd xk = s.x().node_value(k);
    const Eigen::VectorXd uk = s.u().node_value(k);
    const Point p{span_of(xk), {}, span_of(uk), 0.0};
    Eigen::VectorXd gx(n);
    Eigen::VectorXd gu(spec.nu);
    try {
      for (const auto& e : spec.surface) {
        e.gradient(p, {gx.data(), static_cast<std::size_t>(n)}, {gu.data(), static_cast<std::size_t>(spec.nu)});
        const double v = e.value(p);
        g.omega_x += v * gx;
        g.omega_u += v * gu;
      }
    } catch (const DomainError& err) {
      throw at_node(err, k);
    }
  }

  g.upsilon.resize(2 * n);
  g.upsilon.head(n) = s.coupling_residual().row(k).transpose();
  g.upsilon.tail(n) = s.upsilon_z_gradient().row(k).transpose();
  return g;
}

double boundary_error(const EvalState& s) {
  const ProblemSpec& spec = s.spec();
  const int last = s.grid().size() - 1;
  double err = (s.x().values().row(0).transpose() - spec.x0).cwiseAbs().maxCoeff();
  for (std::size_t j = 0; j < spec.terminal.size(); ++j) {
    const auto& tc = spec.terminal[j];
    err = std::max(err, std::abs(s.x().values()(last, tc.index) - tc.value));
    err = std::max(err, std::abs(s.terminal_residual()[static_cast<Eigen::Index>(j)]));
  }
  return err;
}

}  // namespace qdi

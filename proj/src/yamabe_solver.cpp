#include "yamabe_solver.hpp"

#include <algorithm>
#include <array>
#include <boost/math/interpolators/quintic_hermite.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "error.hpp"

namespace isoyamabe {

namespace {

using Vec = std::vector<double>;

double spow(double x, double e) { return std::pow(std::abs(x), e) * (x < 0 ? -1.0 : 1.0); }

// Constraint measure: cell masses (interior) or trace areas (boundary).
Vec constraint_mass(const AssembledForms& f, Mode mode) {
  if (mode == Mode::interior) return f.mass;
  Vec d(f.size(), 0.0);
  for (std::size_t i : f.trace_indices()) d[i] = f.area[i];
  return d;
}

double power_sum(const Vec& d, const Vec& x, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (d[i] != 0.0) acc += d[i] * std::pow(std::abs(x[i]), s);
  return acc;
}

void normalize(Vec& x, const Vec& d, double s) {
  const double n = power_sum(d, x, s);
  require(n > 0.0 && std::isfinite(n), Errc::domain, "flow iterate has zero constraint norm");
  const double k = std::pow(n, -1.0 / s);
  for (auto& v : x) v *= k;
}

double lagrange_factor(const AssembledForms& f, Mode mode) {
  return mode == Mode::interior ? 1.0 : 1.0 / (2.0 * (f.dim - 1.0));
}

std::string describe(const Residuals& r) {
  std::ostringstream os;
  os.precision(3);
  os << "interior residual " << r.interior << ", boundary residual " << r.boundary_max;
  return os.str();
}

}  // namespace

Admissibility check_subcritical(const Profile& p, double s, Mode mode) {
  if (mode == Mode::boundary && p.boundary_count() == 0) {
    Admissibility a;
    a.reason = "boundary mode needs a boundary component";
    return a;
  }
  return check_subcritical(p.dim, p.k_f(), s, mode);
}

Admissibility check_subcritical(int n, int k, double s, Mode mode) {
  Admissibility a;
  if (n < 3) {
    a.reason = "dimension below 3";
    return a;
  }
  a.threshold = codim_threshold(n, k, mode);
  if (!(s >= 1.0) || !std::isfinite(s)) {
    a.reason = "exponent must be a finite number >= 1";
    return a;
  }
  if (a.threshold.unrestricted) {
    a.admissible = true;
    a.reason = "k(f) >= n - 2";
    return a;
  }
  a.admissible = s < a.threshold.value;
  std::ostringstream os;
  os << "s=" << s << (a.admissible ? " < " : " >= ") << a.threshold.value << " (k(f)=" << k << ")";
  a.reason = os.str();
  return a;
}

Residuals el_residual(const AssembledForms& f, const Vec& x, double s, double c, Mode mode) {
  return mode == Mode::interior ? system_residual(f, x, s, c, s, 0.0) : system_residual(f, x, s, 0.0, s, c);
}

Vec quotient_gradient(const AssembledForms& f, const Vec& x, double s, Mode mode) {
  require(x.size() == f.size(), Errc::invalid_argument, "grid function does not match the forms");
  const Vec d = constraint_mass(f, mode);
  const double n = power_sum(d, x, s);
  require(n > 0.0, Errc::domain, "quotient: zero denominator");
  const double e = f.energy(x);
  auto g = f.apply_energy(x);
  const double k = 2.0 / std::pow(n, 2.0 / s);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = k * (g[i] - e / n * d[i] * spow(x[i], s - 1.0));
  return g;
}

SolveReport minimize_quotient(const Profile& p, const Grid& grid, double s, Mode mode, const SolveOptions& opt) {
  return minimize_quotient(p, assemble(p, grid), s, mode, opt);
}

SolveReport minimize_quotient(const Profile& p, const AssembledForms& f, double s, Mode mode, const SolveOptions& opt) {
  const auto adm = check_subcritical(p, s, mode);
  require(adm.admissible, Errc::domain, "exponent not admissible: " + adm.reason);
  require(opt.max_iter >= 1, Errc::invalid_argument, "max_iter must be positive");
  if (mode == Mode::boundary) {
    const auto probe = conformal_eigen_probe(f);
    require(!probe.possibly_unbounded, Errc::domain,
            "boundary quotient possibly unbounded below (negative Dirichlet eigenvalue); refusing to minimize");
  }
  const std::size_t n = f.size();
  Vec x(n, 1.0);
  if (!opt.initial.empty()) {
    require(opt.initial.size() == n, Errc::invalid_argument, "initial guess does not match the grid");
    x = opt.initial;
    for (auto& v : x) v = std::abs(v);
  } else if (opt.seed) {
    std::mt19937_64 rng(*opt.seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    for (auto& v : x) v = dist(rng);
  }
  const Vec d = constraint_mass(f, mode);
  normalize(x, d, s);

  const auto A = f.energy_matrix();
  const auto P = flow_preconditioner(f, A);
  const double cf = lagrange_factor(f, mode);
  SolveReport rep;
  rep.mode = mode;
  rep.s = s;
  FlowProblem prob;
  prob.project = [&](Vec& v) { normalize(v, d, s); };
  prob.force = [&](const Vec& v, double J) {
    Vec r = A.apply(v);
    for (std::size_t i = 0; i < n; ++i) r[i] -= J * d[i] * std::pow(v[i], s - 1.0);
    return r;
  };
  prob.converged = [&](const Vec& v, double J, int it) {
    rep.residual = el_residual(f, v, s, J * cf, mode);
    rep.iterations = it;
    if (opt.keep_log) rep.log.push_back({it, J, rep.residual.interior, rep.residual.boundary_max, 0.0});
    return rep.residual.interior <= opt.tol_interior && rep.residual.boundary_max <= opt.tol_boundary;
  };
  prob.accepted = [&](const Vec&, double, int, double step) {
    if (opt.keep_log) rep.log.back().step = step;
  };
  prob.diagnostics = [&] { return describe(rep.residual); };
  prob.constraint_grad = [&](const Vec& v) {
    Vec g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = s * d[i] * std::pow(v[i], s - 1.0);
    return g;
  };
  prob.constraint_hess = [&](const Vec& v) {
    Vec h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = d[i] == 0.0 ? 0.0 : s * (s - 1.0) * d[i] * std::pow(v[i], s - 2.0);
    return h;
  };
  prob.merit = [&](const Vec& v) {
    const auto r = el_residual(f, v, s, f.energy(v) * cf, mode);
    return std::max(r.interior / opt.tol_interior, r.boundary_max / opt.tol_boundary);
  };
  run_flow(f, P, x, prob, opt.max_iter);
  rep.converged = true;
  const double J = f.energy(x);
  const double xmax = *std::max_element(x.begin(), x.end());
  const double xmin = *std::min_element(x.begin(), x.end());
  require(xmin >= 1e-8 * xmax, Errc::convergence, "minimizer lost positivity");
  rep.value = J;
  rep.lagrange_c = J * cf;
  rep.constant_quotient = quotient(f, f.constant(1.0), s, mode);
  rep.minimizer = f.to_grid_function(x);
  rep.x = std::move(x);
  return rep;
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

using State = std::array<double, 2>;

struct ShootSetup {
  const Profile& p;
  double s, c;
  Mode mode;
  double an;
  Side start, far;
  bool focal_start;
  double dir;   // dt/dsigma
  double te;    // start parameter
  double sig0;  // first integrated sigma
  double len;

  ShootSetup(const Profile& prof, double s_, double c_, Mode m)
      : p(prof), s(s_), c(c_), mode(m), an(conformal_a(prof.dim)) {
    require(p.boundary_count() > 0, Errc::invalid_argument, "shooting needs a boundary endpoint");
    if (p.is_focal(Side::left)) {
      start = Side::left;
    } else if (p.is_focal(Side::right)) {
      start = Side::right;
    } else {
      start = Side::left;
    }
    far = start == Side::left ? Side::right : Side::left;
    focal_start = p.is_focal(start);
    dir = start == Side::left ? 1.0 : -1.0;
    te = p.end_param(start);
    len = p.tb - p.ta;
    sig0 = focal_start ? 1e-4 * len : 0.0;
  }

  double t_of(double sig) const { return te + dir * sig; }

  double rhs_r(double t, double u) const {
    const double src = mode == Mode::interior ? c * spow(u, s - 1.0) : 0.0;
    return (src - p.s_g(t) * u) / an;
  }

  // Series u = u0 + u1 tau + u2 tau^2 at a focal endpoint, tau = t - te.
  std::array<double, 3> series(double u0) const {
    const double a0 = p.a(te), a1 = p.a.derivative(te), b1 = p.b.derivative(te);
    const double r0 = rhs_r(te, u0);
    const double ru = ((mode == Mode::interior ? c * (s - 1.0) * std::pow(std::abs(u0), s - 2.0) : 0.0) - p.s_g(te)) / an;
    const double rt = -p.s_g.derivative(te) * u0 / an;
    const double u1 = r0 / a0;
    const double u2 = (ru * u1 + rt - a1 * u1) / (2.0 * (a0 - b1));
    return {u0, u1, u2};
  }

  State initial(double u0) const {
    if (focal_start) {
      const auto k = series(u0);
      const double tau = dir * sig0;
      return {k[0] + k[1] * tau + k[2] * tau * tau, k[1] + 2.0 * k[2] * tau};
    }
    const double sg = p.end(start).orientation;
    const double h = boundary_mean_curvature(p, start);
    double rhs = -h * u0;
    if (mode == Mode::boundary) rhs += c * spow(u0, s - 1.0);
    return {u0, rhs * (p.dim - 2.0) / (2.0 * sg * std::sqrt(p.b(te)))};
  }

  void operator()(const State& y, State& dy, double sig) const {
    const double t = t_of(sig);
    if (!(std::abs(y[0]) < 1e100)) throw std::overflow_error("shooting solution blew up");
    const double upp = (p.a(t) * y[1] - rhs_r(t, y[0])) / p.b(t);
    dy[0] = dir * y[1];
    dy[1] = dir * upp;
  }

  double mismatch(const State& y) const {
    const double t = p.end_param(far);
    const double sg = p.end(far).orientation;
    double m = 2.0 / (p.dim - 2.0) * sg * std::sqrt(p.b(t)) * y[1] + boundary_mean_curvature(p, far) * y[0];
    if (mode == Mode::boundary) m -= c * spow(y[0], s - 1.0);
    return m;
  }
};

// Integrates to the far end, recording (sigma, state) at the requested sigmas.
State integrate(const ShootSetup& S, double u0, const Vec& sigmas, std::vector<State>* out) {
  namespace ode = boost::numeric::odeint;
  State y = S.initial(u0);
  Vec times;
  times.push_back(S.sig0);
  for (double v : sigmas)
    if (v > S.sig0) times.push_back(v);
  if (times.back() < S.len) times.push_back(S.len);
  State last = y;
  std::vector<State> rec;
  auto observe = [&](const State& st, double) {
    last = st;
    if (out) rec.push_back(st);
  };
  // recorded samples feed a Hermite interpolant, so step onto them rather than through dense output
  if (out) {
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    ode::integrate_times(stepper, std::cref(S), y, times.begin(), times.end(), 1e-3 * S.len, observe);
  } else {
    auto stepper = ode::make_dense_output(1e-12, 1e-12, ode::runge_kutta_dopri5<State>());
    ode::integrate_times(stepper, std::cref(S), y, times.begin(), times.end(), 1e-3 * S.len, observe);
  }
  if (out) *out = std::move(rec);
  return last;
}

double safe_mismatch(const ShootSetup& S, double u0) {
  try {
    const State y = integrate(S, u0, {}, nullptr);
    const double m = S.mismatch(y);
    return std::isfinite(m) ? m : std::numeric_limits<double>::quiet_NaN();
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

double shooting_mismatch(const Profile& p, double s, double c, Mode mode, double start_value) {
  require_yamabe_dimension(p.dim);
  const ShootSetup S(p, s, c, mode);
  return safe_mismatch(S, start_value);
}

ShootingResult shooting_solve(const Profile& p, double s, double c, Mode mode, double init, int samples) {
  require_yamabe_dimension(p.dim);
  require(samples >= 8, Errc::invalid_argument, "shooting needs at least 8 samples");
  require(std::isfinite(init) && init != 0.0, Errc::invalid_argument, "shooting start value must be nonzero");
  const ShootSetup S(p, s, c, mode);
  double u0 = init;
  double m = safe_mismatch(S, u0);
  require(std::isfinite(m), Errc::convergence, "shooting: integration failed at the initial value");
  int it = 0;
  for (; it < 60; ++it) {
    const double scale = std::max(1.0, std::abs(u0));
    if (std::abs(m) <= 1e-13 * scale) break;
    const double del = 1e-6 * scale;
    const double mp = safe_mismatch(S, u0 + del), mm = safe_mismatch(S, u0 - del);
    const double dm = (mp - mm) / (2.0 * del);
    require(std::isfinite(dm) && dm != 0.0, Errc::convergence,
            "shooting: singular Newton derivative; final mismatch " + std::to_string(m));
    double step = -m / dm;
    bool improved = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const double mt = safe_mismatch(S, u0 + step);
      if (std::isfinite(mt) && std::abs(mt) < std::abs(m)) {
        u0 += step;
        m = mt;
        improved = true;
        break;
      }
    }
    if (!improved || std::abs(step) <= 1e-14 * scale) break;
  }
  require(std::abs(m) <= 1e-9 * std::max(1.0, std::abs(u0)), Errc::convergence,
          "shooting: Newton did not converge; final mismatch " + std::to_string(m));

  ShootingResult res;
  res.start = S.start;
  res.start_value = u0;
  res.mismatch = m;
  res.newton_iterations = it;
  const auto N = static_cast<std::size_t>(samples);
  res.t.resize(N);
  for (std::size_t i = 0; i < N; ++i) res.t[i] = i + 1 == N ? p.tb : p.ta + (p.tb - p.ta) * static_cast<double>(i) / (N - 1);
  // sigma increases away from the start end
  Vec sig(N);
  for (std::size_t i = 0; i < N; ++i) sig[i] = std::abs(res.t[i] - S.te);
  Vec order = sig;
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  std::vector<State> states;
  integrate(S, u0, order, &states);
  // states[0] is sig0; then one per sigma > sig0, then possibly the appended end.
  Vec integrated;
  integrated.push_back(S.sig0);
  for (double v : order)
    if (v > S.sig0) integrated.push_back(v);
  const auto k = S.focal_start ? S.series(u0) : std::array<double, 3>{0, 0, 0};
  res.u.resize(N);
  res.du.resize(N);
  res.d2u.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (S.focal_start && sig[i] <= S.sig0) {
      const double tau = res.t[i] - S.te;
      res.u[i] = k[0] + k[1] * tau + k[2] * tau * tau;
      res.du[i] = k[1] + 2.0 * k[2] * tau;
      res.d2u[i] = 2.0 * k[2];
      continue;
    }
    const auto pos = std::lower_bound(integrated.begin(), integrated.end(), sig[i]) - integrated.begin();
    const auto& st = states[static_cast<std::size_t>(pos)];
    res.u[i] = st[0];
    res.du[i] = st[1];
    res.d2u[i] = (p.a(res.t[i]) * st[1] - S.rhs_r(res.t[i], st[0])) / p.b(res.t[i]);
  }
  return res;
}

ScalarCurve ShootingResult::curve() const {
  using Hermite = boost::math::interpolators::quintic_hermite<Vec>;
  auto h = std::make_shared<Hermite>(Vec(t), Vec(u), Vec(du), Vec(d2u));
  const double lo = t.front(), hi = t.back();
  auto clamp = [lo, hi](double x) { return std::clamp(x, lo, hi); };
  return ScalarCurve::function(
      "shooting", lo, hi, [h, clamp](double x) { return (*h)(clamp(x)); },
      [h, clamp](double x) { return h->prime(clamp(x)); }, [h, clamp](double x) { return h->double_prime(clamp(x)); });
}

Vec ShootingResult::sample(const AssembledForms& f) const {
  const auto c = curve();
  return f.sample([&](double x) { return c(x); });
}

// ---------------------------------------------------------------------------
// Constant curvature metrics

double unit_volume_factor(const Profile& p, const ScalarCurve& u) {
  const RadialWeight w(p);
  const double P = critical_p(p.dim);
  const double vol = w.integrate_panels([&](double t) { return std::pow(u(t), P); }, p.ta, p.tb);
  require(vol > 0.0 && std::isfinite(vol), Errc::domain, "conformal volume not positive");
  return std::pow(vol, -1.0 / P);
}

namespace {

ScalarCurve scaled_curve(ShootingResult r, double k) {
  for (Vec* v : {&r.u, &r.du, &r.d2u})
    for (auto& x : *v) x *= k;
  return r.curve();
}

double boundary_value(const Profile& q, Side s) {
  return q.end(s).mean_curvature.value_or(boundary_mean_curvature(q, s));
}

}  // namespace

CorollaryResult constant_curvature_metrics(const Profile& p, const Grid& grid, const SolveOptions& opt,
                                           bool override_finiteness) {
  require_yamabe_dimension(p.dim);
  require(p.k_f() >= 1, Errc::domain, "constant curvature metrics need k(f) >= 1");
  const double pn = critical_p(p.dim), pb = critical_p_boundary(p.dim);
  for (auto [s, mode] : {std::pair{pn, Mode::interior}, std::pair{pb, Mode::boundary}}) {
    const auto adm = check_subcritical(p, s, mode);
    require(adm.admissible, Errc::domain, std::string("critical exponent not admissible (") + to_string(mode) + "): " + adm.reason);
  }
  const auto f = assemble(p, grid);
  if (!override_finiteness) {
    const auto probe = conformal_eigen_probe(f);
    require(probe.finiteness_certified, Errc::domain,
            "boundary Yamabe constant not certified finite (negative Robin eigenvalue); pass the override to proceed");
  }
  CorollaryResult out;
  out.interior = minimize_quotient(p, f, pn, Mode::interior, opt);
  out.boundary = minimize_quotient(p, f, pb, Mode::boundary, opt);

  auto start_value = [&](const SolveReport& r) {
    const auto& gf = r.minimizer;
    return p.is_focal(Side::left) ? gf.left : (p.is_focal(Side::right) ? gf.right : gf.left);
  };
  const auto s1 = shooting_solve(p, pn, out.interior.lagrange_c, Mode::interior, start_value(out.interior));
  const auto s2 = shooting_solve(p, pb, out.boundary.lagrange_c, Mode::boundary, start_value(out.boundary));
  out.u1 = s1.curve();
  out.h1 = conformal_change(p, out.u1);
  const double kappa = unit_volume_factor(p, s2.curve());
  out.u2 = scaled_curve(s2, kappa);
  out.h2 = conformal_change(p, out.u2);
  out.h2_volume = RadialWeight(out.h2).total_volume();

  constexpr int kChecks = 301;  // interior points miss the shooting knots
  Vec s1v;
  for (int i = 0; i < kChecks; ++i) {
    const double t = i + 1 == kChecks ? p.tb : p.ta + (p.tb - p.ta) * i / (kChecks - 1.0);
    s1v.push_back(out.h1.s_g(t));
    out.h2_scalar_max = std::max(out.h2_scalar_max, std::abs(out.h2.s_g(t)));
  }
  double mean = 0.0;
  for (double v : s1v) mean += v;
  mean /= static_cast<double>(s1v.size());
  out.h1_scalar = mean;
  for (double v : s1v) out.h1_scalar_dev = std::max(out.h1_scalar_dev, std::abs(v - mean) / std::abs(mean));
  Vec h2v;
  for (Side sd : {Side::left, Side::right}) {
    if (!p.is_boundary(sd)) continue;
    out.h1_boundary_max = std::max({out.h1_boundary_max, std::abs(boundary_value(out.h1, sd)),
                                    std::abs(boundary_mean_curvature(out.h1, sd))});
    h2v.push_back(boundary_value(out.h2, sd));
    // declared and geometric values must agree
    out.h2_boundary_dev = std::max(out.h2_boundary_dev, std::abs(h2v.back() - boundary_mean_curvature(out.h2, sd)));
  }
  out.h2_mean_curvature = h2v.front();
  for (double v : h2v) out.h2_boundary_dev = std::max(out.h2_boundary_dev, std::abs(v - h2v.front()));
  out.ok = out.h1_scalar_dev <= 1e-5 && out.h1_boundary_max <= 1e-6 && out.h2_scalar_max <= 1e-5 &&
           out.h2_boundary_dev <= 1e-6 && std::abs(out.h2_volume - 1.0) <= 1e-8;
  require(out.ok, Errc::convergence,
          "constant curvature postconditions failed: s(h1) dev " + std::to_string(out.h1_scalar_dev) + ", h(h1) " +
              std::to_string(out.h1_boundary_max) + ", s(h2) " + std::to_string(out.h2_scalar_max) + ", h(h2) dev " +
              std::to_string(out.h2_boundary_dev) + ", vol(h2) " + std::to_string(out.h2_volume));
  return out;
}

}  // namespace isoyamabe

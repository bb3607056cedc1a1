#include "hanli.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "error.hpp"

namespace isoyamabe {

ConstraintSpec resolve_spec(const ConstraintSpec& spec, int n) {
  ConstraintSpec s = spec;
  if (s.p == 0.0) s.p = critical_p(n);
  if (s.q == 0.0) s.q = critical_p_boundary(n);
  require(s.a > 0.0 && std::isfinite(s.a), Errc::invalid_argument, "constraint needs a > 0");
  require(std::isfinite(s.b), Errc::invalid_argument, "constraint b must be finite");
  require(s.q < s.p && s.q >= 1.0, Errc::invalid_argument, "constraint exponents need 1 <= q < p");
  return s;
}

double constraint_value(const AssembledForms& f, const std::vector<double>& x, const ConstraintSpec& spec) {
  return spec.a * f.volume_power(x, spec.p) + spec.b * f.boundary_power(x, spec.q);
}

double constraint_project(const AssembledForms& f, const std::vector<double>& x, const ConstraintSpec& spec) {
  for (double v : x) require(v > 0.0, Errc::domain, "constraint projection needs a positive function");
  const double a = spec.a, b = spec.b, p = spec.p, q = spec.q;
  const double P = f.volume_power(x, p), Q = f.boundary_power(x, q);
  require(P > 0.0, Errc::domain, "constraint projection: zero volume norm");
  const double l0 = std::pow(1.0 / (a * P), 1.0 / p);
  if (b == 0.0 || Q == 0.0) return l0;
  auto F = [&](double l) { return a * P * std::pow(l, p) + b * Q * std::pow(l, q) - 1.0; };
  auto dF = [&](double l) { return a * P * p * std::pow(l, p - 1.0) + b * Q * q * std::pow(l, q - 1.0); };
  double lo = 0.0, hi = l0;
  if (b < 0.0) {
    // F decreases up to its unique minimum, then increases to infinity
    lo = std::pow(-b * Q * q / (a * P * p), 1.0 / (p - q));
    hi = std::max(2.0 * lo, l0);
    while (F(hi) < 0.0) hi *= 2.0;
  }
  std::uintmax_t iters = 200;
  auto br = boost::math::tools::toms748_solve(F, lo, hi, F(lo), F(hi), boost::math::tools::eps_tolerance<double>(52), iters);
  double l = 0.5 * (br.first + br.second);
  for (int k = 0; k < 2; ++k) {
    const double d = dF(l);
    if (d > 0.0) l -= F(l) / d;
  }
  return l;
}

namespace {

void check_hanli_preconditions(const Profile& p, const AssembledForms& f, const ConstraintSpec& s) {
  require_yamabe_dimension(p.dim);
  require(p.boundary_count() > 0, Errc::domain, "constrained problem needs a boundary component");
  const auto ai = check_subcritical(p, s.p, Mode::interior);
  const auto ab = check_subcritical(p, s.q, Mode::boundary);
  require(ai.admissible && ab.admissible, Errc::domain,
          "exponents not admissible: interior " + ai.reason + "; boundary " + ab.reason);
  const auto probe = conformal_eigen_probe(f);
  require(probe.lambda_robin > 0.0, Errc::domain, "constrained problem needs a positive Yamabe constant");
}

}  // namespace

HanLiResult minimize_constrained(const Profile& prof, const AssembledForms& f, const ConstraintSpec& spec_in,
                                 const SolveOptions& opt) {
  const auto spec = resolve_spec(spec_in, prof.dim);
  check_hanli_preconditions(prof, f, spec);
  const std::size_t n = f.size();
  std::vector<double> x(n, 1.0);
  if (!opt.initial.empty()) {
    require(opt.initial.size() == n, Errc::invalid_argument, "initial guess does not match the grid");
    x = opt.initial;
    for (auto& v : x) v = std::abs(v);
  } else if (opt.seed) {
    std::mt19937_64 rng(*opt.seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    for (auto& v : x) v = dist(rng);
  }
  const double a = spec.a, b = spec.b, p = spec.p, q = spec.q;
  const double bfac = 2.0 * (f.dim - 1.0);
  auto project = [&](std::vector<double>& v) {
    const double l = constraint_project(f, v, spec);
    for (auto& e : v) e *= l;
  };
  project(x);

  const auto A = f.energy_matrix();
  const auto P = flow_preconditioner(f, A);
  HanLiResult res;
  res.spec = spec;
  auto weight = [&](const std::vector<double>& v) {
    return a * p * f.volume_power(v, p) + b * q * f.boundary_power(v, q);
  };
  FlowProblem prob;
  prob.project = project;
  prob.force = [&](const std::vector<double>& v, double E) {
    auto r = A.apply(v);
    const double k = E / weight(v);
    for (std::size_t i = 0; i < n; ++i)
      r[i] -= k * (a * p * f.mass[i] * std::pow(v[i], p - 1.0) + b * q * f.area[i] * std::pow(v[i], q - 1.0));
    return r;
  };
  prob.converged = [&](const std::vector<double>& v, double E, int it) {
    res.max_infeasibility = std::max(res.max_infeasibility, std::abs(constraint_value(f, v, spec) - 1.0));
    const double w = weight(v);
    const double c1 = a * p * E / w, c2 = b * q * E / (bfac * w);
    res.residual = system_residual(f, v, p, c1, q, c2);
    res.iterations = it;
    if (opt.keep_log) res.log.push_back({it, E, res.residual.interior, res.residual.boundary_max, 0.0});
    return res.residual.interior <= opt.tol_interior && res.residual.boundary_max <= opt.tol_boundary;
  };
  prob.accepted = [&](const std::vector<double>&, double, int, double step) {
    if (opt.keep_log) res.log.back().step = step;
  };
  prob.diagnostics = [&] {
    std::ostringstream os;
    os.precision(3);
    os << "interior residual " << res.residual.interior << ", boundary residual " << res.residual.boundary_max;
    return os.str();
  };
  prob.constraint_grad = [&](const std::vector<double>& v) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
      g[i] = a * p * f.mass[i] * std::pow(v[i], p - 1.0) + b * q * f.area[i] * std::pow(v[i], q - 1.0);
    return g;
  };
  prob.constraint_hess = [&](const std::vector<double>& v) {
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i)
      h[i] = a * p * (p - 1.0) * f.mass[i] * std::pow(v[i], p - 2.0) +
             b * q * (q - 1.0) * f.area[i] * std::pow(v[i], q - 2.0);
    return h;
  };
  prob.merit = [&](const std::vector<double>& v) {
    const double E = f.energy(v), w = weight(v);
    const auto r = system_residual(f, v, p, a * p * E / w, q, b * q * E / (bfac * w));
    return std::max(r.interior / opt.tol_interior, r.boundary_max / opt.tol_boundary);
  };
  run_flow(f, P, x, prob, opt.max_iter);

  res.value = f.energy(x);
  res.A = weight(x);
  res.c1 = a * p * res.value / res.A;
  res.c2 = b * q * res.value / (bfac * res.A);
  require(res.c1 > 0.0, Errc::domain, "constrained minimizer has nonpositive interior constant");
  res.c_ab = res.c2 * std::pow(res.c1, (2.0 - q) / (p - 2.0));
  res.minimizer = f.to_grid_function(x);
  res.x = std::move(x);
  return res;
}

std::vector<CurveSample> c_curve(const Profile& prof, const AssembledForms& f,
                                 const std::vector<std::pair<double, double>>& path, const SolveOptions& opt) {
  const int n = prof.dim;
  const double pn = critical_p(n), qn = critical_p_boundary(n);
  std::vector<CurveSample> out;
  SolveOptions o = opt;
  for (auto [a, b] : path) {
    const auto r = minimize_constrained(prof, f, ConstraintSpec{a, b, 0.0, 0.0}, o);
    o.initial = r.x;
    CurveSample s;
    s.a = a;
    s.b = b;
    s.value = r.value;
    s.A = r.A;
    s.c = r.c_ab;
    s.residual = r.residual;
    const double rootY = std::sqrt(r.value);
    s.lower = b * rootY / (2.0 * n * std::sqrt(a));
    s.upper = b > 0.0 ? b * rootY / (2.0 * std::sqrt(n * (n - 1.0) * a)) : std::numeric_limits<double>::quiet_NaN();
    const double slack = 1e-10;
    s.lower_ok = s.c >= s.lower - slack * std::abs(s.lower);
    s.upper_ok = !(b > 0.0) || s.c <= s.upper + slack * std::abs(s.upper);
    s.sandwich_ok = b >= 0.0 ? (s.A >= qn * (1 - slack) && s.A <= pn * (1 + slack)) : s.A >= pn * (1 - slack);
    out.push_back(s);
  }
  return out;
}

PrescribedResult find_prescribed_mean_curvature(const Profile& prof, const AssembledForms& f, double c_target,
                                                double tol, const SolveOptions& opt) {
  require(std::isfinite(c_target), Errc::invalid_argument, "target mean curvature must be finite");
  require(prof.k_f() >= 1, Errc::domain, "prescribed mean curvature needs k(f) >= 1");
  PrescribedResult out;
  std::vector<double> warm;
  HanLiResult last;
  auto c_of = [&](double a, double b) {
    SolveOptions o = opt;
    o.initial = warm;
    last = minimize_constrained(prof, f, ConstraintSpec{a, b, 0.0, 0.0}, o);
    warm = last.x;
    ++out.evaluations;
    return last.c_ab;
  };
  const double ctol = tol * std::max(1.0, std::abs(c_target));

  // Illinois iteration on g(x) = c(point(x)) - target over a sign-changing bracket.
  auto illinois = [&](auto point, double x0, double g0, double x1, double g1) {
    int side = 0;
    for (int k = 0; k < 100; ++k) {
      const double xm = (x0 * g1 - x1 * g0) / (g1 - g0);
      const auto [a, b] = point(xm);
      const double gm = c_of(a, b) - c_target;
      if (std::abs(gm) <= ctol) return std::pair{a, b};
      if ((gm > 0.0) == (g1 > 0.0)) {
        x1 = xm;
        g1 = gm;
        if (side == -1) g0 *= 0.5;
        side = -1;
      } else {
        x0 = xm;
        g0 = gm;
        if (side == 1) g1 *= 0.5;
        side = 1;
      }
    }
    fail(Errc::convergence, "prescribed mean curvature: root iteration did not converge");
  };

  std::pair<double, double> ab{1.0, 0.0};
  if (c_target == 0.0) {
    c_of(1.0, 0.0);
    out.branch = "b=0";
  } else {
    const double sgn = c_target > 0.0 ? 1.0 : -1.0;
    const double landmark = c_of(1.0, sgn);
    const double g_land = landmark - c_target;
    if (std::abs(g_land) <= ctol) {
      ab = {1.0, sgn};
      out.branch = "b-sweep";
    } else if ((g_land > 0.0) == (sgn > 0.0)) {
      // target between c_{1,0} = 0 and the landmark
      out.branch = "b-sweep";
      ab = illinois([&](double b) { return std::pair{1.0, b}; }, 0.0, -c_target, sgn, g_land);
    } else {
      out.branch = "a-sweep";
      double la_prev = 0.0, g_prev = g_land, lo_c = landmark;
      bool found = false;
      for (int k = 1; k <= 40; ++k) {
        const double la = -k * std::log(2.0);
        const double g = c_of(std::exp(la), sgn) - c_target;
        lo_c = g + c_target;
        if (std::abs(g) <= ctol) {
          ab = {std::exp(la), sgn};
          found = true;
          break;
        }
        if ((g > 0.0) == (sgn > 0.0)) {
          ab = illinois([&](double x) { return std::pair{std::exp(x), sgn}; }, la_prev, g_prev, la, g);
          found = true;
          break;
        }
        la_prev = la;
        g_prev = g;
      }
      if (!found) {
        std::ostringstream os;
        os << "prescribed mean curvature: no bracket within the sweep budget (a down to 2^-40); attained c in ["
           << std::min(landmark, lo_c) << ", " << std::max(landmark, lo_c) << "]";
        fail(Errc::convergence, os.str());
      }
    }
    // make sure the reported solve belongs to the returned parameters
    if (last.spec.a != ab.first || last.spec.b != ab.second) c_of(ab.first, ab.second);
  }
  out.a = last.spec.a;
  out.b = last.spec.b;
  out.c = last.c_ab;
  const double k = std::pow(last.c1, 1.0 / (last.spec.p - 2.0));
  out.v = last.x;
  for (auto& v : out.v) v *= k;
  out.certificate = system_residual(f, out.v, last.spec.p, 1.0, last.spec.q, out.c);
  out.solve = std::move(last);
  return out;
}

}  // namespace isoyamabe

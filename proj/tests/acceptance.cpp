// Runs the acceptance criteria at their stated tolerances; one PASS/FAIL line each.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bifurcation.hpp"
#include "error.hpp"
#include "hanli.hpp"
#include "spectra.hpp"
#include "yamabe_solver.hpp"

using namespace isoyamabe;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sphere_area(int k) { return 2.0 * std::pow(M_PI, (k + 1) / 2.0) / std::tgamma((k + 1) / 2.0); }

Profile product_s2() { return make_product(make_hemisphere(2), 2, 2.0, 1.0); }

void spectral_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  auto p = make_hemisphere(3);
  const auto r = neumann_spectrum(p, build_grid(p, 4000), 3);
  const double secs = seconds_since(t0);
  const double e1 = rel(r.extrapolated[1], 8.0), e2 = rel(r.extrapolated[2], 24.0);
  o.detail << "mu1=" << r.extrapolated[1] << " (rel " << e1 << "), mu2=" << r.extrapolated[2] << " (rel " << e2
           << "), 4000 cells, " << secs << " s";
  o.check(e1 <= 1e-5, "mu1");
  o.check(e2 <= 1e-4, "mu2");
  o.check(secs < 5.0, "time");
}

void geometry_oracles(Outcome& o) {
  auto p = make_hemisphere(3);
  const RadialWeight w(p);
  double area = 0.0, dist = 0.0, curv = 0.0, weight = 0.0;
  for (double t : {0.0, 0.1, 0.33, 0.5, 0.9, 0.999}) {
    area = std::max(area, rel(w.level_area(t), sphere_area(2) * (1 - t * t)));
    weight = std::max(weight, std::abs(w(t) / w(0.0) - std::sqrt(1 - t * t)));
  }
  const double vol = rel(w.total_volume(), M_PI * M_PI);
  for (double t : {0.1, 0.5, 0.9}) dist = std::max(dist, rel(geodesic_distance(p, 0.0, t), std::asin(t)));
  dist = std::max(dist, rel(geodesic_distance(p, 0.0, 1.0), M_PI / 2));
  for (int n : {3, 4, 5}) {
    auto band = make_spherical_band(n, -0.9, 0.9);
    for (double t : {-0.8, -0.2, 0.5, 0.85}) curv = std::max(curv, rel(mean_curvature_of_level(band, t), (n - 1) * t / std::sqrt(1 - t * t)));
  }
  o.detail << "area " << area << ", volume " << vol << ", distance " << dist << ", mean curvature " << curv
           << ", weight " << weight;
  o.check(area <= 1e-8, "level area");
  o.check(vol <= 1e-8, "volume");
  o.check(dist <= 1e-8, "distance");
  o.check(curv <= 1e-8, "mean curvature");
  o.check(weight <= 1e-10, "weight");
}

void conformal_invariance(Outcome& o) {
  auto p = make_hemisphere(3);
  const double P = critical_p(3);
  auto u = ScalarCurve::polynomial({1.0, 0.2, 0.3, -0.25});
  auto q = conformal_change(p, u);
  auto phi = [](double t) { return 1.0 + 0.5 * t - 0.3 * t * t; };
  std::vector<double> err;
  for (int m : {128, 256, 512}) {
    auto fp = assemble(p, build_grid(p, m));
    auto fq = assemble(q, build_grid(q, m));
    const double jq = quotient(fq, fq.sample(phi), P, Mode::interior);
    const double jp = quotient(fp, fp.sample([&](double t) { return u(t) * phi(t); }), P, Mode::interior);
    err.push_back(rel(jq, jp));
  }
  const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
  o.detail << "rel err at 512 cells " << err[2] << ", observed orders " << o1 << ", " << o2;
  o.check(err[2] <= 5e-4, "invariance");
  o.check(o1 >= 1.9 && o2 >= 1.9, "order");
}

void quotient_minimizers(Outcome& o) {
  auto p = make_hemisphere(3);
  auto f = assemble(p, build_grid(p, 2048));
  double worst_res = 0.0, worst_shoot = 0.0, min_pos = 1e300;
  const std::vector<std::pair<double, Mode>> runs{{3.0, Mode::interior}, {4.0, Mode::interior}, {5.0, Mode::interior},
                                                  {2.5, Mode::boundary}, {3.0, Mode::boundary}};
  for (auto [s, mode] : runs) {
    SolveOptions opt;
    opt.seed = 7;
    const auto r = minimize_quotient(p, f, s, mode, opt);
    worst_res = std::max({worst_res, r.residual.interior, r.residual.boundary_max});
    min_pos = std::min(min_pos, *std::min_element(r.x.begin(), r.x.end()));
    const auto sh = shooting_solve(p, s, r.lagrange_c, mode, r.minimizer.right);
    worst_shoot = std::max(worst_shoot, sup_diff(sh.sample(f), r.x));
  }
  const auto t41i = codim_threshold(4, 1, Mode::interior), t41b = codim_threshold(4, 1, Mode::boundary);
  const bool exact = t41i.value == 6.0 && t41b.value == 4.0;
  const bool gate = !check_subcritical(4, 1, 6.0, Mode::interior).admissible &&
                    !check_subcritical(4, 1, 4.0, Mode::boundary).admissible &&
                    check_subcritical(4, 1, 5.999, Mode::interior).admissible &&
                    check_subcritical(4, 1, 3.999, Mode::boundary).admissible &&
                    !check_subcritical(p, 6.0, Mode::interior).admissible &&
                    !check_subcritical(p, 4.0, Mode::boundary).admissible;
  o.detail << "max residual " << worst_res << ", min u " << min_pos << ", shooting sup diff " << worst_shoot
           << ", thresholds n=4,k=1: " << t41i.value << "/" << t41b.value;
  o.check(worst_res <= 1e-6, "residual");
  o.check(min_pos > 0.0, "positivity");
  o.check(worst_shoot <= 1e-5, "shooting agreement");
  o.check(exact, "exact thresholds");
  o.check(gate, "admissibility gate");
}

void uniqueness(Outcome& o) {
  auto p = product_s2();
  auto f = assemble(p, build_grid(p, 256));
  const double s = critical_p_boundary(4), P = critical_p(4);
  std::vector<double> ref;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SolveOptions opt;
    opt.seed = seed;
    auto x = minimize_quotient(p, f, s, Mode::boundary, opt).x;
    const double k = std::pow(f.volume_power(x, P), -1.0 / P);
    for (auto& v : x) v *= k;
    if (ref.empty()) ref = x;
    worst = std::max(worst, sup_diff(x, ref));
  }
  o.detail << "10 restarts on " << p.name << ", max sup diff after unit volume " << worst;
  o.check(worst <= 1e-6, "restart agreement");
}

void han_li(Outcome& o) {
  auto p = product_s2();
  auto f = assemble(p, build_grid(p, 256));
  const std::vector<double> as{0.25, 0.5, 1.0, 2.0, 4.0}, bs{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<std::vector<double>> Y(as.size(), std::vector<double>(bs.size()));
  double infeas = 0.0;
  bool bounds = true;
  int bound_samples = 0;
  for (std::size_t i = 0; i < as.size(); ++i)
    for (std::size_t j = 0; j < bs.size(); ++j) {
      const auto r = minimize_constrained(p, f, {as[i], bs[j]});
      infeas = std::max(infeas, r.max_infeasibility);
      Y[i][j] = r.value;
    }
  std::vector<std::pair<double, double>> path;
  for (double b : {0.1, 0.5, 1.0, 2.0}) path.push_back({1.0, b});
  for (double a : {0.25, 0.5, 2.0, 4.0}) path.push_back({a, 0.5});
  for (const auto& s : c_curve(p, f, path)) {
    if (s.b > 0) {
      ++bound_samples;
      bounds = bounds && s.lower_ok && s.upper_ok && s.lower <= s.c && s.c <= s.upper;
    }
  }
  bool mono = true;
  for (std::size_t i = 0; i < as.size(); ++i)
    for (std::size_t j = 0; j < bs.size(); ++j) {
      if (i > 0) mono = mono && Y[i][j] <= Y[i - 1][j] * (1 + 1e-10);
      if (j > 0) mono = mono && Y[i][j] <= Y[i][j - 1] * (1 + 1e-10);
    }
  const double y0 = minimize_constrained(p, f, {1.0, 0.0}).value;
  const double ya = minimize_quotient(p, f, critical_p(4), Mode::interior).value;
  o.detail << "max infeasibility " << infeas << ", bounds at " << bound_samples << " b>0 samples "
           << (bounds ? "hold" : "violated") << ", 5x5 monotone " << (mono ? "yes" : "no") << ", |Y(1,0)-Y| rel "
           << rel(y0, ya);
  o.check(infeas <= 1e-10, "feasibility");
  o.check(bounds, "bounds");
  o.check(mono, "monotonicity");
  o.check(rel(y0, ya) <= 1e-8, "b=0 value");
}

void bifurcation(Outcome& o) {
  const auto t0 = Clock::now();
  auto base = make_hemisphere(2);
  const auto pts = bifurcation_points(base, build_grid(base, 2048), critical_p(4), 2);
  const auto times = product_bifurcation_times(2, 2.0, 2.0, 2, {pts[0].mu, pts[1].mu});
  const double t1 = times.times.at(0).t;
  const double cons = std::abs(product_lambda(4, 2.0, 2.0, t1) * (critical_p(4) - 2.0) - pts[0].mu);

  auto p = make_product(base, 2, 2.0, t1);
  auto f = assemble(p, build_grid(p, 512));
  const auto br = continue_branch(f, critical_p(4), 1, 0.05, 30);
  const double r = 1e-3 / br.v_max;
  const auto a = branch_point(f, critical_p(4), 1, r), b = branch_point(f, critical_p(4), 1, r / 2.0);
  const double qa = a.distance_to_trivial / r / br.v_max, qb = b.distance_to_trivial / (r / 2.0) / br.v_max;
  bool certs = !br.truncated && !br.samples.empty();
  double worst_dev = 0.0, worst_h = 0.0, worst_res = 0.0, worst_gap = 0.0;
  for (const auto& s : br.samples) {
    const auto c = branch_to_metric(p, s, t1);
    certs = certs && c.ok && !c.trivial;
    worst_dev = std::max(worst_dev, c.scalar_dev);
    worst_h = std::max(worst_h, c.boundary_max);
    worst_res = std::max(worst_res, s.residual);
    worst_gap = std::max(worst_gap, c.gamma_offset);
  }
  const double secs = seconds_since(t0);
  o.detail << "t1=" << t1 << " (|t1-1/8| " << std::abs(t1 - 0.125) << "), consistency " << cons << ", slope ratio r "
           << qa << " r/2 " << qb << ", " << br.samples.size() << " samples to r=" << br.samples.back().r
           << ": scalar dev " << worst_dev << ", |h| " << worst_h << ", residual " << worst_res << ", max |gamma-t1| "
           << worst_gap << ", " << secs << " s";
  o.check(std::abs(t1 - 0.125) <= 1e-4, "t1");
  o.check(cons <= 1e-12, "lambda(t1) consistency");
  o.check(std::abs(qa - 1.0) <= 0.05 && std::abs(qb - 1.0) <= 0.05, "tangent slope");
  o.check(certs, "certificates");
  o.check(worst_res <= 1e-10, "branch residual");
  o.check(secs < 60.0, "time");
}

void discrete_exactness(Outcome& o) {
  double fmax = 0.0, kmax = 0.0, mu0 = 0.0, spread = 0.0;
  for (auto p : {product_s2(), make_hemisphere(3), make_spherical_band(4, -0.5, 0.7)}) {
    auto f = assemble(p, build_grid(p, 512));
    const std::vector<double> one(f.grid.centers.size(), 1.0);
    for (double lambda : {0.0, 0.3, 3.0, 1e3})
      for (double s : {2.5, 3.0, 4.0})
        for (double v : branch_map(f, one, lambda, s)) fmax = std::max(fmax, std::abs(v));
    // relative to the largest stiffness entry; the absolute size scales with the weight normalization
    const auto K = f.stiffness();
    const double kscale = *std::max_element(K.diag.begin(), K.diag.end());
    for (double v : K.apply(f.constant(1.0))) kmax = std::max(kmax, std::abs(v) / kscale);
    const auto sp = neumann_spectrum(f, 2);
    mu0 = std::max(mu0, std::abs(sp.eigenvalues[0]));
    const auto& c = sp.center_vectors[0];
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    spread = std::max(spread, (*hi - *lo) / std::abs(*hi));
  }
  o.detail << "max |F(1,lambda)| " << fmax << ", max |K 1|/max K_ii " << kmax << ", |mu0| " << mu0
           << ", ground state relative spread " << spread;
  o.check(fmax <= 1e-14, "trivial axis");
  o.check(kmax <= 1e-12, "stiffness constants");
  o.check(mu0 <= 1e-10, "mu0");
  o.check(spread <= 1e-10, "constant eigenfunction");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"spectral oracle", spectral_oracle},
      {"geometry oracles", geometry_oracles},
      {"conformal invariance", conformal_invariance},
      {"quotient minimizers and admissibility", quotient_minimizers},
      {"boundary minimizer uniqueness", uniqueness},
      {"constrained minimization", han_li},
      {"bifurcation", bifurcation},
      {"discrete exactness", discrete_exactness},
  };
  int failed = 0;
  int k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    Outcome o;
    o.detail.precision(4);
    const auto t0 = Clock::now();
    try {
      run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", k, name.c_str(), o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", k - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

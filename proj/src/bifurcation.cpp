#include "bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "error.hpp"

namespace isoyamabe {

namespace {

using Vec = std::vector<double>;

struct Pencil {
  Vec kappa;  // interior edges
  Vec mass;
  double volume = 0.0;
};

Pencil pencil(const AssembledForms& f) {
  Pencil P;
  const std::size_t c0 = f.first_center(), M = f.grid.centers.size();
  P.mass.assign(f.mass.begin() + static_cast<std::ptrdiff_t>(c0), f.mass.begin() + static_cast<std::ptrdiff_t>(c0 + M));
  P.kappa.assign(f.kappa.begin() + static_cast<std::ptrdiff_t>(c0),
                 f.kappa.begin() + static_cast<std::ptrdiff_t>(c0 + M - 1));
  for (double w : P.mass) P.volume += w;
  return P;
}

Vec apply_map(const Pencil& P, const Vec& u, double lambda, double s) {
  const std::size_t M = u.size();
  Vec F(M, 0.0);
  for (std::size_t e = 0; e + 1 < M; ++e) {
    const double flux = P.kappa[e] * (u[e] - u[e + 1]);
    F[e] += flux;
    F[e + 1] -= flux;
  }
  for (std::size_t i = 0; i < M; ++i) F[i] += lambda * P.mass[i] * (u[i] - std::pow(u[i], s - 1.0));
  return F;
}

double rms(const Pencil& P, const Vec& F) {
  double acc = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) acc += F[i] * F[i] / P.mass[i];
  return std::sqrt(acc / P.volume);
}

bool minimal_boundary(const Profile& p) {
  for (Side sd : {Side::left, Side::right})
    if (p.is_boundary(sd) && std::abs(boundary_mean_curvature(p, sd)) > 1e-10) return false;
  return true;
}

GridFunction neumann_grid_function(const AssembledForms& f, const Vec& x) {
  GridFunction g;
  g.centers = x;
  g.left = f.left_trace ? x.front() : extrapolate_to_end(f.grid, x, Side::left);
  g.right = f.right_trace ? x.back() : extrapolate_to_end(f.grid, x, Side::right);
  return g;
}

// Unknowns z = (x, lambda) with inner product sum W x y / V + theta lambda mu.
struct Point {
  Vec x;
  double lambda = 0.0;
};

struct Continuation {
  const AssembledForms& f;
  Pencil P;
  double s;
  Vec v;
  double theta;
  BranchOptions opt;

  double inner(const Point& a, const Point& b) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) acc += P.mass[i] * a.x[i] * b.x[i];
    return acc / P.volume + theta * a.lambda * b.lambda;
  }

  double r_of(const Vec& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += P.mass[i] * (x[i] - 1.0) * v[i];
    return acc / P.volume;
  }

  // Newton on F = 0 plus one linear constraint cx . x + cl lambda = rhs.
  // Returns the iteration count, or -1 on failure.
  int newton(Point& z, const Vec& cx, double cl, double rhs, double& residual) const {
    const std::size_t M = z.x.size();
    const auto N = static_cast<Eigen::Index>(M + 1);
    auto constraint = [&](const Point& q) {
      double g = cl * q.lambda - rhs;
      for (std::size_t i = 0; i < M; ++i) g += cx[i] * q.x[i];
      return g;
    };
    Vec F = apply_map(P, z.x, z.lambda, s);
    residual = rms(P, F);
    for (int it = 0; it <= opt.max_newton; ++it) {
      const double g = constraint(z);
      if (residual <= 0.1 * opt.tol && std::abs(g) <= 1e-13) return it;
      if (it == opt.max_newton) break;
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(5 * M + 2);
      for (std::size_t i = 0; i < M; ++i) {
        const auto I = static_cast<Eigen::Index>(i);
        double d = z.lambda * P.mass[i] * (1.0 - (s - 1.0) * std::pow(z.x[i], s - 2.0));
        if (i > 0) {
          d += P.kappa[i - 1];
          trip.emplace_back(I, I - 1, -P.kappa[i - 1]);
        }
        if (i + 1 < M) {
          d += P.kappa[i];
          trip.emplace_back(I, I + 1, -P.kappa[i]);
        }
        trip.emplace_back(I, I, d);
        trip.emplace_back(I, N - 1, P.mass[i] * (z.x[i] - std::pow(z.x[i], s - 1.0)));
        trip.emplace_back(N - 1, I, cx[i]);
      }
      trip.emplace_back(N - 1, N - 1, cl);
      Eigen::SparseMatrix<double> J(N, N);
      J.setFromTriplets(trip.begin(), trip.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(J);
      if (lu.info() != Eigen::Success) return -1;
      Eigen::VectorXd b(N);
      for (std::size_t i = 0; i < M; ++i) b(static_cast<Eigen::Index>(i)) = -F[i];
      b(N - 1) = -g;
      const Eigen::VectorXd dz = lu.solve(b);
      if (lu.info() != Eigen::Success || !dz.allFinite()) return -1;
      Point t = z;
      for (std::size_t i = 0; i < M; ++i) t.x[i] += dz(static_cast<Eigen::Index>(i));
      t.lambda += dz(N - 1);
      for (double e : t.x)
        if (!(e > 0.0)) return -1;
      const Vec Ft = apply_map(P, t.x, t.lambda, s);
      const double rt = rms(P, Ft);
      const double step = std::sqrt(inner(Point{Vec(dz.data(), dz.data() + M), dz(N - 1)},
                                          Point{Vec(dz.data(), dz.data() + M), dz(N - 1)}));
      z = std::move(t);
      F = Ft;
      // rounding floor: the update no longer changes the iterate
      if (step <= 1e-14 * (1.0 + std::abs(z.lambda)) && rt <= opt.tol) {
        residual = rt;
        return it + 1;
      }
      if (it > 2 && rt > 10.0 * residual) return -1;
      residual = rt;
    }
    return residual <= opt.tol ? opt.max_newton : -1;
  }

  BranchSample make_sample(const Point& z, double residual, int iters) const {
    BranchSample b;
    b.x = z.x;
    b.u = neumann_grid_function(f, z.x);
    b.lambda = z.lambda;
    b.r = r_of(z.x);
    b.residual = residual;
    b.newton_iterations = iters;
    for (double e : z.x) b.distance_to_trivial = std::max(b.distance_to_trivial, std::abs(e - 1.0));
    return b;
  }

  // Natural-parameter solve at fixed r from a guess.
  int natural(Point& z, double r, double& residual) const {
    Vec cx(v.size());
    double off = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      cx[i] = P.mass[i] * v[i] / P.volume;
      off += cx[i];
    }
    return newton(z, cx, 0.0, r + off, residual);
  }
};

struct Setup {
  double mu, lambda_i;
  Vec v;
  double v_max;
};

Setup branch_setup(const AssembledForms& f, double s, int i) {
  require(s > 2.0 && std::isfinite(s), Errc::invalid_argument, "bifurcation needs s > 2");
  require(i >= 1, Errc::invalid_argument, "branch index must be >= 1");
  const auto spec = neumann_spectrum(f, i + 2);
  Setup S;
  S.mu = spec.eigenvalues[static_cast<std::size_t>(i)];
  S.lambda_i = S.mu / (s - 2.0);
  // simplicity of mu_i against its neighbours
  const double gap = std::min(S.mu - spec.eigenvalues[static_cast<std::size_t>(i) - 1],
                              spec.eigenvalues[static_cast<std::size_t>(i) + 1] - S.mu);
  require(gap > 1e-8 * std::max(1.0, S.mu), Errc::domain, "eigenvalue mu_" + std::to_string(i) + " is not simple");
  S.v = spec.center_vectors[static_cast<std::size_t>(i)];
  const auto P = pencil(f);
  const double scale = std::sqrt(P.volume);  // mass-orthonormal -> unit mean square
  S.v_max = 0.0;
  for (auto& e : S.v) {
    e *= scale;
    S.v_max = std::max(S.v_max, std::abs(e));
  }
  return S;
}

}  // namespace

std::vector<BifurcationPoint> bifurcation_points(const Profile& p, const Grid& grid, double s, int count) {
  require(minimal_boundary(p), Errc::domain, "bifurcation points need a minimal (Neumann-type) boundary");
  return bifurcation_points(assemble(p, grid), s, count);
}

std::vector<BifurcationPoint> bifurcation_points(const AssembledForms& f, double s, int count) {
  require(s > 2.0 && std::isfinite(s), Errc::invalid_argument, "bifurcation points need s > 2");
  require(count >= 1, Errc::invalid_argument, "count must be >= 1");
  const auto spec = neumann_spectrum(f, count + 1);
  std::vector<BifurcationPoint> out;
  for (int i = 1; i <= count; ++i) {
    const double mu = spec.eigenvalues[static_cast<std::size_t>(i)];
    out.push_back({i, mu, mu / (s - 2.0)});
  }
  return out;
}

double product_lambda(int N, double s_g, double s_h, double t) {
  require(t > 0.0, Errc::invalid_argument, "lambda(t) needs t > 0");
  return (s_g + s_h / t) / conformal_a(N);
}

ProductTimes product_bifurcation_times(int m, double s_g, double s_h, int n_factor, const std::vector<double>& mus) {
  require(m >= 1 && n_factor >= 1, Errc::invalid_argument, "dimensions must be positive");
  const int N = m + n_factor;
  require(N >= 3, Errc::invalid_argument, "product dimension must be >= 3");
  require(s_g > 0.0 && s_h > 0.0, Errc::invalid_argument, "product times need s_g > 0 and s_h > 0");
  const double pN = critical_p(N);
  ProductTimes out;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    const int i = static_cast<int>(k) + 1;
    const double mu = mus[k];
    const double den = mu * (N - 1.0) - s_g;
    if (std::abs(den) <= 1e-12 * std::max(1.0, std::abs(s_g))) {
      out.notices.push_back("mu_" + std::to_string(i) + " is resonant (mu (m+n-1) = s_g); excluded");
      continue;
    }
    const double t = s_h / den;
    if (!(t > 0.0)) {
      out.notices.push_back("mu_" + std::to_string(i) + " gives t <= 0; excluded");
      continue;
    }
    ProductTime pt;
    pt.i = i;
    pt.mu = mu;
    pt.t = t;
    pt.lambda = product_lambda(N, s_g, s_h, t);
    pt.consistency = std::abs(pt.lambda * (pN - 2.0) - mu) / std::max(1.0, std::abs(mu));
    require(pt.consistency <= 1e-12, Errc::convergence, "lambda(t_i) inconsistent with mu_i");
    out.times.push_back(pt);
  }
  std::sort(out.times.begin(), out.times.end(), [](const auto& a, const auto& b) { return a.t > b.t; });
  return out;
}

Vec branch_map(const AssembledForms& f, const Vec& u, double lambda, double s) {
  const auto P = pencil(f);
  require(u.size() == P.mass.size(), Errc::invalid_argument, "branch map expects one value per cell");
  return apply_map(P, u, lambda, s);
}

double branch_residual(const AssembledForms& f, const Vec& u, double lambda, double s) {
  const auto P = pencil(f);
  require(u.size() == P.mass.size(), Errc::invalid_argument, "branch map expects one value per cell");
  return rms(P, apply_map(P, u, lambda, s));
}

Branch continue_branch(const Profile& p, const Grid& grid, double s, int i, double r_max, int steps,
                       const BranchOptions& opt) {
  require(minimal_boundary(p), Errc::domain, "branch continuation needs a minimal (Neumann-type) boundary");
  return continue_branch(assemble(p, grid), s, i, r_max, steps, opt);
}

BranchSample branch_point(const AssembledForms& f, double s, int i, double r, const BranchOptions& opt) {
  const auto S = branch_setup(f, s, i);
  Continuation C{f, pencil(f), s, S.v, 1.0 / std::max(1.0, S.lambda_i * S.lambda_i), opt};
  Point z{Vec(S.v.size()), S.lambda_i};
  for (std::size_t k = 0; k < S.v.size(); ++k) z.x[k] = 1.0 + r * S.v[k];
  double res = 0.0;
  const int it = C.natural(z, r, res);
  require(it >= 0, Errc::convergence, "branch point: Newton failed at r = " + std::to_string(r));
  return C.make_sample(z, res, it);
}

Branch continue_branch(const AssembledForms& f, double s, int i, double r_max, int steps, const BranchOptions& opt) {
  require(r_max > 0.0 && std::isfinite(r_max), Errc::invalid_argument, "r_max must be positive");
  require(steps >= 2, Errc::invalid_argument, "steps must be >= 2");
  const auto S = branch_setup(f, s, i);
  Branch br;
  br.i = i;
  br.mu = S.mu;
  br.lambda_i = S.lambda_i;
  br.s = s;
  br.v = S.v;
  br.v_max = S.v_max;
  const Continuation C{f, pencil(f), s, S.v, 1.0 / std::max(1.0, S.lambda_i * S.lambda_i), opt};
  const std::size_t M = S.v.size();

  const double r0 = std::min(1e-3 / S.v_max, 0.5 * r_max);
  std::vector<Point> pts;
  for (double r : {r0, 2.0 * r0}) {
    Point z{Vec(M), pts.empty() ? S.lambda_i : pts.back().lambda};
    for (std::size_t k = 0; k < M; ++k) z.x[k] = 1.0 + r * S.v[k];
    double res = 0.0;
    const int it = C.natural(z, r, res);
    if (it < 0) {
      br.truncated = true;
      br.diagnostic = "Newton failed at the initial kick r = " + std::to_string(r);
      return br;
    }
    br.samples.push_back(C.make_sample(z, res, it));
    pts.push_back(std::move(z));
  }

  const double ds_max = 4.0 * r_max / steps;
  double ds = r_max / steps;
  bool landed = false;
  while (!landed && static_cast<int>(br.samples.size()) < steps && br.samples.back().r < r_max) {
    const Point& z1 = pts[pts.size() - 1];
    const Point& z0 = pts[pts.size() - 2];
    Point tau{Vec(M), z1.lambda - z0.lambda};
    for (std::size_t k = 0; k < M; ++k) tau.x[k] = z1.x[k] - z0.x[k];
    const double nt = std::sqrt(C.inner(tau, tau));
    for (auto& e : tau.x) e /= nt;
    tau.lambda /= nt;
    Vec cx(M);
    for (std::size_t k = 0; k < M; ++k) cx[k] = C.P.mass[k] * tau.x[k] / C.P.volume;
    const double cl = C.theta * tau.lambda;

    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, ds *= 0.5) {
      Point z = z1;
      for (std::size_t k = 0; k < M; ++k) z.x[k] += ds * tau.x[k];
      z.lambda += ds * tau.lambda;
      bool positive = true;
      for (double e : z.x) positive = positive && e > 0.0;
      if (!positive) continue;
      // <tau, z - z1> = ds
      const double rhs = ds + C.inner(tau, z1);
      double res = 0.0;
      const int it = C.newton(z, cx, cl, rhs, res);
      if (it < 0) continue;
      auto sample = C.make_sample(z, res, it);
      if (sample.r > r_max) {
        // land exactly on r_max
        Point w = z;
        double rw = 0.0;
        const int iw = C.natural(w, r_max, rw);
        if (iw >= 0) {
          sample = C.make_sample(w, rw, iw);
          z = std::move(w);
        }
        landed = true;
      }
      br.samples.push_back(std::move(sample));
      pts.push_back(std::move(z));
      if (it <= 3) ds = std::min(1.5 * ds, ds_max);
      else if (it >= 6) ds *= 0.7;
      accepted = true;
      break;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "Newton failed after " << opt.max_halvings << " step halvings at r = " << br.samples.back().r
         << ", lambda = " << br.samples.back().lambda;
      br.truncated = true;
      br.diagnostic = os.str();
      break;
    }
  }
  return br;
}

Profile product_at(const Profile& p, double gamma) {
  require(p.product.has_value(), Errc::invalid_argument, "profile is not a product");
  require(gamma > 0.0 && std::isfinite(gamma), Errc::invalid_argument, "product scale must be positive");
  const auto& d = *p.product;
  Profile q = p;
  q.s_g = ScalarCurve::constant(d.base_s_g + d.s_h / gamma);
  q.weight_norm.area = p.weight_norm.area * std::pow(gamma / d.t, d.n_factor / 2.0);
  q.product->t = gamma;
  std::ostringstream os;
  os.precision(17);
  os << "product:" << d.n_factor << ":" << d.s_h << ":" << gamma;
  std::string base = p.name;
  if (base.rfind("product:", 0) == 0) {
    std::size_t pos = 0;
    for (int k = 0; k < 4 && pos != std::string::npos; ++k) pos = base.find(':', pos + 1);
    base = pos == std::string::npos ? base : base.substr(pos + 1);
  }
  q.name = os.str() + ":" + base;
  return q;
}

MetricCertificate branch_to_metric(const Profile& p, const BranchSample& sample, double t_i) {
  require(p.product.has_value(), Errc::invalid_argument, "branch_to_metric needs a product profile");
  require(minimal_boundary(p), Errc::domain, "branch_to_metric needs a minimal boundary");
  const auto& d = *p.product;
  const int N = p.dim;
  const double aN = conformal_a(N), pN = critical_p(N);
  const double floor = d.base_s_g / aN;
  require(sample.lambda > floor && std::isfinite(sample.lambda), Errc::domain,
          "lambda = " + std::to_string(sample.lambda) + " is outside the range of lambda(t) (must exceed s_g/a_N = " +
              std::to_string(floor) + ")");
  MetricCertificate c;
  c.lambda = sample.lambda;
  c.gamma = d.s_h / (aN * sample.lambda - d.base_s_g);
  c.lambda_check = std::abs(product_lambda(N, d.base_s_g, d.s_h, c.gamma) - sample.lambda);
  c.t_i = t_i;
  c.gamma_offset = std::abs(c.gamma - t_i);
  c.distance_to_trivial = sample.distance_to_trivial;
  c.trivial = sample.distance_to_trivial <= 10.0 * sample.residual;

  const Profile q = product_at(p, c.gamma);
  const auto& u = sample.u;
  const double start = q.is_focal(Side::left) ? u.left : (q.is_focal(Side::right) ? u.right : u.left);
  c.shooting = shooting_solve(q, pN, aN * sample.lambda, Mode::interior, start);
  c.metric = conformal_change(q, c.shooting.curve());

  constexpr int kChecks = 301;  // interior points miss the shooting knots
  Vec sv;
  for (int k = 0; k < kChecks; ++k) {
    const double t = k + 1 == kChecks ? q.tb : q.ta + (q.tb - q.ta) * k / (kChecks - 1.0);
    sv.push_back(c.metric.s_g(t));
  }
  for (double v : sv) c.scalar += v;
  c.scalar /= static_cast<double>(sv.size());
  for (double v : sv) c.scalar_dev = std::max(c.scalar_dev, std::abs(v - c.scalar) / std::abs(c.scalar));
  for (Side sd : {Side::left, Side::right}) {
    if (!q.is_boundary(sd)) continue;
    const double declared = c.metric.end(sd).mean_curvature.value_or(0.0);
    c.boundary_max = std::max({c.boundary_max, std::abs(declared), std::abs(boundary_mean_curvature(c.metric, sd))});
  }
  c.ok = c.scalar_dev <= 1e-5 && c.boundary_max <= 1e-6 && c.lambda_check <= 1e-10;
  c.note = c.trivial ? "trivial (product metric itself)" : "nontrivial constant scalar curvature metric";
  return c;
}

}  // namespace isoyamabe

#include "profile.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "error.hpp"

namespace isoyamabe {

namespace {

constexpr int kPanels = 64;
constexpr int kPanelOrder = 20;
constexpr int kCellOrder = 16;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double unit_sphere_area(int dim) {  // area of the unit dim-sphere
  const double m = dim + 1.0;
  return 2.0 * std::pow(M_PI, m / 2.0) / std::tgamma(m / 2.0);
}

// Second-order finite difference staying inside [lo, hi].
double fd(const std::function<double(double)>& f, double t, double lo, double hi) {
  const double h = 1e-5 * (hi - lo);
  if (t - h < lo) return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h);
  if (t + h > hi) return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h);
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == s.size() && !s.empty(), Errc::invalid_argument, "profile spec: bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  const double v = parse_double(s);
  require(v == std::floor(v), Errc::invalid_argument, "profile spec: expected integer, got '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

int Profile::boundary_count() const {
  return static_cast<int>(is_boundary(Side::left)) + static_cast<int>(is_boundary(Side::right));
}

int Profile::k_f() const {
  int k = dim - 1;
  for (const auto& e : ends)
    if (e.type == EndpointType::focal) k = std::min(k, e.focal_dim);
  return k;
}

double conformal_a(int n) {
  require_yamabe_dimension(n);
  return 4.0 * (n - 1.0) / (n - 2.0);
}
double critical_p(int n) {
  require_yamabe_dimension(n);
  return 2.0 * n / (n - 2.0);
}
double critical_p_boundary(int n) {
  require_yamabe_dimension(n);
  return 2.0 * (n - 1.0) / (n - 2.0);
}
void require_yamabe_dimension(int n) {
  require(n >= 3, Errc::domain, "conformal quantities need dimension n >= 3 (got " + std::to_string(n) + ")");
}

Profile make_spherical_band(int n, double c1, double c2) {
  require(n >= 2, Errc::invalid_argument, "spherical band: dimension must be >= 2");
  require(c1 >= -1.0 && c2 <= 1.0, Errc::invalid_argument, "spherical band: need -1 <= c1 < c2 <= 1");
  require(c1 < c2, Errc::invalid_argument, "spherical band: empty interval (c1 >= c2)");
  Profile p;
  p.name = (c1 == 0.0 && c2 == 1.0) ? "hemisphere:" + std::to_string(n)
                                    : "band:" + std::to_string(n) + ":" + fmt(c1) + ":" + fmt(c2);
  p.dim = n;
  p.ta = c1;
  p.tb = c2;
  p.a = ScalarCurve::polynomial({0.0, static_cast<double>(n)});
  p.b = ScalarCurve::polynomial({1.0, 0.0, -1.0});
  p.s_g = ScalarCurve::constant(n * (n - 1.0));
  const std::array<double, 2> params{c1, c2};
  for (int i = 0; i < 2; ++i) {
    Endpoint e;
    e.param = params[static_cast<std::size_t>(i)];
    if (std::abs(e.param) == 1.0) {
      e.type = EndpointType::focal;
      e.focal_dim = 0;
    } else {
      e.type = EndpointType::boundary;
      e.orientation = i == 0 ? -1 : 1;
    }
    p.ends[static_cast<std::size_t>(i)] = e;
  }
  const double t_ref = 0.5 * (c1 + c2);
  p.weight_norm = {t_ref, unit_sphere_area(n - 1) * std::pow(1.0 - t_ref * t_ref, (n - 1) / 2.0)};
  return p;
}

Profile make_cylinder_demo() {
  Profile p;
  p.name = "cylinder";
  p.dim = 2;
  const double c = std::sqrt(3.0) / 2.0;  // t = cos z on z in [pi/6, 5pi/6]
  p.ta = -c;
  p.tb = c;
  p.a = ScalarCurve::polynomial({0.0, 1.0});
  p.b = ScalarCurve::polynomial({1.0, 0.0, -1.0});
  p.s_g = ScalarCurve::constant(0.0);
  p.ends[0] = Endpoint{EndpointType::boundary, -c, -1, 0, std::nullopt};
  p.ends[1] = Endpoint{EndpointType::boundary, c, 1, 0, std::nullopt};
  p.weight_norm = {0.0, 2.0 * M_PI};
  return p;
}

Profile make_product(const Profile& p, int n_factor, double s_h, double t, double factor_volume) {
  require(t > 0.0, Errc::invalid_argument, "product: t must be positive");
  require(s_h > 0.0, Errc::invalid_argument, "product: s_h must be positive");
  require(n_factor >= 1, Errc::invalid_argument, "product: factor dimension must be >= 1");
  require(factor_volume > 0.0, Errc::invalid_argument, "product: factor volume must be positive");
  const auto sg = p.s_g.constant_value();
  require(sg.has_value(), Errc::invalid_argument, "product: base profile must have constant scalar curvature");
  Profile q = p;
  q.name = "product:" + std::to_string(n_factor) + ":" + fmt(s_h) + ":" + fmt(t) + ":" + p.name;
  q.dim = p.dim + n_factor;
  q.s_g = ScalarCurve::constant(*sg + s_h / t);
  for (auto& e : q.ends) {
    if (e.type == EndpointType::focal) e.focal_dim += n_factor;
    e.mean_curvature.reset();
  }
  q.weight_norm.area = p.weight_norm.area * std::pow(t, n_factor / 2.0) * factor_volume;
  q.product = ProductData{p.dim, *sg, n_factor, s_h, t, factor_volume};
  return q;
}

Profile profile_from_name(const std::string& spec) {
  const auto parts = split(spec, ':');
  require(!parts.empty(), Errc::invalid_argument, "empty profile spec");
  const auto& kind = parts[0];
  if (kind == "hemisphere") {
    require(parts.size() == 2, Errc::invalid_argument, "profile spec: expected hemisphere:N");
    return make_hemisphere(parse_int(parts[1]));
  }
  if (kind == "band") {
    require(parts.size() == 4, Errc::invalid_argument, "profile spec: expected band:N:c1:c2");
    return make_spherical_band(parse_int(parts[1]), parse_double(parts[2]), parse_double(parts[3]));
  }
  if (kind == "cylinder") {
    require(parts.size() == 1, Errc::invalid_argument, "profile spec: 'cylinder' takes no parameters");
    return make_cylinder_demo();
  }
  if (kind == "product") {
    require(parts.size() >= 5, Errc::invalid_argument,
            "profile spec: expected product:n_factor:s_h:t:<base spec>");
    std::string base = parts[4];
    for (std::size_t i = 5; i < parts.size(); ++i) base += ":" + parts[i];
    return make_product(profile_from_name(base), parse_int(parts[1]), parse_double(parts[2]),
                        parse_double(parts[3]));
  }
  fail(Errc::invalid_argument, "unknown profile '" + spec + "'");
}

double vanishing_order(const Profile& p, Side s) {
  if (!p.is_focal(s)) return 0.0;
  const double t = p.end_param(s);
  return -p.a(t) / p.b.derivative(t) - 1.0;
}

ValidationReport validate_profile(const Profile& p) {
  ValidationReport r;
  auto bad = [&r](std::string msg) { r.violations.push_back(std::move(msg)); };
  if (p.dim < 2) bad("dimension must be >= 2");
  if (!(p.ta < p.tb)) {
    bad("interval: need ta < tb");
    return r;
  }
  for (const auto* c : {&p.a, &p.b, &p.s_g}) {
    if (!c->covers(p.ta, p.tb)) bad("curve does not cover the interval");
  }
  if (!r.violations.empty()) return r;
  if (p.boundary_count() == 0) bad("no boundary component");
  for (Side s : {Side::left, Side::right}) {
    const auto& e = p.end(s);
    const std::string where = s == Side::left ? "left endpoint" : "right endpoint";
    if (e.param != p.end_param(s)) bad(where + ": param must equal the interval end");
    const double t = p.end_param(s);
    const double bt = p.b(t), bd = p.b.derivative(t);
    if (e.type == EndpointType::boundary) {
      if (e.orientation != (s == Side::left ? -1 : 1)) bad(where + ": boundary orientation mismatch");
      if (!(bt > 0.0)) {
        bad(where + ": b not positive at boundary component");
      } else if (e.mean_curvature) {
        const double h = boundary_mean_curvature(p, s);
        if (std::abs(*e.mean_curvature - h) > 1e-6 * std::max(1.0, std::abs(h)))
          bad(where + ": declared mean curvature " + fmt(*e.mean_curvature) + " differs from derived " + fmt(h));
      }
    } else {
      const double scale = std::max({1.0, std::abs(p.b(0.5 * (p.ta + p.tb))), std::abs(bd)});
      if (std::abs(bt) > 1e-10 * scale) bad(where + ": focal endpoint needs b = 0");
      if (bd == 0.0 || (s == Side::left ? bd < 0.0 : bd > 0.0)) {
        bad(where + ": b' must be nonzero and point into the interval at a focal endpoint");
      } else {
        if (e.focal_dim < 0 || e.focal_dim > p.dim - 2) bad(where + ": focal_dim must lie in [0, n-2]");
        const double nu = vanishing_order(p, s), expect = (p.dim - e.focal_dim - 2) / 2.0;
        if (std::abs(nu - expect) > 1e-5)
          bad(where + ": vanishing order " + fmt(nu) + " inconsistent with focal_dim (expected " + fmt(expect) + ")");
      }
    }
  }
  constexpr int kSamples = 2001;
  for (int i = 1; i < kSamples - 1; ++i) {
    const double t = p.ta + (p.tb - p.ta) * i / (kSamples - 1);
    const double bt = p.b(t), at = p.a(t), st = p.s_g(t);
    if (!(bt > 0.0)) {
      bad("b not positive on interior");
      break;
    }
    if (!std::isfinite(at) || !std::isfinite(st)) {
      bad("a or s_g not finite on interior");
      break;
    }
  }
  const double tr = p.weight_norm.t_ref;
  if (!(tr > p.ta && tr < p.tb)) bad("weight_norm: t_ref must lie in the open interval");
  if (!(p.weight_norm.area > 0.0)) bad("weight_norm: area must be positive");
  if (r.usable()) {
    r.notes.push_back(std::to_string(p.boundary_count()) + " boundary component(s)");
    for (Side s : {Side::left, Side::right}) {
      if (p.is_focal(s))
        r.notes.push_back("focal endpoint at t=" + fmt(p.end_param(s)) + " with focal_dim " +
                          std::to_string(p.end(s).focal_dim));
      else
        r.notes.push_back("boundary at t=" + fmt(p.end_param(s)));
    }
  }
  return r;
}

void require_usable(const Profile& p) {
  const auto r = validate_profile(p);
  if (r.usable()) return;
  std::string msg = "profile '" + p.name + "' not usable:";
  for (const auto& v : r.violations) msg += " " + v + ";";
  fail(Errc::domain, msg);
}

double mean_curvature_of_level(const Profile& p, double t) {
  require(t >= p.ta && t <= p.tb, Errc::domain, "level parameter outside the interval");
  const double bt = p.b(t);
  require(bt > 0.0 && !((t == p.ta && p.is_focal(Side::left)) || (t == p.tb && p.is_focal(Side::right))),
          Errc::domain, "singular level at t=" + fmt(t));
  return (2.0 * p.a(t) + p.b.derivative(t)) / (2.0 * std::sqrt(bt));
}

double boundary_mean_curvature(const Profile& p, Side s) {
  require(p.is_boundary(s), Errc::domain, "endpoint is not a boundary component");
  const double t = p.end_param(s);
  const double bt = p.b(t);
  require(bt > 0.0, Errc::domain, "boundary component with b <= 0");
  const double sigma = s == Side::left ? -1.0 : 1.0;
  return -sigma * (2.0 * p.a(t) + p.b.derivative(t)) / (2.0 * (p.dim - 1.0) * std::sqrt(bt));
}

double geodesic_distance(const Profile& p, double t1, double t2) {
  if (t1 > t2) std::swap(t1, t2);
  require(t1 >= p.ta && t2 <= p.tb, Errc::domain, "geodesic_distance: parameters outside the interval");
  if (t1 == t2) return 0.0;
  const double span = p.tb - p.ta;
  auto singular_at = [&](double t) {
    const double bt = p.b(t);
    if (bt > 1e-14 * std::max(1.0, std::abs(p.b.derivative(t)) * span)) return false;
    require(p.b.derivative(t) != 0.0, Errc::domain,
            "geodesic_distance: non-integrable singularity (b vanishes to order >= 2) at t=" + fmt(t));
    return true;
  };
  singular_at(t1);
  singular_at(t2);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  constexpr double kTol = 1e-14;
  auto regular = [&](double lo, double hi) {
    return GK::integrate([&](double t) { return 1.0 / std::sqrt(p.b(t)); }, lo, hi, 15, kTol);
  };
  // t = t_e + dir v^2 removes the inverse square-root singularity of a simple zero of b at t_e
  // and keeps the integrand smooth on the whole half of the interval next to t_e.
  auto toward = [&](double te, double dir, double lo, double hi) {
    const double b1 = p.b.derivative(te) * dir, b2 = p.b.second_derivative(te);
    auto f = [&](double v) {
      if (v == 0.0) return 2.0 / std::sqrt(b1);
      const double v2 = v * v;
      const double bt = v2 < 1e-6 * span ? b1 * v2 + 0.5 * b2 * v2 * v2 : p.b(te + dir * v2);
      require(bt > 0.0, Errc::domain, "geodesic_distance: b not positive near a focal endpoint");
      return 2.0 * v / std::sqrt(bt);
    };
    const double v0 = std::sqrt(std::abs(lo - te)), v1 = std::sqrt(std::abs(hi - te));
    return GK::integrate(f, std::min(v0, v1), std::max(v0, v1), 15, kTol);
  };
  auto piece = [&](double lo, double hi, Side nearest) {
    if (lo >= hi) return 0.0;
    if (!p.is_focal(nearest)) return regular(lo, hi);
    return nearest == Side::left ? toward(p.ta, 1.0, lo, hi) : toward(p.tb, -1.0, lo, hi);
  };
  const double c = 0.5 * (p.ta + p.tb);
  return piece(t1, std::min(t2, c), Side::left) + piece(std::max(t1, c), t2, Side::right);
}

RadialWeight::RadialWeight(const Profile& p) : a_(p.a), b_(p.b), ta_(p.ta), tb_(p.tb) {
  for (Side s : {Side::left, Side::right}) {
    const auto i = static_cast<std::size_t>(side_index(s));
    if (p.is_focal(s)) {
      nu_[i] = vanishing_order(p, s);
      require(std::isfinite(nu_[i]) && nu_[i] > -1.0, Errc::domain,
              "weight: vanishing order at focal endpoint is not integrable");
      singular_[i] = true;
    }
  }
  plain_ = gauss_legendre(kCellOrder);
  left_ = gauss_jacobi(kCellOrder, 0.0, nu_[0]);
  right_ = gauss_jacobi(kCellOrder, nu_[1], 0.0);
  both_ = gauss_jacobi(kCellOrder, nu_[1], nu_[0]);
  breaks_.resize(kPanels + 1);
  ell_.assign(kPanels + 1, 0.0);
  for (int k = 0; k <= kPanels; ++k)
    breaks_[static_cast<std::size_t>(k)] = k == kPanels ? tb_ : ta_ + (tb_ - ta_) * k / kPanels;
  panel_ = gauss_legendre(kPanelOrder);
  const auto& gl = panel_;
  for (std::size_t k = 0; k < static_cast<std::size_t>(kPanels); ++k) {
    const double lo = breaks_[k], hi = breaks_[k + 1];
    double acc = 0.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double t = lo + 0.5 * (gl.nodes[q] + 1.0) * (hi - lo);
      const double bt = b_(t);
      double d = -(a_(t) + b_.derivative(t)) / bt;
      if (singular_[1]) d += nu_[1] / (tb_ - t);
      if (singular_[0]) d -= nu_[0] / (t - ta_);
      acc += gl.weights[q] * d;
    }
    ell_[k + 1] = ell_[k] + 0.5 * (hi - lo) * acc;
    require(std::isfinite(ell_[k + 1]) && std::abs(ell_[k + 1]) < 700.0, Errc::domain,
            "weight ODE blew up on [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  log_c_ = 0.0;
  const double tr = p.weight_norm.t_ref;
  const double bref = b_(tr);
  require(bref > 0.0, Errc::domain, "weight: reference level is singular");
  log_c_ = std::log(p.weight_norm.area) - std::log((*this)(tr) * std::sqrt(bref));
  volume_ = integrate_panels([](double) { return 1.0; }, ta_, tb_);
}

double RadialWeight::log_smooth(double t) const {
  const double h = (tb_ - ta_) / kPanels;
  auto k = static_cast<std::size_t>(std::clamp(std::floor((t - ta_) / h), 0.0, kPanels - 1.0));
  const double lo = breaks_[k];
  if (t == lo) return ell_[k];
  const auto& gl = panel_;
  double acc = 0.0;
  for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
    const double s = lo + 0.5 * (gl.nodes[q] + 1.0) * (t - lo);
    double d = -(a_(s) + b_.derivative(s)) / b_(s);
    if (singular_[1]) d += nu_[1] / (tb_ - s);
    if (singular_[0]) d -= nu_[0] / (s - ta_);
    acc += gl.weights[q] * d;
  }
  return ell_[k] + 0.5 * (t - lo) * acc;
}

double RadialWeight::smooth_factor(double t) const { return std::exp(log_c_ + log_smooth(t)); }

double RadialWeight::operator()(double t) const {
  double w = smooth_factor(t);
  if (singular_[0]) w *= std::pow(std::max(t - ta_, 0.0), nu_[0]);
  if (singular_[1]) w *= std::pow(std::max(tb_ - t, 0.0), nu_[1]);
  return w;
}

double RadialWeight::level_area(double t) const { return (*this)(t) * std::sqrt(std::max(b_(t), 0.0)); }

double RadialWeight::integrate(const std::function<double(double)>& f, double lo, double hi) const {
  if (hi == lo) return 0.0;
  const bool use_l = singular_[0] && lo == ta_;
  const bool use_r = singular_[1] && hi == tb_;
  const QuadratureRule& rule = use_l ? (use_r ? both_ : left_) : (use_r ? right_ : plain_);
  const double half = 0.5 * (hi - lo);
  const double alpha = use_r ? nu_[1] : 0.0, beta = use_l ? nu_[0] : 0.0;
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = lo + (rule.nodes[q] + 1.0) * half;
    double v = f(t) * smooth_factor(t);
    if (singular_[0] && !use_l) v *= std::pow(t - ta_, nu_[0]);
    if (singular_[1] && !use_r) v *= std::pow(tb_ - t, nu_[1]);
    acc += rule.weights[q] * v;
  }
  return acc * std::pow(half, 1.0 + alpha + beta);
}

double RadialWeight::integrate_panels(const std::function<double(double)>& f, double lo, double hi) const {
  double acc = 0.0, cur = lo;
  for (double brk : breaks_) {
    if (brk <= cur) continue;
    const double nxt = std::min(brk, hi);
    acc += integrate(f, cur, nxt);
    cur = nxt;
    if (cur >= hi) break;
  }
  return acc;
}

ScalarCurve RadialWeight::as_curve() const {
  auto self = std::make_shared<RadialWeight>(*this);
  auto w = [self](double t) { return (*self)(t); };
  auto dw = [self](double t) {
    const double bt = self->b_(t);
    return bt > 0.0 ? -(*self)(t) * (self->a_(t) + self->b_.derivative(t)) / bt : 0.0;
  };
  const double lo = ta_, hi = tb_;
  auto d2w = [dw, lo, hi](double t) { return fd(dw, t, lo, hi); };
  return ScalarCurve::function("weight", ta_, tb_, w, dw, d2w);
}

RadialWeight reconstruct_weight(const Profile& p) {
  require_usable(p);
  return RadialWeight(p);
}

double conformal_laplacian(const Profile& p, const ScalarCurve& u, double t) {
  return conformal_a(p.dim) * (-p.b(t) * u.second_derivative(t) + p.a(t) * u.derivative(t)) + p.s_g(t) * u(t);
}

double boundary_operator(const Profile& p, const ScalarCurve& u, Side s) {
  const double t = p.end_param(s);
  const double sigma = s == Side::left ? -1.0 : 1.0;
  return 2.0 / (p.dim - 2.0) * sigma * std::sqrt(p.b(t)) * u.derivative(t) + boundary_mean_curvature(p, s) * u(t);
}

Profile conformal_change(const Profile& p, const ScalarCurve& u) {
  const int n = p.dim;
  const double P = critical_p(n);
  require(u.covers(p.ta, p.tb), Errc::invalid_argument, "conformal factor does not cover the interval");
  constexpr int kSamples = 2001;
  for (int i = 0; i < kSamples; ++i) {
    const double t = i + 1 == kSamples ? p.tb : p.ta + (p.tb - p.ta) * i / (kSamples - 1);
    const double ut = u(t);
    require(std::isfinite(ut) && ut > 0.0, Errc::domain, "conformal factor must be positive (u(" + fmt(t) + ")=" + fmt(ut) + ")");
  }
  const ScalarCurve a = p.a, b = p.b, sg = p.s_g;
  const double an = conformal_a(n), lo = p.ta, hi = p.tb;
  auto phi = [u, P](double t) { return std::pow(u(t), P - 2.0); };
  auto dphi = [u, P](double t) { return (P - 2.0) * std::pow(u(t), P - 3.0) * u.derivative(t); };
  auto d2phi = [u, P](double t) {
    const double v = u(t), dv = u.derivative(t);
    return (P - 2.0) * ((P - 3.0) * std::pow(v, P - 4.0) * dv * dv + std::pow(v, P - 3.0) * u.second_derivative(t));
  };
  auto bh = [=](double t) { return b(t) / phi(t); };
  auto dbh = [=](double t) {
    const double f = phi(t);
    return b.derivative(t) / f - b(t) * dphi(t) / (f * f);
  };
  auto d2bh = [=](double t) {
    const double f = phi(t), df = dphi(t);
    return b.second_derivative(t) / f - 2.0 * b.derivative(t) * df / (f * f) - b(t) * d2phi(t) / (f * f) +
           2.0 * b(t) * df * df / (f * f * f);
  };
  auto ah = [=](double t) {
    const double f = phi(t);
    return a(t) / f - (n - 2.0) * dphi(t) * b(t) / (2.0 * f * f);
  };
  auto dah = [=](double t) {
    const double f = phi(t), df = dphi(t);
    return a.derivative(t) / f - a(t) * df / (f * f) -
           0.5 * (n - 2.0) * (d2phi(t) * b(t) / (f * f) + df * b.derivative(t) / (f * f) - 2.0 * df * df * b(t) / (f * f * f));
  };
  auto d2ah = [=](double t) { return fd(dah, t, lo, hi); };
  auto sh = [=](double t) {
    const double L = an * (-b(t) * u.second_derivative(t) + a(t) * u.derivative(t)) + sg(t) * u(t);
    return std::pow(u(t), 1.0 - P) * L;
  };
  auto dsh = [=](double t) { return fd(sh, t, lo, hi); };
  auto d2sh = [=](double t) { return fd(dsh, t, lo, hi); };

  Profile q = p;
  q.name = p.name + "+conformal";
  q.a = ScalarCurve::function("a_conformal", lo, hi, ah, dah, d2ah);
  q.b = ScalarCurve::function("b_conformal", lo, hi, bh, dbh, d2bh);
  q.s_g = ScalarCurve::function("s_conformal", lo, hi, sh, dsh, d2sh);
  for (Side s : {Side::left, Side::right}) {
    auto& e = q.ends[static_cast<std::size_t>(side_index(s))];
    if (e.type == EndpointType::boundary)
      e.mean_curvature = std::pow(u(p.end_param(s)), -P / 2.0) * boundary_operator(p, u, s);
  }
  q.weight_norm.area = p.weight_norm.area * std::pow(phi(p.weight_norm.t_ref), (n - 1) / 2.0);
  q.product.reset();
  return q;
}

Threshold codim_threshold(int n, int k, Mode mode) {
  if (k >= n - 2) return {true, 0.0};
  const double d = n - k - 2.0;
  return {false, mode == Mode::interior ? 2.0 * (n - k) / d : 2.0 * (n - k - 1.0) / d};
}

Threshold codim_threshold(const Profile& p, Mode mode) { return codim_threshold(p.dim, p.k_f(), mode); }

nlohmann::json profile_to_json(const Profile& p) {
  using nlohmann::json;
  json j;
  j["name"] = p.name;
  j["dim"] = p.dim;
  j["interval"] = {p.ta, p.tb};
  j["a"] = p.a.to_json(p.ta, p.tb);
  j["b"] = p.b.to_json(p.ta, p.tb);
  j["s_g"] = p.s_g.to_json(p.ta, p.tb);
  json ends = json::array();
  for (const auto& e : p.ends) {
    json je{{"param", e.param}};
    if (e.type == EndpointType::boundary) {
      je["type"] = "boundary";
      je["orientation"] = e.orientation;
      if (e.mean_curvature) je["mean_curvature"] = *e.mean_curvature;
    } else {
      je["type"] = "focal";
      je["focal_dim"] = e.focal_dim;
    }
    ends.push_back(je);
  }
  j["endpoints"] = ends;
  j["weight_norm"] = {{"t_ref", p.weight_norm.t_ref}, {"area", p.weight_norm.area}};
  if (p.product) {
    const auto& d = *p.product;
    j["product"] = {{"base_dim", d.base_dim}, {"base_s_g", d.base_s_g}, {"n_factor", d.n_factor},
                    {"s_h", d.s_h},           {"t", d.t},               {"factor_volume", d.factor_volume}};
  }
  return j;
}

Profile profile_from_json(const nlohmann::json& j) {
  try {
    Profile p;
    p.name = j.value("name", std::string("custom"));
    p.dim = j.at("dim").get<int>();
    const auto iv = j.at("interval").get<std::vector<double>>();
    require(iv.size() == 2, Errc::invalid_argument, "profile: interval must have two entries");
    p.ta = iv[0];
    p.tb = iv[1];
    p.a = ScalarCurve::from_json(j.at("a"));
    p.b = ScalarCurve::from_json(j.at("b"));
    p.s_g = ScalarCurve::from_json(j.at("s_g"));
    const auto& ends = j.at("endpoints");
    require(ends.is_array() && ends.size() == 2, Errc::invalid_argument, "profile: expected two endpoints");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& je = ends[i];
      Endpoint e;
      const auto type = je.at("type").get<std::string>();
      e.param = je.at("param").get<double>();
      if (type == "boundary") {
        e.type = EndpointType::boundary;
        e.orientation = je.value("orientation", i == 0 ? -1 : 1);
        if (je.contains("mean_curvature")) e.mean_curvature = je.at("mean_curvature").get<double>();
      } else if (type == "focal") {
        e.type = EndpointType::focal;
        e.focal_dim = je.at("focal_dim").get<int>();
      } else {
        fail(Errc::invalid_argument, "profile: endpoint type must be 'boundary' or 'focal'");
      }
      p.ends[i] = e;
    }
    const auto& wn = j.at("weight_norm");
    p.weight_norm = {wn.at("t_ref").get<double>(), wn.at("area").get<double>()};
    if (j.contains("product")) {
      const auto& d = j.at("product");
      p.product = ProductData{d.at("base_dim").get<int>(), d.at("base_s_g").get<double>(),
                              d.at("n_factor").get<int>(), d.at("s_h").get<double>(),
                              d.at("t").get<double>(),     d.value("factor_volume", 1.0)};
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed profile JSON: ") + e.what());
  }
}

std::string profile_hash(const Profile& p) {
  const std::string s = profile_to_json(p).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* to_string(Mode m) { return m == Mode::interior ? "interior" : "boundary"; }

Mode mode_from_string(const std::string& s) {
  if (s == "interior") return Mode::interior;
  if (s == "boundary") return Mode::boundary;
  fail(Errc::invalid_argument, "mode must be 'interior' or 'boundary'");
}

}  // namespace isoyamabe

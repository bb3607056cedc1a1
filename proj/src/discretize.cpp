#include "discretize.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace isoyamabe {

namespace {

double map_xi(double xi, double ta, double tb, bool left_focal, bool right_focal) {
  const double L = tb - ta;
  if (xi <= 0.0) return ta;
  if (xi >= 1.0) return tb;
  if (left_focal && right_focal) return ta + 0.5 * L * (1.0 - std::cos(M_PI * xi));
  if (right_focal) return ta + L * std::sin(0.5 * M_PI * xi);
  if (left_focal) return ta + L * (1.0 - std::cos(0.5 * M_PI * xi));
  return ta + L * xi;
}

}  // namespace

Grid build_grid(const Profile& p, int m_cells, std::optional<bool> graded) {
  require(m_cells >= 16, Errc::invalid_argument, "grid needs at least 16 cells");
  require_usable(p);
  Grid g;
  g.ta = p.ta;
  g.tb = p.tb;
  const bool any_focal = p.is_focal(Side::left) || p.is_focal(Side::right);
  g.graded = graded.value_or(any_focal) && any_focal;
  const bool lf = g.graded && p.is_focal(Side::left), rf = g.graded && p.is_focal(Side::right);
  g.nodes.resize(static_cast<std::size_t>(m_cells) + 1);
  g.centers.resize(static_cast<std::size_t>(m_cells));
  for (int i = 0; i <= m_cells; ++i) g.nodes[static_cast<std::size_t>(i)] = map_xi(static_cast<double>(i) / m_cells, p.ta, p.tb, lf, rf);
  for (int i = 0; i < m_cells; ++i)
    g.centers[static_cast<std::size_t>(i)] = map_xi((i + 0.5) / m_cells, p.ta, p.tb, lf, rf);
  const RadialWeight w(p);
  g.cell_mass.resize(g.centers.size());
  for (std::size_t i = 0; i < g.centers.size(); ++i) {
    g.cell_mass[i] = w.integrate([](double) { return 1.0; }, g.nodes[i], g.nodes[i + 1]);
    require(std::isfinite(g.cell_mass[i]) && g.cell_mass[i] > 0.0, Errc::domain,
            "cell weight integral not positive; grid too fine for the weight");
  }
  return g;
}

std::vector<std::size_t> AssembledForms::trace_indices() const {
  std::vector<std::size_t> out;
  if (left_trace) out.push_back(0);
  if (right_trace) out.push_back(size() - 1);
  return out;
}

SymTridiagonal AssembledForms::stiffness() const {
  SymTridiagonal m;
  m.diag.assign(size(), 0.0);
  m.off.assign(kappa.begin(), kappa.end());
  for (std::size_t e = 0; e < kappa.size(); ++e) {
    m.diag[e] += kappa[e];
    m.diag[e + 1] += kappa[e];
    m.off[e] = -kappa[e];
  }
  return m;
}

SymTridiagonal AssembledForms::energy_matrix() const {
  require(std::isfinite(an), Errc::domain, "energy needs dimension n >= 3");
  SymTridiagonal m = stiffness();
  for (auto& v : m.diag) v *= an;
  for (auto& v : m.off) v *= an;
  for (std::size_t i = 0; i < size(); ++i) m.diag[i] += curv[i] + 2.0 * (dim - 1.0) * area[i] * h[i];
  return m;
}

std::vector<double> AssembledForms::apply_energy(const std::vector<double>& x) const {
  require(std::isfinite(an), Errc::domain, "energy needs dimension n >= 3");
  std::vector<double> y(size());
  for (std::size_t i = 0; i < size(); ++i) y[i] = (curv[i] + 2.0 * (dim - 1.0) * area[i] * h[i]) * x[i];
  for (std::size_t e = 0; e < kappa.size(); ++e) {
    const double flux = an * kappa[e] * (x[e] - x[e + 1]);
    y[e] += flux;
    y[e + 1] -= flux;
  }
  return y;
}

double AssembledForms::energy(const std::vector<double>& x) const {
  require(x.size() == size(), Errc::invalid_argument, "grid function does not match the forms");
  require(std::isfinite(an), Errc::domain, "energy needs dimension n >= 3");
  double e = 0.0;
  for (std::size_t k = 0; k < kappa.size(); ++k) {
    const double d = x[k + 1] - x[k];
    e += an * kappa[k] * d * d;
  }
  for (std::size_t i = 0; i < size(); ++i) e += (curv[i] + 2.0 * (dim - 1.0) * area[i] * h[i]) * x[i] * x[i];
  return e;
}

double AssembledForms::volume_power(const std::vector<double>& x, double s) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    if (mass[i] != 0.0) acc += mass[i] * std::pow(std::abs(x[i]), s);
  return acc;
}

double AssembledForms::boundary_power(const std::vector<double>& x, double s) const {
  double acc = 0.0;
  for (std::size_t i : trace_indices()) acc += area[i] * std::pow(std::abs(x[i]), s);
  return acc;
}

std::vector<double> AssembledForms::positions() const {
  std::vector<double> t;
  t.reserve(size());
  if (left_trace) t.push_back(grid.ta);
  t.insert(t.end(), grid.centers.begin(), grid.centers.end());
  if (right_trace) t.push_back(grid.tb);
  return t;
}

std::vector<double> AssembledForms::sample(const std::function<double(double)>& f) const {
  auto t = positions();
  for (auto& v : t) v = f(v);
  return t;
}

double extrapolate_to_end(const Grid& g, const std::vector<double>& c, Side side) {
  const std::size_t M = c.size();
  const double te = side == Side::left ? g.ta : g.tb;
  std::array<std::size_t, 3> idx = side == Side::left ? std::array<std::size_t, 3>{0, 1, 2}
                                                      : std::array<std::size_t, 3>{M - 1, M - 2, M - 3};
  double acc = 0.0;
  for (int j = 0; j < 3; ++j) {
    double l = 1.0;
    for (int k = 0; k < 3; ++k)
      if (k != j) l *= (te - g.centers[idx[static_cast<std::size_t>(k)]]) /
                       (g.centers[idx[static_cast<std::size_t>(j)]] - g.centers[idx[static_cast<std::size_t>(k)]]);
    acc += l * c[idx[static_cast<std::size_t>(j)]];
  }
  return acc;
}

GridFunction AssembledForms::to_grid_function(const std::vector<double>& x) const {
  require(x.size() == size(), Errc::invalid_argument, "grid function does not match the forms");
  GridFunction gf;
  const std::size_t c0 = first_center();
  gf.centers.assign(x.begin() + static_cast<std::ptrdiff_t>(c0),
                    x.begin() + static_cast<std::ptrdiff_t>(c0 + grid.centers.size()));
  gf.left = left_trace ? x.front() : extrapolate_to_end(grid, gf.centers, Side::left);
  gf.right = right_trace ? x.back() : extrapolate_to_end(grid, gf.centers, Side::right);
  return gf;
}

AssembledForms assemble(const Profile& p, const Grid& grid) { return assemble(p, grid, RadialWeight(p)); }

AssembledForms assemble(const Profile& p, const Grid& grid, const RadialWeight& w) {
  require(grid.ta == p.ta && grid.tb == p.tb && grid.cells() >= 16, Errc::invalid_argument,
          "grid does not match the profile interval");
  AssembledForms f;
  f.dim = p.dim;
  f.an = p.dim >= 3 ? conformal_a(p.dim) : std::numeric_limits<double>::quiet_NaN();
  f.grid = grid;
  f.left_trace = p.is_boundary(Side::left);
  f.right_trace = p.is_boundary(Side::right);
  const std::size_t M = grid.centers.size();
  const std::size_t n = M + (f.left_trace ? 1 : 0) + (f.right_trace ? 1 : 0);
  f.curv.assign(n, 0.0);
  f.mass.assign(n, 0.0);
  f.area.assign(n, 0.0);
  f.h.assign(n, 0.0);
  auto bw = [&](double t) { return p.b(t) * w(t); };
  const std::size_t c0 = f.first_center();
  if (f.left_trace) {
    const double c = grid.centers.front();
    f.kappa.push_back(bw(0.5 * (grid.ta + c)) / (c - grid.ta));
  }
  for (std::size_t i = 0; i + 1 < M; ++i) f.kappa.push_back(bw(grid.nodes[i + 1]) / (grid.centers[i + 1] - grid.centers[i]));
  if (f.right_trace) {
    const double c = grid.centers.back();
    f.kappa.push_back(bw(0.5 * (grid.tb + c)) / (grid.tb - c));
  }
  const auto sg_const = p.s_g.constant_value();
  for (std::size_t i = 0; i < M; ++i) {
    f.mass[c0 + i] = grid.cell_mass[i];
    f.curv[c0 + i] = sg_const ? *sg_const * grid.cell_mass[i]
                              : w.integrate([&](double t) { return p.s_g(t); }, grid.nodes[i], grid.nodes[i + 1]);
  }
  for (std::size_t i : f.trace_indices()) {
    const Side s = i == 0 ? Side::left : Side::right;
    f.area[i] = w.level_area(p.end_param(s));
    f.h[i] = boundary_mean_curvature(p, s);
  }
  f.volume = 0.0;
  for (double m : f.mass) f.volume += m;
  return f;
}

double quotient(const AssembledForms& f, const std::vector<double>& x, double s, Mode mode) {
  require(s > 0.0, Errc::invalid_argument, "quotient exponent must be positive");
  const double denom = mode == Mode::interior ? f.volume_power(x, s) : f.boundary_power(x, s);
  require(mode == Mode::interior || !f.trace_indices().empty(), Errc::domain,
          "boundary quotient needs a boundary component");
  require(denom > 0.0, Errc::domain, "quotient: zero denominator");
  return f.energy(x) / std::pow(denom, 2.0 / s);
}

}  // namespace isoyamabe

#include "spectra.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace isoyamabe {

namespace {

struct CenterPencil {
  std::vector<double> kappa;  // interior edges only
  std::vector<double> mass;
};

CenterPencil center_pencil(const AssembledForms& f) {
  CenterPencil cp;
  const std::size_t c0 = f.first_center(), M = f.grid.centers.size();
  cp.mass.assign(f.mass.begin() + static_cast<std::ptrdiff_t>(c0), f.mass.begin() + static_cast<std::ptrdiff_t>(c0 + M));
  cp.kappa.assign(f.kappa.begin() + static_cast<std::ptrdiff_t>(c0),
                  f.kappa.begin() + static_cast<std::ptrdiff_t>(c0 + M - 1));
  return cp;
}

double flux_rayleigh(const CenterPencil& cp, const std::vector<double>& x) {
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < cp.kappa.size(); ++e) {
    const double d = x[e + 1] - x[e];
    num += cp.kappa[e] * d * d;
  }
  for (std::size_t i = 0; i < x.size(); ++i) den += cp.mass[i] * x[i] * x[i];
  return num / den;
}

std::vector<double> eigenvalues_only(const AssembledForms& f, int count) {
  const auto T = neumann_operator(f);
  const auto cp = center_pencil(f);
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    auto y = inverse_iteration(T, kth_eigenvalue(T, k));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] /= std::sqrt(cp.mass[i]);
    out.push_back(flux_rayleigh(cp, y));
  }
  return out;
}

double smallest(const SymTridiagonal& m) { return kth_eigenvalue(m, 0); }

std::string sign_of(double v, double scale) {
  if (std::abs(v) <= 1e-10 * std::max(1.0, scale)) return "0";
  return v > 0 ? "+" : "-";
}

}  // namespace

SymTridiagonal neumann_operator(const AssembledForms& f) {
  const auto cp = center_pencil(f);
  const std::size_t M = cp.mass.size();
  SymTridiagonal T;
  T.diag.assign(M, 0.0);
  T.off.assign(M - 1, 0.0);
  for (std::size_t e = 0; e + 1 < M; ++e) {
    T.diag[e] += cp.kappa[e] / cp.mass[e];
    T.diag[e + 1] += cp.kappa[e] / cp.mass[e + 1];
    T.off[e] = -cp.kappa[e] / std::sqrt(cp.mass[e] * cp.mass[e + 1]);
  }
  return T;
}

SpectrumResult neumann_spectrum(const Profile& p, const Grid& grid, int count) {
  return neumann_spectrum(assemble(p, grid), count);
}

SpectrumResult neumann_spectrum(const AssembledForms& f, int count) {
  const int M = f.grid.cells();
  require(count >= 1, Errc::invalid_argument, "spectrum: count must be >= 1");
  require(count <= M / 2, Errc::invalid_argument,
          "spectrum: count " + std::to_string(count) + " exceeds grid resolution (at most cells/2)");
  const auto T = neumann_operator(f);
  const auto cp = center_pencil(f);
  SpectrumResult r;
  r.grid = f.grid;
  for (int k = 0; k < count; ++k) {
    auto y = inverse_iteration(T, kth_eigenvalue(T, k));
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] / std::sqrt(cp.mass[i]);
    for (const auto& prev : r.center_vectors) {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += cp.mass[i] * x[i] * prev[i];
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= dot * prev[i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) norm += cp.mass[i] * x[i] * x[i];
    norm = std::sqrt(norm);
    const double sgn = x.back() < 0.0 ? -1.0 : 1.0;
    for (auto& v : x) v *= sgn / norm;
    r.eigenvalues.push_back(flux_rayleigh(cp, x));
    GridFunction gf;
    gf.centers = x;
    // Neumann: a boundary trace equals its neighbouring center, the discrete flux vanishes.
    gf.left = f.left_trace ? x.front() : extrapolate_to_end(f.grid, x, Side::left);
    gf.right = f.right_trace ? x.back() : extrapolate_to_end(f.grid, x, Side::right);
    r.eigenfunctions.push_back(gf);
    r.center_vectors.push_back(std::move(x));
  }
  r.error_estimate.assign(static_cast<std::size_t>(count), std::numeric_limits<double>::quiet_NaN());
  r.extrapolated = r.eigenvalues;
  if (M % 2 == 0 && M / 2 >= 16 && count <= M / 4) {
    // The half grid's nodes are a subset of this grid's, so cell masses can be summed pairwise.
    AssembledForms half = f;
    Grid& g = half.grid;
    std::vector<double> nodes, centers, mass;
    for (std::size_t i = 0; i < g.nodes.size(); i += 2) nodes.push_back(g.nodes[i]);
    for (std::size_t i = 0; i + 1 < g.cell_mass.size(); i += 2) mass.push_back(g.cell_mass[i] + g.cell_mass[i + 1]);
    // Half-grid centers are the odd nodes of the fine grid (images of the xi-midpoints).
    for (std::size_t i = 1; i < g.nodes.size(); i += 2) centers.push_back(g.nodes[i]);
    g.nodes = nodes;
    g.centers = centers;
    g.cell_mass = mass;
    // Rebuild interior fluxes from the fine ones: b w at a coarse interior node is
    // recovered from kappa * (center spacing) on the fine grid.
    const std::size_t c0 = f.first_center();
    std::vector<double> bw_nodes(f.grid.nodes.size(), 0.0);
    for (std::size_t e = 0; e + 1 < f.grid.centers.size(); ++e)
      bw_nodes[e + 1] = f.kappa[c0 + e] * (f.grid.centers[e + 1] - f.grid.centers[e]);
    std::vector<double> kappa;
    if (f.left_trace) kappa.push_back(0.0);
    for (std::size_t i = 0; i + 1 < centers.size(); ++i)
      kappa.push_back(bw_nodes[2 * (i + 1)] / (centers[i + 1] - centers[i]));
    if (f.right_trace) kappa.push_back(0.0);
    half.kappa = kappa;
    const std::size_t n = centers.size() + (f.left_trace ? 1 : 0) + (f.right_trace ? 1 : 0);
    half.mass.assign(n, 0.0);
    for (std::size_t i = 0; i < mass.size(); ++i) half.mass[c0 + i] = mass[i];
    half.curv.assign(n, 0.0);
    half.area.assign(n, 0.0);
    half.h.assign(n, 0.0);
    const auto coarse = eigenvalues_only(half, count);
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      r.error_estimate[k] = std::abs(r.eigenvalues[k] - coarse[k]) / 3.0;
      r.extrapolated[k] = (4.0 * r.eigenvalues[k] - coarse[k]) / 3.0;
    }
  }
  return r;
}

ProbeResult conformal_eigen_probe(const Profile& p, const Grid& grid) {
  return conformal_eigen_probe(assemble(p, grid));
}

ProbeResult conformal_eigen_probe(const AssembledForms& f) {
  require(std::isfinite(f.an), Errc::domain, "probe needs dimension n >= 3");
  const auto A = f.energy_matrix();
  const std::size_t c0 = f.first_center(), M = f.grid.centers.size();
  const double bfac = 2.0 * (f.dim - 1.0);
  // Center block A_cc, scaled by the center masses.
  SymTridiagonal Acc;
  Acc.diag.assign(A.diag.begin() + static_cast<std::ptrdiff_t>(c0), A.diag.begin() + static_cast<std::ptrdiff_t>(c0 + M));
  Acc.off.assign(A.off.begin() + static_cast<std::ptrdiff_t>(c0), A.off.begin() + static_cast<std::ptrdiff_t>(c0 + M - 1));
  auto scaled = [&](const SymTridiagonal& m) {
    SymTridiagonal s = m;
    for (std::size_t i = 0; i < M; ++i) s.diag[i] /= f.mass[c0 + i];
    for (std::size_t i = 0; i + 1 < M; ++i) s.off[i] /= std::sqrt(f.mass[c0 + i] * f.mass[c0 + i + 1]);
    return s;
  };
  ProbeResult r;
  r.lambda_dirichlet = smallest(scaled(Acc));

  // Robin: eliminate each trace from its row d_b x_b - a_n kappa_b x_c = 0.
  SymTridiagonal Arob = Acc;
  bool robin_ok = true;
  for (std::size_t t : f.trace_indices()) {
    const std::size_t edge = t == 0 ? 0 : f.kappa.size() - 1;
    const double coupling = f.an * f.kappa[edge];
    const double db = A.diag[t];
    if (db <= 0.0) robin_ok = false;
    Arob.diag[t == 0 ? 0 : M - 1] -= coupling * coupling / db;
  }
  r.lambda_robin = robin_ok ? smallest(scaled(Arob)) : -std::numeric_limits<double>::infinity();

  // Steklov: Schur complement of A onto the traces, boundary mass 2(n-1) A_j.
  const auto traces = f.trace_indices();
  r.steklov_degenerate = !(r.lambda_dirichlet > 0.0) || traces.empty();
  if (!r.steklov_degenerate) {
    const std::size_t nb = traces.size();
    double S[2][2] = {{0, 0}, {0, 0}};
    std::vector<std::vector<double>> cols(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      std::vector<double> rhs(M, 0.0);
      const std::size_t t = traces[j];
      const std::size_t edge = t == 0 ? 0 : f.kappa.size() - 1;
      rhs[t == 0 ? 0 : M - 1] = A.off[edge];
      cols[j] = solve_tridiagonal(Acc, rhs);
    }
    for (std::size_t i = 0; i < nb; ++i) {
      const std::size_t ti = traces[i];
      const std::size_t ei = ti == 0 ? 0 : f.kappa.size() - 1;
      const std::size_t ci = ti == 0 ? 0 : M - 1;
      for (std::size_t j = 0; j < nb; ++j) {
        S[i][j] = (i == j ? A.diag[ti] : 0.0) - A.off[ei] * cols[j][ci];
      }
    }
    double m[2];
    for (std::size_t i = 0; i < nb; ++i) m[i] = bfac * f.area[traces[i]];
    if (nb == 1) {
      r.lambda_steklov = S[0][0] / m[0];
    } else {
      const double a = S[0][0] / m[0], d = S[1][1] / m[1], b = 0.5 * (S[0][1] + S[1][0]) / std::sqrt(m[0] * m[1]);
      r.lambda_steklov = 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    }
  } else {
    r.lambda_steklov = std::numeric_limits<double>::quiet_NaN();
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < M; ++i) scale = std::max(scale, std::abs(f.curv[c0 + i] / f.mass[c0 + i]));
  r.finiteness_certified = r.lambda_robin >= -1e-10 * std::max(1.0, scale);
  r.possibly_unbounded = r.lambda_dirichlet < -1e-10 * std::max(1.0, scale);
  const std::string sd = sign_of(r.lambda_dirichlet, scale), sl = sign_of(r.lambda_robin, scale);
  const std::string sb = r.steklov_degenerate ? "?" : sign_of(r.lambda_steklov, scale);
  r.sign = (sd == sl && sl == sb) ? sd : (sl == sb ? sl : "mixed");
  return r;
}

}  // namespace isoyamabe

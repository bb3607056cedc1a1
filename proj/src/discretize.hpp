#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "profile.hpp"
#include "tridiagonal.hpp"

namespace isoyamabe {

struct Grid {
  double ta = 0.0, tb = 1.0;
  std::vector<double> nodes;      // M + 1 cell edges
  std::vector<double> centers;    // M cell centers
  std::vector<double> cell_mass;  // integral of w over each cell
  bool graded = false;

  int cells() const { return static_cast<int>(centers.size()); }
};

/// Cell-centered grid. When graded, cells near focal endpoints shrink so the
/// grid is uniform in geodesic distance there. Defaults to graded iff the
/// profile has a focal endpoint.
Grid build_grid(const Profile& p, int m_cells, std::optional<bool> graded = std::nullopt);

/// Radial function sampled at cell centers plus the two endpoint traces.
struct GridFunction {
  std::vector<double> centers;
  double left = 0.0, right = 0.0;
};

/// Finite-volume realization of E(u) = a_n int b u'^2 w + int s_g u^2 w + 2(n-1) sum A_j h_j u_j^2.
///
/// Unknowns are ordered along t: [left trace if boundary], cell centers, [right
/// trace if boundary]. Traces carry no volume mass. Focal endpoints have no
/// unknown and no flux.
struct AssembledForms {
  int dim = 3;
  double an = 0.0;  // a_n, NaN for n = 2
  Grid grid;
  bool left_trace = false, right_trace = false;
  std::vector<double> kappa;  // flux coefficients between consecutive unknowns
  std::vector<double> curv;   // integral of s_g w per unknown
  std::vector<double> mass;   // integral of w per unknown
  std::vector<double> area;   // boundary measure per unknown (traces only)
  std::vector<double> h;      // boundary mean curvature per unknown (traces only)
  double volume = 0.0;

  std::size_t size() const { return mass.size(); }
  std::size_t first_center() const { return left_trace ? 1 : 0; }
  bool is_trace(std::size_t i) const {
    return (left_trace && i == 0) || (right_trace && i + 1 == size());
  }
  std::vector<std::size_t> trace_indices() const;

  /// Dirichlet form sum kappa (dx)^2, without a_n.
  SymTridiagonal stiffness() const;
  /// Matrix of E.
  SymTridiagonal energy_matrix() const;
  double energy(const std::vector<double>& x) const;
  std::vector<double> apply_energy(const std::vector<double>& x) const;
  /// sum mass |x|^s and sum area |x|^s.
  double volume_power(const std::vector<double>& x, double s) const;
  double boundary_power(const std::vector<double>& x, double s) const;

  std::vector<double> sample(const std::function<double(double)>& f) const;
  std::vector<double> constant(double v) const { return std::vector<double>(size(), v); }
  /// Parameter value of each unknown.
  std::vector<double> positions() const;
  GridFunction to_grid_function(const std::vector<double>& x) const;
};

AssembledForms assemble(const Profile& p, const Grid& grid);
/// Same with a precomputed weight (for rescaled or shared weights).
AssembledForms assemble(const Profile& p, const Grid& grid, const RadialWeight& w);

/// J^s (interior) or Q^s (boundary) of x.
double quotient(const AssembledForms& f, const std::vector<double>& x, double s, Mode mode);

/// Quadratic extrapolation of the three nearest centers to an endpoint.
double extrapolate_to_end(const Grid& g, const std::vector<double>& centers, Side side);

}  // namespace isoyamabe

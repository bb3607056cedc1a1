#pragma once

#include <string>
#include <vector>

#include "discretize.hpp"

namespace isoyamabe {

struct SpectrumResult {
  std::vector<double> eigenvalues;
  std::vector<GridFunction> eigenfunctions;  // orthonormal in the mass inner product
  std::vector<std::vector<double>> center_vectors;
  std::vector<double> error_estimate;  // |mu_M - mu_{M/2}| / 3, NaN when the half grid is too coarse
  std::vector<double> extrapolated;    // (4 mu_M - mu_{M/2}) / 3
  Grid grid;
};

/// Radial Neumann eigenpairs of -b u'' + a u' (zero flux at boundary
/// components, no condition at focal endpoints).
SpectrumResult neumann_spectrum(const Profile& p, const Grid& grid, int count);
SpectrumResult neumann_spectrum(const AssembledForms& forms, int count);

/// Symmetric scaled Neumann operator W^{-1/2} K W^{-1/2} on cell centers.
SymTridiagonal neumann_operator(const AssembledForms& forms);

struct ProbeResult {
  double lambda_dirichlet = 0.0;
  double lambda_steklov = 0.0;
  double lambda_robin = 0.0;
  bool steklov_degenerate = false;
  bool finiteness_certified = false;  // robin >= 0
  bool possibly_unbounded = false;    // dirichlet < 0
  std::string sign;                   // "+", "-", "0" or "mixed"
  std::string scope = "radial-restricted";
};

/// First eigenvalues of a_n Delta + s_g with zero traces, with the homogeneous
/// boundary condition B u = 0, and of the Steklov-type problem L u = 0, B u = lambda u.
ProbeResult conformal_eigen_probe(const Profile& p, const Grid& grid);
ProbeResult conformal_eigen_probe(const AssembledForms& forms);

}  // namespace isoyamabe

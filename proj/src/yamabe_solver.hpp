#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "discretize.hpp"
#include "flow.hpp"
#include "spectra.hpp"

namespace isoyamabe {

struct Admissibility {
  bool admissible = false;
  Threshold threshold;
  std::string reason;
};

/// s is admissible iff k(f) >= n - 2 or s lies strictly below the codimension threshold.
Admissibility check_subcritical(const Profile& p, double s, Mode mode);
Admissibility check_subcritical(int n, int k, double s, Mode mode);

struct SolveOptions {
  double tol_interior = 1e-6;
  double tol_boundary = 1e-8;
  int max_iter = 100000;
  std::optional<std::uint64_t> seed;  // random positive start when set
  std::vector<double> initial;        // explicit start; overrides seed
  bool keep_log = true;
};

struct IterationRecord {
  int iteration = 0;
  double value = 0.0;
  double residual_interior = 0.0;
  double residual_boundary = 0.0;
  double step = 0.0;
};

struct SolveReport {
  Mode mode = Mode::interior;
  double s = 0.0;
  std::vector<double> x;  // unknown vector, normalized so the constraint norm is 1
  GridFunction minimizer;
  double value = 0.0;
  double lagrange_c = 0.0;
  double constant_quotient = 0.0;
  Residuals residual;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> log;
};

/// Discrete Euler-Lagrange residuals of
///   interior: L u = c u^{s-1} in M, B u = 0 on the boundary,
///   boundary: L u = 0 in M, B u = c u^{s-1} on the boundary.
Residuals el_residual(const AssembledForms& f, const std::vector<double>& x, double s, double c, Mode mode);

/// Gradient of the discrete quotient J^s or Q^s at x > 0.
std::vector<double> quotient_gradient(const AssembledForms& f, const std::vector<double>& x, double s, Mode mode);

/// Preconditioned nonlinear conjugate gradient on the quotient with the
/// absolute-value projection and constraint normalization.
SolveReport minimize_quotient(const Profile& p, const AssembledForms& f, double s, Mode mode,
                              const SolveOptions& opt = {});
SolveReport minimize_quotient(const Profile& p, const Grid& grid, double s, Mode mode, const SolveOptions& opt = {});

struct ShootingResult {
  Side start = Side::left;
  double start_value = 0.0;
  double mismatch = 0.0;
  int newton_iterations = 0;
  std::vector<double> t, u, du, d2u;  // uniform samples over the whole interval

  /// Quintic Hermite interpolant of (u, u', u''); u'' comes from the ODE itself.

  ScalarCurve curve() const;
  std::vector<double> sample(const AssembledForms& f) const;
};

/// Far-end boundary-condition mismatch for a given start value.
double shooting_mismatch(const Profile& p, double s, double c, Mode mode, double start_value);

/// Integrates the radial Euler-Lagrange ODE from a focal endpoint (series
/// start) or the left boundary and Newton-adjusts the start value.
ShootingResult shooting_solve(const Profile& p, double s, double c, Mode mode, double init, int samples = 2049);

struct CorollaryResult {
  SolveReport interior, boundary;
  ScalarCurve u1, u2;
  Profile h1, h2;
  double h1_scalar = 0.0, h1_scalar_dev = 0.0, h1_boundary_max = 0.0;
  double h2_scalar_max = 0.0, h2_mean_curvature = 0.0, h2_boundary_dev = 0.0, h2_volume = 0.0;
  bool ok = false;
};

/// h1: constant scalar curvature with minimal boundary; h2: scalar flat with
/// constant boundary mean curvature and unit volume.
CorollaryResult constant_curvature_metrics(const Profile& p, const Grid& grid, const SolveOptions& opt = {},
                                           bool override_finiteness = false);

/// Unit-volume normalization factor kappa with int (kappa u)^{p_n} w = 1.
double unit_volume_factor(const Profile& p, const ScalarCurve& u);

}  // namespace isoyamabe

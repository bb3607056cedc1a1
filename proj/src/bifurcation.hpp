#pragma once

#include <string>
#include <vector>

#include "spectra.hpp"
#include "yamabe_solver.hpp"

namespace isoyamabe {

struct BifurcationPoint {
  int i = 0;
  double mu = 0.0;
  double lambda = 0.0;  // mu / (s - 2)
};

/// lambda_i = mu_i / (s - 2) for i = 1..count from the radial Neumann spectrum.
std::vector<BifurcationPoint> bifurcation_points(const Profile& p, const Grid& grid, double s, int count);
std::vector<BifurcationPoint> bifurcation_points(const AssembledForms& f, double s, int count);

struct ProductTime {
  int i = 0;
  double mu = 0.0;
  double t = 0.0;
  double lambda = 0.0;       // lambda(t_i)
  double consistency = 0.0;  // |lambda(t_i)(p_N - 2) - mu_i| / max(1, mu_i)
};

struct ProductTimes {
  std::vector<ProductTime> times;  // t_i > 0, decreasing
  std::vector<std::string> notices;
};

/// t_i = s_h / (mu_i (m + n - 1) - s_g). mus[k] is mu_{k+1}.
ProductTimes product_bifurcation_times(int m, double s_g, double s_h, int n_factor, const std::vector<double>& mus);

/// lambda(t) = (s_g + s_h / t) / a_N.
double product_lambda(int N, double s_g, double s_h, double t);

/// F(u, lambda) = K u + lambda W (u - u^{s-1}) on cell centers with zero flux at
/// the ends; entry i divided by W_i is the pointwise value of Delta u + lambda (u - u^{s-1}).
std::vector<double> branch_map(const AssembledForms& f, const std::vector<double>& u, double lambda, double s);
/// W-weighted RMS of F_i / W_i.
double branch_residual(const AssembledForms& f, const std::vector<double>& u, double lambda, double s);

struct BranchSample {
  double r = 0.0;  // <u - 1, v_i>_W / <v_i, v_i>_W
  std::vector<double> x;  // center values
  GridFunction u;
  double lambda = 0.0;
  double residual = 0.0;
  double distance_to_trivial = 0.0;
  int newton_iterations = 0;
};

struct BranchOptions {
  double tol = 1e-10;
  int max_newton = 12;
  int max_halvings = 12;
};

struct Branch {
  int i = 0;
  double mu = 0.0, lambda_i = 0.0, s = 0.0;
  std::vector<double> v;  // eigenvector on centers, unit mean square, positive at the right end
  double v_max = 0.0;     // max |v|
  std::vector<BranchSample> samples;
  bool truncated = false;
  std::string diagnostic;
};

/// Continues the branch leaving (1, lambda_i) along +v_i until r >= r_max or
/// `steps` samples have been accepted.
Branch continue_branch(const Profile& p, const Grid& grid, double s, int i, double r_max, int steps,
                       const BranchOptions& opt = {});
Branch continue_branch(const AssembledForms& f, double s, int i, double r_max, int steps,
                       const BranchOptions& opt = {});

/// Natural-parameter solve <u - 1, v_i>_W / V = r near the bifurcation point.
BranchSample branch_point(const AssembledForms& f, double s, int i, double r, const BranchOptions& opt = {});

/// Same profile as a product p at a different factor scale gamma.
Profile product_at(const Profile& p, double gamma);

struct MetricCertificate {
  double gamma = 0.0;
  double lambda = 0.0;
  double lambda_check = 0.0;  // |lambda(gamma) - lambda|
  double t_i = 0.0;
  double gamma_offset = 0.0;  // |gamma - t_i|
  double scalar = 0.0;        // mean scalar curvature of the new metric
  double scalar_dev = 0.0;    // max relative deviation
  double boundary_max = 0.0;  // max |h| over boundary components
  double distance_to_trivial = 0.0;
  bool trivial = false;
  bool ok = false;
  std::string note;
  ShootingResult shooting;
  Profile metric;
};

/// Rebuilds the product at the gamma with lambda(gamma) = sample.lambda, polishes
/// u by shooting and certifies the conformal metric u^{p_N - 2} g(gamma).
MetricCertificate branch_to_metric(const Profile& p, const BranchSample& sample, double t_i);

}  // namespace isoyamabe

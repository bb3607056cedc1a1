#pragma once

#include <vector>

#include "yamabe_solver.hpp"

namespace isoyamabe {

/// Constraint a int |u|^p dv + b int |u|^q dsigma = 1.
struct ConstraintSpec {
  double a = 1.0;
  double b = 0.0;
  double p = 0.0, q = 0.0;  // 0 selects p_n and the boundary critical exponent
};

ConstraintSpec resolve_spec(const ConstraintSpec& spec, int n);

/// The unique lambda > 0 with F(lambda) = a P lambda^p + b Q lambda^q = 1; for
/// b < 0 the root right of F's minimum.
double constraint_project(const AssembledForms& f, const std::vector<double>& x, const ConstraintSpec& spec);
/// a P + b Q for x.
double constraint_value(const AssembledForms& f, const std::vector<double>& x, const ConstraintSpec& spec);

struct HanLiResult {
  ConstraintSpec spec;
  std::vector<double> x;
  GridFunction minimizer;
  double value = 0.0;  // Y^{a,b}
  double c1 = 0.0, c2 = 0.0;
  double A = 0.0;      // a p P + b q Q
  double c_ab = 0.0;   // boundary constant after rescaling to L v = v^{p-1}
  double max_infeasibility = 0.0;
  Residuals residual;
  int iterations = 0;
  std::vector<IterationRecord> log;
};

/// Minimizes E over the radial constraint set by projected descent.
HanLiResult minimize_constrained(const Profile& p, const AssembledForms& f, const ConstraintSpec& spec,
                                 const SolveOptions& opt = {});

struct CurveSample {
  double a = 0.0, b = 0.0;
  double value = 0.0, A = 0.0, c = 0.0;
  double lower = 0.0, upper = 0.0;  // upper is NaN for b <= 0
  bool lower_ok = true, upper_ok = true, sandwich_ok = true;
  Residuals residual;
};

/// Samples c_{a,b} along a path with warm starts; violations are flagged, not thrown.
std::vector<CurveSample> c_curve(const Profile& p, const AssembledForms& f,
                                 const std::vector<std::pair<double, double>>& path, const SolveOptions& opt = {});

struct PrescribedResult {
  double a = 1.0, b = 0.0;
  double c = 0.0;
  HanLiResult solve;
  std::vector<double> v;  // L v = v^{p-1}, B v = c v^{q-1}
  Residuals certificate;
  int evaluations = 0;
  std::string branch;  // "b=0", "b-sweep", "a-sweep"
};

/// Root-finds c_{a,b} = c_target on a = 1 (b-sweep) or b = +-1 (a-sweep).
PrescribedResult find_prescribed_mean_curvature(const Profile& p, const AssembledForms& f, double c_target,
                                                double tol = 1e-9, const SolveOptions& opt = {});

}  // namespace isoyamabe

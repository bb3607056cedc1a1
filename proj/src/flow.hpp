#pragma once

#include <functional>
#include <string>
#include <vector>

#include "discretize.hpp"

namespace isoyamabe {

// Energy descent on a constraint manifold shared by the quotient and
// constrained minimizers. The objective is always the energy E(x) of the forms evaluated on
// projected iterates.
struct FlowProblem {
  // Maps a nonnegative vector onto the constraint set.
  std::function<void(std::vector<double>&)> project;
  // Tangential residual r with dE/dalpha = 2 r.d along projected rays.
  std::function<std::vector<double>(const std::vector<double>&, double)> force;
  // Checked before every step; true stops the flow.
  std::function<bool(const std::vector<double>&, double, int)> converged;
  // Called after each accepted step with the step length.
  std::function<void(const std::vector<double>&, double, int, double)> accepted;
  std::function<std::string()> diagnostics;

  // Optional Newton polish once the energy stops resolving progress: G is the
  // constraint function with gradient and Hessian diagonal; merit is a
  // residual measure to decrease (converged when <= 1).
  std::function<std::vector<double>(const std::vector<double>&)> constraint_grad;
  std::function<std::vector<double>(const std::vector<double>&)> constraint_hess;
  std::function<double(const std::vector<double>&)> merit;
};

/// A + sigma (W + A_b) with sigma large enough for positive definiteness.
SymTridiagonal flow_preconditioner(const AssembledForms& f, const SymTridiagonal& A);

/// Preconditioned Polak-Ribiere+ descent with Armijo backtracking on |x + alpha d|.
/// Returns the iteration count; throws Errc::convergence on stagnation or max_iter.
int run_flow(const AssembledForms& f, const SymTridiagonal& P, std::vector<double>& x, const FlowProblem& prob,
             int max_iter);

struct Residuals {
  double interior = 0.0;         // mass-weighted 2-norm relative to the mass norm of x
  std::vector<double> boundary;  // one per boundary component, relative to max |x|
  double boundary_max = 0.0;
};

/// Residuals of L u = c_int u^{s_int - 1} and B u = c_bdy u^{s_bdy - 1}.
Residuals system_residual(const AssembledForms& f, const std::vector<double>& x, double s_int, double c_int,
                          double s_bdy, double c_bdy);

}  // namespace isoyamabe

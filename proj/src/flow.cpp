#include "flow.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "error.hpp"

namespace isoyamabe {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Newton on A x = mu grad G with the step tangent to the constraint, followed by
// projection. Returns false when the merit cannot be reduced.
bool newton_polish(const AssembledForms& f, const SymTridiagonal& A, std::vector<double>& x, const FlowProblem& prob) {
  const std::size_t n = x.size();
  const auto N = static_cast<Eigen::Index>(n);
  double merit = prob.merit(x);
  for (int step = 0; step < 20 && merit > 1.0; ++step) {
    const auto g = prob.constraint_grad(x);
    const auto hd = prob.constraint_hess(x);
    const double mu = f.energy(x) / dot(x, g);
    auto R = A.apply(x);
    for (std::size_t i = 0; i < n; ++i) R[i] -= mu * g[i];
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < n; ++i) {
      const auto I = static_cast<Eigen::Index>(i);
      trip.emplace_back(I, I, A.diag[i] - mu * hd[i]);
      if (i + 1 < n) {
        trip.emplace_back(I, I + 1, A.off[i]);
        trip.emplace_back(I + 1, I, A.off[i]);
      }
    }
    Eigen::SparseMatrix<double> H(N, N);
    H.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(H);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(R.data(), N);
    const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(g.data(), N);
    const Eigen::VectorXd hr = lu.solve(r), hu = lu.solve(u);
    if (lu.info() != Eigen::Success) return false;
    // H dx - u dmu = -R with u . dx = 0
    const double dmu = u.dot(hr) / u.dot(hu);
    const Eigen::VectorXd dx = -hr + dmu * hu;
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
      std::vector<double> xt(n);
      for (std::size_t i = 0; i < n; ++i) xt[i] = std::abs(x[i] + alpha * dx(static_cast<Eigen::Index>(i)));
      try {
        prob.project(xt);
      } catch (const Error&) {
        continue;
      }
      const double mt = prob.merit(xt);
      if (mt < merit) {
        x = std::move(xt);
        merit = mt;
        improved = true;
        break;
      }
    }
    if (!improved) return false;
  }
  return true;
}

}  // namespace

SymTridiagonal flow_preconditioner(const AssembledForms& f, const SymTridiagonal& A) {
  const std::size_t n = f.size();
  std::vector<double> md = f.mass;
  for (std::size_t t : f.trace_indices()) md[t] += f.area[t];
  SymTridiagonal scaled = A;
  for (std::size_t i = 0; i < n; ++i) scaled.diag[i] /= md[i];
  for (std::size_t i = 0; i + 1 < n; ++i) scaled.off[i] /= std::sqrt(md[i] * md[i + 1]);
  const double lmin = kth_eigenvalue(scaled, 0);
  const double sigma = lmin > 0.0 ? 0.0 : 1.1 * (-lmin) + 1e-3 * std::max(1.0, std::abs(lmin));
  SymTridiagonal P = A;
  for (std::size_t i = 0; i < n; ++i) P.diag[i] += sigma * md[i];
  return P;
}

int run_flow(const AssembledForms& f, const SymTridiagonal& P, std::vector<double>& x, const FlowProblem& prob,
             int max_iter) {
  const std::size_t n = x.size();
  // edge-difference form; x^T A x loses digits to cancellation
  auto energy = [&](const std::vector<double>& v) { return f.energy(v); };
  const bool can_polish = prob.constraint_grad && prob.constraint_hess && prob.merit;
  const SymTridiagonal A = can_polish ? f.energy_matrix() : SymTridiagonal{};
  std::vector<double> dir, r_prev;
  double zr_prev = 0.0;
  double E = energy(x);
  int flat = 0;
  for (int it = 0;; ++it) {
    if (prob.converged(x, E, it)) return it;
    if (can_polish && (flat >= 3 || (it > 0 && it % 25 == 0))) {
      // keep the polished point only if it does not climb to a higher critical point
      auto trial = x;
      if (newton_polish(f, A, trial, prob)) {
        const double Et = energy(trial);
        if (Et <= E + 1e-10 * std::abs(E)) {
          x = std::move(trial);
          E = Et;
          dir.clear();
          if (prob.converged(x, E, it)) return it;
        }
      }
      flat = 0;
    }
    if (it >= max_iter)
      fail(Errc::convergence, "flow did not converge in " + std::to_string(max_iter) + " iterations; " + prob.diagnostics());
    const auto r = prob.force(x, E);
    const auto z = solve_tridiagonal(P, r);
    const double zr = dot(z, r);
    // Polak-Ribiere+ conjugate direction; restart on loss of descent.
    double beta = 0.0;
    if (!dir.empty()) {
      double num = 0.0;
      for (std::size_t i = 0; i < n; ++i) num += z[i] * (r[i] - r_prev[i]);
      beta = std::max(0.0, num / zr_prev);
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = -z[i] + (dir.empty() ? 0.0 : beta * dir[i]);
    if (dot(d, r) >= 0.0) {
      beta = 0.0;
      for (std::size_t i = 0; i < n; ++i) d[i] = -z[i];
    }
    bool ok = false;
    double step = 0.0;
    const double E_before = E;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
      if (attempt == 1) {
        if (beta == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) d[i] = -z[i];
      }
      const double slope = 2.0 * dot(r, d);
      double alpha = 1.0;
      for (int k = 0; k < 60; ++k, alpha *= 0.5) {
        std::vector<double> xt(n);
        for (std::size_t i = 0; i < n; ++i) xt[i] = std::abs(x[i] + alpha * d[i]);
        try {
          prob.project(xt);
        } catch (const Error&) {
          continue;
        }
        const double Et = energy(xt);
        // Armijo with a rounding allowance so converged iterates are not rejected.
        if (Et <= E + 1e-4 * alpha * slope + 1e-14 * std::abs(E)) {
          x = std::move(xt);
          E = Et;
          step = alpha;
          ok = true;
          break;
        }
      }
    }
    if (!ok) {
      auto trial = x;
      if (can_polish && newton_polish(f, A, trial, prob) && energy(trial) <= E + 1e-10 * std::abs(E)) {
        x = std::move(trial);
        E = energy(x);
        dir.clear();
        continue;
      }
      fail(Errc::convergence, "flow stagnated at iteration " + std::to_string(it) + "; " + prob.diagnostics());
    }
    flat = std::abs(E - E_before) <= 1e-12 * std::abs(E) ? flat + 1 : 0;
    if (prob.accepted) prob.accepted(x, E, it, step);
    dir = std::move(d);
    r_prev = r;
    zr_prev = zr;
  }
}

Residuals system_residual(const AssembledForms& f, const std::vector<double>& x, double s_int, double c_int,
                          double s_bdy, double c_bdy) {
  require(x.size() == f.size(), Errc::invalid_argument, "grid function does not match the forms");
  for (double v : x) require(v > 0.0, Errc::domain, "residual needs a positive function");
  const auto ax = f.apply_energy(x);
  const std::size_t c0 = f.first_center(), M = f.grid.centers.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = c0; i < c0 + M; ++i) {
    const double r = ax[i] / f.mass[i] - c_int * std::pow(x[i], s_int - 1.0);
    num += f.mass[i] * r * r;
    den += f.mass[i] * x[i] * x[i];
  }
  Residuals out;
  out.interior = std::sqrt(num / den);
  const double xmax = *std::max_element(x.begin(), x.end());
  for (std::size_t t : f.trace_indices()) {
    const double r = ax[t] / (2.0 * (f.dim - 1.0) * f.area[t]) - c_bdy * std::pow(x[t], s_bdy - 1.0);
    out.boundary.push_back(std::abs(r) / xmax);
    out.boundary_max = std::max(out.boundary_max, out.boundary.back());
  }
  return out;
}

}  // namespace isoyamabe

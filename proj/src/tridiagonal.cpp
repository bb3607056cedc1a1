#include "tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace isoyamabe {

std::vector<double> SymTridiagonal::apply(std::span<const double> x) const {
  const std::size_t n = diag.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    y[i] = v;
  }
  return y;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  require(rhs.size() == n && (n == 0 || (lower.size() == n - 1 && upper.size() == n - 1)),
          Errc::invalid_argument, "tridiagonal solve: size mismatch");
  if (n == 0) return {};
  // LAPACK dgtsv-style elimination; u2 holds the second superdiagonal created by row swaps.
  std::vector<double> dl(lower.begin(), lower.end()), d(diag.begin(), diag.end()),
      du(upper.begin(), upper.end()), du2(n > 2 ? n - 2 : 0, 0.0), b(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      require(d[i] != 0.0, Errc::domain, "tridiagonal solve: singular matrix");
      const double f = dl[i] / d[i];
      d[i + 1] -= f * du[i];
      b[i + 1] -= f * b[i];
      dl[i] = 0.0;
    } else {
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      const double tmp = d[i + 1];
      d[i + 1] = du[i] - f * tmp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du2[i];
      }
      du[i] = tmp;
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= f * b[i];
    }
  }
  require(d[n - 1] != 0.0, Errc::domain, "tridiagonal solve: singular matrix");
  std::vector<double> x(n);
  x[n - 1] = b[n - 1] / d[n - 1];
  if (n > 1) x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
  for (std::size_t k = n - 2; k-- > 0;) {
    x[k] = (b[k] - du[k] * x[k + 1] - du2[k] * x[k + 2]) / d[k];
  }
  return x;
}

std::vector<double> solve_tridiagonal(const SymTridiagonal& m, std::span<const double> rhs) {
  return solve_tridiagonal(m.off, m.diag, m.off, rhs);
}

int count_eigenvalues_below(const SymTridiagonal& m, double x) {
  const std::size_t n = m.diag.size();
  const double tiny = std::numeric_limits<double>::min();
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e2 = i > 0 ? m.off[i - 1] * m.off[i - 1] : 0.0;
    q = (m.diag[i] - x) - (i > 0 ? e2 / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

double kth_eigenvalue(const SymTridiagonal& m, int k) {
  const std::size_t n = m.diag.size();
  require(k >= 0 && static_cast<std::size_t>(k) < n, Errc::invalid_argument,
          "eigenvalue index out of range");
  // Gershgorin bounds
  double lo = std::numeric_limits<double>::max(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(m.off[i - 1]);
    if (i + 1 < n) r += std::abs(m.off[i]);
    lo = std::min(lo, m.diag[i] - r);
    hi = std::max(hi, m.diag[i] + r);
  }
  const double span = std::max(std::abs(lo), std::abs(hi));
  lo -= 1e-12 * span + 1e-300;
  hi += 1e-12 * span + 1e-300;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_eigenvalues_below(m, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> inverse_iteration(const SymTridiagonal& m, double shift) {
  const std::size_t n = m.diag.size();
  std::vector<double> diag(m.diag);
  double scale = 0.0;
  for (double d : m.diag) scale = std::max(scale, std::abs(d));
  for (double e : m.off) scale = std::max(scale, std::abs(e));
  // Perturb the shift off the eigenvalue so the factorization stays finite.
  const double nudge = std::max(scale, 1.0) * 1e-14;
  for (auto& d : diag) d -= shift + nudge;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.37 * std::sin(1.3 * static_cast<double>(i) + 0.2);
  for (int it = 0; it < 4; ++it) {
    x = solve_tridiagonal(m.off, diag, m.off, x);
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : x) v /= norm;
  }
  return x;
}

}  // namespace isoyamabe

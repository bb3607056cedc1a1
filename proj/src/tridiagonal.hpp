#pragma once

#include <span>
#include <vector>

namespace isoyamabe {

/// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }
  std::vector<double> apply(std::span<const double> x) const;
};

/// Gaussian elimination with partial pivoting on a general tridiagonal system.
/// lower/upper have n-1 entries. Throws Errc::domain on an exactly singular pivot.
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

std::vector<double> solve_tridiagonal(const SymTridiagonal& m, std::span<const double> rhs);

/// Number of eigenvalues strictly below x (Sturm sequence count).
int count_eigenvalues_below(const SymTridiagonal& m, double x);

/// k-th smallest eigenvalue (0-based) by bisection to machine precision.
double kth_eigenvalue(const SymTridiagonal& m, int k);

/// Eigenvector for an isolated eigenvalue near `shift` by inverse iteration,
/// normalized to unit Euclidean length.
std::vector<double> inverse_iteration(const SymTridiagonal& m, double shift);

}  // namespace isoyamabe

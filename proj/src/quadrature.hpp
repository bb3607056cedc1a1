#pragma once

#include <vector>

namespace isoyamabe {

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Jacobi rule for the weight (1 - x)^alpha (1 + x)^beta, alpha, beta > -1.
/// Nodes and weights come from the symmetric Jacobi matrix (Golub-Welsch).
QuadratureRule gauss_jacobi(int n, double alpha, double beta);

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Cached Gauss-Legendre rule; thread-safe, returns a stable reference.
const QuadratureRule& cached_gauss_legendre(int n);

}  // namespace isoyamabe

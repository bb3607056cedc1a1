#include "quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

#include "error.hpp"

namespace isoyamabe {

QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  require(n >= 1, Errc::invalid_argument, "quadrature needs at least one node");
  require(alpha > -1.0 && beta > -1.0, Errc::invalid_argument, "Jacobi exponents must exceed -1");
  const double ab = alpha + beta;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    J(k, k) = k == 0 ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double j = k + 1.0, sj = 2.0 * j + ab;
      double v = 4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (sj * sj * (sj + 1.0) * (sj - 1.0));
      if (j == 1.0 && std::abs(ab + 1.0) < 1e-14)  // removable singularity at alpha + beta = -1
        v = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(v);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                              std::lgamma(ab + 2.0));
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
  }
  return rule;
}

const QuadratureRule& cached_gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

}  // namespace isoyamabe

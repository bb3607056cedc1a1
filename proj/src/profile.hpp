#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "curve.hpp"
#include "json.hpp"
#include "quadrature.hpp"

namespace isoyamabe {

enum class Side { left = 0, right = 1 };
enum class EndpointType { boundary, focal };
enum class Mode { interior, boundary };

inline int side_index(Side s) { return static_cast<int>(s); }

struct Endpoint {
  EndpointType type = EndpointType::boundary;
  double param = 0.0;
  int orientation = 0;                   // boundary: +1 at the right end, -1 at the left end
  int focal_dim = 0;                     // focal only
  std::optional<double> mean_curvature;  // boundary only; checked against the value derived from a, b
};

struct WeightNorm {
  double t_ref = 0.0;
  double area = 1.0;  // area of the level at t_ref
};

/// Provenance of a Riemannian product M x N with metric g + t h.
struct ProductData {
  int base_dim = 0;
  double base_s_g = 0.0;
  int n_factor = 0;
  double s_h = 0.0;
  double t = 1.0;
  double factor_volume = 1.0;
};

struct Profile {
  std::string name;
  int dim = 3;
  double ta = 0.0, tb = 1.0;
  ScalarCurve a, b, s_g;
  std::array<Endpoint, 2> ends;
  WeightNorm weight_norm;
  std::optional<ProductData> product;

  const Endpoint& end(Side s) const { return ends[static_cast<std::size_t>(side_index(s))]; }
  double end_param(Side s) const { return s == Side::left ? ta : tb; }
  bool is_focal(Side s) const { return end(s).type == EndpointType::focal; }
  bool is_boundary(Side s) const { return end(s).type == EndpointType::boundary; }
  int boundary_count() const;
  /// Minimum focal dimension; a boundary endpoint contributes n - 1.
  int k_f() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  bool usable() const { return violations.empty(); }
};

// Dimensional constants of the conformal Laplacian and critical exponents.
double conformal_a(int n);         // 4(n-1)/(n-2)
double critical_p(int n);          // 2n/(n-2)
double critical_p_boundary(int n); // 2(n-1)/(n-2)
void require_yamabe_dimension(int n);

Profile make_spherical_band(int n, double c1, double c2);
inline Profile make_hemisphere(int n) { return make_spherical_band(n, 0.0, 1.0); }
Profile make_cylinder_demo();
Profile make_product(const Profile& p, int n_factor, double s_h, double t, double factor_volume = 1.0);

/// Parses factory specs: "hemisphere:N", "band:N:c1:c2", "cylinder",
/// "product:n_factor:s_h:t:<base spec>".
Profile profile_from_name(const std::string& spec);

ValidationReport validate_profile(const Profile& p);
/// Throws Errc::domain listing the violations unless the profile is usable.
void require_usable(const Profile& p);

/// Mean curvature of the level M_t with respect to grad f / |grad f|.
double mean_curvature_of_level(const Profile& p, double t);
/// Boundary mean curvature h_g at an endpoint boundary component, normalized
/// as the divergence of the outward normal divided by n - 1.
double boundary_mean_curvature(const Profile& p, Side s);
double geodesic_distance(const Profile& p, double t1, double t2);

/// Exponent nu with w ~ |t - t_e|^nu at a focal endpoint; 0 at boundaries.
double vanishing_order(const Profile& p, Side s);

/// Pushforward density of the volume under f, factored as
/// w = C (t_R - t)^nu_R (t - t_L)^nu_L exp(l(t)) with singular powers only at focal ends.
class RadialWeight {
 public:
  explicit RadialWeight(const Profile& p);

  double operator()(double t) const;
  double level_area(double t) const;
  double nu(Side s) const { return nu_[static_cast<std::size_t>(side_index(s))]; }
  double total_volume() const { return volume_; }

  /// Integral of f(t) w(t) over [lo, hi] with a fixed Gauss rule; endpoint
  /// singularities of w at focal ends are absorbed into Gauss-Jacobi weights.
  double integrate(const std::function<double(double)>& f, double lo, double hi) const;
  /// Same as integrate() but subdivided on the internal panels.
  double integrate_panels(const std::function<double(double)>& f, double lo, double hi) const;

  ScalarCurve as_curve() const;

 private:
  double log_smooth(double t) const;
  double smooth_factor(double t) const;  // C exp(l) times non-singular powers

  ScalarCurve a_, b_;
  double ta_, tb_;
  std::array<double, 2> nu_{};
  std::array<bool, 2> singular_{};
  std::vector<double> breaks_, ell_;
  double log_c_ = 0.0;
  double volume_ = 0.0;
  QuadratureRule plain_, left_, right_, both_, panel_;
};

RadialWeight reconstruct_weight(const Profile& p);

/// Profile of u^{p_n - 2} g. u must be positive and twice differentiable on the interval.
Profile conformal_change(const Profile& p, const ScalarCurve& u);

/// Radial L_g(u) = a_n(-b u'' + a u') + s_g u.
double conformal_laplacian(const Profile& p, const ScalarCurve& u, double t);
/// Radial B_g(u) at a boundary endpoint.
double boundary_operator(const Profile& p, const ScalarCurve& u, Side s);

struct Threshold {
  bool unrestricted = false;
  double value = 0.0;  // supremum of admissible s when restricted
};
Threshold codim_threshold(const Profile& p, Mode mode);
Threshold codim_threshold(int n, int k, Mode mode);

nlohmann::json profile_to_json(const Profile& p);
Profile profile_from_json(const nlohmann::json& j);
/// FNV-1a of the canonical JSON dump.
std::string profile_hash(const Profile& p);

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

}  // namespace isoyamabe

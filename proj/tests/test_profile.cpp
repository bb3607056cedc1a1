#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "error.hpp"
#include "profile.hpp"

using namespace isoyamabe;

namespace {

double gk(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
}

double sphere_area(int dim) { return 2.0 * std::pow(M_PI, (dim + 1) / 2.0) / std::tgamma((dim + 1) / 2.0); }

}  // namespace

TEST(Curve, TableRejectsNonMonotoneAbscissae) {
  std::vector<double> t{0, 1, 2, 3, 2.5, 5, 6, 7}, v(8, 1.0);
  EXPECT_THROW(ScalarCurve::table(t, v), Error);
  EXPECT_THROW(ScalarCurve::table({0, 1, 2}, {0, 1, 2}), Error);
}

TEST(Curve, SplineReproducesCubicsExactly) {
  std::vector<double> t, v;
  for (int i = 0; i < 12; ++i) {
    const double x = -1.0 + 0.2 * i + 0.03 * std::sin(i);
    t.push_back(x);
    v.push_back(1.0 - 2.0 * x + 0.5 * x * x - x * x * x);
  }
  auto c = ScalarCurve::table(t, v);
  for (double x : {-0.95, -0.3, 0.1, 0.77, 1.1}) {
    EXPECT_NEAR(c(x), 1.0 - 2.0 * x + 0.5 * x * x - x * x * x, 1e-12);
    EXPECT_NEAR(c.derivative(x), -2.0 + x - 3.0 * x * x, 1e-11);
    EXPECT_NEAR(c.second_derivative(x), 1.0 - 6.0 * x, 1e-10);
  }
}

TEST(Curve, PolynomialDerivatives) {
  auto c = ScalarCurve::polynomial({1.0, 0.0, -1.0});
  EXPECT_DOUBLE_EQ(c(0.5), 0.75);
  EXPECT_DOUBLE_EQ(c.derivative(0.5), -1.0);
  EXPECT_DOUBLE_EQ(c.second_derivative(0.5), -2.0);
}

TEST(Profile, SphericalBandValid) {
  auto p = make_spherical_band(3, -0.5, 0.5);
  auto r = validate_profile(p);
  EXPECT_TRUE(r.usable());
  EXPECT_EQ(p.boundary_count(), 2);
}

TEST(Profile, NegativeBIsReported) {
  auto p = make_spherical_band(3, -0.5, 0.5);
  p.b = ScalarCurve::polynomial({-1.0, 0.0, 1.0});
  auto r = validate_profile(p);
  ASSERT_FALSE(r.usable());
  bool found = false;
  for (const auto& v : r.violations) found |= v.find("b not positive on interior") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Profile, HemisphereEndpoints) {
  auto p = make_hemisphere(3);
  EXPECT_TRUE(validate_profile(p).usable());
  EXPECT_TRUE(p.is_boundary(Side::left));
  EXPECT_EQ(p.end(Side::left).param, 0.0);
  EXPECT_TRUE(p.is_focal(Side::right));
  EXPECT_EQ(p.end(Side::right).param, 1.0);
  EXPECT_EQ(p.end(Side::right).focal_dim, 0);
  EXPECT_DOUBLE_EQ(p.s_g(0.3), 6.0);
  EXPECT_NEAR(boundary_mean_curvature(p, Side::left), 0.0, 1e-15);
}

TEST(Profile, EmptyBandRejected) { EXPECT_THROW(make_spherical_band(3, 0.5, 0.5), Error); }

TEST(Profile, CylinderDemo) {
  auto p = make_cylinder_demo();
  EXPECT_DOUBLE_EQ(p.b(0.0), 1.0);
  EXPECT_DOUBLE_EQ(p.a(0.0), 0.0);
  EXPECT_TRUE(validate_profile(p).usable());
  RadialWeight w(p);
  for (double t : {-0.8, -0.3, 0.0, 0.4, 0.85}) EXPECT_NEAR(w.level_area(t), 2.0 * M_PI, 1e-10);
  for (double t : {-0.5, 0.0, 0.7}) EXPECT_NEAR(mean_curvature_of_level(p, t), 0.0, 1e-15);
}

TEST(Profile, ProductScalarCurvature) {
  auto base = make_hemisphere(2);
  auto q = make_product(base, 2, 2.0, 1.0);
  EXPECT_EQ(q.dim, 4);
  EXPECT_DOUBLE_EQ(q.s_g(0.2), 4.0);
  EXPECT_DOUBLE_EQ(make_product(base, 2, 2.0, 0.125).s_g(0.2), 18.0);
  EXPECT_EQ(q.k_f(), 2);
  EXPECT_TRUE(validate_profile(q).usable());
  EXPECT_THROW(make_product(base, 2, 2.0, 0.0), Error);
  for (double t : {0.5, 0.25, 2.0, 4.0}) {
    auto pt = make_product(base, 2, 3.0, t);
    EXPECT_EQ(pt.s_g(0.0) - base.s_g(0.0), 3.0 / t);
  }
}

TEST(Profile, ProductWeightScalesByFactorVolume) {
  auto base = make_hemisphere(2);
  auto q = make_product(base, 2, 2.0, 0.25, 3.0);
  EXPECT_NEAR(RadialWeight(q).total_volume(), RadialWeight(base).total_volume() * 0.25 * 3.0, 1e-12);
}

TEST(Profile, LatitudeMeanCurvatureOracle) {
  // second fundamental form of the latitude x_{n+1} = t in S^n: trace (n-1) t / sqrt(1 - t^2)
  for (int n : {3, 4, 5}) {
    auto p = make_spherical_band(n, -0.9, 0.9);
    for (double t : {-0.8, -0.2, 0.0, 0.5, 0.85}) {
      const double oracle = (n - 1) * t / std::sqrt(1 - t * t);
      EXPECT_NEAR(mean_curvature_of_level(p, t), oracle, 1e-10 * std::max(1.0, std::abs(oracle)));
    }
  }
  EXPECT_NEAR(mean_curvature_of_level(make_hemisphere(3), 0.5), 2.0 / std::sqrt(3.0), 1e-14);
  EXPECT_THROW(mean_curvature_of_level(make_hemisphere(3), 1.0), Error);
}

TEST(Profile, MeanCurvatureConstantOnLevelByConstruction) {
  auto p = make_cylinder_demo();
  EXPECT_EQ(mean_curvature_of_level(p, 0.3), mean_curvature_of_level(p, 0.3));
}

TEST(Profile, GeodesicDistance) {
  auto band = make_spherical_band(3, -0.9, 0.9);
  EXPECT_NEAR(geodesic_distance(band, 0.0, 0.5), std::asin(0.5), 1e-8 * std::asin(0.5));
  auto h = make_hemisphere(3);
  EXPECT_NEAR(geodesic_distance(h, 0.0, 1.0), M_PI / 2, 1e-8 * M_PI / 2);
  EXPECT_EQ(geodesic_distance(h, 0.3, 0.3), 0.0);
  EXPECT_NEAR(geodesic_distance(h, 0.7, 1.0), std::acos(0.7), 1e-12);
}

TEST(Profile, GeodesicDistanceAdditive) {
  auto h = make_hemisphere(4);
  for (double t2 : {0.1, 0.5, 0.9, 0.999}) {
    EXPECT_NEAR(geodesic_distance(h, 0.0, 1.0), geodesic_distance(h, 0.0, t2) + geodesic_distance(h, t2, 1.0),
                1e-12);
  }
}

TEST(Profile, GeodesicDistanceDoubleZeroIsAnError) {
  auto p = make_hemisphere(3);
  p.b = ScalarCurve::polynomial({1.0, -2.0, 1.0});  // (1 - t)^2
  EXPECT_THROW(geodesic_distance(p, 0.0, 1.0), Error);
}

TEST(Weight, SphereClosedForm) {
  auto p = make_hemisphere(3);
  RadialWeight w(p);
  // w' = -w (a + b') / b with a = 3t, b = 1 - t^2 integrates to w = C sqrt(1 - t^2); level area 4 pi (1 - t^2)
  const double c = w(0.0);
  EXPECT_NEAR(c, 4.0 * M_PI, 1e-12);
  for (double t : {0.0, 0.1, 0.33, 0.5, 0.9, 0.999}) {
    EXPECT_NEAR(w(t) / c, std::sqrt(1 - t * t), 1e-10);
    EXPECT_NEAR(w.level_area(t), sphere_area(2) * (1 - t * t), 1e-8 * sphere_area(2) * (1 - t * t));
  }
  EXPECT_NEAR(w.total_volume(), M_PI * M_PI, 1e-8 * M_PI * M_PI);
  EXPECT_NEAR(w.level_area(0.0), 4.0 * M_PI, 1e-12);
}

TEST(Weight, LevelAreasAcrossDimensions) {
  for (int n : {2, 3, 4, 6}) {
    auto p = make_spherical_band(n, -1.0, 0.4);
    EXPECT_TRUE(validate_profile(p).usable());
    RadialWeight w(p);
    for (double t : {-0.99, -0.5, 0.0, 0.3}) {
      const double oracle = sphere_area(n - 1) * std::pow(1 - t * t, (n - 1) / 2.0);
      EXPECT_NEAR(w.level_area(t), oracle, 1e-8 * oracle) << "n=" << n << " t=" << t;
    }
    const double vol = gk([&](double t) { return sphere_area(n - 1) * std::pow(1 - t * t, (n - 2) / 2.0); }, -1.0, 0.4);
    EXPECT_NEAR(w.total_volume(), vol, 1e-8 * vol);
  }
}

TEST(Weight, VanishingOrderMatchesFocalDim) {
  EXPECT_DOUBLE_EQ(vanishing_order(make_hemisphere(3), Side::right), 0.5);
  EXPECT_DOUBLE_EQ(vanishing_order(make_hemisphere(5), Side::right), 1.5);
  auto bad = make_hemisphere(3);
  bad.ends[1].focal_dim = 1;
  EXPECT_FALSE(validate_profile(bad).usable());
}

TEST(Weight, ReducedLaplacianSelfAdjoint) {
  auto p = make_spherical_band(4, -1.0, 0.6);
  RadialWeight w(p);
  auto bump = [](double c, double r) {
    return std::array<std::function<double(double)>, 3>{
        [=](double t) { const double x = (t - c) / r; return std::abs(x) < 1 ? std::pow(1 - x * x, 4) : 0.0; },
        [=](double t) {
          const double x = (t - c) / r;
          return std::abs(x) < 1 ? -8 * x * std::pow(1 - x * x, 3) / r : 0.0;
        },
        [=](double t) {
          const double x = (t - c) / r;
          return std::abs(x) < 1 ? (48 * x * x * std::pow(1 - x * x, 2) - 8 * std::pow(1 - x * x, 3)) / (r * r) : 0.0;
        }};
  };
  auto phi = bump(-0.2, 0.5), psi = bump(0.0, 0.4);
  const double lhs = gk([&](double t) { return (-p.b(t) * phi[2](t) + p.a(t) * phi[1](t)) * psi[0](t) * w(t); }, -0.7, 0.5);
  const double rhs = gk([&](double t) { return p.b(t) * phi[1](t) * psi[1](t) * w(t); }, -0.7, 0.5);
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(rhs));
}

TEST(Conformal, IdentityWithinTolerance) {
  auto p = make_hemisphere(3);
  auto q = conformal_change(p, ScalarCurve::constant(1.0));
  for (double t : {0.0, 0.2, 0.6, 0.95, 1.0}) {
    EXPECT_NEAR(q.a(t), p.a(t), 1e-12);
    EXPECT_NEAR(q.b(t), p.b(t), 1e-12);
    EXPECT_NEAR(q.s_g(t), p.s_g(t), 1e-12);
    EXPECT_NEAR(q.b.derivative(t), p.b.derivative(t), 1e-12);
  }
  EXPECT_NEAR(q.weight_norm.area, p.weight_norm.area, 1e-12);
  EXPECT_NEAR(*q.end(Side::left).mean_curvature, 0.0, 1e-12);
}

TEST(Conformal, ConstantFactorScaling) {
  auto p = make_hemisphere(3);
  const double c = 1.7, P = critical_p(3);
  auto q = conformal_change(p, ScalarCurve::constant(c));
  EXPECT_NEAR(q.s_g(0.4), 6.0 * std::pow(c, 2 - P), 1e-12);
  EXPECT_NEAR(RadialWeight(q).total_volume(), M_PI * M_PI * std::pow(c, P), 1e-8 * M_PI * M_PI * std::pow(c, P));
}

TEST(Conformal, GenericFactorKeepsProfileValid) {
  auto p = make_hemisphere(3);
  auto u = ScalarCurve::polynomial({1.0, 0.3, -0.2, 0.1});
  auto q = conformal_change(p, u);
  auto r = validate_profile(q);
  for (const auto& v : r.violations) ADD_FAILURE() << v;
  // declared boundary mean curvature u^{-p/2} B(u) agrees with the one derived from (a_h, b_h)
  const double derived = boundary_mean_curvature(q, Side::left);
  EXPECT_NEAR(*q.end(Side::left).mean_curvature, derived, 1e-12);
  // weight transforms by phi^{n/2}
  RadialWeight w(p), wq(q);
  for (double t : {0.1, 0.5, 0.9}) EXPECT_NEAR(wq(t), std::pow(u(t), 6.0) * w(t), 1e-9 * wq(t));
}

TEST(Conformal, RejectsNonPositiveFactor) {
  EXPECT_THROW(conformal_change(make_hemisphere(3), ScalarCurve::polynomial({0.5, -1.0})), Error);
}

TEST(Threshold, CodimensionBounds) {
  auto t = codim_threshold(4, 1, Mode::interior);
  EXPECT_FALSE(t.unrestricted);
  EXPECT_EQ(t.value, 6.0);
  EXPECT_EQ(codim_threshold(4, 1, Mode::boundary).value, 4.0);
  EXPECT_TRUE(codim_threshold(3, 1, Mode::interior).unrestricted);
  EXPECT_TRUE(codim_threshold(make_product(make_hemisphere(2), 2, 2.0, 1.0), Mode::boundary).unrestricted);
}

TEST(ProfileJson, RoundTrip) {
  auto p = make_product(make_hemisphere(2), 2, 2.0, 0.5);
  auto q = profile_from_json(profile_to_json(p));
  EXPECT_EQ(profile_hash(p), profile_hash(q));
  EXPECT_EQ(q.dim, 4);
  EXPECT_TRUE(validate_profile(q).usable());
}

TEST(ProfileJson, TableProfile) {
  auto p = make_hemisphere(3);
  auto j = profile_to_json(p);
  std::vector<double> t, v;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(i / 40.0);
    v.push_back(1 - t.back() * t.back());
  }
  j["b"] = {{"kind", "table"}, {"t", t}, {"values", v}};
  auto q = profile_from_json(j);
  EXPECT_TRUE(validate_profile(q).usable());
  EXPECT_NEAR(RadialWeight(q).total_volume(), M_PI * M_PI, 1e-8);
  std::swap(t[3], t[4]);
  j["b"]["t"] = t;
  EXPECT_THROW(profile_from_json(j), Error);
}

TEST(ProfileName, Parsing) {
  EXPECT_EQ(profile_from_name("hemisphere:3").dim, 3);
  EXPECT_EQ(profile_from_name("band:3:-0.5:0.5").boundary_count(), 2);
  EXPECT_EQ(profile_from_name("product:2:2:0.125:hemisphere:2").s_g(0.0), 18.0);
  EXPECT_THROW(profile_from_name("torus:3"), Error);
  EXPECT_THROW(profile_from_name("hemisphere:x"), Error);
}

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>

#include "bifurcation.hpp"
#include "error.hpp"
#include "tridiagonal.hpp"

using namespace isoyamabe;

namespace {

Profile product_s2() { return make_product(make_hemisphere(2), 2, 2.0, 1.0); }

struct BranchFixture : ::testing::Test {
  static void SetUpTestSuite() {
    profile = new Profile(product_s2());
    forms = new AssembledForms(assemble(*profile, build_grid(*profile, 512)));
    branch = new Branch(continue_branch(*forms, 4.0, 1, 0.1, 40));
  }
  static void TearDownTestSuite() {
    delete branch;
    delete forms;
    delete profile;
  }
  static Profile* profile;
  static AssembledForms* forms;
  static Branch* branch;
};
Profile* BranchFixture::profile = nullptr;
AssembledForms* BranchFixture::forms = nullptr;
Branch* BranchFixture::branch = nullptr;

// Second-order coefficient of lambda along the branch on the hemisphere:
// beta'(0) = -lambda_i (s - 1) <v^3> / (2 <v^2>) with v = P_2(cos theta) scaled to unit mean square.
double legendre_slope_oracle(double lambda, double s) {
  auto integrate = [](auto g) { return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0); };
  const double m2 = integrate([](double x) { return std::pow(boost::math::legendre_p(2, x), 2); });
  const double m3 = integrate([](double x) { return std::pow(boost::math::legendre_p(2, x), 3); });
  const double k = 1.0 / std::sqrt(m2);
  return -lambda * (s - 1.0) * k * m3 / (2.0 * m2);
}

}  // namespace

TEST(BifurcationPoints, HemisphereEigenvaluesOverSMinusTwo) {
  auto p = make_hemisphere(2);
  const auto pts = bifurcation_points(p, build_grid(p, 1024), 4.0, 2);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].i, 1);
  EXPECT_NEAR(pts[0].mu, 6.0, 1e-4);
  EXPECT_NEAR(pts[1].mu, 20.0, 1e-3);
  for (const auto& b : pts) EXPECT_DOUBLE_EQ(b.lambda, b.mu / 2.0);
}

TEST(BifurcationPoints, RejectsSAtMostTwo) {
  auto p = make_hemisphere(2);
  EXPECT_THROW(bifurcation_points(p, build_grid(p, 64), 2.0, 1), Error);
  EXPECT_THROW(bifurcation_points(p, build_grid(p, 64), 1.5, 1), Error);
}

TEST(ProductTimes, HemisphereTimesSphere) {
  const auto r = product_bifurcation_times(2, 2.0, 2.0, 2, {6.0, 20.0, 42.0});
  ASSERT_EQ(r.times.size(), 3u);
  EXPECT_NEAR(r.times[0].t, 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(r.times[1].t, 1.0 / 29.0, 1e-15);
  EXPECT_NEAR(r.times[0].lambda, 3.0, 1e-14);
  EXPECT_NEAR(r.times[1].lambda, 10.0, 1e-13);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    EXPECT_LE(r.times[k].consistency, 1e-12);
    if (k > 0) EXPECT_LT(r.times[k].t, r.times[k - 1].t);
  }
  EXPECT_TRUE(r.notices.empty());
}

TEST(ProductTimes, ResonantAndNegativeTimesExcluded) {
  // mu (m+n-1) = s_g at mu = 2/3; below it t would be negative
  const auto r = product_bifurcation_times(2, 2.0, 2.0, 2, {0.5, 2.0 / 3.0, 6.0});
  ASSERT_EQ(r.times.size(), 1u);
  EXPECT_EQ(r.times[0].i, 3);
  EXPECT_EQ(r.notices.size(), 2u);
}

TEST(ProductTimes, LambdaOfT) {
  EXPECT_NEAR(product_lambda(4, 2.0, 2.0, 0.125), 3.0, 1e-15);
  EXPECT_THROW(product_lambda(4, 2.0, 2.0, 0.0), Error);
}

TEST_F(BranchFixture, TrivialAxisIsExactZero) {
  const std::vector<double> one(forms->grid.centers.size(), 1.0);
  for (double lambda : {0.0, 0.5, 3.0, 17.0}) {
    for (double v : branch_map(*forms, one, lambda, 4.0)) EXPECT_LE(std::abs(v), 1e-14);
    EXPECT_LE(branch_residual(*forms, one, lambda, 3.3), 1e-14);
  }
}

TEST_F(BranchFixture, LinearizationKernelIsSimple) {
  const auto T = neumann_operator(*forms);
  const double mu1 = branch->mu;
  std::vector<double> dist;
  for (int k = 0; k < 4; ++k) dist.push_back(std::abs(kth_eigenvalue(T, k) - mu1));
  std::sort(dist.begin(), dist.end());
  EXPECT_LE(dist[0], 1e-9 * mu1);
  EXPECT_GE(dist[1], 5.0);
}

TEST_F(BranchFixture, BranchStartsAtLambdaOne) {
  EXPECT_NEAR(branch->lambda_i, 3.0, 1e-3);
  EXPECT_NEAR(branch->v_max, std::sqrt(5.0), 1e-2);
  const auto b = branch_point(*forms, 4.0, 1, 1e-7);
  EXPECT_NEAR(b.lambda, branch->lambda_i, 1e-6);
  EXPECT_LE(b.residual, 1e-10);
}

TEST_F(BranchFixture, ContinuedSamplesConvergedAndPositive) {
  ASSERT_FALSE(branch->truncated) << branch->diagnostic;
  ASSERT_GE(branch->samples.size(), 5u);
  EXPECT_NEAR(branch->samples.back().r, 0.1, 1e-12);
  double prev = 0.0;
  for (const auto& s : branch->samples) {
    EXPECT_LE(s.residual, 1e-10);
    EXPECT_GT(s.r, prev);
    prev = s.r;
    for (double v : s.x) EXPECT_GT(v, 0.0);
  }
}

TEST_F(BranchFixture, TangentToEigenfunction) {
  const double r = 1e-3 / branch->v_max;
  const auto a = branch_point(*forms, 4.0, 1, r);
  const auto b = branch_point(*forms, 4.0, 1, r / 2.0);
  const double qa = a.distance_to_trivial / r, qb = b.distance_to_trivial / (r / 2.0);
  EXPECT_NEAR(qa / branch->v_max, 1.0, 0.05);
  EXPECT_NEAR(qb / branch->v_max, 1.0, 0.05);
  EXPECT_LT(std::abs(qb - branch->v_max), std::abs(qa - branch->v_max));
}

TEST_F(BranchFixture, TranscriticalSlopeMatchesLegendreOracle) {
  const double r = 1e-4;
  const double slope = (branch_point(*forms, 4.0, 1, r).lambda - branch_point(*forms, 4.0, 1, -r).lambda) / (2.0 * r);
  const double oracle = legendre_slope_oracle(3.0, 4.0);
  EXPECT_NEAR(oracle, -9.0 * std::sqrt(5.0) / 7.0, 1e-12);
  EXPECT_NEAR(slope, oracle, 1e-3 * std::abs(oracle));
}

TEST_F(BranchFixture, MetricCertificateNearFirstTime) {
  for (const auto& s : branch->samples) {
    if (s.r > 0.05) break;
    const auto c = branch_to_metric(*profile, s, 0.125);
    EXPECT_TRUE(c.ok) << "r=" << s.r << " dev " << c.scalar_dev << " h " << c.boundary_max;
    EXPECT_FALSE(c.trivial);
    EXPECT_LT(c.gamma_offset, 1e-2);
    EXPECT_LE(c.lambda_check, 1e-10);
    EXPECT_GT(c.gamma, 0.125);  // lambda decreases along r > 0
  }
}

TEST_F(BranchFixture, TrivialSampleFlagged) {
  BranchSample s;
  s.x.assign(forms->grid.centers.size(), 1.0);
  s.u = GridFunction{s.x, 1.0, 1.0};
  s.lambda = 3.0;
  const auto c = branch_to_metric(*profile, s, 0.125);
  EXPECT_TRUE(c.ok);
  EXPECT_TRUE(c.trivial);
  EXPECT_NEAR(c.gamma, 0.125, 1e-15);
  EXPECT_NE(c.note.find("trivial"), std::string::npos);
}

TEST_F(BranchFixture, LambdaOutsideRangeRejected) {
  BranchSample s;
  s.x.assign(forms->grid.centers.size(), 1.0);
  s.u = GridFunction{s.x, 1.0, 1.0};
  s.lambda = 0.0;
  EXPECT_THROW(branch_to_metric(*profile, s, 0.125), Error);
  s.lambda = 2.0 / conformal_a(4);
  EXPECT_THROW(branch_to_metric(*profile, s, 0.125), Error);
}

TEST(ProductAt, RescalesFactor) {
  const auto p = product_s2();
  const auto q = product_at(p, 0.25);
  EXPECT_NEAR(*q.s_g.constant_value(), 2.0 + 8.0, 1e-14);
  EXPECT_NEAR(q.weight_norm.area, p.weight_norm.area * 0.25, 1e-14);
  const auto direct = make_product(make_hemisphere(2), 2, 2.0, 0.25);
  EXPECT_EQ(q.name, direct.name);
  EXPECT_THROW(product_at(make_hemisphere(3), 1.0), Error);
}

TEST_F(BranchFixture, EndsOnceAtRMax) {
  const auto& s = branch->samples;
  ASSERT_GE(s.size(), 2u);
  EXPECT_LT(s[s.size() - 2].r, 0.1 - 1e-6);
}

TEST(Branch, StepBudgetLimitsSamples) {
  const auto p = product_s2();
  const auto b = continue_branch(p, build_grid(p, 128), 4.0, 1, 0.5, 5);
  EXPECT_EQ(b.samples.size(), 5u);
  EXPECT_LT(b.samples.back().r, 0.5);
}

#include "ordstat/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ordstat;

namespace {

std::vector<CurvePoint> synthetic_power_law(double exponent, double coeff) {
  std::vector<CurvePoint> pts;
  for (double x = 1.0; x > 0.05; x *= 0.8) {
    const double p = coeff * std::pow(x, exponent);
    pts.push_back({x, p, 0.01 * p, false});  // constant relative error
  }
  return pts;
}

}  // namespace

TEST(FitExponent, RecoversExactPowerLaws) {
  const auto quad = fit_exponent(synthetic_power_law(2.0, 1.0), 0.01, 2.0);
  EXPECT_NEAR(quad.slope, 2.0, 1e-9);
  EXPECT_NEAR(quad.intercept, 0.0, 1e-9);
  EXPECT_GT(quad.r2, 0.999999);

  const auto flat = fit_exponent(synthetic_power_law(0.0, 0.5), 0.01, 2.0);
  EXPECT_NEAR(flat.slope, 0.0, 1e-9);
  EXPECT_NEAR(std::exp(flat.intercept), 0.5, 1e-9);
}

TEST(FitExponent, RequiresThreePointsInWindow) {
  std::vector<CurvePoint> pts = {{1.0, 0.5, 0.01, false},
                                 {0.5, 0.25, 0.01, false}};
  EXPECT_THROW(fit_exponent(pts, 0.1, 2.0), std::invalid_argument);
  pts.push_back({0.25, 0.12, 0.01, true});  // censored: still unusable
  EXPECT_THROW(fit_exponent(pts, 0.1, 2.0), std::invalid_argument);
}

TEST(NormingConstants, ClosedFormAnchors) {
  // Chosen so every correction vanishes: r=1, n=1, alpha=2, D=1, T=e^e.
  const double a_for_unit_d = std::sqrt(2.0 * std::numbers::pi);
  const auto nc = norming_constants(1, 1, 2.0, std::exp(std::numbers::e),
                                    a_for_unit_d);
  EXPECT_NEAR(nc.d_const, 1.0, 1e-14);
  EXPECT_NEAR(nc.a, std::sqrt(2.0 * std::numbers::e), 1e-12);
  EXPECT_NEAR(nc.b, std::sqrt(2.0 * std::numbers::e), 1e-12);

  const auto ref = norming_constants(1, 1, 1.0, 100.0, 1.0);
  EXPECT_NEAR(ref.a, 3.0348542587702929, 1e-13);
  EXPECT_NEAR(ref.b, 3.0978638314463574, 1e-13);
  EXPECT_NEAR(ref.d_const, 0.56418958354775639, 1e-14);

  // a scales as sqrt(r) at fixed T.
  const auto r1 = norming_constants(2, 1, 1.0, 50.0, 1.0);
  const auto r2 = norming_constants(2, 2, 1.0, 50.0, 1.0);
  EXPECT_NEAR(r2.a / r1.a, std::numbers::sqrt2, 1e-12);

  EXPECT_THROW(norming_constants(1, 1, 1.0, 2.0, 1.0), std::invalid_argument);
  EXPECT_THROW(norming_constants(1, 2, 1.0, 100.0, 1.0), std::invalid_argument);
}

TEST(MixedGumbelCdf, LimitsAndDegenerateGamma) {
  EXPECT_NEAR(mixed_gumbel_cdf(50.0, 1.0, 1), 1.0, 1e-10);
  EXPECT_NEAR(mixed_gumbel_cdf(-50.0, 1.0, 1), 0.0, 1e-10);
  EXPECT_NEAR(mixed_gumbel_cdf(0.0, 1.0, 1), 0.60848660223808, 1e-8);
  // gamma -> 0 degenerates to the Gumbel cdf.
  double worst = 0.0;
  for (double x = -4.0; x <= 6.0; x += 0.05)
    worst = std::max(worst,
                     std::abs(mixed_gumbel_cdf(x, 1e-6, 1) - gumbel_cdf(x)));
  EXPECT_LE(worst, 1e-4);
}

TEST(MixedGumbelCdf, IsAProperCdf) {
  double prev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = -8.0 + 16.0 * i / 200.0;
    const double v = mixed_gumbel_cdf(x, 1.0, 2);
    EXPECT_GE(v, prev - 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  EXPECT_LE(mixed_gumbel_cdf(-8.0, 1.0, 2), 1e-3);
  EXPECT_GE(mixed_gumbel_cdf(8.0, 1.0, 2), 0.999);
}

TEST(LowtailCurve, BrownianAnchorAtUnitLevel) {
  LowtailParams params;
  params.alpha = 1.0;
  params.n = 1;
  params.sel = {1, RankConvention::descending};
  params.c = 0.0;
  params.x_grid = {std::numeric_limits<double>::infinity(), 1.0, 0.5};
  params.n_paths = 6000;
  params.grid = GridSpec{0.0, 1.0, 257};
  params.seed = 3;
  const auto curve = lowtail_curve(params);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_DOUBLE_EQ(curve[0].est.value, 1.0);  // infinite level sentinel
  // Running-maximum law: P(sup B <= x) = 2 Phi(x) - 1, grid bias upward.
  const double exact1 = 2.0 * std_normal_cdf(1.0) - 1.0;
  EXPECT_NEAR(curve[1].est.value, exact1,
              3.0 * curve[1].est.stderr_ + curve[1].grid_delta + 0.01);
  EXPECT_GE(curve[1].est.value, exact1 - 3.0 * curve[1].est.stderr_);
  EXPECT_FALSE(curve[1].censored);
  EXPECT_GE(curve[1].grid_delta, 0.0);
}

TEST(LowtailCurve, OrderStatRankOrdering) {
  // The running maximum of the max process dominates that of the min
  // process, so the curves are ordered pointwise; the comparison is exact
  // under a shared seed.
  LowtailParams params;
  params.n = 2;
  params.x_grid = {1.5, 1.0, 0.6, 0.3};
  params.n_paths = 2000;
  params.grid = GridSpec{0.0, 1.0, 129};
  params.seed = 5;
  params.sel = {1, RankConvention::descending};
  const auto max_curve = lowtail_curve(params);
  params.sel = {2, RankConvention::descending};
  const auto min_curve = lowtail_curve(params);
  for (std::size_t j = 0; j < max_curve.size(); ++j)
    EXPECT_LE(max_curve[j].est.value, min_curve[j].est.value);
}

TEST(LowtailCurve, RefinementDeltasShrink) {
  std::vector<double> x_grid;
  for (double x = 1.0; x >= 0.3; x *= 0.85) x_grid.push_back(x);
  std::vector<std::vector<LowtailPoint>> levels;
  for (int m : {65, 129, 257}) {
    LowtailParams params;
    params.x_grid = x_grid;
    params.n_paths = 8000;
    params.grid = GridSpec{0.0, 1.0, m};
    params.seed = 7;
    levels.push_back(lowtail_curve(params));
  }
  int shrink = 0, total = 0;
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    // Doubling m moves the estimate by less than noise plus the reported
    // discretization delta.
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
      const auto& coarse = levels[l][j];
      const auto& fine = levels[l + 1][j];
      const double tol = 3.0 * std::sqrt(coarse.est.stderr_ * coarse.est.stderr_ +
                                         fine.est.stderr_ * fine.est.stderr_) +
                         coarse.grid_delta;
      EXPECT_LE(std::abs(coarse.est.value - fine.est.value), tol) << j;
    }
    ++total;
    if (levels[2][j].grid_delta <= levels[1][j].grid_delta &&
        levels[1][j].grid_delta <= levels[0][j].grid_delta + 1e-12)
      ++shrink;
  }
  EXPECT_GE(shrink * 10, total * 8);  // >= 80 percent of grid points
}

TEST(PursuitTail, DegenerateAndMonotone) {
  PursuitParams params;
  params.alpha = 1.0;
  params.n = 1;
  params.sel = {1, RankConvention::descending};
  params.s_grid = {1e-8, 0.5, 1.0, 2.0, 4.0};
  params.n_paths = 4000;
  params.grid = GridSpec{0.0, 1.0, 257};
  params.seed = 11;
  const auto curve = pursuit_tail(params);
  // Tiny horizon: the level is enormous, capture later than s is certain.
  EXPECT_GT(curve[0].est.value, 0.999);
  for (std::size_t j = 1; j < curve.size(); ++j)
    EXPECT_LE(curve[j].est.value, curve[j - 1].est.value);  // same seed: exact
}

TEST(LishaoConstant, NonnegativeAndLadderDirection) {
  LishaoParams params;
  params.alpha = 1.0;
  params.n = 1;
  params.sel = {1, RankConvention::descending};
  params.t_ladder = {2.0, 4.0};
  params.points_per_unit_time = 16;
  params.n_paths = 6000;
  params.seed = 13;
  const auto ladder = lishao_constant(params);
  ASSERT_EQ(ladder.size(), 2u);
  for (const auto& pt : ladder) EXPECT_GE(pt.constant.value, 0.0);
  // -(1/T) ln P is nonincreasing along a doubling ladder (superadditivity);
  // allow 3 combined standard errors of Monte Carlo slack.
  const double se = std::sqrt(
      ladder[0].constant.stderr_ * ladder[0].constant.stderr_ +
      ladder[1].constant.stderr_ * ladder[1].constant.stderr_);
  EXPECT_LE(ladder[1].constant.value, ladder[0].constant.value + 3.0 * se);
}

TEST(LishaoConstant, ZeroSuccessesIsAnError) {
  LishaoParams params;
  params.t_ladder = {60.0};
  params.n_paths = 200;
  params.points_per_unit_time = 4;
  params.seed = 17;
  EXPECT_THROW(lishao_constant(params), std::runtime_error);
}

TEST(LishaoConstant, ConsistentWithLowtailSlopeForBm) {
  // Brownian case: the lower-tail exponent is 2 c / alpha; compare the dual
  // route against the direct log-log slope.
  LishaoParams lp;
  lp.alpha = 1.0;
  lp.n = 1;
  lp.t_ladder = {12.0};
  lp.points_per_unit_time = 20;
  lp.n_paths = 20000;
  lp.seed = 19;
  const auto ladder = lishao_constant(lp);
  const double c_hat = ladder[0].constant.value;
  const double c_se = ladder[0].constant.stderr_;

  LowtailParams low;
  low.alpha = 1.0;
  low.n = 1;
  for (double x = 0.85; x >= 0.1; x *= 0.82) low.x_grid.push_back(x);
  low.n_paths = 20000;
  low.grid = GridSpec{0.0, 1.0, 513};
  low.seed = 23;
  const auto curve = lowtail_curve(low);
  const auto fit = fit_exponent(to_curve_points(curve), 0.1, 0.85);
  const double combined =
      3.0 * std::sqrt(4.0 * c_se * c_se + fit.slope_stderr * fit.slope_stderr);
  EXPECT_NEAR(2.0 * c_hat, fit.slope, combined + 0.12);
}

TEST(SlepianProcess, IdenticalModelsAreOrdered) {
  SlepianProcessParams params;
  params.model_x = CorrelationModel::power_exp(1.0, 1.0);
  params.model_y = CorrelationModel::power_exp(1.0, 1.0);
  params.n_paths = 3000;
  params.grid = GridSpec{0.0, 1.0, 129};
  params.seed = 29;
  const auto res = slepian_process_check(params);
  EXPECT_TRUE(res.ordered);
  const double se = std::sqrt(res.p_x.stderr_ * res.p_x.stderr_ +
                              res.p_y.stderr_ * res.p_y.stderr_);
  EXPECT_NEAR(res.p_x.value, res.p_y.value, 3.5 * se);
}

TEST(SlepianProcess, ScaleOrderingAndPreconditions) {
  SlepianProcessParams params;
  params.model_x = CorrelationModel::power_exp(1.0, 0.7);
  params.model_y = CorrelationModel::power_exp(1.0, 1.5);
  params.n = 2;
  params.sel = {1, RankConvention::descending};
  params.c = 0.5;
  params.level = 1.2;
  params.n_paths = 4000;
  params.grid = GridSpec{0.0, 1.0, 129};
  params.seed = 31;
  params.run_variant2 = true;
  const auto res = slepian_process_check(params);
  EXPECT_TRUE(res.ordered);
  ASSERT_TRUE(res.p_zx.has_value());
  EXPECT_TRUE(res.ordered2);

  std::swap(params.model_x, params.model_y);
  EXPECT_THROW(slepian_process_check(params), std::invalid_argument);
}

TEST(CalibrateAConst, RecoversPickandsForExpCorrelation) {
  // For rho(t) = e^{-|t|} the constant is exactly 1.
  const auto est = calibrate_a_const(CorrelationModel::power_exp(1.0), 1,
                                     {1, RankConvention::descending}, 2.5,
                                     20.0, 641, 6000, 37, 1);
  EXPECT_NEAR(est.value, 1.0, std::max(0.25, 4.0 * est.stderr_));
}

TEST(GumbelExperiment, RejectsNonUnitScale) {
  GumbelParams params;
  params.model = CorrelationModel::power_exp(1.0, 2.0);
  EXPECT_THROW(gumbel_experiment(params), std::invalid_argument);
}

TEST(MixtureExperiments, ParameterValidation) {
  MixtureParams params;
  params.T = 100.0;
  EXPECT_THROW(mixed_gumbel_experiment(-1.0, params), std::invalid_argument);
  EXPECT_THROW(normal_limit_experiment(1.5, params), std::invalid_argument);
  params.T = 100.5;  // not a whole number of blocks
  params.n_reps = 10;
  EXPECT_THROW(normal_limit_experiment(0.5, params), std::invalid_argument);
  MixtureParams tiny;
  tiny.T = 2.0;  // rho_* = 1/ln 2 > 1
  EXPECT_THROW(mixed_gumbel_experiment(1.0, tiny), std::invalid_argument);
}

TEST(NormalLimit, DegenerateDirectionIsGaussian) {
  // rho_T -> 1: the standardized statistic is W plus a vanishing term.
  MixtureParams params;
  params.T = 50.0;
  params.n_reps = 1500;
  params.points_per_block = 16;
  params.seed = 41;
  const auto report = normal_limit_experiment(0.99, params);
  EXPECT_LE(report.ks_distance, 0.05);
  EXPECT_NEAR(report.quantiles[2], 0.0, 0.1);  // median of Phi
  EXPECT_TRUE(report.advisories.empty());
  const auto flagged = normal_limit_experiment(
      0.01, [&] {
        MixtureParams p = params;
        p.n_reps = 100;
        return p;
      }());
  EXPECT_FALSE(flagged.advisories.empty());
}

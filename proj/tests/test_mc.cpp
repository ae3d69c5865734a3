#include "ordstat/mc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ordstat/bounds.hpp"
#include "test_util.hpp"

using namespace ordstat;

namespace {

GaussianArraySpec spec_rho(int d, int n, double rho) {
  // Only for dn = 2 shapes.
  Eigen::MatrixXd c(2, 2);
  c << 1.0, rho, rho, 1.0;
  return validate_spec(d, n, c);
}

ThresholdVector uvec(std::initializer_list<double> vals) {
  ThresholdVector u(static_cast<long>(vals.size()));
  long i = 0;
  for (double v : vals) u(i++) = v;
  return u;
}

}  // namespace

TEST(SampleArray, MomentsMatchIdentityCovariance) {
  const auto spec = validate_spec(1, 2, Eigen::MatrixXd::Identity(2, 2));
  const long long n = 1'000'000;
  ArraySampler sampler(spec);
  NormalRng rng(substream_seed(123, 0, 0));
  std::vector<double> z(2), x(2);
  double s0 = 0, s1 = 0, cross = 0;
  for (long long k = 0; k < n; ++k) {
    sampler.sample_into(rng, z, x);
    s0 += x[0];
    s1 += x[1];
    cross += x[0] * x[1];
  }
  const double nd = static_cast<double>(n);
  EXPECT_NEAR(s0 / nd, 0.0, 4e-3);
  EXPECT_NEAR(s1 / nd, 0.0, 4e-3);
  EXPECT_NEAR(cross / nd, 0.0, 3e-3);
}

TEST(SampleArray, EmpiricalCorrelationIsConsistent) {
  const auto spec = spec_rho(1, 2, 0.5);
  ArraySampler sampler(spec);
  NormalRng rng(substream_seed(7, 0, 0));
  std::vector<double> z(2), x(2);
  const long long n = 400'000;
  double cross = 0;
  for (long long k = 0; k < n; ++k) {
    sampler.sample_into(rng, z, x);
    cross += x[0] * x[1];
  }
  // stderr of the product moment is about sqrt((1 + rho^2)/n).
  const double se = std::sqrt(1.25 / static_cast<double>(n));
  EXPECT_NEAR(cross / static_cast<double>(n), 0.5, 3.0 * se);
}

TEST(SampleArray, ReproducibleFromSeed) {
  const auto spec = spec_rho(2, 1, 0.3);
  const auto a = sample_array(spec, 99, 5);
  const auto b = sample_array(spec, 99, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_TRUE(a[k].isApprox(b[k], 0.0));
}

TEST(OrderStatVector, SelectsRankPerConvention) {
  Eigen::MatrixXd row(1, 3);
  row << 3.0, 1.0, 2.0;
  EXPECT_DOUBLE_EQ(order_stat_vector(row, {1, RankConvention::ascending})(0),
                   1.0);
  EXPECT_DOUBLE_EQ(order_stat_vector(row, {2, RankConvention::ascending})(0),
                   2.0);
  EXPECT_DOUBLE_EQ(order_stat_vector(row, {1, RankConvention::descending})(0),
                   3.0);
}

TEST(OrderStatVector, ConventionInvolutionOnRandomRows) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd m(2, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = nd(gen);
    const auto desc1 = order_stat_vector(m, {1, RankConvention::descending});
    const auto asc4 = order_stat_vector(m, {4, RankConvention::ascending});
    EXPECT_TRUE(desc1.isApprox(asc4, 0.0));
  }
}

TEST(EstimateProbLe, MatchesClosedForms) {
  McOptions opts;
  opts.n_samples = 200'000;
  opts.seed = 11;
  {
    Eigen::MatrixXd c(1, 1);
    c << 1.0;
    const auto spec = validate_spec(1, 1, c);
    const auto est =
        estimate_prob_le(spec, {1, RankConvention::ascending}, uvec({0.0}), opts);
    EXPECT_NEAR(est.value, 0.5, 3.0 * est.stderr_);
  }
  {
    const auto spec = spec_rho(1, 2, 0.0);
    const auto est =
        estimate_prob_le(spec, {2, RankConvention::ascending}, uvec({0.0}), opts);
    EXPECT_NEAR(est.value, 0.25, 3.0 * est.stderr_);
  }
  {
    const auto spec = spec_rho(1, 2, 0.5);
    const auto est =
        estimate_prob_le(spec, {2, RankConvention::ascending}, uvec({0.0}), opts);
    EXPECT_NEAR(est.value, 1.0 / 3.0, 3.0 * est.stderr_);
    EXPECT_GT(est.stderr_, 0.0);
    EXPECT_EQ(est.n_samples, opts.n_samples);
  }
}

TEST(EstimateDelta, IdenticalSpecsAndClassicalIdentity) {
  McOptions opts;
  opts.n_samples = 400'000;
  opts.seed = 13;
  const auto spec = spec_rho(2, 1, 0.4);
  const auto zero =
      estimate_delta(spec, spec, {1, RankConvention::ascending}, uvec({0.1, -0.3}), opts);
  EXPECT_NEAR(zero.value, 0.0, 3.0 * zero.stderr_);

  const auto x = spec_rho(2, 1, 0.5);
  const auto y = spec_rho(2, 1, 0.0);
  const auto est =
      estimate_delta(x, y, {1, RankConvention::ascending}, uvec({0.0, 0.0}), opts);
  EXPECT_NEAR(est.value, 1.0 / 12.0, 3.5 * est.stderr_);
}

TEST(EstimateThetaLog, ClassicalIdentityAndStarvation) {
  McOptions opts;
  opts.n_samples = 400'000;
  opts.seed = 17;
  const auto x = spec_rho(2, 1, 0.5);
  const auto y = spec_rho(2, 1, 0.0);
  const auto est =
      estimate_theta_log(x, y, {1, RankConvention::ascending}, uvec({0.0, 0.0}), opts);
  EXPECT_NEAR(est.value, std::log(4.0 / 3.0), 3.5 * est.stderr_);

  const auto same =
      estimate_theta_log(x, x, {1, RankConvention::ascending}, uvec({0.0, 0.0}), opts);
  EXPECT_NEAR(same.value, 0.0, 3.0 * same.stderr_);

  McOptions tiny = opts;
  tiny.n_samples = 10'000;
  try {
    estimate_theta_log(x, y, {1, RankConvention::ascending}, uvec({-6.0, -6.0}),
                       tiny);
    FAIL() << "expected starvation error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("too small"), std::string::npos);
  }
}

TEST(Determinism, WorkerCountDoesNotChangeResults) {
  std::mt19937_64 gen(19);
  const auto x = testutil::random_spec(3, 3, gen);
  const auto y = testutil::random_spec(3, 3, gen);
  McOptions opts;
  opts.n_samples = 120'000;
  opts.seed = 23;
  opts.chunk_size = 4096;
  const OrderStatSelector sel{2, RankConvention::ascending};
  const ThresholdVector u = uvec({0.5, -0.2, 1.0});
  opts.workers = 1;
  const auto a = estimate_delta(x, y, sel, u, opts);
  opts.workers = 4;
  const auto b = estimate_delta(x, y, sel, u, opts);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Determinism, PlainModeAlsoDeterministic) {
  std::mt19937_64 gen(29);
  const auto x = testutil::random_spec(2, 2, gen);
  McOptions opts;
  opts.n_samples = 50'000;
  opts.seed = 31;
  opts.antithetic = false;
  const OrderStatSelector sel{1, RankConvention::ascending};
  const ThresholdVector u = uvec({0.0, 0.5});
  opts.workers = 1;
  const auto a = estimate_prob_le(x, sel, u, opts);
  opts.workers = 4;
  const auto b = estimate_prob_le(x, sel, u, opts);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.n_samples, opts.n_samples);
}

TEST(ExactProbSmall, ClosedFormShapes) {
  Eigen::MatrixXd c1(1, 1);
  c1 << 1.0;
  EXPECT_DOUBLE_EQ(
      exact_prob_small(validate_spec(1, 1, c1), {1, RankConvention::ascending},
                       uvec({0.0})),
      0.5);
  EXPECT_NEAR(exact_prob_small(spec_rho(1, 2, 0.0),
                               {1, RankConvention::ascending}, uvec({0.0})),
              0.75, 1e-13);
  EXPECT_NEAR(exact_prob_small(spec_rho(1, 2, 0.5),
                               {2, RankConvention::ascending}, uvec({0.0})),
              1.0 / 3.0, 1e-11);
  // Descending rank 1 on two columns is the row maximum.
  EXPECT_NEAR(exact_prob_small(spec_rho(1, 2, 0.5),
                               {1, RankConvention::descending}, uvec({0.0})),
              1.0 / 3.0, 1e-11);
  std::mt19937_64 gen(1);
  EXPECT_THROW(exact_prob_small(testutil::random_spec(2, 2, gen),
                                {1, RankConvention::ascending},
                                uvec({0.0, 0.0})),
               std::invalid_argument);
}

TEST(OracleAgreement, RandomizedSupportedShapes) {
  std::mt19937_64 gen(37);
  std::uniform_real_distribution<double> ur(-0.9, 0.9);
  std::uniform_real_distribution<double> uu(-1.5, 1.5);
  McOptions opts;
  opts.n_samples = 40'000;
  int within = 0;
  const int total = 50;
  for (int rep = 0; rep < total; ++rep) {
    opts.seed = 1000 + static_cast<std::uint64_t>(rep);
    const int shape = rep % 3;
    GaussianArraySpec spec = shape == 0
                                 ? validate_spec(1, 1, Eigen::MatrixXd::Identity(1, 1))
                                 : spec_rho(shape == 1 ? 2 : 1,
                                            shape == 1 ? 1 : 2, ur(gen));
    OrderStatSelector sel{1, RankConvention::ascending};
    if (shape == 2)
      sel.rank = std::uniform_int_distribution<int>(1, 2)(gen);
    ThresholdVector u(spec.d());
    for (int i = 0; i < spec.d(); ++i) u(i) = uu(gen);
    const double exact = exact_prob_small(spec, sel, u);
    const auto est = estimate_prob_le(spec, sel, u, opts);
    const double tol = 3.5 * std::max(est.stderr_, 1e-12);
    if (std::abs(est.value - exact) <= tol) ++within;
  }
  EXPECT_GE(within, 48);
}

TEST(Monotonicity, ExactUnderCommonRandomNumbers) {
  std::mt19937_64 gen(41);
  const auto spec = testutil::random_spec(3, 2, gen);
  McOptions opts;
  opts.n_samples = 20'000;
  opts.seed = 43;
  const OrderStatSelector sel{2, RankConvention::ascending};
  const ThresholdVector u = uvec({0.2, -0.5, 0.9});
  const auto base = estimate_prob_le(spec, sel, u, opts);
  for (int i = 0; i < 3; ++i) {
    ThresholdVector v = u;
    v(i) += 0.4;
    const auto higher = estimate_prob_le(spec, sel, v, opts);
    EXPECT_GE(higher.value, base.value);  // exact, same seed
  }
}

TEST(SlepianOrdering, HoldsOnConditionedInstances) {
  std::mt19937_64 gen(47);
  std::uniform_real_distribution<double> uu(-1.5, 1.5);
  McOptions opts;
  opts.n_samples = 40'000;
  int ok = 0;
  const int total = 20;
  for (int rep = 0; rep < total; ++rep) {
    opts.seed = 2000 + static_cast<std::uint64_t>(rep);
    const auto pair = testutil::dominated_pair(3, 2, gen);
    ASSERT_TRUE(slepian_conditions(pair.y, pair.x).holds);
    const OrderStatSelector sel{std::uniform_int_distribution<int>(1, 2)(gen),
                                RankConvention::ascending};
    ThresholdVector u(3);
    for (int i = 0; i < 3; ++i) u(i) = uu(gen);
    // X := scaled (smaller cross-row), Y := full: Delta <= 0 in expectation.
    const auto est = estimate_delta(pair.y, pair.x, sel, u, opts);
    if (est.value <= 3.0 * est.stderr_) ++ok;
  }
  EXPECT_GE(ok, total - 1);
}

TEST(ArraySamplerJitter, RecordsLadderStep) {
  // A singular but PSD matrix: row duplicated via correlation 1.
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 1.0, 1.0, 1.0;
  const auto spec = validate_spec(2, 1, c);
  ArraySampler sampler(spec);
  EXPECT_GE(sampler.jitter(), 0.0);
  McOptions opts;
  opts.n_samples = 10'000;
  opts.seed = 53;
  const auto est = estimate_prob_le(spec, {1, RankConvention::ascending},
                                    uvec({0.0, 0.0}), opts);
  // Perfectly correlated pair: P(X <= 0, X <= 0) = 1/2.
  EXPECT_NEAR(est.value, 0.5, 3.5 * est.stderr_);
}

#include "ordstat/array_spec.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "ordstat/spec_io.hpp"
#include "test_util.hpp"

using namespace ordstat;

TEST(ValidateSpec, AcceptsIdentityCase) {
  Eigen::MatrixXd c(1, 1);
  c << 1.0;
  const GaussianArraySpec spec = validate_spec(1, 1, c);
  EXPECT_EQ(spec.d(), 1);
  EXPECT_EQ(spec.n(), 1);
}

TEST(ValidateSpec, AcceptsTwoByTwo) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.5, 0.5, 1.0;
  const GaussianArraySpec spec = validate_spec(1, 2, c);
  EXPECT_DOUBLE_EQ(spec.sigma(1, 1, 1, 2), 0.5);
}

TEST(ValidateSpec, ReportsEveryViolation) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 1.2, 1.2, 1.0;
  try {
    validate_spec(1, 2, c);
    FAIL() << "expected validation failure";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[-1, 1]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("positive semidefinite"), std::string::npos) << msg;
  }
}

TEST(ValidateSpec, RejectsDimensionMismatch) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(validate_spec(2, 2, c), std::invalid_argument);
}

TEST(ValidateSpec, RejectsAsymmetryAndBadDiagonal) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.2, 0.3, 0.9;
  try {
    validate_spec(1, 2, c);
    FAIL() << "expected validation failure";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("symmetric"), std::string::npos) << msg;
    EXPECT_NE(msg.find("diagonal"), std::string::npos) << msg;
  }
}

TEST(PairwiseMaxCorr, TakesEntrywiseAbsoluteMax) {
  Eigen::MatrixXd cx(2, 2), cy(2, 2);
  cx << 1.0, -0.8, -0.8, 1.0;
  cy << 1.0, 0.3, 0.3, 1.0;
  const auto x = validate_spec(1, 2, cx);
  const auto y = validate_spec(1, 2, cy);
  const Eigen::MatrixXd rho = pairwise_max_corr(x, y);
  EXPECT_DOUBLE_EQ(rho(0, 1), 0.8);
  EXPECT_DOUBLE_EQ(rho(0, 0), 1.0);
}

TEST(PairwiseMaxCorr, IdenticalSpecsGiveAbsoluteValues) {
  std::mt19937_64 gen(7);
  const auto spec = testutil::random_spec(2, 2, gen);
  const Eigen::MatrixXd rho = pairwise_max_corr(spec, spec);
  EXPECT_TRUE(rho.isApprox(spec.cov().cwiseAbs()));
}

TEST(PairwiseMaxCorr, Commutes) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = testutil::random_spec(2, 2, gen);
    const auto y = testutil::random_spec(2, 2, gen);
    EXPECT_TRUE(pairwise_max_corr(x, y).isApprox(pairwise_max_corr(y, x)));
  }
}

TEST(InterpolateCovariance, EndpointsAndMidpoint) {
  Eigen::MatrixXd cx(2, 2), cy(2, 2);
  cx << 1.0, 0.8, 0.8, 1.0;
  cy << 1.0, 0.2, 0.2, 1.0;
  const auto x = validate_spec(1, 2, cx);
  const auto y = validate_spec(1, 2, cy);
  EXPECT_TRUE(interpolate_covariance(x, y, 0.0).cov().isApprox(cy));
  EXPECT_TRUE(interpolate_covariance(x, y, 1.0).cov().isApprox(cx));
  EXPECT_DOUBLE_EQ(interpolate_covariance(x, y, 0.5).sigma(1, 1, 1, 2), 0.5);
  EXPECT_THROW(interpolate_covariance(x, y, 1.5), std::invalid_argument);
}

TEST(InterpolateCovariance, RandomizedOutputsValidate) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> uh(0.0, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    const auto x = testutil::random_spec(2, 3, gen);
    const auto y = testutil::random_spec(2, 3, gen);
    EXPECT_NO_THROW(interpolate_covariance(x, y, uh(gen)));
  }
}

TEST(OrderStatSelector, ConversionIsInvolution) {
  for (int n = 1; n <= 6; ++n)
    for (int r = 1; r <= n; ++r) {
      const OrderStatSelector sel{r, RankConvention::ascending};
      const OrderStatSelector twice = sel.converted(n).converted(n);
      EXPECT_EQ(twice.rank, sel.rank);
      EXPECT_EQ(twice.convention, sel.convention);
      EXPECT_EQ(sel.converted(n).rank, n - r + 1);
    }
}

TEST(OrderStatSelector, ValidatesRank) {
  const OrderStatSelector bad{4, RankConvention::ascending};
  EXPECT_THROW(bad.validate_for(3), std::invalid_argument);
}

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = std::string(::testing::TempDir()) + name;
  std::ofstream os(path);
  os << content;
  return path;
}

}  // namespace

TEST(SpecIo, LoadsJsonObjectWithShape) {
  const std::string path = temp_file(
      "cov.json", R"({"d": 1, "n": 2, "cov": [[1.0, 0.5], [0.5, 1.0]]})");
  const GaussianArraySpec spec = load_spec(path, std::nullopt, std::nullopt);
  EXPECT_EQ(spec.d(), 1);
  EXPECT_EQ(spec.n(), 2);
  EXPECT_DOUBLE_EQ(spec.sigma(1, 1, 1, 2), 0.5);
}

TEST(SpecIo, LoadsBareJsonMatrixWithHints) {
  const std::string path = temp_file("cov2.json", "[[1.0, 0.25], [0.25, 1.0]]");
  const GaussianArraySpec spec = load_spec(path, 2, std::nullopt);
  EXPECT_EQ(spec.d(), 2);
  EXPECT_EQ(spec.n(), 1);
}

TEST(SpecIo, RejectsUnknownJsonKey) {
  const std::string path =
      temp_file("cov3.json", R"({"d": 1, "m": 2, "cov": [[1.0]]})");
  EXPECT_THROW(load_spec(path, 1, 1), std::invalid_argument);
}

TEST(SpecIo, LoadsCsvWithOptionalHeader) {
  const std::string path =
      temp_file("cov.csv", "c1,c2\n1.0,0.5\n0.5,1.0\n");
  const GaussianArraySpec spec = load_spec(path, 1, 2);
  EXPECT_DOUBLE_EQ(spec.sigma(1, 1, 1, 2), 0.5);
  const std::string bare = temp_file("cov2.csv", "1.0,0.5\n0.5,1.0\n");
  EXPECT_NO_THROW(load_spec(bare, 1, 2));
}

TEST(SpecIo, CsvRoutesThroughValidation) {
  const std::string path = temp_file("bad.csv", "1.0,1.2\n1.2,1.0\n");
  EXPECT_THROW(load_spec(path, 1, 2), std::invalid_argument);
}

TEST(SpecIo, ShapeMustBeDeterminable) {
  const std::string path = temp_file("cov4.csv", "1.0,0.0\n0.0,1.0\n");
  EXPECT_THROW(load_spec(path, std::nullopt, std::nullopt),
               std::invalid_argument);
}

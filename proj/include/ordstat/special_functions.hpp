#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ordstat/quadrature.hpp"

namespace ordstat {

inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

// Scalar correlation; construction enforces |rho| <= 1.
struct Correlation {
  double rho;
  explicit Correlation(double r) : rho(r) {
    if (!(std::abs(r) <= 1.0))
      throw std::invalid_argument("Correlation: |rho| must be <= 1");
  }
};

inline double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Phi via erfc keeps full relative accuracy in both tails.
inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

// E[(N + x)_+] = phi(x) + x Phi(x) for N standard normal.
inline double plus_mean(double x) {
  return std_normal_pdf(x) + x * std_normal_cdf(x);
}

namespace detail {

// Scaled complementary error function e^{z^2} erfc(z) for z >= 0.
inline double erfcx(double z) {
  if (z < 25.0) return std::exp(z * z) * std::erfc(z);
  // Asymptotic series, accurate past machine precision for z >= 25.
  const double inv2z2 = 1.0 / (2.0 * z * z);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * inv2z2;
    sum += term;
  }
  return sum / (z * std::sqrt(std::numbers::pi));
}

}  // namespace detail

// H(x) = sqrt(2 pi) e^{x^2/2} E[(N + x)_+]; H(0) = 1, increasing on [0, inf).
// The e^{x^2/2} factor restricts the usable range to |x| <= 37.
inline double h_function(double x) {
  if (!(std::abs(x) <= 37.0))
    throw std::domain_error("h_function: |x| must be <= 37 (overflow guard)");
  if (x >= 0.0)
    return 1.0 + kSqrt2Pi * x * std::exp(0.5 * x * x) * std_normal_cdf(x);
  // x < 0: e^{x^2/2} Phi(x) written through erfcx to avoid inf * 0.
  const double scaled = 0.5 * detail::erfcx(-x * std::numbers::sqrt2 / 2.0);
  return 1.0 + kSqrt2Pi * x * scaled;
}

inline double bivariate_pdf(double x, double y, Correlation rho) {
  const double r = rho.rho;
  if (!(std::abs(r) < 1.0))
    throw std::invalid_argument("bivariate_pdf: |rho| must be < 1");
  const double q = 1.0 - r * r;
  return std::exp(-(x * x - 2.0 * r * x * y + y * y) / (2.0 * q)) /
         (2.0 * std::numbers::pi * std::sqrt(q));
}

// P(X <= x, Y <= y) for a standard bivariate normal pair with correlation rho.
// Integrates d Phi2 / d rho = phi2 (Plackett) along rho in arcsin coordinates,
// where the integrand is analytic; 128-point Gauss-Legendre reaches well below
// the 1e-10 contract on the whole open range of rho.
inline double bivariate_cdf(double x, double y, Correlation rho) {
  const double r = rho.rho;
  if (std::isnan(x) || std::isnan(y)) return std::numeric_limits<double>::quiet_NaN();
  if (r == 1.0) return std_normal_cdf(std::min(x, y));
  if (r == -1.0) return std::max(0.0, std_normal_cdf(x) + std_normal_cdf(y) - 1.0);
  const double base = std_normal_cdf(x) * std_normal_cdf(y);
  if (r == 0.0) return base;
  if (std::isinf(x) || std::isinf(y)) {
    // One marginal pinned at 0 or 1; the correlation correction vanishes.
    if (x == -std::numeric_limits<double>::infinity() ||
        y == -std::numeric_limits<double>::infinity())
      return 0.0;
    return base;
  }
  auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    const double c2 = std::max(1.0 - s * s, 1e-300);
    return std::exp(-(x * x - 2.0 * x * y * s + y * y) / (2.0 * c2));
  };
  const double corr =
      integrate_gauss_legendre(integrand, 0.0, std::asin(r), 128) /
      (2.0 * std::numbers::pi);
  // Clamp round-off just outside [0, 1].
  return std::min(1.0, std::max(0.0, base + corr));
}

}  // namespace ordstat

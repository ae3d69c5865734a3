#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ordstat/array_spec.hpp"
#include "ordstat/quadrature.hpp"
#include "ordstat/special_functions.hpp"

namespace ordstat {

enum class BoundKind {
  thm1_abs,
  thm1_signed,
  remark_interval,
  remark_large_u,
  thm3_signed,
  thm3_abs,
  prop2_log_ratio,
};

inline const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::thm1_abs: return "thm1_abs";
    case BoundKind::thm1_signed: return "thm1_signed";
    case BoundKind::remark_interval: return "remark_interval";
    case BoundKind::remark_large_u: return "remark_large_u";
    case BoundKind::thm3_signed: return "thm3_signed";
    case BoundKind::thm3_abs: return "thm3_abs";
    case BoundKind::prop2_log_ratio: return "prop2_log_ratio";
  }
  return "unknown";
}

struct BoundReport {
  BoundKind kind = BoundKind::thm1_abs;
  double value = 0.0;
  bool applicable = true;
  std::vector<std::string> violated_conditions;
  // For the column-independent bounds: the u = min_i u_i actually used.
  double u_min = std::numeric_limits<double>::quiet_NaN();
};

struct BoundOptions {
  // Tolerance for the structural conditions (shared within-row covariances,
  // column independence, sign orderings).
  double condition_tol = 1e-12;
  // Advisory gate below which the large-u bound is flagged inapplicable.
  double large_u_gate = 2.0;
};

namespace detail {

inline double q_term(double s1, double s0) {
  return std::abs(std::asin(s1) - std::asin(s0));
}

inline double q_plus_term(double s1, double s0) {
  return std::max(std::asin(s1) - std::asin(s0), 0.0);
}

// Shared within-row covariances between the two arrays.
inline bool s_ind_holds(const GaussianArraySpec& x, const GaussianArraySpec& y,
                        double tol) {
  for (int i = 1; i <= x.d(); ++i)
    for (int j = 1; j <= x.n(); ++j)
      for (int k = j + 1; k <= x.n(); ++k)
        if (std::abs(x.sigma(i, j, i, k) - y.sigma(i, j, i, k)) > tol)
          return false;
  return true;
}

// Sums the two index families of the first comparison bound with caller-chosen
// per-pair terms. Index order is canonical, so partial sums are reproducible.
template <typename WithinFn, typename CrossFn>
double sum_pairs(const GaussianArraySpec& x, const GaussianArraySpec& y,
                 WithinFn&& within, CrossFn&& cross) {
  double total = 0.0;
  for (int i = 1; i <= x.d(); ++i)
    for (int j = 1; j <= x.n(); ++j)
      for (int k = j + 1; k <= x.n(); ++k)
        total += within(i, j, k, x.sigma(i, j, i, k), y.sigma(i, j, i, k));
  for (int i = 1; i <= x.d(); ++i)
    for (int l = i + 1; l <= x.d(); ++l)
      for (int j = 1; j <= x.n(); ++j)
        for (int k = 1; k <= x.n(); ++k)
          total += cross(i, l, j, k, x.sigma(i, j, l, k), y.sigma(i, j, l, k));
  return total;
}

inline double exp_within(double u_i, double rho) {
  return std::exp(-u_i * u_i / (1.0 + rho));
}

inline double exp_cross(double u_i, double u_l, double rho) {
  return std::exp(-(u_i * u_i + u_l * u_l) / (2.0 * (1.0 + rho)));
}

}  // namespace detail

// |Delta_(r)(u)| <= value; holds for every rank r.
inline BoundReport theorem1_abs_bound(const GaussianArraySpec& x,
                                      const GaussianArraySpec& y,
                                      const ThresholdVector& u,
                                      const BoundOptions& opts = {}) {
  (void)opts;
  check_same_shape(x, y);
  check_threshold_dim(x, u);
  BoundReport report;
  report.kind = BoundKind::thm1_abs;
  report.value =
      detail::sum_pairs(
          x, y,
          [&](int i, int, int, double s1, double s0) {
            const double rho = std::max(std::abs(s0), std::abs(s1));
            return detail::q_term(s1, s0) * detail::exp_within(u(i - 1), rho);
          },
          [&](int i, int l, int, int, double s1, double s0) {
            const double rho = std::max(std::abs(s0), std::abs(s1));
            return detail::q_term(s1, s0) *
                   detail::exp_cross(u(i - 1), u(l - 1), rho);
          }) /
      (2.0 * std::numbers::pi);
  return report;
}

// One-sided bound Delta_(r)(u) <= value; requires shared within-row
// covariances. A violation is flagged, the value is still reported.
inline BoundReport theorem1_signed_bound(const GaussianArraySpec& x,
                                         const GaussianArraySpec& y,
                                         const ThresholdVector& u,
                                         const BoundOptions& opts = {}) {
  check_same_shape(x, y);
  check_threshold_dim(x, u);
  BoundReport report;
  report.kind = BoundKind::thm1_signed;
  if (!detail::s_ind_holds(x, y, opts.condition_tol)) {
    report.applicable = false;
    report.violated_conditions.push_back("cond: s-ind");
  }
  report.value =
      detail::sum_pairs(
          x, y, [](int, int, int, double, double) { return 0.0; },
          [&](int i, int l, int, int, double s1, double s0) {
            const double rho = std::max(std::abs(s0), std::abs(s1));
            return detail::q_plus_term(s1, s0) *
                   detail::exp_cross(u(i - 1), u(l - 1), rho);
          }) /
      (2.0 * std::numbers::pi);
  return report;
}

// Interval version: bounds |P(X_(r) in [a,b]) - P(Y_(r) in [a,b])| with the
// prefactor 1/pi and u_i = min(|a_i|, |b_i|). Infinite endpoints are allowed.
inline BoundReport remark_interval_bound(const GaussianArraySpec& x,
                                         const GaussianArraySpec& y,
                                         const ThresholdVector& a,
                                         const ThresholdVector& b,
                                         const BoundOptions& opts = {}) {
  (void)opts;
  check_same_shape(x, y);
  check_threshold_dim(x, a);
  check_threshold_dim(x, b);
  for (int i = 0; i < a.size(); ++i)
    if (!(a(i) <= b(i)))
      throw std::invalid_argument("interval bound requires a <= b componentwise");
  ThresholdVector u(a.size());
  for (int i = 0; i < a.size(); ++i) u(i) = std::min(std::abs(a(i)), std::abs(b(i)));
  BoundReport report = theorem1_abs_bound(x, y, u);
  report.kind = BoundKind::remark_interval;
  report.value *= 2.0;
  return report;
}

// Signed bound with positive-part terms in both sums; valid only for large
// thresholds. The gate min_i u_i >= 2 is advisory, never blocking.
inline BoundReport remark_large_u_bound(const GaussianArraySpec& x,
                                        const GaussianArraySpec& y,
                                        const ThresholdVector& u,
                                        const BoundOptions& opts = {}) {
  check_same_shape(x, y);
  check_threshold_dim(x, u);
  BoundReport report;
  report.kind = BoundKind::remark_large_u;
  if (u.minCoeff() < opts.large_u_gate) {
    report.applicable = false;
    report.violated_conditions.push_back("min u_i below advisory large-u gate");
  }
  report.value =
      detail::sum_pairs(
          x, y,
          [&](int i, int, int, double s1, double s0) {
            const double rho = std::max(std::abs(s0), std::abs(s1));
            return detail::q_plus_term(s1, s0) *
                   detail::exp_within(u(i - 1), rho);
          },
          [&](int i, int l, int, int, double s1, double s0) {
            const double rho = std::max(std::abs(s0), std::abs(s1));
            return detail::q_plus_term(s1, s0) *
                   detail::exp_cross(u(i - 1), u(l - 1), rho);
          }) /
      (2.0 * std::numbers::pi);
  return report;
}

// Signed integral of (1+|h|)^{2(n-r)} / (1-h^2)^{(n-r+1)/2} over [s0, s1].
// Substituting h = sin(theta) turns the integrand into
// (1+|sin theta|)^{2(n-r)} / cos(theta)^{n-r}, which removes the endpoint
// singularity for n = r and weakens it otherwise.
inline double a_integral(double sigma0, double sigma1, int n, int r) {
  if (r < 1 || r > n) throw std::invalid_argument("a_integral: need 1 <= r <= n");
  if (!(std::abs(sigma0) < 1.0 && std::abs(sigma1) < 1.0))
    throw std::invalid_argument("a_integral: endpoints must lie in (-1, 1)");
  if (sigma0 == sigma1) return 0.0;
  const double sign = sigma1 >= sigma0 ? 1.0 : -1.0;
  const double lo = std::asin(std::min(sigma0, sigma1));
  const double hi = std::asin(std::max(sigma0, sigma1));
  const int p = n - r;
  if (p == 0) return sign * (hi - lo);
  auto integrand = [p](double theta) {
    const double s = std::sin(theta);
    return std::pow(1.0 + std::abs(s), 2 * p) / std::pow(std::cos(theta), p);
  };
  return sign * integrate_adaptive(integrand, lo, hi, 1e-12, 1e-10);
}

namespace detail {

inline double binomial(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  double value = 1.0;
  for (int i = 1; i <= r; ++i) value = value * (n - r + i) / i;
  return std::round(value);
}

// Column independence: sigma_{ij,lk} = sigma_{il} I{j = k}.
inline bool column_independent(const GaussianArraySpec& s, double tol) {
  for (int i = 1; i <= s.d(); ++i)
    for (int l = i; l <= s.d(); ++l) {
      const double ref = s.sigma(i, 1, l, 1);
      for (int j = 1; j <= s.n(); ++j)
        for (int k = 1; k <= s.n(); ++k) {
          if (i == l && j == k) continue;  // unit diagonal
          const double want = (j == k) ? ref : 0.0;
          if (std::abs(s.sigma(i, j, l, k) - want) > tol) return false;
        }
    }
  return true;
}

}  // namespace detail

// Rank-aware bounds under column independence. The signed bound uses the
// positive part of the A-integral, the absolute one its magnitude; both share
// u = min_i u_i. A violated independence assumption is flagged and the value
// is still computed from sigma_il := sigma_{i1,l1}.
inline std::pair<BoundReport, BoundReport> theorem3_bounds(
    const GaussianArraySpec& x, const GaussianArraySpec& y, int r,
    const ThresholdVector& u, const BoundOptions& opts = {}) {
  check_same_shape(x, y);
  check_threshold_dim(x, u);
  if (r < 1 || r > x.n())
    throw std::invalid_argument("theorem3_bounds: need 1 <= r <= n");
  if (!(u.minCoeff() > 0.0))
    throw std::invalid_argument("theorem3_bounds: thresholds must be positive");

  BoundReport signed_report, abs_report;
  signed_report.kind = BoundKind::thm3_signed;
  abs_report.kind = BoundKind::thm3_abs;
  std::vector<std::string> violations;
  if (!detail::column_independent(x, opts.condition_tol))
    violations.push_back("Assump.ind violated for X");
  if (!detail::column_independent(y, opts.condition_tol))
    violations.push_back("Assump.ind violated for Y");
  signed_report.violated_conditions = violations;
  abs_report.violated_conditions = violations;
  signed_report.applicable = violations.empty();
  abs_report.applicable = violations.empty();

  const int n = x.n();
  const double u_min = u.minCoeff();
  signed_report.u_min = u_min;
  abs_report.u_min = u_min;
  const double c = detail::binomial(n - 1, r - 1);
  const double prefactor = n * c * c /
                           std::pow(2.0 * std::numbers::pi, n - r + 1) *
                           std::pow(u_min, -2.0 * (n - r));
  double sum_signed = 0.0, sum_abs = 0.0;
  for (int i = 1; i <= x.d(); ++i)
    for (int l = i + 1; l <= x.d(); ++l) {
      const double s1 = x.sigma(i, 1, l, 1);
      const double s0 = y.sigma(i, 1, l, 1);
      const double rho = std::max(std::abs(s0), std::abs(s1));
      const double a_il = a_integral(s0, s1, n, r);
      const double e = std::exp(-(n - r + 1) * u_min * u_min / (1.0 + rho));
      sum_signed += std::max(a_il, 0.0) * e;
      sum_abs += std::abs(a_il) * e;
    }
  signed_report.value = prefactor * sum_signed;
  abs_report.value = prefactor * sum_abs;
  return {signed_report, abs_report};
}

// Logarithm of the ratio upper bound for Theta_(r)(u); the lower bound
// 1 <= Theta_(r)(u) is the statement value >= 0. Returned in log space since
// the exponentiated form overflows for many inputs.
inline BoundReport prop2_log_ratio_bound(const GaussianArraySpec& x,
                                         const GaussianArraySpec& y,
                                         const ThresholdVector& u,
                                         const BoundOptions& opts = {}) {
  check_same_shape(x, y);
  check_threshold_dim(x, u);
  if (!(u.minCoeff() >= 0.0))
    throw std::invalid_argument("prop2_log_ratio_bound: thresholds must be >= 0");
  BoundReport report;
  report.kind = BoundKind::prop2_log_ratio;
  if (!detail::s_ind_holds(x, y, opts.condition_tol)) {
    report.applicable = false;
    report.violated_conditions.push_back("cond: s-ind");
  }
  bool sign_ok = true;
  for (int i = 1; i <= x.d() && sign_ok; ++i)
    for (int l = i + 1; l <= x.d() && sign_ok; ++l)
      for (int j = 1; j <= x.n() && sign_ok; ++j)
        for (int k = 1; k <= x.n() && sign_ok; ++k) {
          const double s1 = x.sigma(i, j, l, k);
          const double s0 = y.sigma(i, j, l, k);
          if (!(s0 >= -opts.condition_tol && s1 >= s0 - opts.condition_tol))
            sign_ok = false;
        }
  if (!sign_ok) {
    report.applicable = false;
    report.violated_conditions.push_back("0 <= sigma_Y <= sigma_X cross-row");
  }
  double total = 0.0;
  for (int i = 1; i <= x.d(); ++i)
    for (int l = i + 1; l <= x.d(); ++l)
      for (int j = 1; j <= x.n(); ++j)
        for (int k = 1; k <= x.n(); ++k) {
          const double s1 = x.sigma(i, j, l, k);
          const double s0 = y.sigma(i, j, l, k);
          if (s1 >= 1.0)
            throw std::domain_error(
                "prop2_log_ratio_bound: sigma_X entry equals 1, log factor infinite");
          const double c_term = std::log((std::numbers::pi - 2.0 * std::asin(s0)) /
                                         (std::numbers::pi - 2.0 * std::asin(s1)));
          const double s = u(i - 1) + u(l - 1);
          total += c_term * std::exp(-s * s / 8.0) / plus_mean(0.5 * s);
        }
  report.value = total / kSqrt2Pi;
  return report;
}

struct SlepianConditions {
  bool holds = true;
  std::vector<std::string> violations;
};

// Conditions under which Delta_(r)(u) <= 0 for every u: shared within-row
// covariances plus sigma_Y >= sigma_X on all cross-row pairs.
inline SlepianConditions slepian_conditions(const GaussianArraySpec& x,
                                            const GaussianArraySpec& y,
                                            const BoundOptions& opts = {}) {
  check_same_shape(x, y);
  SlepianConditions result;
  if (!detail::s_ind_holds(x, y, opts.condition_tol)) {
    result.holds = false;
    result.violations.push_back("cond: s-ind");
  }
  bool ordered = true;
  for (int i = 1; i <= x.d() && ordered; ++i)
    for (int l = i + 1; l <= x.d() && ordered; ++l)
      for (int j = 1; j <= x.n() && ordered; ++j)
        for (int k = 1; k <= x.n() && ordered; ++k)
          if (!(y.sigma(i, j, l, k) >= x.sigma(i, j, l, k) - opts.condition_tol))
            ordered = false;
  if (!ordered) {
    result.holds = false;
    result.violations.push_back("sigma_Y >= sigma_X cross-row");
  }
  return result;
}

}  // namespace ordstat

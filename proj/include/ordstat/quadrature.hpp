#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ordstat {

struct QuadratureRule {
  std::vector<double> node;
  std::vector<double> weight;
};

namespace detail {

// Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n.
inline QuadratureRule make_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.node.resize(n);
  rule.weight.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.node[i] = -x;
    rule.node[n - 1 - i] = x;
    rule.weight[i] = w;
    rule.weight[n - 1 - i] = w;
  }
  return rule;
}

// Gauss-Hermite (weight e^{-t^2}) via the symmetric tridiagonal Jacobi matrix.
inline QuadratureRule make_gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double b = std::sqrt((i + 1) / 2.0);
    jacobi(i, i + 1) = b;
    jacobi(i + 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.node.resize(n);
  rule.weight.resize(n);
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    rule.node[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    rule.weight[i] = mu0 * v * v;
  }
  return rule;
}

}  // namespace detail

inline const QuadratureRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::make_gauss_legendre(n)).first;
  return it->second;
}

inline const QuadratureRule& gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::make_gauss_hermite(n)).first;
  return it->second;
}

template <typename F>
double integrate_gauss_legendre(F&& f, double a, double b, int n = 64) {
  const QuadratureRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weight[i] * f(mid + hw * rule.node[i]);
  return hw * sum;
}

namespace detail {

// 15-point Kronrod extension of 7-point Gauss (positive half, standard table).
inline constexpr double kGk15Node[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kGk15Weight[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kG7Weight[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
void gk15(F&& f, double a, double b, double& value, double& err) {
  const double mid = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  const double fc = f(mid);
  double res_k = kGk15Weight[7] * fc;
  double res_g = kG7Weight[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = hw * kGk15Node[i];
    const double fsum = f(mid - x) + f(mid + x);
    res_k += kGk15Weight[i] * fsum;
    if (i % 2 == 1) res_g += kG7Weight[i / 2] * fsum;
  }
  value = res_k * hw;
  err = std::abs((res_k - res_g) * hw);
}

}  // namespace detail

// Adaptive Gauss-Kronrod 15(7) with a simple interval stack.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-10,
                          double rel_tol = 1e-10, int max_intervals = 2000) {
  if (a == b) return 0.0;
  struct Interval {
    double a, b, value, err;
  };
  std::vector<Interval> stack;
  double v0, e0;
  detail::gk15(f, a, b, v0, e0);
  stack.push_back({a, b, v0, e0});
  double total = v0;
  double total_err = e0;
  int splits = 0;
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (++splits > max_intervals)
      throw std::runtime_error("integrate_adaptive: did not converge");
    // split the interval with the largest error estimate
    std::size_t worst = 0;
    for (std::size_t i = 1; i < stack.size(); ++i)
      if (stack[i].err > stack[worst].err) worst = i;
    const Interval cur = stack[worst];
    stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(worst));
    const double mid = 0.5 * (cur.a + cur.b);
    double vl, el, vr, er;
    detail::gk15(f, cur.a, mid, vl, el);
    detail::gk15(f, mid, cur.b, vr, er);
    total += vl + vr - cur.value;
    total_err += el + er - cur.err;
    stack.push_back({cur.a, mid, vl, el});
    stack.push_back({mid, cur.b, vr, er});
  }
  return total;
}

}  // namespace ordstat

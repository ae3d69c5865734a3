#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ordstat {

// Weighted least-squares line fit in log-log coordinates.
struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  int n_points = 0;
  double r2 = 0.0;
};

struct CurvePoint {
  double x = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  bool censored = false;
};

// Fits ln(value) = intercept + slope * ln(x) over the uncensored points with
// x in [x_lo, x_hi] and value > 0, weighting by 1/stderr_log^2 where
// stderr_log = stderr / value. Points with zero stderr get unit weight, so
// noise-free synthetic curves pass through exactly.
inline ExponentFit fit_exponent(const std::vector<CurvePoint>& curve,
                                double x_lo, double x_hi) {
  if (!(x_lo < x_hi))
    throw std::invalid_argument("fit_exponent: need x_lo < x_hi");
  std::vector<double> xs, ys, ws;
  for (const CurvePoint& p : curve) {
    if (p.censored || !(p.value > 0.0)) continue;
    if (p.x < x_lo || p.x > x_hi) continue;
    const double se_log = p.stderr_ / p.value;
    xs.push_back(std::log(p.x));
    ys.push_back(std::log(p.value));
    ws.push_back(se_log > 0.0 ? 1.0 / (se_log * se_log) : 1.0);
  }
  const int n = static_cast<int>(xs.size());
  if (n < 3)
    throw std::invalid_argument(
        "fit_exponent: need at least 3 usable points in the window");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (int i = 0; i < n; ++i) {
    sw += ws[i];
    swx += ws[i] * xs[i];
    swy += ws[i] * ys[i];
    swxx += ws[i] * xs[i] * xs[i];
    swxy += ws[i] * xs[i] * ys[i];
  }
  const double det = sw * swxx - swx * swx;
  if (!(det > 0.0))
    throw std::invalid_argument("fit_exponent: degenerate abscissa");
  ExponentFit fit;
  fit.slope = (sw * swxy - swx * swy) / det;
  fit.intercept = (swxx * swy - swx * swxy) / det;
  fit.slope_stderr = std::sqrt(sw / det);
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.n_points = n;
  const double ybar = swy / sw;
  double ss_res = 0, ss_tot = 0;
  for (int i = 0; i < n; ++i) {
    const double pred = fit.intercept + fit.slope * xs[i];
    ss_res += ws[i] * (ys[i] - pred) * (ys[i] - pred);
    ss_tot += ws[i] * (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  return fit;
}

}  // namespace ordstat

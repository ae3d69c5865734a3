#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ordstat/array_spec.hpp"
#include "ordstat/fft.hpp"
#include "ordstat/mc.hpp"
#include "ordstat/rng.hpp"

namespace ordstat {

// Uniform grid t_k = t0 + k (t1 - t0)/(m - 1), k = 0..m-1.
struct GridSpec {
  double t0 = 0.0;
  double t1 = 1.0;
  int m = 1025;

  void validate() const {
    if (!(t0 >= 0.0)) throw std::invalid_argument("GridSpec: t0 must be >= 0");
    if (!(t1 > t0)) throw std::invalid_argument("GridSpec: t1 must exceed t0");
    if (m < 2) throw std::invalid_argument("GridSpec: need at least 2 points");
  }
  double dt() const { return (t1 - t0) / (m - 1); }
  double point(int k) const { return t0 + k * dt(); }
  std::vector<double> points() const {
    std::vector<double> t(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) t[static_cast<std::size_t>(k)] = point(k);
    return t;
  }
  // Nested refinement: same interval, doubled resolution.
  GridSpec refined() const { return {t0, t1, 2 * m - 1}; }
};

struct SampledPath {
  std::vector<double> t;
  std::vector<double> x;
  std::string label;
};

// Covariance models for the simulated processes.
class CorrelationModel {
 public:
  enum class Kind { fbm, power_exp, self_similar_beta, custom_stationary, custom_kernel };

  static CorrelationModel fbm(double alpha) {
    require(alpha > 0.0 && alpha < 2.0, "fbm requires alpha in (0, 2)");
    CorrelationModel m;
    m.kind_ = Kind::fbm;
    m.alpha_ = alpha;
    m.label_ = "fbm(alpha=" + std::to_string(alpha) + ")";
    return m;
  }

  // rho(t) = exp(-|t/scale|^alpha); stationary, unit variance.
  static CorrelationModel power_exp(double alpha, double scale = 1.0) {
    require(alpha > 0.0 && alpha <= 2.0, "power_exp requires alpha in (0, 2]");
    require(scale > 0.0, "power_exp requires scale > 0");
    CorrelationModel m;
    m.kind_ = Kind::power_exp;
    m.alpha_ = alpha;
    m.scale_ = scale;
    m.label_ = "power_exp(alpha=" + std::to_string(alpha) + ")";
    return m;
  }

  // E[X(s)X(t)] = 2^beta (s t)^{(1+beta)/2} / (s+t)^beta; self-similar with
  // index 1/2 (alpha = 1) for every beta > 0.
  static CorrelationModel self_similar_beta(double beta) {
    require(beta > 0.0, "self_similar_beta requires beta > 0");
    CorrelationModel m;
    m.kind_ = Kind::self_similar_beta;
    m.alpha_ = 1.0;
    m.beta_ = beta;
    m.label_ = "self_similar_beta(beta=" + std::to_string(beta) + ")";
    return m;
  }

  static CorrelationModel custom_stationary(std::function<double(double)> corr,
                                            std::string label = "custom_stationary") {
    CorrelationModel m;
    m.kind_ = Kind::custom_stationary;
    m.corr_fn_ = std::move(corr);
    m.label_ = std::move(label);
    return m;
  }

  static CorrelationModel custom_kernel(std::function<double(double, double)> kernel,
                                        std::string label = "custom_kernel") {
    CorrelationModel m;
    m.kind_ = Kind::custom_kernel;
    m.kernel_fn_ = std::move(kernel);
    m.label_ = std::move(label);
    return m;
  }

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double scale() const { return scale_; }
  const std::string& label() const { return label_; }

  bool stationary() const {
    return kind_ == Kind::power_exp || kind_ == Kind::custom_stationary;
  }

  double stationary_corr(double lag) const {
    switch (kind_) {
      case Kind::power_exp:
        return std::exp(-std::pow(std::abs(lag) / scale_, alpha_));
      case Kind::custom_stationary:
        return corr_fn_(lag);
      default:
        throw std::logic_error("stationary_corr: model is not stationary");
    }
  }

  double kernel(double s, double t) const {
    switch (kind_) {
      case Kind::fbm:
        return fbm_cov(s, t, alpha_);
      case Kind::power_exp:
      case Kind::custom_stationary:
        return stationary_corr(t - s);
      case Kind::self_similar_beta: {
        if (s <= 0.0 || t <= 0.0) return 0.0;
        return std::pow(2.0, beta_) * std::pow(s * t, 0.5 * (1.0 + beta_)) /
               std::pow(s + t, beta_);
      }
      case Kind::custom_kernel:
        return kernel_fn_(s, t);
    }
    throw std::logic_error("kernel: unknown model kind");
  }

  static double fbm_cov(double s, double t, double alpha) {
    require(s >= 0.0 && t >= 0.0, "fbm_cov requires s, t >= 0");
    require(alpha > 0.0 && alpha < 2.0, "fbm_cov requires alpha in (0, 2)");
    return 0.5 * (std::pow(s, alpha) + std::pow(t, alpha) -
                  std::pow(std::abs(t - s), alpha));
  }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }

  Kind kind_ = Kind::fbm;
  double alpha_ = 1.0;
  double beta_ = 0.0;
  double scale_ = 1.0;
  std::function<double(double)> corr_fn_;
  std::function<double(double, double)> kernel_fn_;
  std::string label_;
};

inline double fbm_cov(double s, double t, double alpha) {
  return CorrelationModel::fbm_cov(s, t, alpha);
}

enum class PathMethod { cholesky, circulant };

namespace detail {

// Davies-Harte circulant embedding of a stationary autocovariance sequence
// c[0..N]. One complex FFT per call yields two independent draws.
class CirculantEngine {
 public:
  CirculantEngine(std::vector<double> autocov, double rel_tol = 1e-8)
      : n_(autocov.size() - 1) {
    if (autocov.size() < 2)
      throw std::invalid_argument("circulant embedding needs >= 2 lags");
    const std::size_t m = 2 * n_;
    if (!is_power_of_two(m))
      throw std::invalid_argument(
          "circulant method requires m-1 to be a power of two; use the "
          "cholesky method for this grid");
    std::vector<std::complex<double>> c(m);
    for (std::size_t j = 0; j <= n_; ++j) c[j] = autocov[j];
    for (std::size_t j = n_ + 1; j < m; ++j) c[j] = autocov[m - j];
    fft_radix2(c, -1);
    lambda_.resize(m);
    double max_eig = 0.0, min_eig = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      lambda_[k] = c[k].real();
      max_eig = std::max(max_eig, lambda_[k]);
      min_eig = std::min(min_eig, lambda_[k]);
    }
    min_eig_ = min_eig;
    if (min_eig < -rel_tol * max_eig)
      throw std::runtime_error(
          "circulant embedding produced a significantly negative eigenvalue; "
          "use the cholesky method for this model/grid");
    for (std::size_t k = 0; k < m; ++k)
      if (lambda_[k] < 0.0) {
        lambda_[k] = 0.0;
        ++clipped_;
      }
    scale_.resize(m);
    for (std::size_t k = 0; k < m; ++k)
      scale_[k] = std::sqrt(lambda_[k] / (2.0 * static_cast<double>(m)));
  }

  std::size_t lags() const { return n_; }
  int clipped() const { return clipped_; }
  double min_eigenvalue() const { return min_eig_; }

  // Two independent stationary draws of length n_+1 (lags 0..N).
  void sample_pair(NormalRng& rng, std::span<double> out1,
                   std::span<double> out2) const {
    const std::size_t m = 2 * n_;
    std::vector<std::complex<double>> a(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double re = rng.normal();
      const double im = rng.normal();
      a[k] = std::complex<double>(re * scale_[k], im * scale_[k]);
    }
    fft_radix2(a, -1);
    for (std::size_t j = 0; j <= n_; ++j) {
      out1[j] = a[j].real();
      out2[j] = a[j].imag();
    }
  }

 private:
  std::size_t n_;
  std::vector<double> lambda_;
  std::vector<double> scale_;
  int clipped_ = 0;
  double min_eig_ = 0.0;
};

}  // namespace detail

// Exact Gaussian path sampler on a fixed grid. Cholesky factors the full Gram
// matrix (any model, any grid); circulant embeds the stationary correlation
// sequence, or the increment sequence for fbm started at t = 0.
class PathSampler {
 public:
  PathSampler(const CorrelationModel& model, std::vector<double> times,
              PathMethod method)
      : model_(model), times_(std::move(times)), method_(method) {
    if (times_.size() < 2)
      throw std::invalid_argument("PathSampler: need at least 2 grid points");
    m_ = times_.size();
    if (method_ == PathMethod::circulant) {
      build_circulant();
    } else {
      build_cholesky();
    }
  }

  PathSampler(const CorrelationModel& model, const GridSpec& grid,
              PathMethod method)
      : PathSampler(model, (grid.validate(), grid.points()), method) {}

  std::size_t grid_size() const { return m_; }
  const std::vector<double>& times() const { return times_; }
  double jitter() const { return jitter_; }
  int clipped_eigenvalues() const { return engine_ ? engine_->clipped() : 0; }

  // Number of normal draws consumed per sample_pair call (RNG bookkeeping).
  void sample_pair(NormalRng& rng, std::span<double> out1,
                   std::span<double> out2) const {
    if (engine_) {
      if (fbm_increments_) {
        std::vector<double> inc1(m_ - 1), inc2(m_ - 1);
        engine_->sample_pair(rng, inc1, inc2);
        cumsum_from_zero(inc1, out1);
        cumsum_from_zero(inc2, out2);
      } else {
        engine_->sample_pair(rng, out1, out2);
      }
      return;
    }
    sample_one(rng, out1);
    sample_one(rng, out2);
  }

  void sample_one(NormalRng& rng, std::span<double> out) const {
    if (engine_) {
      std::vector<double> discard(m_);
      sample_pair(rng, out, discard);
      return;
    }
    thread_local std::vector<double> z;
    z.resize(m_);
    rng.fill_normal(z.begin(), z.end());
    transform_truncated(z, static_cast<int>(m_), out);
  }

  // Cholesky-only: the draw restricted to the first `pts` grid points, from
  // caller-provided normals z[0..pts-1]. Valid because the factor of a
  // leading submatrix is the leading block of the factor.
  void transform_truncated(std::span<const double> z, int pts,
                           std::span<double> out) const {
    if (engine_)
      throw std::logic_error("transform_truncated requires the cholesky method");
    for (std::size_t i = 0; i < static_cast<std::size_t>(pts); ++i) {
      const double* row = factor_.data() + i * m_;
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
      out[i] = acc;
    }
  }

 private:
  static void cumsum_from_zero(std::span<const double> inc,
                               std::span<double> out) {
    out[0] = 0.0;
    for (std::size_t k = 0; k < inc.size(); ++k) out[k + 1] = out[k] + inc[k];
  }

  bool uniform_grid(double& dt) const {
    dt = (times_.back() - times_.front()) / static_cast<double>(m_ - 1);
    for (std::size_t k = 0; k < m_; ++k) {
      const double expect = times_.front() + static_cast<double>(k) * dt;
      if (std::abs(times_[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
        return false;
    }
    return true;
  }

  void build_circulant() {
    double dt = 0.0;
    if (!uniform_grid(dt))
      throw std::invalid_argument("circulant method requires a uniform grid");
    const std::size_t n = m_ - 1;
    std::vector<double> autocov(n + 1);
    if (model_.kind() == CorrelationModel::Kind::fbm) {
      if (times_.front() != 0.0)
        throw std::invalid_argument(
            "circulant fbm sampling requires the grid to start at t = 0; use "
            "the cholesky method otherwise");
      const double alpha = model_.alpha();
      const double v = std::pow(dt, alpha);
      for (std::size_t k = 0; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        autocov[k] = 0.5 * v *
                     (std::pow(kk + 1.0, alpha) - 2.0 * std::pow(kk, alpha) +
                      (k == 0 ? 0.0 : std::pow(kk - 1.0, alpha)));
      }
      fbm_increments_ = true;
    } else if (model_.stationary()) {
      for (std::size_t k = 0; k <= n; ++k)
        autocov[k] = model_.stationary_corr(static_cast<double>(k) * dt);
      fbm_increments_ = false;
    } else {
      throw std::invalid_argument(
          "circulant method supports stationary models and fbm from t = 0");
    }
    engine_ = std::make_unique<detail::CirculantEngine>(std::move(autocov));
  }

  void build_cholesky() {
    Eigen::MatrixXd gram(m_, m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double v = model_.kernel(times_[j], times_[i]);
        gram(static_cast<long>(i), static_cast<long>(j)) = v;
        gram(static_cast<long>(j), static_cast<long>(i)) = v;
      }
    static constexpr double kLadder[] = {0.0, 1e-14, 1e-12, 1e-10};
    const double scale = std::max(gram.diagonal().maxCoeff(), 1.0);
    for (double jitter : kLadder) {
      Eigen::MatrixXd attempt = gram;
      attempt.diagonal().array() += jitter * scale;
      Eigen::LLT<Eigen::MatrixXd> llt(attempt);
      if (llt.info() == Eigen::Success) {
        jitter_ = jitter * scale;
        const Eigen::MatrixXd lower = llt.matrixL();
        factor_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
          for (std::size_t j = 0; j <= i; ++j)
            factor_[i * m_ + j] = lower(static_cast<long>(i), static_cast<long>(j));
        return;
      }
    }
    throw std::runtime_error(
        "PathSampler: Gram matrix Cholesky failed at maximum jitter");
  }

  CorrelationModel model_;
  std::vector<double> times_;
  PathMethod method_;
  std::size_t m_ = 0;
  bool fbm_increments_ = false;
  double jitter_ = 0.0;
  std::vector<double> factor_;
  std::unique_ptr<detail::CirculantEngine> engine_;
};

// Batch sampling; path index p is a pure function of (seed, p).
inline std::vector<SampledPath> sample_paths(const CorrelationModel& model,
                                             const GridSpec& grid,
                                             long long n_paths,
                                             std::uint64_t seed,
                                             PathMethod method,
                                             int workers = 1,
                                             std::uint64_t stream = 7) {
  grid.validate();
  PathSampler sampler(model, grid, method);
  const std::size_t m = sampler.grid_size();
  const auto& times = sampler.times();
  std::vector<SampledPath> out(static_cast<std::size_t>(n_paths));
  const std::size_t n_pairs = static_cast<std::size_t>((n_paths + 1) / 2);
  run_chunks(n_pairs, workers, [&](std::size_t pair) {
    NormalRng rng(substream_seed(seed, stream, pair));
    std::vector<double> x1(m), x2(m);
    sampler.sample_pair(rng, x1, x2);
    const std::size_t p0 = 2 * pair;
    out[p0] = SampledPath{times, std::move(x1), model.label()};
    if (p0 + 1 < static_cast<std::size_t>(n_paths))
      out[p0 + 1] = SampledPath{times, std::move(x2), model.label()};
  });
  return out;
}

// Grid {e^{s_k}} for a uniform s-grid on [s0, s1].
inline std::vector<double> exponential_grid(double s0, double s1, int m) {
  GridSpec s{s0, s1, m};
  if (!(s1 > s0)) throw std::invalid_argument("exponential_grid: need s1 > s0");
  if (m < 2) throw std::invalid_argument("exponential_grid: need m >= 2");
  std::vector<double> t(static_cast<std::size_t>(m));
  const double ds = (s1 - s0) / (m - 1);
  for (int k = 0; k < m; ++k) t[static_cast<std::size_t>(k)] = std::exp(s0 + k * ds);
  return t;
}

// Lamperti transform X*(s) = e^{-alpha s / 2} X(e^s) for a path sampled on an
// exponential grid; the output lives on the uniform s-grid.
inline SampledPath lamperti_dual(const SampledPath& path, double alpha) {
  const std::size_t m = path.t.size();
  if (m < 2) throw std::invalid_argument("lamperti_dual: need >= 2 points");
  std::vector<double> s(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (!(path.t[k] > 0.0))
      throw std::invalid_argument("lamperti_dual: grid must be positive");
    s[k] = std::log(path.t[k]);
  }
  const double ds = (s.back() - s.front()) / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const double expect = s.front() + static_cast<double>(k) * ds;
    if (std::abs(s[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
      throw std::invalid_argument(
          "lamperti_dual: grid is not exponential within tolerance");
  }
  SampledPath dual;
  dual.t = std::move(s);
  dual.x.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    dual.x[k] = std::exp(-0.5 * alpha * dual.t[k]) * path.x[k];
  dual.label = path.label + "*";
  return dual;
}

// Pointwise r-th order statistic of n paths on a common grid.
inline SampledPath order_stat_path(const std::vector<SampledPath>& paths,
                                   const OrderStatSelector& sel) {
  if (paths.empty()) throw std::invalid_argument("order_stat_path: no paths");
  const int n = static_cast<int>(paths.size());
  sel.validate_for(n);
  const std::size_t m = paths.front().t.size();
  for (const SampledPath& p : paths) {
    if (p.t.size() != m || p.x.size() != m)
      throw std::invalid_argument("order_stat_path: grid size mismatch");
    for (std::size_t k = 0; k < m; ++k)
      if (std::abs(p.t[k] - paths.front().t[k]) >
          1e-12 * std::max(1.0, std::abs(p.t[k])))
        throw std::invalid_argument("order_stat_path: grids differ");
  }
  const int ra = sel.ascending_rank(n);
  SampledPath out;
  out.t = paths.front().t;
  out.x.resize(m);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < m; ++k) {
    for (int j = 0; j < n; ++j) column[static_cast<std::size_t>(j)] = paths[static_cast<std::size_t>(j)].x[k];
    std::nth_element(column.begin(), column.begin() + (ra - 1), column.end());
    out.x[k] = column[static_cast<std::size_t>(ra - 1)];
  }
  out.label = "order_stat(r=" + std::to_string(sel.rank) + ")";
  return out;
}

// Grid proxy for {sup path <= level}. The grid maximum underestimates the
// continuous supremum, so the resulting probability estimate is biased up;
// experiments must report grid-refinement deltas alongside.
inline bool sup_indicator(const SampledPath& path, double level) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : path.x) mx = std::max(mx, v);
  return mx <= level;
}

// CSV dump (t, value, path_id) for external plotting.
inline void dump_paths_csv(const std::vector<SampledPath>& paths,
                           std::ostream& os) {
  os << "t,value,path_id\n";
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (std::size_t k = 0; k < paths[p].t.size(); ++k)
      os << paths[p].t[k] << ',' << paths[p].x[k] << ',' << p << '\n';
}

}  // namespace ordstat

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordstat/array_spec.hpp"
#include "ordstat/rng.hpp"
#include "ordstat/special_functions.hpp"

namespace ordstat {

// Every Monte Carlo answer carries its uncertainty and provenance.
struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  long long n_samples = 0;
  std::uint64_t seed = 0;
};

struct McOptions {
  long long n_samples = 1'000'000;
  std::uint64_t seed = 0;
  int workers = 1;
  // Samples per substream chunk; part of the determinism contract: the same
  // (seed, n_samples, chunk_size) reproduces results bit for bit at any
  // worker count.
  long long chunk_size = 1 << 14;
  // Antithetic pairing (z, -z) is exactly valid for centered Gaussians; the
  // standard error is then computed over pair averages.
  bool antithetic = true;
  // Common random numbers across the two sides of a difference estimate.
  // Exploratory only: the reported stderr is conservative, not exact.
  bool common_random_numbers = false;
};

// Per-row r-th order statistic of a row-major d x n sample.
inline void order_stat_vector(std::span<const double> sample, int d, int n,
                              const OrderStatSelector& sel,
                              std::span<double> out,
                              std::span<double> scratch) {
  sel.validate_for(n);
  const int ra = sel.ascending_rank(n);
  for (int i = 0; i < d; ++i) {
    std::copy_n(sample.begin() + static_cast<std::ptrdiff_t>(i) * n, n,
                scratch.begin());
    std::nth_element(scratch.begin(), scratch.begin() + (ra - 1),
                     scratch.begin() + n);
    out[i] = scratch[ra - 1];
  }
}

inline Eigen::VectorXd order_stat_vector(const Eigen::MatrixXd& sample,
                                         const OrderStatSelector& sel) {
  const int d = static_cast<int>(sample.rows());
  const int n = static_cast<int>(sample.cols());
  std::vector<double> flat(static_cast<std::size_t>(d) * n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j)
      flat[static_cast<std::size_t>(i) * n + j] = sample(i, j);
  Eigen::VectorXd out(d);
  std::vector<double> scratch(n);
  order_stat_vector(flat, d, n, sel, {out.data(), static_cast<std::size_t>(d)},
                    scratch);
  return out;
}

// Lower-triangular factor with a jitter ladder; the jitter actually used is
// recorded so regularization is never silent.
class ArraySampler {
 public:
  explicit ArraySampler(const GaussianArraySpec& spec)
      : d_(spec.d()), n_(spec.n()), dim_(spec.dim()) {
    static constexpr double kLadder[] = {0.0, 1e-14, 1e-12, 1e-10};
    for (double jitter : kLadder) {
      Eigen::MatrixXd attempt = spec.cov();
      attempt.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(attempt);
      if (llt.info() == Eigen::Success) {
        jitter_ = jitter;
        const Eigen::MatrixXd lower = llt.matrixL();
        factor_.assign(static_cast<std::size_t>(dim_) * dim_, 0.0);
        for (int i = 0; i < dim_; ++i)
          for (int j = 0; j <= i; ++j)
            factor_[static_cast<std::size_t>(i) * dim_ + j] = lower(i, j);
        return;
      }
    }
    throw std::runtime_error(
        "ArraySampler: Cholesky factorization failed at maximum jitter 1e-10");
  }

  int d() const { return d_; }
  int n() const { return n_; }
  int dim() const { return dim_; }
  double jitter() const { return jitter_; }

  // out = L * z
  void transform(std::span<const double> z, std::span<double> out) const {
    for (int i = 0; i < dim_; ++i) {
      const double* row = factor_.data() + static_cast<std::size_t>(i) * dim_;
      double acc = 0.0;
      for (int j = 0; j <= i; ++j)
        acc += row[j] * z[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = acc;
    }
  }

  void sample_into(NormalRng& rng, std::span<double> z_scratch,
                   std::span<double> out) const {
    rng.fill_normal(z_scratch.begin(), z_scratch.begin() + dim_);
    transform(z_scratch, out);
  }

 private:
  int d_, n_, dim_;
  double jitter_ = 0.0;
  std::vector<double> factor_;
};

// Reproducible stream of array samples; sample k is a pure function of
// (seed, k). Mostly a test surface; the estimators below use fused loops.
inline std::vector<Eigen::MatrixXd> sample_array(const GaussianArraySpec& spec,
                                                 std::uint64_t seed,
                                                 long long count) {
  ArraySampler sampler(spec);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<double> z(spec.dim()), xs(spec.dim());
  NormalRng rng(substream_seed(seed, 0, 0));
  for (long long k = 0; k < count; ++k) {
    sampler.sample_into(rng, z, xs);
    Eigen::MatrixXd m(spec.d(), spec.n());
    for (int i = 0; i < spec.d(); ++i)
      for (int j = 0; j < spec.n(); ++j)
        m(i, j) = xs[static_cast<std::size_t>(i) * spec.n() + j];
    out.push_back(std::move(m));
  }
  return out;
}

namespace detail {

struct PairTally {
  long long k1 = 0, k2 = 0;  // pairs with exactly 1 / exactly 2 successes
};

// Antithetic estimate from a per-pair evaluator hits(z) in {0, 1, 2}.
template <typename PairFn>
McEstimate tally_pairs(const McOptions& opts, std::uint64_t stream, int dim,
                       PairFn&& pair_hits) {
  const long long pairs = (opts.n_samples + 1) / 2;
  const long long per_chunk = std::max<long long>(1, opts.chunk_size / 2);
  const std::size_t n_chunks =
      static_cast<std::size_t>((pairs + per_chunk - 1) / per_chunk);
  std::vector<PairTally> tallies(n_chunks);
  run_chunks(n_chunks, opts.workers, [&](std::size_t c) {
    NormalRng rng(substream_seed(opts.seed, stream, c));
    std::vector<double> z(static_cast<std::size_t>(dim));
    const long long lo = static_cast<long long>(c) * per_chunk;
    const long long hi = std::min(pairs, lo + per_chunk);
    PairTally t;
    for (long long p = lo; p < hi; ++p) {
      rng.fill_normal(z.begin(), z.end());
      const int hits = pair_hits(z);
      if (hits == 1)
        ++t.k1;
      else if (hits == 2)
        ++t.k2;
    }
    tallies[c] = t;
  });
  long long k1 = 0, k2 = 0;
  for (const PairTally& t : tallies) {
    k1 += t.k1;
    k2 += t.k2;
  }
  const double np = static_cast<double>(pairs);
  const double value = (0.5 * k1 + k2) / np;
  const double m2 = (0.25 * k1 + k2) / np;
  const double var = std::max(m2 - value * value, 0.0);
  return {value, std::sqrt(var / np), 2 * pairs, opts.seed};
}

template <typename HitFn>
McEstimate tally_single(const McOptions& opts, std::uint64_t stream, int dim,
                        HitFn&& hit) {
  const long long n = opts.n_samples;
  const long long per_chunk = std::max<long long>(1, opts.chunk_size);
  const std::size_t n_chunks =
      static_cast<std::size_t>((n + per_chunk - 1) / per_chunk);
  std::vector<long long> counts(n_chunks, 0);
  run_chunks(n_chunks, opts.workers, [&](std::size_t c) {
    NormalRng rng(substream_seed(opts.seed, stream, c));
    std::vector<double> z(static_cast<std::size_t>(dim));
    const long long lo = static_cast<long long>(c) * per_chunk;
    const long long hi = std::min(n, lo + per_chunk);
    long long h = 0;
    for (long long k = lo; k < hi; ++k) {
      rng.fill_normal(z.begin(), z.end());
      if (hit(z)) ++h;
    }
    counts[c] = h;
  });
  long long total = 0;
  for (long long h : counts) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, opts.seed};
}

}  // namespace detail

// P{ X_(r) <= u componentwise } by exact-sampling Monte Carlo.
inline McEstimate estimate_prob_le(const GaussianArraySpec& spec,
                                   const OrderStatSelector& sel,
                                   const ThresholdVector& u,
                                   const McOptions& opts,
                                   std::uint64_t stream = 1) {
  check_threshold_dim(spec, u);
  sel.validate_for(spec.n());
  if (opts.n_samples < 100)
    throw std::invalid_argument("estimate_prob_le: need n_samples >= 100");
  ArraySampler sampler(spec);
  const int d = spec.d(), n = spec.n(), dim = spec.dim();
  const int ra = sel.ascending_rank(n);
  if (opts.antithetic) {
    // One transform and one row sort serve both members of the pair: the
    // r-th smallest of -x is the negated (n-r+1)-th smallest of x.
    auto pair_hits = [&, d, n, dim, ra](const std::vector<double>& z) {
      thread_local std::vector<double> x, row;
      x.resize(static_cast<std::size_t>(dim));
      row.resize(static_cast<std::size_t>(n));
      sampler.transform(z, x);
      bool pos = true, neg = true;
      for (int i = 0; i < d && (pos || neg); ++i) {
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i) * n, n,
                    row.begin());
        std::sort(row.begin(), row.end());
        if (pos && !(row[static_cast<std::size_t>(ra - 1)] <= u(i))) pos = false;
        if (neg && !(-row[static_cast<std::size_t>(n - ra)] <= u(i))) neg = false;
      }
      return (pos ? 1 : 0) + (neg ? 1 : 0);
    };
    return detail::tally_pairs(opts, stream, dim, pair_hits);
  }
  auto hit = [&, d, n, dim, ra](const std::vector<double>& z) {
    thread_local std::vector<double> x, row;
    x.resize(static_cast<std::size_t>(dim));
    row.resize(static_cast<std::size_t>(n));
    sampler.transform(z, x);
    for (int i = 0; i < d; ++i) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i) * n, n,
                  row.begin());
      std::nth_element(row.begin(), row.begin() + (ra - 1), row.end());
      if (!(row[static_cast<std::size_t>(ra - 1)] <= u(i))) return false;
    }
    return true;
  };
  return detail::tally_single(opts, stream, dim, hit);
}

// Delta_(r)(u) = P{X_(r) <= u} - P{Y_(r) <= u}. Independent substreams by
// default so the combined stderr is honest.
inline McEstimate estimate_delta(const GaussianArraySpec& spec_x,
                                 const GaussianArraySpec& spec_y,
                                 const OrderStatSelector& sel,
                                 const ThresholdVector& u,
                                 const McOptions& opts) {
  check_same_shape(spec_x, spec_y);
  const std::uint64_t stream_x = 1, stream_y = 2;
  const McEstimate px = estimate_prob_le(spec_x, sel, u, opts, stream_x);
  const McEstimate py = estimate_prob_le(
      spec_y, sel, u, opts, opts.common_random_numbers ? stream_x : stream_y);
  McEstimate out;
  out.value = px.value - py.value;
  out.stderr_ = std::sqrt(px.stderr_ * px.stderr_ + py.stderr_ * py.stderr_);
  out.n_samples = px.n_samples;
  out.seed = opts.seed;
  return out;
}

// ln Theta_(r)(u) = ln( P{X_(r) <= u} / P{Y_(r) <= u} ) with delta-method
// stderr. Aborts when either probability estimate is starved.
inline McEstimate estimate_theta_log(const GaussianArraySpec& spec_x,
                                     const GaussianArraySpec& spec_y,
                                     const OrderStatSelector& sel,
                                     const ThresholdVector& u,
                                     const McOptions& opts) {
  check_same_shape(spec_x, spec_y);
  const McEstimate px = estimate_prob_le(spec_x, sel, u, opts, 1);
  const McEstimate py = estimate_prob_le(spec_y, sel, u, opts, 2);
  const double gate = 10.0 / static_cast<double>(px.n_samples);
  auto starved = [&](const char* side, const McEstimate& e) {
    std::ostringstream os;
    os << "estimate_theta_log: P{" << side
       << "_(r) <= u} too small for a reliable ratio (p_hat = " << e.value
       << " < " << gate << ")";
    return std::runtime_error(os.str());
  };
  if (px.value < gate) throw starved("X", px);
  if (py.value < gate) throw starved("Y", py);
  McEstimate out;
  out.value = std::log(px.value / py.value);
  const double rx = px.stderr_ / px.value;
  const double ry = py.stderr_ / py.value;
  out.stderr_ = std::sqrt(rx * rx + ry * ry);
  out.n_samples = px.n_samples;
  out.seed = opts.seed;
  return out;
}

// Closed-form probability for the tiny shapes where the bivariate CDF is an
// exact oracle: dn <= 2, or d = 1, n = 2 with any rank.
inline double exact_prob_small(const GaussianArraySpec& spec,
                               const OrderStatSelector& sel,
                               const ThresholdVector& u) {
  check_threshold_dim(spec, u);
  sel.validate_for(spec.n());
  const int d = spec.d(), n = spec.n();
  if (d == 1 && n == 1) return std_normal_cdf(u(0));
  if (d == 2 && n == 1)
    return bivariate_cdf(u(0), u(1), Correlation(spec.sigma(1, 1, 2, 1)));
  if (d == 1 && n == 2) {
    const double rho = spec.sigma(1, 1, 1, 2);
    const double both = bivariate_cdf(u(0), u(0), Correlation(rho));
    if (sel.ascending_rank(2) == 2) return both;  // row maximum
    return 2.0 * std_normal_cdf(u(0)) - both;     // row minimum
  }
  throw std::invalid_argument(
      "exact_prob_small: supported shapes are dn <= 2 or (d=1, n=2)");
}

}  // namespace ordstat

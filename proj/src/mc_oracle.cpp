#include <mmse/mc_oracle.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace mmse {
namespace {

// Welford accumulator with Chan's pairwise merge.
struct Moments {
  std::int64_t n = 0;
  double mean = 0;
  double m2 = 0;

  void push(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  McEstimate estimate(std::int64_t n_inner, std::uint64_t seed) const {
    McEstimate e;
    e.value = mean;
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    e.std_error = std::sqrt(var / static_cast<double>(n));
    e.n_outer = n;
    e.n_inner = n_inner;
    e.seed = seed;
    return e;
  }
};

// Unnormalized log prior density; constants cancel under self-normalization.
class LogPrior {
 public:
  explicit LogPrior(const PriorSpec& spec) : spec_(spec) {
    if (const auto* g = std::get_if<GaussianPrior>(&spec.family())) {
      Eigen::LLT<MatrixXd> llt(g->covariance);
      chol_ = llt.matrixL();
    }
  }

  double operator()(const VectorXd& x) const {
    if (const auto* g = std::get_if<GaussianPrior>(&spec_.family())) {
      return -0.5 * chol_.triangularView<Eigen::Lower>().solve(x - g->mean).squaredNorm();
    }
    if (const auto* gg = std::get_if<GeneralizedGaussianPrior>(&spec_.family())) {
      return -std::pow(x.norm(), gg->p) / gg->p;
    }
    const auto& ball = std::get<UniformBallPrior>(spec_.family());
    return x.norm() <= ball.radius ? 0.0 : -std::numeric_limits<double>::infinity();
  }

 private:
  PriorSpec spec_;
  MatrixXd chol_;
};

// Gaussian posterior of the moment-matched prior for one channel:
// cov P = (S^{-1} + N^{-1})^{-1}, mean P (S^{-1} mu + N^{-1} y).
struct Proposal {
  MatrixXd noise_chol;
  MatrixXd post_chol;
  MatrixXd gain_y;  // P N^{-1}
  VectorXd offset;  // P S^{-1} mu
  double weight;
};

Proposal make_proposal(const PriorMoments& m, const Channel<double>& ch) {
  const auto k = m.covariance.rows();
  const MatrixXd id = MatrixXd::Identity(k, k);
  Eigen::LLT<MatrixXd> s(m.covariance);
  Eigen::LLT<MatrixXd> n(ch.noise_covariance);
  const MatrixXd s_inv = s.solve(id);
  const MatrixXd n_inv = n.solve(id);
  const MatrixXd post = detail::symmetrized(MatrixXd(Eigen::LLT<MatrixXd>(s_inv + n_inv).solve(id)));
  Proposal p;
  p.noise_chol = n.matrixL();
  p.post_chol = Eigen::LLT<MatrixXd>(post).matrixL();
  p.gain_y = post * n_inv;
  p.offset = post * s_inv * m.mean;
  p.weight = ch.weight;
  return p;
}

void require_counts(std::int64_t n_outer, std::int64_t n_inner) {
  if (n_outer < 100 || n_inner < 100) {
    throw Error(ErrorKind::InvalidArgument, "n_outer and n_inner must be >= 100");
  }
}

unsigned worker_count(const McOptions& opts, std::int64_t chunks) {
  unsigned t = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::int64_t>(t, chunks));
}

// Runs body(chunk) for every chunk index on a small thread pool.
template <typename Body>
void for_each_chunk(std::int64_t chunks, unsigned threads, Body body) {
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t c = next++; c < chunks; c = next++) body(c);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

struct ChunkResult {
  Moments total;
  std::vector<Moments> channels;
  std::int64_t degenerate = 0;
};

}  // namespace

McBreakdown mc_breakdown(const PriorSpec& spec, const ChannelEnsemble<double>& ensemble, std::int64_t n_outer,
                         std::int64_t n_inner, std::uint64_t seed, const McOptions& opts) {
  require_counts(n_outer, n_inner);
  if (opts.chunk_size < 1) throw Error(ErrorKind::InvalidArgument, "chunk size must be >= 1");
  const int k = spec.dimension();
  if (ensemble.count() == 0 || ensemble.dimension() != k) {
    throw Error(ErrorKind::DimensionMismatch, "ensemble dimension differs from the prior");
  }
  const PriorMoments moments = prior_moments(spec);
  std::vector<Proposal> proposals;
  for (const auto& ch : ensemble.channels) proposals.push_back(make_proposal(moments, ch));
  const LogPrior log_prior(spec);
  const std::size_t J = proposals.size();

  const std::int64_t chunks = (n_outer + opts.chunk_size - 1) / opts.chunk_size;
  std::vector<ChunkResult> results(static_cast<std::size_t>(chunks));

  for_each_chunk(chunks, worker_count(opts, chunks), [&](std::int64_t c) {
    ChunkResult& out = results[static_cast<std::size_t>(c)];
    out.channels.assign(J, Moments{});
    Philox4x32 rng(seed, static_cast<std::uint64_t>(c));
    PriorSampler sampler(spec);
    std::normal_distribution<double> normal;
    VectorXd x(k), xi(k), y(k), z(k), mean(k), acc(k);
    std::vector<double> log_w(static_cast<std::size_t>(n_inner));
    std::vector<VectorXd> draws(static_cast<std::size_t>(n_inner), VectorXd(k));

    const std::int64_t begin = c * opts.chunk_size;
    const std::int64_t end = std::min(n_outer, begin + opts.chunk_size);
    for (std::int64_t i = begin; i < end; ++i) {
      sampler.draw(rng, x);
      double weighted = 0;
      bool degenerate = false;
      for (std::size_t j = 0; j < J; ++j) {
        const Proposal& p = proposals[j];
        for (int d = 0; d < k; ++d) xi(d) = normal(rng);
        y = x + p.noise_chol * xi;
        mean = p.gain_y * y + p.offset;

        double max_lw = -std::numeric_limits<double>::infinity();
        for (std::int64_t s = 0; s < n_inner; ++s) {
          for (int d = 0; d < k; ++d) xi(d) = normal(rng);
          z = mean + p.post_chol * xi;
          const double lw = log_prior(z) -
                            0.5 * p.noise_chol.triangularView<Eigen::Lower>().solve(y - z).squaredNorm() +
                            0.5 * xi.squaredNorm();
          log_w[static_cast<std::size_t>(s)] = lw;
          draws[static_cast<std::size_t>(s)] = z;
          max_lw = std::max(max_lw, lw);
        }

        VectorXd estimate = mean;
        if (std::isfinite(max_lw)) {
          double sum_w = 0, sum_w2 = 0;
          acc.setZero();
          for (std::int64_t s = 0; s < n_inner; ++s) {
            const double w = std::exp(log_w[static_cast<std::size_t>(s)] - max_lw);
            sum_w += w;
            sum_w2 += w * w;
            acc += w * draws[static_cast<std::size_t>(s)];
          }
          estimate = acc / sum_w;
          const double ess = sum_w * sum_w / sum_w2;
          if (ess < opts.min_ess_fraction * static_cast<double>(n_inner)) degenerate = true;
        } else {
          degenerate = true;
        }
        const double err = (estimate - x).squaredNorm();
        out.channels[j].push(err);
        weighted += p.weight * err;
      }
      out.total.push(weighted);
      if (degenerate) ++out.degenerate;
    }
  });

  Moments total;
  std::vector<Moments> per(J);
  std::int64_t degenerate = 0;
  for (const auto& r : results) {
    total.merge(r.total);
    for (std::size_t j = 0; j < J; ++j) per[j].merge(r.channels[j]);
    degenerate += r.degenerate;
  }
  if (static_cast<double>(degenerate) > opts.max_degenerate_fraction * static_cast<double>(n_outer)) {
    throw Error(ErrorKind::DegenerateWeights, std::to_string(degenerate) + " of " + std::to_string(n_outer) +
                                                  " outer draws had effective sample size below " +
                                                  std::to_string(opts.min_ess_fraction) + " n_inner");
  }
  McBreakdown out;
  out.weighted_sum = total.estimate(n_inner, seed);
  for (const auto& m : per) out.per_channel.push_back(m.estimate(n_inner, seed));
  out.degenerate_draws = degenerate;
  return out;
}

McEstimate mc_weighted_sum(const PriorSpec& spec, const ChannelEnsemble<double>& ensemble, std::int64_t n_outer,
                           std::int64_t n_inner, std::uint64_t seed, const McOptions& opts) {
  return mc_breakdown(spec, ensemble, n_outer, n_inner, seed, opts).weighted_sum;
}

McEstimate mc_mmse(const PriorSpec& spec, const MatrixXd& sigma_n, std::int64_t n_outer, std::int64_t n_inner,
                   std::uint64_t seed, const McOptions& opts) {
  ChannelEnsemble<double> single;
  single.channels.push_back({sigma_n, 1.0});
  return mc_weighted_sum(spec, single, n_outer, n_inner, seed, opts);
}

McEstimate mc_kl(const PriorSpec& spec, const GaussianReference<double>& gaussian, std::int64_t n, std::uint64_t seed,
                 const McOptions& opts) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "mc_kl needs at least two samples");
  const int k = spec.dimension();
  if (gaussian.dimension() != k || gaussian.mean.size() != k) {
    throw Error(ErrorKind::DimensionMismatch, "reference Gaussian dimension differs from the prior");
  }
  const PriorSpec q = PriorSpec::gaussian(gaussian.mean, gaussian.covariance);
  const std::int64_t chunk = std::max<std::int64_t>(opts.chunk_size, 1) * 200;
  const std::int64_t chunks = (n + chunk - 1) / chunk;
  std::vector<Moments> results(static_cast<std::size_t>(chunks));

  for_each_chunk(chunks, worker_count(opts, chunks), [&](std::int64_t c) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(c));
    PriorSampler sampler(spec);
    VectorXd x(k);
    const std::int64_t end = std::min(n, (c + 1) * chunk);
    for (std::int64_t i = c * chunk; i < end; ++i) {
      sampler.draw(rng, x);
      results[static_cast<std::size_t>(c)].push(log_density(spec, x) - log_density(q, x));
    }
  });

  Moments total;
  for (const auto& r : results) total.merge(r);
  return total.estimate(0, seed);
}

}  // namespace mmse

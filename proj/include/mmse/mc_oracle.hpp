#ifndef MMSE_MC_ORACLE_HPP
#define MMSE_MC_ORACLE_HPP

// Monte Carlo estimates of true (non-linear) MMSEs and of KL divergences,
// used to check the analytic machinery. The conditional mean E[X | Y = y] is
// estimated by self-normalized importance sampling with the Gaussian
// posterior of the moment-matched prior as proposal.
//
// Outer draws are split into fixed-size chunks; chunk c uses Philox stream c
// and partial sums are merged in chunk order, so results do not depend on
// the number of worker threads.

#include <mmse/channel_model.hpp>
#include <mmse/prior_library.hpp>
#include <mmse/types.hpp>

#include <cstdint>
#include <vector>

namespace mmse {

struct McEstimate {
  double value{0};
  double std_error{0};
  std::int64_t n_outer{0};
  std::int64_t n_inner{0};
  std::uint64_t seed{0};
};

struct McOptions {
  std::int64_t chunk_size = 50;
  unsigned threads = 0;          // 0: hardware concurrency
  double min_ess_fraction = 0.01;
  double max_degenerate_fraction = 0.01;
};

/// Per-channel MMSE estimates alongside the weighted sum.
struct McBreakdown {
  McEstimate weighted_sum;
  std::vector<McEstimate> per_channel;
  std::int64_t degenerate_draws{0};
};

McBreakdown mc_breakdown(const PriorSpec& spec, const ChannelEnsemble<double>& ensemble, std::int64_t n_outer,
                         std::int64_t n_inner, std::uint64_t seed, const McOptions& opts = {});

McEstimate mc_weighted_sum(const PriorSpec& spec, const ChannelEnsemble<double>& ensemble, std::int64_t n_outer,
                           std::int64_t n_inner, std::uint64_t seed, const McOptions& opts = {});

McEstimate mc_mmse(const PriorSpec& spec, const MatrixXd& sigma_n, std::int64_t n_outer, std::int64_t n_inner,
                   std::uint64_t seed, const McOptions& opts = {});

/// (1/n) sum_i [log p(x_i) - log q(x_i)], x_i drawn from the prior.
McEstimate mc_kl(const PriorSpec& spec, const GaussianReference<double>& gaussian, std::int64_t n, std::uint64_t seed,
                 const McOptions& opts = {});

}  // namespace mmse

#endif  // MMSE_MC_ORACLE_HPP

#ifndef MMSE_SWEEP_HPP
#define MMSE_SWEEP_HPP

// Parameter sweeps over prior families: the generalized Gaussian exponent p
// and the uniform-ball radius R. Each grid point becomes one SweepRecord with
// the global bounds, local bounds and classical baselines.

#include <mmse/bound_solver.hpp>
#include <mmse/channel_model.hpp>
#include <mmse/types.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmse {

struct SweepRecord {
  double abscissa{0};
  double epsilon{0};
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> local_lower;
  std::optional<double> local_upper;
  std::optional<double> lmmse;
  std::optional<double> cramer_rao;
  std::vector<std::string> notes;  // per-row failures, reported on stderr
};

/// Reference covariance used for the ball prior. Analytic is the per-coordinate
/// second moment R^2/(K+2); Total scales it by K, i.e. E||X||^2 = R^2 K/(K+2)
/// per coordinate.
enum class BallVariance { Analytic, Total };

struct SweepOptions {
  SolverOptions<double> solver{};
  unsigned threads = 0;  // 0: hardware concurrency
  double ordering_tolerance = 1e-9;
  BallVariance ball_variance = BallVariance::Analytic;
};

/// "start:stop:count" (inclusive linspace) or a comma-separated list. Values
/// must be positive and strictly increasing.
std::vector<double> parse_grid(const std::string& text);

/// For each p: Sigma_0 = gen_gauss_covariance(p, K) I, epsilon = gen_gauss_epsilon(p, K).
/// Only the channels of `channels` are used.
std::vector<SweepRecord> sweep_p(const ChannelEnsemble<double>& channels, const std::vector<double>& grid,
                                 const SweepOptions& opts = {});

/// For each R: uniform-ball reference covariance and epsilon; no Cramer-Rao
/// or local columns.
std::vector<SweepRecord> sweep_ball(const ChannelEnsemble<double>& channels, const std::vector<double>& grid,
                                    const SweepOptions& opts = {});

/// Throws InvariantViolation if lower <= upper, local_lower <= lower,
/// upper <= local_upper or lower <= lmmse <= upper fails beyond tolerance.
void check_ordering(const SweepRecord& r, double tolerance);

enum class SweepKind { P, Ball };

void write_csv(std::ostream& out, SweepKind kind, const std::vector<SweepRecord>& rows);

}  // namespace mmse

#endif  // MMSE_SWEEP_HPP

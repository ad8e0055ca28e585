#ifndef MMSE_PRIOR_LIBRARY_HPP
#define MMSE_PRIOR_LIBRARY_HPP

// Analytic prior families: the Gaussian, the radially symmetric generalized
// Gaussian with density proportional to exp(-||x||^p / p), and the uniform
// distribution on a K-ball. Gamma-function arithmetic stays in log space,
// since Gamma(K/p) overflows for small p.

#include <mmse/channel_model.hpp>
#include <mmse/random.hpp>
#include <mmse/types.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>

namespace mmse {

struct GaussianPrior {
  VectorXd mean;
  MatrixXd covariance;
};

struct GeneralizedGaussianPrior {
  double p{2};
  int dimension{1};
};

struct UniformBallPrior {
  double radius{1};
  int dimension{1};
};

class PriorSpec {
 public:
  using Family = std::variant<GaussianPrior, GeneralizedGaussianPrior, UniformBallPrior>;

  static PriorSpec gaussian(VectorXd mean, MatrixXd covariance);
  static PriorSpec generalized_gaussian(double p, int dimension);
  static PriorSpec uniform_ball(double radius, int dimension);

  const Family& family() const { return family_; }
  int dimension() const;
  std::string describe() const;

 private:
  explicit PriorSpec(Family f) : family_(std::move(f)) {}
  Family family_;
};

struct PriorMoments {
  VectorXd mean;
  MatrixXd covariance;
  std::optional<double> fisher;                    // trace of the Fisher information matrix
  std::optional<double> epsilon_to_best_gaussian;  // KL to the moment-matched Gaussian, nats
};

namespace detail {

template <typename Scalar>
void require_gen_gauss_args(Scalar p, int k) {
  if (!(p > Scalar(0)) || !std::isfinite(static_cast<double>(p))) {
    throw Error(ErrorKind::InvalidArgument, "generalized Gaussian exponent must be > 0");
  }
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
}

}  // namespace detail

/// Per-coordinate variance of the generalized Gaussian:
/// p^{2/p} Gamma((K+2)/p) / (K Gamma(K/p)).
template <typename Scalar>
Scalar gen_gauss_covariance(Scalar p, int k) {
  detail::require_gen_gauss_args(p, k);
  using std::exp;
  using std::lgamma;
  using std::log;
  const Scalar kk = static_cast<Scalar>(k);
  return exp(Scalar(2) / p * log(p) + lgamma((kk + Scalar(2)) / p) - log(kk) - lgamma(kk / p));
}

/// Fisher information (trace) p^{(2p-2)/p} Gamma((K+2p-2)/p) / Gamma(K/p).
template <typename Scalar>
Scalar gen_gauss_fisher(Scalar p, int k) {
  detail::require_gen_gauss_args(p, k);
  using std::exp;
  using std::lgamma;
  using std::log;
  const Scalar kk = static_cast<Scalar>(k);
  const Scalar arg = (kk + Scalar(2) * p - Scalar(2)) / p;
  if (!(arg > Scalar(0))) {
    throw Error(ErrorKind::FisherUndefined, "generalized Gaussian has no finite Fisher information for this (p, K)");
  }
  return exp((Scalar(2) * p - Scalar(2)) / p * log(p) + lgamma(arg) - lgamma(kk / p));
}

/// KL divergence from the generalized Gaussian to its moment-matched Gaussian.
/// A raw value below -1e-12 is reported through `diagnostic`; the result is
/// clamped at zero.
template <typename Scalar>
Scalar gen_gauss_epsilon(Scalar p, int k, std::string* diagnostic = nullptr) {
  detail::require_gen_gauss_args(p, k);
  using std::lgamma;
  using std::log;
  const Scalar n = static_cast<Scalar>(k);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar log_ball_like = n / Scalar(2) * log(pi) + lgamma(n / p + Scalar(1)) - lgamma(n / Scalar(2) + Scalar(1));
  const Scalar raw = n / Scalar(2) - n / p - n / p * log(p) - log_ball_like +
                     n / Scalar(2) * log(Scalar(2) * pi * gen_gauss_covariance(p, k));
  if (raw < Scalar(-1e-12) && diagnostic != nullptr) {
    *diagnostic = "generalized Gaussian KL evaluated to " + std::to_string(static_cast<double>(raw)) + " < 0";
  }
  return raw < Scalar(0) ? Scalar(0) : raw;
}

/// log c_p, the log normalizer of exp(-||x||^p / p) on R^K.
template <typename Scalar>
Scalar gen_gauss_log_normalizer(Scalar p, int k) {
  detail::require_gen_gauss_args(p, k);
  using std::lgamma;
  using std::log;
  const Scalar kk = static_cast<Scalar>(k);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar log_sphere = log(Scalar(2)) + kk / Scalar(2) * log(pi) - lgamma(kk / Scalar(2));
  return -(log_sphere + (kk / p - Scalar(1)) * log(p) + lgamma(kk / p));
}

/// log V_K(R) = log(pi^{K/2} R^K / Gamma(K/2 + 1)).
template <typename Scalar>
Scalar ball_log_volume(Scalar radius, int k) {
  using std::lgamma;
  using std::log;
  const Scalar kk = static_cast<Scalar>(k);
  return kk / Scalar(2) * log(std::numbers::pi_v<Scalar>) + kk * log(radius) - lgamma(kk / Scalar(2) + Scalar(1));
}

PriorMoments uniform_ball_moments(double radius, int k);

/// KL from Uniform(B_K(R)) to N(0, R^2/(K+2) I). Independent of R.
template <typename Scalar>
Scalar uniform_ball_epsilon(Scalar radius, int k) {
  if (!(radius > Scalar(0))) throw Error(ErrorKind::InvalidArgument, "ball radius must be > 0");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  using std::log;
  const Scalar kk = static_cast<Scalar>(k);
  const Scalar variance = radius * radius / (kk + Scalar(2));
  return -ball_log_volume(radius, k) + kk / Scalar(2) * log(Scalar(2) * std::numbers::pi_v<Scalar> * variance) +
         kk / Scalar(2);
}

/// Moments, Fisher information and epsilon for any family.
PriorMoments prior_moments(const PriorSpec& spec);

/// Log density of the prior at x (-inf outside the support).
double log_density(const PriorSpec& spec, const Eigen::Ref<const VectorXd>& x);

/// Empirical mean and 1/n covariance of the rows of `samples`.
GaussianReference<double> moment_match(const Eigen::Ref<const MatrixXd>& samples);

/// Draws one sample at a time from a prior using a caller-owned generator.
class PriorSampler {
 public:
  explicit PriorSampler(const PriorSpec& spec);

  void draw(Philox4x32& rng, Eigen::Ref<VectorXd> out);

 private:
  void unit_direction(Philox4x32& rng, Eigen::Ref<VectorXd> out);

  PriorSpec spec_;
  MatrixXd chol_;  // Gaussian family only
  std::normal_distribution<double> normal_;
  std::gamma_distribution<double> gamma_;
};

/// n draws (rows) from the prior; deterministic in (spec, n, seed, stream).
MatrixXd sample_prior(const PriorSpec& spec, std::int64_t n, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace mmse

#endif  // MMSE_PRIOR_LIBRARY_HPP

#ifndef MMSE_GAUSSIAN_ANALYTICS_HPP
#define MMSE_GAUSSIAN_ANALYTICS_HPP

// Closed-form quantities for Gaussian priors observed through additive
// Gaussian noise. All solves go through Cholesky factorizations.

#include <mmse/channel_model.hpp>
#include <mmse/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <optional>
#include <vector>

namespace mmse {

/// Affine estimator  x_hat = (I - W) y + W mu0.
template <typename Scalar>
struct LinearEstimator {
  Matrix<Scalar> gain;
  Vector<Scalar> anchor;
};

template <typename Scalar>
struct MmseSummary {
  std::vector<Matrix<Scalar>> per_channel_matrix;
  std::vector<Scalar> per_channel_trace;
  Scalar weighted_sum{0};
  std::optional<Matrix<Scalar>> snr0;  // Sigma_0^{-1} Sigma_X when a reference was supplied
};

namespace detail {

template <typename Scalar>
void require_same_shape(const Matrix<Scalar>& a, const Matrix<Scalar>& b, const char* what) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, what);
  }
}

template <typename Scalar>
Eigen::LLT<Matrix<Scalar>> factor_sum(const Matrix<Scalar>& sigma_x, const Matrix<Scalar>& sigma_n) {
  require_same_shape(sigma_x, sigma_n, "prior and noise covariances differ in shape");
  Eigen::LLT<Matrix<Scalar>> llt(sigma_x + sigma_n);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularSum, "Sigma_X + Sigma_N is not positive definite");
  return llt;
}

}  // namespace detail

/// W = Sigma_N (Sigma_X + Sigma_N)^{-1}.
template <typename Scalar>
Matrix<Scalar> weight_matrix(const Matrix<Scalar>& sigma_x, const Matrix<Scalar>& sigma_n) {
  const auto llt = detail::factor_sum(sigma_x, sigma_n);
  // (Sigma_X + Sigma_N) is symmetric, so W^T = (Sigma_X + Sigma_N)^{-1} Sigma_N.
  return llt.solve(sigma_n).transpose();
}

/// Sigma_X (Sigma_X + Sigma_N)^{-1} Sigma_N, symmetrized.
template <typename Scalar>
Matrix<Scalar> mmse_matrix(const Matrix<Scalar>& sigma_x, const Matrix<Scalar>& sigma_n) {
  const auto llt = detail::factor_sum(sigma_x, sigma_n);
  Matrix<Scalar> m = sigma_x * llt.solve(sigma_n);
  return detail::symmetrized(m);
}

template <typename Scalar>
Scalar mmse_trace(const Matrix<Scalar>& sigma_x, const Matrix<Scalar>& sigma_n) {
  return mmse_matrix(sigma_x, sigma_n).trace();
}

/// Per-channel MMSE matrices and traces, and their lambda-weighted sum.
template <typename Scalar>
MmseSummary<Scalar> weighted_mmse_sum(const Matrix<Scalar>& sigma_x, const ChannelEnsemble<Scalar>& ensemble,
                                      const Matrix<Scalar>* reference_precision = nullptr) {
  MmseSummary<Scalar> out;
  out.per_channel_matrix.reserve(ensemble.count());
  out.per_channel_trace.reserve(ensemble.count());
  for (std::size_t j = 0; j < ensemble.count(); ++j) {
    const auto& ch = ensemble.channels[j];
    if (ch.noise_covariance.rows() != sigma_x.rows() || sigma_x.rows() != sigma_x.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "Sigma_X does not match the ensemble dimension", j);
    }
    Matrix<Scalar> m = mmse_matrix(sigma_x, ch.noise_covariance);
    const Scalar tr = m.trace();
    out.weighted_sum += ch.weight * tr;
    out.per_channel_trace.push_back(tr);
    out.per_channel_matrix.push_back(std::move(m));
  }
  if (reference_precision != nullptr) {
    detail::require_same_shape(*reference_precision, sigma_x, "reference does not match Sigma_X");
    out.snr0 = (*reference_precision) * sigma_x;
  }
  return out;
}

template <typename Scalar>
MmseSummary<Scalar> weighted_mmse_sum(const Matrix<Scalar>& sigma_x, const Problem<Scalar>& problem) {
  return weighted_mmse_sum(sigma_x, problem.ensemble(), &problem.reference_precision());
}

/// D_KL(N(mu, Sigma_X) || N(mu, Sigma_0)) in nats.
template <typename Scalar>
Scalar kl_same_mean_gaussians(const Matrix<Scalar>& sigma_x, const Matrix<Scalar>& sigma_0) {
  detail::require_same_shape(sigma_x, sigma_0, "covariances differ in shape");
  Eigen::LLT<Matrix<Scalar>> ref(sigma_0);
  if (ref.info() != Eigen::Success) throw Error(ErrorKind::SingularReference, "Sigma_0 is not positive definite");
  Eigen::LLT<Matrix<Scalar>> x(sigma_x);
  if (x.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "Sigma_X is not positive definite");

  // tr(Sigma_0^{-1} Sigma_X) via the whitened factor L0^{-1} Lx.
  const Matrix<Scalar> lx = x.matrixL();
  const Matrix<Scalar> white = ref.matrixL().solve(lx);
  const Scalar trace = white.squaredNorm();
  using std::log;
  const Scalar logdet = Scalar(2) * (lx.diagonal().array().log().sum() -
                                     Matrix<Scalar>(ref.matrixL()).diagonal().array().log().sum());
  const Scalar k = static_cast<Scalar>(sigma_x.rows());
  const Scalar kl = (trace - k - logdet) / Scalar(2);
  return kl < Scalar(0) ? Scalar(0) : kl;
}

template <typename Scalar>
Vector<Scalar> linear_estimate(const LinearEstimator<Scalar>& est, const Vector<Scalar>& y) {
  const auto k = est.gain.rows();
  if (est.gain.cols() != k || est.anchor.size() != k || y.size() != k) {
    throw Error(ErrorKind::DimensionMismatch, "estimator and observation dimensions disagree");
  }
  return y - est.gain * (y - est.anchor);
}

/// Exact MSE of x_hat = (I-W)y + W mu0 under X ~ N(mu0, Sigma), N ~ N(0, Sigma_N):
/// the error is -W(X - mu0) + (I - W)N.
template <typename Scalar>
Scalar linear_estimator_mse(const Matrix<Scalar>& gain, const Matrix<Scalar>& prior_cov, const Matrix<Scalar>& sigma_n) {
  detail::require_same_shape(gain, prior_cov, "gain and prior covariance differ in shape");
  detail::require_same_shape(prior_cov, sigma_n, "prior and noise covariances differ in shape");
  const auto k = gain.rows();
  const Matrix<Scalar> complement = Matrix<Scalar>::Identity(k, k) - gain;
  return (gain * prior_cov * gain.transpose()).trace() + (complement * sigma_n * complement.transpose()).trace();
}

}  // namespace mmse

#endif  // MMSE_GAUSSIAN_ANALYTICS_HPP

#ifndef MMSE_BASELINES_HPP
#define MMSE_BASELINES_HPP

// Local comparison bounds: the MSE of the best linear estimator (an upper
// bound on the MMSE) and the Bayesian Cramer-Rao lower bound.

#include <mmse/channel_model.hpp>
#include <mmse/gaussian_analytics.hpp>
#include <mmse/types.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <optional>

namespace mmse {

/// sum_j lambda_j tr(Sigma_X (Sigma_X + Sigma_Nj)^{-1} Sigma_Nj).
template <typename Scalar>
Scalar lmmse_upper(const Matrix<Scalar>& sigma_x, const ChannelEnsemble<Scalar>& ensemble) {
  return weighted_mmse_sum(sigma_x, ensemble).weighted_sum;
}

/// sum_j lambda_j K^2 / (tr(Sigma_Nj^{-1}) + J), J the trace of the prior's
/// Fisher information.
template <typename Scalar>
Scalar cramer_rao_lower(Scalar fisher, const ChannelEnsemble<Scalar>& ensemble) {
  using std::isfinite;
  if (!isfinite(static_cast<double>(fisher)) || !(fisher > Scalar(0))) {
    throw Error(ErrorKind::FisherUndefined, "Cramer-Rao bound needs a finite, positive Fisher information");
  }
  Scalar total = 0;
  for (std::size_t j = 0; j < ensemble.count(); ++j) {
    const auto& n = ensemble.channels[j].noise_covariance;
    if (n.rows() != n.cols() || n.rows() != ensemble.dimension()) {
      throw Error(ErrorKind::DimensionMismatch, "noise covariance is not K x K", j);
    }
    Eigen::LLT<Matrix<Scalar>> llt(n);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, detail::channel_label(j), j);
    const Scalar noise_info = llt.solve(Matrix<Scalar>::Identity(n.rows(), n.cols())).trace();
    const Scalar k = static_cast<Scalar>(n.rows());
    total += ensemble.channels[j].weight * k * k / (noise_info + fisher);
  }
  return total;
}

/// Absent Fisher information means the prior has none (e.g. the uniform ball).
template <typename Scalar>
Scalar cramer_rao_lower(const std::optional<Scalar>& fisher, const ChannelEnsemble<Scalar>& ensemble) {
  if (!fisher) throw Error(ErrorKind::FisherUndefined, "prior has no Fisher information");
  return cramer_rao_lower(*fisher, ensemble);
}

}  // namespace mmse

#endif  // MMSE_BASELINES_HPP

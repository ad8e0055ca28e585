#include <mmse/prior_library.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace mmse {

PriorSpec PriorSpec::gaussian(VectorXd mean, MatrixXd covariance) {
  const auto k = covariance.rows();
  if (k < 1 || mean.size() != k) throw Error(ErrorKind::DimensionMismatch, "Gaussian prior mean/covariance sizes differ");
  MatrixXd cov = detail::checked_spd(covariance, k, "Gaussian prior covariance", std::nullopt);
  return PriorSpec(GaussianPrior{std::move(mean), std::move(cov)});
}

PriorSpec PriorSpec::generalized_gaussian(double p, int dimension) {
  detail::require_gen_gauss_args(p, dimension);
  return PriorSpec(GeneralizedGaussianPrior{p, dimension});
}

PriorSpec PriorSpec::uniform_ball(double radius, int dimension) {
  if (!(radius > 0) || !std::isfinite(radius)) throw Error(ErrorKind::InvalidArgument, "ball radius must be > 0");
  if (dimension < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  return PriorSpec(UniformBallPrior{radius, dimension});
}

int PriorSpec::dimension() const {
  struct Visitor {
    int operator()(const GaussianPrior& g) const { return static_cast<int>(g.covariance.rows()); }
    int operator()(const GeneralizedGaussianPrior& g) const { return g.dimension; }
    int operator()(const UniformBallPrior& u) const { return u.dimension; }
  };
  return std::visit(Visitor{}, family_);
}

std::string PriorSpec::describe() const {
  std::ostringstream out;
  struct Visitor {
    std::ostringstream& out;
    void operator()(const GaussianPrior& g) const { out << "gaussian(K=" << g.covariance.rows() << ")"; }
    void operator()(const GeneralizedGaussianPrior& g) const { out << "gen-gauss(p=" << g.p << ", K=" << g.dimension << ")"; }
    void operator()(const UniformBallPrior& u) const { out << "uniform-ball(R=" << u.radius << ", K=" << u.dimension << ")"; }
  };
  std::visit(Visitor{out}, family_);
  return out.str();
}

PriorMoments uniform_ball_moments(double radius, int k) {
  if (!(radius > 0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be > 0");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  PriorMoments m;
  m.mean = VectorXd::Zero(k);
  m.covariance = radius * radius / (k + 2.0) * MatrixXd::Identity(k, k);
  m.fisher = std::nullopt;  // the density jumps at the boundary
  m.epsilon_to_best_gaussian = uniform_ball_epsilon(radius, k);
  return m;
}

PriorMoments prior_moments(const PriorSpec& spec) {
  struct Visitor {
    PriorMoments operator()(const GaussianPrior& g) const {
      PriorMoments m;
      m.mean = g.mean;
      m.covariance = g.covariance;
      Eigen::LLT<MatrixXd> llt(g.covariance);
      m.fisher = llt.solve(MatrixXd::Identity(g.covariance.rows(), g.covariance.cols())).trace();
      m.epsilon_to_best_gaussian = 0.0;
      return m;
    }
    PriorMoments operator()(const GeneralizedGaussianPrior& g) const {
      PriorMoments m;
      m.mean = VectorXd::Zero(g.dimension);
      m.covariance = gen_gauss_covariance(g.p, g.dimension) * MatrixXd::Identity(g.dimension, g.dimension);
      try {
        m.fisher = gen_gauss_fisher(g.p, g.dimension);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FisherUndefined) throw;
        m.fisher = std::nullopt;
      }
      m.epsilon_to_best_gaussian = gen_gauss_epsilon(g.p, g.dimension);
      return m;
    }
    PriorMoments operator()(const UniformBallPrior& u) const { return uniform_ball_moments(u.radius, u.dimension); }
  };
  return std::visit(Visitor{}, spec.family());
}

double log_density(const PriorSpec& spec, const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != spec.dimension()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from prior");
  struct Visitor {
    const Eigen::Ref<const VectorXd>& x;
    double operator()(const GaussianPrior& g) const {
      Eigen::LLT<MatrixXd> llt(g.covariance);
      const MatrixXd l = llt.matrixL();
      const VectorXd z = llt.matrixL().solve(x - g.mean);
      const double k = static_cast<double>(x.size());
      return -0.5 * z.squaredNorm() - l.diagonal().array().log().sum() - 0.5 * k * std::log(2.0 * std::numbers::pi);
    }
    double operator()(const GeneralizedGaussianPrior& g) const {
      return gen_gauss_log_normalizer(g.p, g.dimension) - std::pow(x.norm(), g.p) / g.p;
    }
    double operator()(const UniformBallPrior& u) const {
      if (x.norm() > u.radius) return -std::numeric_limits<double>::infinity();
      return -ball_log_volume(u.radius, u.dimension);
    }
  };
  return std::visit(Visitor{x}, spec.family());
}

GaussianReference<double> moment_match(const Eigen::Ref<const MatrixXd>& samples) {
  const auto n = samples.rows();
  const auto k = samples.cols();
  if (n < 1 || k < 1) throw Error(ErrorKind::DegenerateSample, "empty sample");
  GaussianReference<double> out;
  out.mean = samples.colwise().mean().transpose();
  const MatrixXd centered = samples.rowwise() - out.mean.transpose();
  out.covariance = detail::symmetrized(MatrixXd(centered.transpose() * centered / static_cast<double>(n)));
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.covariance, Eigen::EigenvaluesOnly);
  const double floor = 1e-12 * out.covariance.trace() / static_cast<double>(k);
  if (!(eig.eigenvalues().minCoeff() > floor) || !(out.covariance.trace() > 0)) {
    throw Error(ErrorKind::DegenerateSample, "sample covariance is singular");
  }
  return out;
}

PriorSampler::PriorSampler(const PriorSpec& spec) : spec_(spec) {
  if (const auto* g = std::get_if<GaussianPrior>(&spec_.family())) {
    Eigen::LLT<MatrixXd> llt(g->covariance);
    chol_ = llt.matrixL();
  }
  if (const auto* g = std::get_if<GeneralizedGaussianPrior>(&spec_.family())) {
    gamma_ = std::gamma_distribution<double>(g->dimension / g->p, 1.0);
  }
}

void PriorSampler::unit_direction(Philox4x32& rng, Eigen::Ref<VectorXd> out) {
  double norm = 0;
  do {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal_(rng);
    norm = out.norm();
  } while (!(norm > 0));
  out /= norm;
}

void PriorSampler::draw(Philox4x32& rng, Eigen::Ref<VectorXd> out) {
  if (const auto* g = std::get_if<GaussianPrior>(&spec_.family())) {
    VectorXd z(out.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal_(rng);
    out = g->mean + chol_ * z;
  } else if (const auto* gg = std::get_if<GeneralizedGaussianPrior>(&spec_.family())) {
    // ||X||^p / p ~ Gamma(K/p, 1), direction uniform on the sphere.
    unit_direction(rng, out);
    const double radius = std::pow(gg->p * gamma_(rng), 1.0 / gg->p);
    out *= radius;
  } else {
    const auto& ball = std::get<UniformBallPrior>(spec_.family());
    unit_direction(rng, out);
    out *= ball.radius * std::pow(rng.uniform_open(), 1.0 / ball.dimension);
  }
}

MatrixXd sample_prior(const PriorSpec& spec, std::int64_t n, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample count must be >= 1");
  const int k = spec.dimension();
  MatrixXd out(n, k);
  Philox4x32 rng(seed, stream);
  PriorSampler sampler(spec);
  VectorXd x(k);
  for (std::int64_t i = 0; i < n; ++i) {
    sampler.draw(rng, x);
    out.row(i) = x.transpose();
  }
  return out;
}

}  // namespace mmse

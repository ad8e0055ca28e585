#include <mmse/sensor_field.hpp>

#include <cmath>
#include <string>

namespace mmse {

void validate_field(const SensorField& f) {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (f.distances.empty()) bad("at least one sensor distance is required");
  for (std::size_t j = 0; j < f.distances.size(); ++j) {
    if (!(f.distances[j] >= 0) || !std::isfinite(f.distances[j])) bad("distance " + std::to_string(j) + " must be >= 0");
  }
  if (!(f.source_power > 0)) bad("rho0 must be > 0");
  if (!(f.decay > 0)) bad("gamma must be > 0");
  if (!(f.exponent >= 2 && f.exponent <= 3)) bad("m must lie in [2, 3]");
  if (!(f.base_noise > 0)) bad("sigma0 must be > 0");
}

double received_power(const SensorField& f, double distance) {
  return f.source_power / (1.0 + f.decay * std::pow(distance, f.exponent));
}

ChannelEnsemble<double> noise_from_distances(const SensorField& f, int dimension, const std::vector<double>& weights) {
  validate_field(f);
  if (dimension < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  if (!weights.empty() && weights.size() != f.distances.size()) {
    throw Error(ErrorKind::DimensionMismatch, "need one weight per sensor");
  }
  ChannelEnsemble<double> out;
  for (std::size_t j = 0; j < f.distances.size(); ++j) {
    const double lambda = weights.empty() ? 1.0 : weights[j];
    if (!(lambda > 0)) throw Error(ErrorKind::NonPositiveWeight, "sensor weight must be > 0", j);
    const double scale = f.base_noise * f.source_power / received_power(f, f.distances[j]);
    out.channels.push_back({scale * MatrixXd::Identity(dimension, dimension), lambda});
  }
  return out;
}

}  // namespace mmse

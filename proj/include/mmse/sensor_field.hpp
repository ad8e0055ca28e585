#ifndef MMSE_SENSOR_FIELD_HPP
#define MMSE_SENSOR_FIELD_HPP

// Isotropic power attenuation: sensor j at distance d_j receives signal power
// rho_0^2 / (1 + gamma d_j^m). With unit channel gain the received-power loss
// is moved into the noise, Sigma_Nj = sigma_0^2 (1 + gamma d_j^m) I_K.

#include <mmse/channel_model.hpp>
#include <mmse/types.hpp>

#include <vector>

namespace mmse {

struct SensorField {
  std::vector<double> distances;  // meters, >= 0
  double source_power{1};         // rho_0^2
  double decay{1};                // gamma
  double exponent{2};             // m in [2, 3]
  double base_noise{1};           // sigma_0^2
};

void validate_field(const SensorField& field);

/// rho_0^2 / (1 + gamma d^m).
double received_power(const SensorField& field, double distance);

ChannelEnsemble<double> noise_from_distances(const SensorField& field, int dimension,
                                             const std::vector<double>& weights = {});

}  // namespace mmse

#endif  // MMSE_SENSOR_FIELD_HPP

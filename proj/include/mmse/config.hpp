#ifndef MMSE_CONFIG_HPP
#define MMSE_CONFIG_HPP

// JSON problem files:
//
//   {
//     "dimension": 3,
//     "mu0": [0, 0, 0],
//     "sigma0": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
//     "channels": [{"lambda": 0.5, "sigma_n": [[...], ...]}, ...],
//     "epsilon": 0.1
//   }
//
// Matrices are row-major arrays of rows. Unknown keys are rejected.

#include <mmse/channel_model.hpp>
#include <mmse/types.hpp>

#include <string>

namespace mmse {

struct ProblemConfig {
  int dimension{0};
  VectorXd mu0;
  MatrixXd sigma0;
  ChannelEnsemble<double> ensemble;
  double epsilon{0};
};

/// Parses JSON text; throws Error(Config) on malformed or unknown fields.
ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::string& path);

std::string dump_config(const ProblemConfig& cfg);
void write_config(const ProblemConfig& cfg, const std::string& path);

/// Runs validate_problem on the parsed data.
Problem<double> to_problem(const ProblemConfig& cfg);

}  // namespace mmse

#endif  // MMSE_CONFIG_HPP

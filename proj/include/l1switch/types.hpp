#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace l1switch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invalid scenario, controller, or solver configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Integration run produced non-finite state or tripped a runtime guard.
/// Carries the offending time and the active mode (-1 if unknown).
struct SimulationError : std::runtime_error {
    SimulationError(const std::string& msg, double t, int active_mode)
        : std::runtime_error(msg + " at t=" + std::to_string(t) +
                             (active_mode >= 0 ? " (mode " + std::to_string(active_mode) + ")" : "")),
          time(t),
          mode(active_mode) {}
    double time;
    int mode;
};

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace l1switch

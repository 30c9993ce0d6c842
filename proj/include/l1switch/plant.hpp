#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Switched uncertain plant: mode family, uncertainty description, signals
// ============================================================================

/// One mode of the switched LTI family: dx/dt = A x + B(omega u + theta^T x + sigma).
struct LtiSubsystem {
    Matrix A;  // n x n
    Matrix B;  // n x m, full column rank
    Matrix C;  // m x n, regulated output map (unused by the control law)
    std::string label;

    [[nodiscard]] int n() const { return static_cast<int>(A.rows()); }
    [[nodiscard]] int m() const { return static_cast<int>(B.cols()); }

    void validate() const {
        const auto nn = A.rows();
        const auto mm = B.cols();
        if (A.cols() != nn) throw ConfigError("subsystem '" + label + "': A must be square");
        if (B.rows() != nn) throw ConfigError("subsystem '" + label + "': B row count mismatch");
        if (C.rows() != mm || C.cols() != nn)
            throw ConfigError("subsystem '" + label + "': C must be m x n");
        if (mm < 1 || nn < mm) throw ConfigError("subsystem '" + label + "': need n >= m >= 1");
        Eigen::FullPivLU<Matrix> lu(B);
        if (lu.rank() != mm)
            throw ConfigError("subsystem '" + label + "': B must have full column rank");
    }
};

/// Piecewise-constant switching signal. Right-continuous: mode(t) = modes[k]
/// for t in [times[k], times[k+1]).
struct SwitchingSignal {
    std::vector<double> times;  // strictly increasing, times[0] == 0
    std::vector<int> modes;     // same length as times
    double dwell = 0.0;         // declared dwell time, > 0

    void validate(std::size_t family_size) const {
        if (times.empty() || times.front() != 0.0)
            throw ConfigError("switching signal must start at t=0");
        if (times.size() != modes.size())
            throw ConfigError("switching signal: times/modes length mismatch");
        if (!(dwell > 0.0)) throw ConfigError("switching signal: dwell time must be positive");
        for (std::size_t k = 0; k + 1 < times.size(); ++k) {
            const double gap = times[k + 1] - times[k];
            if (!(gap > 0.0)) throw ConfigError("switching times must be strictly increasing");
            if (gap < dwell - 1e-12)
                throw ConfigError("switching gap " + std::to_string(gap) +
                                  " shorter than declared dwell " + std::to_string(dwell));
        }
        for (int mode : modes)
            if (mode < 0 || static_cast<std::size_t>(mode) >= family_size)
                throw ConfigError("switching signal references mode " + std::to_string(mode) +
                                  " outside the family");
    }

    [[nodiscard]] int mode_at(double t) const {
        std::size_t k = 0;
        while (k + 1 < times.size() && t >= times[k + 1]) ++k;
        return modes[k];
    }
};

/// Entrywise interval bounds on the uncertain parameters, plus derivative caps.
struct UncertaintyBounds {
    Matrix theta_lo, theta_hi;  // n x m
    Vector sigma_lo, sigma_hi;  // m
    Matrix omega_lo, omega_hi;  // m x m, must contain the identity
    double d_theta = 0.0;       // bound on ||d theta/dt||
    double d_sigma = 0.0;       // bound on ||d sigma/dt||

    void validate() const {
        auto check_box = [](const Matrix& lo, const Matrix& hi, const char* name) {
            if (lo.rows() != hi.rows() || lo.cols() != hi.cols())
                throw ConfigError(std::string(name) + " box: lo/hi shape mismatch");
            if (((hi - lo).array() < 0.0).any())
                throw ConfigError(std::string(name) + " box: lower bound exceeds upper bound");
        };
        check_box(theta_lo, theta_hi, "theta");
        check_box(sigma_lo, sigma_hi, "sigma");
        check_box(omega_lo, omega_hi, "omega");
        if ((theta_lo.array() > 0.0).any() || (theta_hi.array() < 0.0).any())
            throw ConfigError("theta box must contain 0");
        if ((sigma_lo.array() > 0.0).any() || (sigma_hi.array() < 0.0).any())
            throw ConfigError("sigma box must contain 0");
        const Matrix id = Matrix::Identity(omega_lo.rows(), omega_lo.cols());
        if (((omega_lo - id).array() > 0.0).any() || ((omega_hi - id).array() < 0.0).any())
            throw ConfigError("omega box must contain the identity");
        if (d_theta < 0.0 || d_sigma < 0.0) throw ConfigError("derivative bounds must be >= 0");
    }

    [[nodiscard]] int n() const { return static_cast<int>(theta_lo.rows()); }
    [[nodiscard]] int m() const { return static_cast<int>(theta_lo.cols()); }

    /// max ||theta||_2 over the box; the norm is convex so the max sits on a vertex.
    [[nodiscard]] double theta_norm_bound() const {
        const int cells = static_cast<int>(theta_lo.size());
        if (cells > 20) throw ConfigError("theta box too large for vertex enumeration");
        double best = 0.0;
        Matrix v(theta_lo.rows(), theta_lo.cols());
        for (long mask = 0; mask < (1L << cells); ++mask) {
            for (int i = 0; i < cells; ++i)
                v(i) = (mask >> i) & 1 ? theta_hi(i) : theta_lo(i);
            best = std::max(best, v.operatorNorm());
        }
        return best;
    }

    [[nodiscard]] double sigma_norm_bound() const {
        double s = 0.0;
        for (int i = 0; i < sigma_lo.size(); ++i)
            s += std::max(sigma_lo[i] * sigma_lo[i], sigma_hi[i] * sigma_hi[i]);
        return std::sqrt(s);
    }

    /// max |trace(omega - I)| over the box (linear in the diagonal entries).
    [[nodiscard]] double omega_trace_bound() const {
        double lo = 0.0, hi = 0.0;
        for (int i = 0; i < omega_lo.rows(); ++i) {
            lo += omega_lo(i, i) - 1.0;
            hi += omega_hi(i, i) - 1.0;
        }
        return std::max(std::abs(lo), std::abs(hi));
    }

    /// Circumscribed-ball radius of one column of the theta box.
    [[nodiscard]] double theta_column_radius(int col) const {
        double s = 0.0;
        for (int i = 0; i < theta_lo.rows(); ++i)
            s += std::max(theta_lo(i, col) * theta_lo(i, col),
                          theta_hi(i, col) * theta_hi(i, col));
        return std::sqrt(s);
    }

    [[nodiscard]] double omega_column_radius(int col) const {
        double s = 0.0;
        for (int i = 0; i < omega_lo.rows(); ++i)
            s += std::max(omega_lo(i, col) * omega_lo(i, col),
                          omega_hi(i, col) * omega_hi(i, col));
        return std::sqrt(s);
    }
};

/// Entrywise trajectory value(t) = offset + amplitude .* sin(frequency * t).
/// Constant trajectories have zero amplitude and frequency, which keeps the
/// derivative bound check analytic.
struct ParamTrajectory {
    Matrix offset;
    Matrix amplitude;
    Matrix frequency;  // rad/s

    static ParamTrajectory constant(const Matrix& value) {
        return {value, Matrix::Zero(value.rows(), value.cols()),
                Matrix::Zero(value.rows(), value.cols())};
    }

    [[nodiscard]] bool is_constant() const {
        return amplitude.isZero(0.0) || frequency.isZero(0.0);
    }

    void value_into(double t, Matrix& out) const {
        out = offset;
        if (!is_constant())
            out.array() += amplitude.array() * (frequency.array() * t).sin();
    }

    [[nodiscard]] Matrix value_at(double t) const {
        Matrix out;
        value_into(t, out);
        return out;
    }

    /// Frobenius norm of the entrywise derivative amplitudes; upper-bounds
    /// ||d/dt value(t)||_2 for all t.
    [[nodiscard]] double derivative_norm_bound() const {
        return (amplitude.array() * frequency.array()).matrix().norm();
    }
};

/// A concrete admissible realization of the uncertainty.
struct UncertaintyRealization {
    Matrix omega;           // constant m x m
    ParamTrajectory theta;  // n x m
    ParamTrajectory sigma;  // m x 1

    void validate_within(const UncertaintyBounds& bounds) const {
        auto check_range = [](const ParamTrajectory& tr, const Matrix& lo, const Matrix& hi,
                              const char* name) {
            const Matrix low = tr.offset - tr.amplitude.cwiseAbs();
            const Matrix high = tr.offset + tr.amplitude.cwiseAbs();
            if ((low.array() < lo.array() - 1e-12).any() ||
                (high.array() > hi.array() + 1e-12).any())
                throw ConfigError(std::string(name) + " realization leaves its bounding box");
        };
        check_range(theta, bounds.theta_lo, bounds.theta_hi, "theta");
        check_range(sigma, bounds.sigma_lo, bounds.sigma_hi, "sigma");
        if ((omega.array() < bounds.omega_lo.array() - 1e-12).any() ||
            (omega.array() > bounds.omega_hi.array() + 1e-12).any())
            throw ConfigError("omega realization leaves its bounding box");
        if (theta.derivative_norm_bound() > bounds.d_theta + 1e-12)
            throw ConfigError("theta realization violates the derivative bound d_theta");
        if (sigma.derivative_norm_bound() > bounds.d_sigma + 1e-12)
            throw ConfigError("sigma realization violates the derivative bound d_sigma");
    }
};

/// Piecewise-constant command r(t), right-continuous, zero before the first entry.
struct CommandSignal {
    std::vector<double> times;
    std::vector<Vector> values;

    void validate(int m) const {
        if (times.size() != values.size())
            throw ConfigError("command signal: times/values length mismatch");
        for (std::size_t k = 0; k + 1 < times.size(); ++k)
            if (!(times[k + 1] > times[k]))
                throw ConfigError("command times must be strictly increasing");
        for (const auto& v : values) {
            if (v.size() != m) throw ConfigError("command value dimension mismatch");
            if (!v.allFinite()) throw ConfigError("command values must be finite");
        }
    }

    [[nodiscard]] Vector value_at(double t, int m) const {
        Vector r = Vector::Zero(m);
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (times[k] <= t) r = values[k];
            else break;
        }
        return r;
    }
};

/// Feedforward gain k = -(C A^{-1} B)^{-1}, the inverse DC gain of one mode.
inline Matrix dc_feedforward_gain(const LtiSubsystem& sys) {
    Eigen::FullPivLU<Matrix> lu_a(sys.A);
    if (!lu_a.isInvertible())
        throw ConfigError("dc gain of mode '" + sys.label + "': A is singular");
    const Matrix dc = sys.C * lu_a.solve(sys.B);
    Eigen::FullPivLU<Matrix> lu_dc(dc);
    if (!lu_dc.isInvertible())
        throw ConfigError("dc gain of mode '" + sys.label + "': C A^-1 B is singular");
    return -lu_dc.inverse();
}

}  // namespace l1switch

#pragma once

#include <vector>

#include "l1switch/filter.hpp"
#include "l1switch/plant.hpp"
#include "l1switch/projection.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Adaptive controller: state predictor, projection-based adaptation laws, and
// the filtered control law u = -(D0(s)/s) mu.
// ============================================================================

struct ControllerConfig {
    FilterSpec filter;
    double gamma = 0.0;           // adaptation gain
    std::vector<Matrix> k_ff;     // feedforward gain per mode, m x m
    std::vector<Matrix> P;        // adaptation weight per mode, n x n SPD
    ProjectionSet projection;

    // Optional design-model override: the predictor, adaptation and reference
    // follow design_family[design_map[mode]] instead of the plant mode. Used
    // for fixed-reference experiments where the plant keeps switching.
    std::vector<LtiSubsystem> design_family;
    std::vector<int> design_map;

    [[nodiscard]] const LtiSubsystem& design_for(int mode,
                                                 const std::vector<LtiSubsystem>& family) const {
        if (design_family.empty()) return family[static_cast<std::size_t>(mode)];
        return design_family[static_cast<std::size_t>(design_index(mode))];
    }

    [[nodiscard]] int design_index(int mode) const {
        if (design_map.empty()) return mode;
        return design_map[static_cast<std::size_t>(mode)];
    }

    void validate(const std::vector<LtiSubsystem>& family, const UncertaintyBounds& bounds) const {
        filter.validate();
        if (!(gamma > 0.0)) throw ConfigError("controller: gamma must be positive");
        const std::size_t designs = design_family.empty() ? family.size() : design_family.size();
        if (k_ff.size() != designs || P.size() != designs)
            throw ConfigError("controller: need one k_ff and one P per design model");
        for (const auto& p : P) {
            Eigen::LLT<Matrix> llt(symmetrized(p));
            if (llt.info() != Eigen::Success)
                throw ConfigError("controller: adaptation weight P must be positive definite");
        }
        if (!design_map.empty()) {
            if (design_map.size() != family.size())
                throw ConfigError("controller: design_map must cover every plant mode");
            for (int d : design_map)
                if (d < 0 || static_cast<std::size_t>(d) >= designs)
                    throw ConfigError("controller: design_map index out of range");
        }
        projection.validate_covers(bounds);
    }
};

/// Everything the closed loop evolves besides the plant state.
struct ControllerState {
    Vector x_hat;      // n
    Matrix theta_hat;  // n x m
    Vector sigma_hat;  // m
    Matrix omega_hat;  // m x m
    Vector x_f;        // n_f, filter state
    Vector x_I;        // m, integrator state; u = -x_I

    static ControllerState initial(const Vector& x0, int m, const FilterSpec& filter) {
        ControllerState s;
        const auto n = x0.size();
        s.x_hat = x0;
        s.theta_hat = Matrix::Zero(n, m);
        s.sigma_hat = Vector::Zero(m);
        s.omega_hat = Matrix::Identity(m, m);
        s.x_f = Vector::Zero(filter.n_f());
        s.x_I = Vector::Zero(m);
        return s;
    }

    [[nodiscard]] Vector control() const { return -x_I; }
};

/// Predictor dynamics: A x_hat + B(omega_hat u + theta_hat^T x + sigma_hat).
/// The regressor uses the measured plant state x, not x_hat.
inline Vector predictor_derivative(const ControllerState& state, const Vector& x,
                                   const Vector& u, const LtiSubsystem& design) {
    return design.A * state.x_hat +
           design.B * (state.omega_hat * u + state.theta_hat.transpose() * x + state.sigma_hat);
}

struct AdaptationDerivatives {
    Matrix d_theta;  // n x m
    Vector d_sigma;  // m
    Matrix d_omega;  // m x m
};

/// Projection-based adaptation: gamma * Proj applied columnwise to the raw
/// gradient directions -x xt^T P B, -B^T P xt, -B^T P xt u^T.
inline AdaptationDerivatives adaptation_derivatives(const Vector& x_tilde, const Vector& x,
                                                    const Vector& u, const ControllerState& state,
                                                    const LtiSubsystem& design, const Matrix& P,
                                                    double gamma, const ProjectionSet& proj) {
    const int n = design.n();
    const int m = design.m();
    AdaptationDerivatives d;
    d.d_theta.resize(n, m);
    d.d_omega.resize(m, m);

    const Vector btp_xt = design.B.transpose() * (P * x_tilde);  // m
    for (int j = 0; j < m; ++j) {
        const Vector raw = -x * btp_xt[j];
        d.d_theta.col(j) = gamma * projection(state.theta_hat.col(j), raw, proj.theta[j]);
    }
    d.d_sigma = gamma * projection(state.sigma_hat, -btp_xt, proj.sigma);
    for (int j = 0; j < m; ++j) {
        const Vector raw = -btp_xt * u[j];
        d.d_omega.col(j) = gamma * projection(state.omega_hat.col(j), raw, proj.omega[j]);
    }
    return d;
}

struct FilterDerivatives {
    Vector d_x_f;  // n_f
    Vector d_x_I;  // m
};

/// Filter cascade driving the control law: dx_f = A_f x_f + B_f mu,
/// dx_I = C_f x_f + D_f mu, with u read as -x_I before mu is formed.
inline FilterDerivatives control_filter_derivative(const ControllerState& state, const Vector& mu,
                                                   const FilterSpec& filter) {
    FilterDerivatives d;
    d.d_x_f = filter.A * state.x_f + filter.B * mu;
    d.d_x_I = filter.C * state.x_f + filter.D * mu;
    return d;
}

/// DC gain of the closed filter loop C(s) = omega (sI + D0(s) omega)^{-1} D0(s)
/// at s = 0; a correctly configured loop returns the identity.
inline Matrix closed_loop_filter_dc_check(const FilterSpec& filter, const Matrix& omega) {
    const Matrix d0 = filter.dc_gain();
    const Matrix d0w = d0 * omega;
    Eigen::FullPivLU<Matrix> lu(d0w);
    if (!lu.isInvertible())
        throw ConfigError("filter dc check: D0(0) * omega is singular");
    return omega * lu.solve(d0);
}

}  // namespace l1switch

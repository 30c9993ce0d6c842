#pragma once

#include <vector>

#include "l1switch/augmented.hpp"
#include "l1switch/controller.hpp"
#include "l1switch/rk4.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Non-adaptive reference loop with perfect parameter knowledge. Two
// realizations of the same dynamics exist on purpose: the augmented matrix
// form below and the direct filter-cascade form, cross-checked in tests to
// pin the sign convention of the augmented blocks.
// ============================================================================

struct ReferenceTrace {
    Matrix x_ref;      // n x T
    Matrix u_ref;      // m x T
    Matrix aug_state;  // (n+n_f+m) x T, full augmented state
};

namespace detail {

inline int grid_mode_index(const std::vector<double>& times, double t, int current) {
    int k = current;
    while (k + 1 < static_cast<int>(times.size()) && t == times[static_cast<std::size_t>(k) + 1])
        ++k;  // event times sit on the grid bitwise
    while (k + 1 < static_cast<int>(times.size()) && t > times[static_cast<std::size_t>(k) + 1])
        ++k;
    return k;
}

}  // namespace detail

/// Integrates the augmented dynamics d/dt xbar = Abar(theta(t)) xbar
/// + Bbar sigma(t) + Ebar r(t) over the grid. Filter and integrator states
/// carry over continuously across switches; only the mode matrices change.
inline ReferenceTrace simulate_reference(const std::vector<LtiSubsystem>& family,
                                         const FilterSpec& filter,
                                         const UncertaintyRealization& realization,
                                         const SwitchingSignal& switching,
                                         const std::vector<Matrix>& k_ff,
                                         const CommandSignal& command, const Vector& x0,
                                         const std::vector<double>& grid,
                                         double divergence_ceiling = 1e9) {
    const int n = family.front().n();
    const int m = family.front().m();
    const int n_f = filter.n_f();
    const int N = n + n_f + m;
    const auto T = static_cast<Eigen::Index>(grid.size());
    const bool theta_constant = realization.theta.is_constant();

    // one augmented system per mode, rebuilt in place when theta varies
    std::vector<AugmentedSystem> augs;
    augs.reserve(family.size());
    Matrix theta0 = realization.theta.value_at(0.0);
    for (std::size_t k = 0; k < family.size(); ++k)
        augs.push_back(build_augmented(family[k], filter, theta0, realization.omega, k_ff[k]));

    ReferenceTrace trace;
    trace.x_ref.resize(n, T);
    trace.u_ref.resize(m, T);
    trace.aug_state.resize(N, T);

    Vector y = Vector::Zero(N);
    y.head(n) = x0;

    Rk4Workspace ws;
    ws.resize(N);
    Matrix theta_t(n, m), sigma_t(m, 1);
    Vector r = Vector::Zero(m);

    int sw = 0;
    int cmd_idx = -1;
    for (Eigen::Index k = 0; k < T; ++k) {
        const double t = grid[static_cast<std::size_t>(k)];
        sw = detail::grid_mode_index(switching.times, t, sw);
        while (cmd_idx + 1 < static_cast<int>(command.times.size()) &&
               command.times[static_cast<std::size_t>(cmd_idx) + 1] <= t)
            ++cmd_idx;
        if (cmd_idx >= 0) r = command.values[static_cast<std::size_t>(cmd_idx)];
        const int mode = switching.modes[static_cast<std::size_t>(sw)];
        AugmentedSystem& aug = augs[static_cast<std::size_t>(mode)];

        trace.aug_state.col(k) = y;
        trace.x_ref.col(k) = y.head(n);
        trace.u_ref.col(k).noalias() = aug.C * y;

        if (k + 1 == T) break;
        const double h = grid[static_cast<std::size_t>(k) + 1] - t;
        auto deriv = [&](double tt, const Vector& yy, Vector& dy) {
            if (!theta_constant) {
                realization.theta.value_into(tt, theta_t);
                update_augmented_theta(aug, family[static_cast<std::size_t>(mode)], filter,
                                       theta_t);
            }
            realization.sigma.value_into(tt, sigma_t);
            dy.noalias() = aug.A * yy;
            dy.noalias() += aug.B * sigma_t.col(0);
            dy.noalias() += aug.E * r;
        };
        try {
            rk4_step_inplace(deriv, t, y, h, ws);
        } catch (const SimulationError& err) {
            throw SimulationError("reference system: non-finite derivative", err.time, mode);
        }
        if (!y.allFinite() || y.norm() > divergence_ceiling)
            throw SimulationError(
                "reference system diverged (likely certificate violation)", t + h, mode);
    }
    return trace;
}

/// Direct realization of the filter-cascade form: plant driven by the exact
/// uncertainty, control from mu_ref = omega u_ref + theta^T x_ref + sigma - k r
/// through D0(s)/s. Used as the independent oracle for the augmented form.
inline ReferenceTrace simulate_reference_filter_form(const std::vector<LtiSubsystem>& family,
                                                     const FilterSpec& filter,
                                                     const UncertaintyRealization& realization,
                                                     const SwitchingSignal& switching,
                                                     const std::vector<Matrix>& k_ff,
                                                     const CommandSignal& command, const Vector& x0,
                                                     const std::vector<double>& grid,
                                                     double divergence_ceiling = 1e9) {
    const int n = family.front().n();
    const int m = family.front().m();
    const int n_f = filter.n_f();
    const int N = n + n_f + m;
    const auto T = static_cast<Eigen::Index>(grid.size());

    ReferenceTrace trace;
    trace.x_ref.resize(n, T);
    trace.u_ref.resize(m, T);
    trace.aug_state.resize(N, T);

    Vector y = Vector::Zero(N);
    y.head(n) = x0;

    Rk4Workspace ws;
    ws.resize(N);
    Matrix theta_t(n, m), sigma_t(m, 1);
    Vector r = Vector::Zero(m);

    int sw = 0;
    int cmd_idx = -1;
    for (Eigen::Index k = 0; k < T; ++k) {
        const double t = grid[static_cast<std::size_t>(k)];
        sw = detail::grid_mode_index(switching.times, t, sw);
        while (cmd_idx + 1 < static_cast<int>(command.times.size()) &&
               command.times[static_cast<std::size_t>(cmd_idx) + 1] <= t)
            ++cmd_idx;
        if (cmd_idx >= 0) r = command.values[static_cast<std::size_t>(cmd_idx)];
        const int mode = switching.modes[static_cast<std::size_t>(sw)];
        const LtiSubsystem& sys = family[static_cast<std::size_t>(mode)];
        const Matrix& k_mode = k_ff[static_cast<std::size_t>(mode)];

        trace.aug_state.col(k) = y;
        trace.x_ref.col(k) = y.head(n);
        trace.u_ref.col(k) = -y.tail(m);

        if (k + 1 == T) break;
        const double h = grid[static_cast<std::size_t>(k) + 1] - t;
        auto deriv = [&](double tt, const Vector& yy, Vector& dy) {
            realization.theta.value_into(tt, theta_t);
            realization.sigma.value_into(tt, sigma_t);
            const auto x = yy.head(n);
            const auto x_f = yy.segment(n, n_f);
            const auto x_I = yy.tail(m);
            const Vector u = -x_I;
            const Vector mu = realization.omega * u + theta_t.transpose() * x + sigma_t.col(0) -
                              k_mode * r;
            dy.head(n) = sys.A * x + sys.B * (realization.omega * u + theta_t.transpose() * x +
                                              sigma_t.col(0));
            dy.segment(n, n_f) = filter.A * x_f + filter.B * mu;
            dy.tail(m) = filter.C * x_f + filter.D * mu;
        };
        try {
            rk4_step_inplace(deriv, t, y, h, ws);
        } catch (const SimulationError& err) {
            throw SimulationError("reference system: non-finite derivative", err.time, mode);
        }
        if (!y.allFinite() || y.norm() > divergence_ceiling)
            throw SimulationError(
                "reference system diverged (likely certificate violation)", t + h, mode);
    }
    return trace;
}

}  // namespace l1switch

#pragma once

#include <cmath>
#include <vector>

#include "l1switch/controller.hpp"
#include "l1switch/reference.hpp"
#include "l1switch/rk4.hpp"
#include "l1switch/time_grid.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Coupled integration of plant, predictor, adaptation laws and control filter
// on a shared grid, with the non-adaptive reference loop recorded alongside.
// ============================================================================

struct SimulationResult {
    std::vector<double> time;
    std::vector<int> mode;
    Matrix x;          // n x T
    Matrix x_hat;      // n x T
    Matrix x_ref;      // n x T
    Matrix x_tilde;    // n x T, x_hat - x
    Matrix u;          // m x T
    Matrix u_ref;      // m x T
    Matrix theta_hat;  // (n*m) x T, column-major flattening
    Matrix sigma_hat;  // m x T
    Matrix omega_hat;  // (m*m) x T, column-major flattening

    [[nodiscard]] double max_prediction_error() const {
        double best = 0.0;
        for (Eigen::Index k = 0; k < x_tilde.cols(); ++k)
            best = std::max(best, x_tilde.col(k).norm());
        return best;
    }

    [[nodiscard]] double max_tracking_error() const {
        double best = 0.0;
        for (Eigen::Index k = 0; k < x.cols(); ++k)
            best = std::max(best, (x_ref.col(k) - x.col(k)).norm());
        return best;
    }

    [[nodiscard]] double max_input_error() const {
        double best = 0.0;
        for (Eigen::Index k = 0; k < u.cols(); ++k)
            best = std::max(best, (u_ref.col(k) - u.col(k)).norm());
        return best;
    }
};

namespace detail {

struct ClosedLoopWorkspace {
    Matrix theta_t, sigma_t;
    Vector r, u, eta, eta_hat, x_tilde, p_xt, btp_xt, mu, raw;
    void resize(int n, int m) {
        theta_t.resize(n, m);
        sigma_t.resize(m, 1);
        r = Vector::Zero(m);
        u.resize(m);
        eta.resize(m);
        eta_hat.resize(m);
        x_tilde.resize(n);
        p_xt.resize(n);
        btp_xt.resize(m);
        mu.resize(m);
        raw.resize(std::max(n, m));
    }
};

}  // namespace detail

/// Integrates the adaptive closed loop (plant + predictor + adaptation +
/// control filter) and the reference loop on the grid built from (t_final, dt)
/// with all switching/command times pinned to grid points. The predictor is
/// reset to the plant state at every switching time; estimates are not reset.
inline SimulationResult simulate_closed_loop(const std::vector<LtiSubsystem>& family,
                                             const UncertaintyBounds& bounds,
                                             const UncertaintyRealization& realization,
                                             const SwitchingSignal& switching,
                                             const ControllerConfig& controller,
                                             const CommandSignal& command, const Vector& x0,
                                             double t_final, double dt,
                                             double divergence_ceiling = 1e9) {
    for (const auto& sys : family) sys.validate();
    bounds.validate();
    realization.validate_within(bounds);
    switching.validate(family.size());
    controller.validate(family, bounds);
    const int n = family.front().n();
    const int m = family.front().m();
    command.validate(m);
    if (x0.size() != n) throw ConfigError("simulate: x0 dimension mismatch");

    const FilterSpec& filter = controller.filter;
    const int n_f = filter.n_f();
    const std::vector<double> grid = make_time_grid(t_final, dt, switching, command);
    const auto T = static_cast<Eigen::Index>(grid.size());

    // stacked state: [x, x_hat, vec(theta_hat), sigma_hat, vec(omega_hat), x_f, x_I]
    const int off_xh = n;
    const int off_th = 2 * n;
    const int off_sg = off_th + n * m;
    const int off_om = off_sg + m;
    const int off_xf = off_om + m * m;
    const int off_xi = off_xf + n_f;
    const int L = off_xi + m;

    Vector y = Vector::Zero(L);
    y.head(n) = x0;
    y.segment(off_xh, n) = x0;                                     // x_hat(0) = x(0)
    Eigen::Map<Matrix>(y.data() + off_om, m, m).setIdentity();     // omega_hat(0) = I

    SimulationResult res;
    res.time = grid;
    res.mode.resize(static_cast<std::size_t>(T));
    res.x.resize(n, T);
    res.x_hat.resize(n, T);
    res.x_tilde.resize(n, T);
    res.u.resize(m, T);
    res.theta_hat.resize(n * m, T);
    res.sigma_hat.resize(m, T);
    res.omega_hat.resize(m * m, T);

    Rk4Workspace rk;
    rk.resize(L);
    detail::ClosedLoopWorkspace ws;
    ws.resize(n, m);

    // estimate-escape guard levels (projection keeps norms at the radius;
    // the sqrt(1+eps) band plus 5% headroom flags integrator blow-through)
    std::vector<double> theta_cap(static_cast<std::size_t>(m)), omega_cap(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        theta_cap[static_cast<std::size_t>(j)] =
            controller.projection.theta[static_cast<std::size_t>(j)].radius *
            std::sqrt(1.0 + controller.projection.theta[static_cast<std::size_t>(j)].epsilon) * 1.05;
        omega_cap[static_cast<std::size_t>(j)] =
            controller.projection.omega[static_cast<std::size_t>(j)].radius *
            std::sqrt(1.0 + controller.projection.omega[static_cast<std::size_t>(j)].epsilon) * 1.05;
    }
    const double sigma_cap = controller.projection.sigma.radius *
                             std::sqrt(1.0 + controller.projection.sigma.epsilon) * 1.05;

    int sw = 0;
    int cmd_idx = -1;
    for (Eigen::Index k = 0; k < T; ++k) {
        const double t = grid[static_cast<std::size_t>(k)];
        const int prev_sw = sw;
        sw = detail::grid_mode_index(switching.times, t, sw);
        if (sw != prev_sw && k > 0) {
            const int old_mode = switching.modes[static_cast<std::size_t>(prev_sw)];
            const int new_mode = switching.modes[static_cast<std::size_t>(sw)];
            const bool design_changed =
                controller.design_index(new_mode) != controller.design_index(old_mode);
            if (controller.design_family.empty() || design_changed)
                y.segment(off_xh, n) = y.head(n);  // predictor reset x_hat(t_i) = x(t_i)
        }
        while (cmd_idx + 1 < static_cast<int>(command.times.size()) &&
               command.times[static_cast<std::size_t>(cmd_idx) + 1] <= t)
            ++cmd_idx;
        if (cmd_idx >= 0) ws.r = command.values[static_cast<std::size_t>(cmd_idx)];
        const int mode = switching.modes[static_cast<std::size_t>(sw)];
        const LtiSubsystem& plant = family[static_cast<std::size_t>(mode)];
        const LtiSubsystem& design = controller.design_for(mode, family);
        const Matrix& P = controller.P[static_cast<std::size_t>(controller.design_index(mode))];
        const Matrix& k_gain =
            controller.k_ff[static_cast<std::size_t>(controller.design_index(mode))];

        res.mode[static_cast<std::size_t>(k)] = mode;
        res.x.col(k) = y.head(n);
        res.x_hat.col(k) = y.segment(off_xh, n);
        res.x_tilde.col(k) = y.segment(off_xh, n) - y.head(n);
        res.u.col(k) = -y.segment(off_xi, m);
        res.theta_hat.col(k) = y.segment(off_th, n * m);
        res.sigma_hat.col(k) = y.segment(off_sg, m);
        res.omega_hat.col(k) = y.segment(off_om, m * m);

        // estimate-escape guard (projection soundness)
        {
            Eigen::Map<const Matrix> th(y.data() + off_th, n, m);
            Eigen::Map<const Matrix> om(y.data() + off_om, m, m);
            for (int j = 0; j < m; ++j) {
                if (th.col(j).norm() > theta_cap[static_cast<std::size_t>(j)])
                    throw SimulationError("theta estimate escaped the projection set", t, mode);
                if (om.col(j).norm() > omega_cap[static_cast<std::size_t>(j)])
                    throw SimulationError("omega estimate escaped the projection set", t, mode);
            }
            if (y.segment(off_sg, m).norm() > sigma_cap)
                throw SimulationError("sigma estimate escaped the projection set", t, mode);
        }

        if (k + 1 == T) break;
        const double h = grid[static_cast<std::size_t>(k) + 1] - t;

        auto deriv = [&](double tt, const Vector& yy, Vector& dy) {
            const auto x = yy.head(n);
            const auto xh = yy.segment(off_xh, n);
            Eigen::Map<const Matrix> th(yy.data() + off_th, n, m);
            const auto sg = yy.segment(off_sg, m);
            Eigen::Map<const Matrix> om(yy.data() + off_om, m, m);
            const auto xf = yy.segment(off_xf, n_f);
            const auto xi = yy.segment(off_xi, m);

            realization.theta.value_into(tt, ws.theta_t);
            realization.sigma.value_into(tt, ws.sigma_t);
            ws.u = -xi;

            // plant with the true parameters
            ws.eta.noalias() = realization.omega * ws.u;
            ws.eta.noalias() += ws.theta_t.transpose() * x;
            ws.eta += ws.sigma_t.col(0);
            dy.head(n).noalias() = plant.A * x;
            dy.head(n).noalias() += plant.B * ws.eta;

            // predictor driven by the estimates and the measured state
            ws.eta_hat.noalias() = om * ws.u;
            ws.eta_hat.noalias() += th.transpose() * x;
            ws.eta_hat += sg;
            dy.segment(off_xh, n).noalias() = design.A * xh;
            dy.segment(off_xh, n).noalias() += design.B * ws.eta_hat;

            // adaptation laws
            ws.x_tilde = xh - x;
            ws.p_xt.noalias() = P * ws.x_tilde;
            ws.btp_xt.noalias() = design.B.transpose() * ws.p_xt;
            Eigen::Map<Matrix> d_th(dy.data() + off_th, n, m);
            for (int j = 0; j < m; ++j) {
                ws.raw.head(n).noalias() = -x * ws.btp_xt[j];
                projection_into(th.col(j), ws.raw.head(n),
                                controller.projection.theta[static_cast<std::size_t>(j)],
                                d_th.col(j));
            }
            d_th *= controller.gamma;
            ws.raw.head(m) = -ws.btp_xt;
            projection_into(sg, ws.raw.head(m), controller.projection.sigma,
                            dy.segment(off_sg, m));
            dy.segment(off_sg, m) *= controller.gamma;
            Eigen::Map<Matrix> d_om(dy.data() + off_om, m, m);
            for (int j = 0; j < m; ++j) {
                ws.raw.head(m) = -ws.btp_xt * ws.u[j];
                projection_into(om.col(j), ws.raw.head(m),
                                controller.projection.omega[static_cast<std::size_t>(j)],
                                d_om.col(j));
            }
            d_om *= controller.gamma;

            // control filter cascade; u = -x_I was read before mu is formed
            ws.mu = ws.eta_hat;
            ws.mu.noalias() -= k_gain * ws.r;
            dy.segment(off_xf, n_f).noalias() = filter.A * xf;
            dy.segment(off_xf, n_f).noalias() += filter.B * ws.mu;
            dy.segment(off_xi, m).noalias() = filter.C * xf;
            dy.segment(off_xi, m).noalias() += filter.D * ws.mu;
        };

        try {
            rk4_step_inplace(deriv, t, y, h, rk);
        } catch (const SimulationError& err) {
            throw SimulationError("closed loop: non-finite derivative", err.time, mode);
        }
        if (!y.allFinite() || y.head(2 * n).norm() > divergence_ceiling)
            throw SimulationError("closed loop produced non-finite or diverging state",
                                  grid[static_cast<std::size_t>(k) + 1], mode);
    }

    // reference loop on the same grid, with the design models substituted
    std::vector<LtiSubsystem> ref_family;
    std::vector<Matrix> ref_gains;
    ref_family.reserve(family.size());
    ref_gains.reserve(family.size());
    for (std::size_t mode = 0; mode < family.size(); ++mode) {
        ref_family.push_back(controller.design_for(static_cast<int>(mode), family));
        ref_gains.push_back(
            controller.k_ff[static_cast<std::size_t>(controller.design_index(static_cast<int>(mode)))]);
    }
    ReferenceTrace ref = simulate_reference(ref_family, filter, realization, switching, ref_gains,
                                            command, x0, grid, divergence_ceiling);
    res.x_ref = std::move(ref.x_ref);
    res.u_ref = std::move(ref.u_ref);
    return res;
}

}  // namespace l1switch

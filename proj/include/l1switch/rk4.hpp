#pragma once

#include <utility>

#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Classical fixed-step RK4. Adaptive stepping is deliberately avoided: the
// closed loop has derivative discontinuities at switching and command times,
// which the grid pins to exact step boundaries instead.
// ============================================================================

struct Rk4Workspace {
    Vector k1, k2, k3, k4, stage;
    void resize(Eigen::Index n) {
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        stage.resize(n);
    }
};

/// In-place RK4 update with caller-owned scratch. `deriv(t, y, dy)` must fill
/// dy; stage derivatives are checked for finiteness.
template <typename Deriv>
inline void rk4_step_inplace(Deriv&& deriv, double t, Vector& y, double h, Rk4Workspace& ws) {
    deriv(t, y, ws.k1);
    ws.stage = y + (0.5 * h) * ws.k1;
    deriv(t + 0.5 * h, ws.stage, ws.k2);
    ws.stage = y + (0.5 * h) * ws.k2;
    deriv(t + 0.5 * h, ws.stage, ws.k3);
    ws.stage = y + h * ws.k3;
    deriv(t + h, ws.stage, ws.k4);
    if (!ws.k1.allFinite() || !ws.k2.allFinite() || !ws.k3.allFinite() || !ws.k4.allFinite())
        throw SimulationError("non-finite derivative", t, -1);
    y += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

/// Convenience form: `deriv(t, y)` returns the derivative vector.
template <typename Deriv>
[[nodiscard]] inline Vector rk4_step(Deriv&& deriv, double t, const Vector& y, double h) {
    Rk4Workspace ws;
    ws.resize(y.size());
    Vector out = y;
    auto wrapped = [&](double tt, const Vector& yy, Vector& dy) { dy = deriv(tt, yy); };
    rk4_step_inplace(wrapped, t, out, h, ws);
    return out;
}

}  // namespace l1switch

#pragma once

#include <cmath>

#include "l1switch/plant.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Projection operator for the adaptation laws. Keeps an estimate vector inside
// the ball of the configured radius: the radial update component fades to zero
// between f = 0 and f = 1 and vanishes on the outer boundary.
// ============================================================================

struct ProjectionConfig {
    double radius = 1.0;   // norm bound on the projected vector
    double epsilon = 0.1;  // tolerance parameter shaping the fade band

    void validate() const {
        if (!(radius > 0.0)) throw ConfigError("projection: radius must be positive");
        if (!(epsilon > 0.0)) throw ConfigError("projection: epsilon must be positive");
    }
};

/// f(theta) = ((eps+1) theta^T theta - r^2) / (eps r^2); negative strictly
/// inside the fade band, 1 on the radius ball.
inline double projection_gauge(const Vector& theta, const ProjectionConfig& cfg) {
    return ((cfg.epsilon + 1.0) * theta.squaredNorm() - cfg.radius * cfg.radius) /
           (cfg.epsilon * cfg.radius * cfg.radius);
}

inline Vector projection(const Vector& theta, const Vector& y, const ProjectionConfig& cfg) {
    const double f = projection_gauge(theta, cfg);
    const double ty = theta.dot(y);
    if (f >= 0.0 && ty > 0.0) {
        // theta = 0 implies f < 0, so the division is safe on this branch
        return y - theta * (f * ty / theta.squaredNorm());
    }
    return y;
}

/// Same update written into a preallocated output column (hot path).
template <typename ThetaExpr, typename UpdateExpr, typename Out>
inline void projection_into(const ThetaExpr& theta, const UpdateExpr& y,
                            const ProjectionConfig& cfg, Out&& out) {
    const double f = ((cfg.epsilon + 1.0) * theta.squaredNorm() - cfg.radius * cfg.radius) /
                     (cfg.epsilon * cfg.radius * cfg.radius);
    const double ty = theta.dot(y);
    if (f >= 0.0 && ty > 0.0)
        out = y - theta * (f * ty / theta.squaredNorm());
    else
        out = y;
}

/// Per-column projection configs circumscribing the uncertainty boxes, with
/// the configured inflation keeping the true parameters strictly interior.
struct ProjectionSet {
    std::vector<ProjectionConfig> theta;  // one per column of theta_hat
    ProjectionConfig sigma;
    std::vector<ProjectionConfig> omega;  // one per column of omega_hat

    void validate_covers(const UncertaintyBounds& bounds) const {
        if (static_cast<int>(theta.size()) != bounds.m() ||
            static_cast<int>(omega.size()) != bounds.omega_lo.cols())
            throw ConfigError("projection set: column count mismatch");
        for (int j = 0; j < bounds.m(); ++j) {
            theta[j].validate();
            if (theta[j].radius < bounds.theta_column_radius(j) - 1e-12)
                throw ConfigError("theta projection radius does not cover the theta box");
        }
        sigma.validate();
        if (sigma.radius < bounds.sigma_norm_bound() - 1e-12)
            throw ConfigError("sigma projection radius does not cover the sigma box");
        for (int j = 0; j < static_cast<int>(omega.size()); ++j) {
            omega[j].validate();
            if (omega[j].radius < bounds.omega_column_radius(j) - 1e-12)
                throw ConfigError("omega projection radius does not cover the omega box");
        }
    }
};

inline ProjectionSet make_projection_set(const UncertaintyBounds& bounds,
                                         double inflation = 1.1, double epsilon = 0.1) {
    ProjectionSet set;
    for (int j = 0; j < bounds.m(); ++j)
        set.theta.push_back({inflation * std::max(bounds.theta_column_radius(j), 1e-12), epsilon});
    set.sigma = {inflation * std::max(bounds.sigma_norm_bound(), 1e-12), epsilon};
    for (int j = 0; j < bounds.omega_lo.cols(); ++j)
        set.omega.push_back({inflation * std::max(bounds.omega_column_radius(j), 1e-12), epsilon});
    return set;
}

}  // namespace l1switch

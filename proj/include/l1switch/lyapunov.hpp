#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "l1switch/plant.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Lyapunov feasibility certificates for the switched reference system over
// the uncertainty polytope vertices. The engine runs alternating projections
// on the homogeneous decay form A^T P + P A <= -lambda P in diagonally
// balanced coordinates, then rescales into the normalized certificate form.
// Every returned certificate is re-verified by direct eigenvalue checks.
// ============================================================================

struct PolytopeVertex {
    Matrix theta;
    Matrix omega;
};

/// All corner combinations of the theta and omega boxes; degenerate (point)
/// intervals contribute a single value.
inline std::vector<PolytopeVertex> enumerate_vertices(const UncertaintyBounds& bounds) {
    bounds.validate();
    auto box_corners = [](const Matrix& lo, const Matrix& hi) {
        std::vector<int> free_cells;
        for (int i = 0; i < lo.size(); ++i)
            if (hi(i) > lo(i)) free_cells.push_back(i);
        if (free_cells.size() > 20)
            throw ConfigError("uncertainty box has too many non-degenerate intervals");
        std::vector<Matrix> corners;
        corners.reserve(1UL << free_cells.size());
        for (long mask = 0; mask < (1L << free_cells.size()); ++mask) {
            Matrix v = lo;
            for (std::size_t b = 0; b < free_cells.size(); ++b)
                if ((mask >> b) & 1) v(free_cells[b]) = hi(free_cells[b]);
            corners.push_back(std::move(v));
        }
        return corners;
    };
    const auto thetas = box_corners(bounds.theta_lo, bounds.theta_hi);
    const auto omegas = box_corners(bounds.omega_lo, bounds.omega_hi);
    std::vector<PolytopeVertex> vertices;
    vertices.reserve(thetas.size() * omegas.size());
    for (const auto& th : thetas)
        for (const auto& om : omegas) vertices.push_back({th, om});
    return vertices;
}

struct StabilityCertificate {
    enum class Kind { common, dwell_time };
    Kind kind = Kind::common;
    std::vector<Matrix> P_bars;  // single shared matrix (common) or one per mode
    double lambda = 0.0;         // certified decay rate
    double mu = 1.0;             // worst Lyapunov jump factor across modes
    double tau_d = 0.0;          // dwell time ln(mu) / ((1 - a_star) lambda)
    double a_star = 0.5;
    double min_margin = 0.0;     // worst re-verified inequality margin
    int n = 0, n_f = 0, m = 0;   // partition of the augmented state

    [[nodiscard]] const Matrix& P_bar(int mode) const {
        return P_bars.size() == 1 ? P_bars.front()
                                  : P_bars[static_cast<std::size_t>(mode)];
    }
    [[nodiscard]] Matrix adaptation_weight(int mode) const {
        return P_bar(mode).topLeftCorner(n, n);
    }
};

struct CertificationOutcome {
    bool certified = false;
    StabilityCertificate certificate;
    std::string message;
    double best_margin = -std::numeric_limits<double>::infinity();
};

/// tau_d >= ln(mu) / ((1 - a_star) lambda); exactly zero at mu = 1.
inline double dwell_time_lower_bound(double mu, double lambda, double a_star) {
    if (!(mu >= 1.0)) throw ConfigError("dwell time: mu must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("dwell time: lambda must be positive");
    if (!(a_star > 0.0 && a_star < 1.0)) throw ConfigError("dwell time: a_star must be in (0,1)");
    return std::log(mu) / ((1.0 - a_star) * lambda);
}

namespace lmi {

inline double max_real_eigenvalue(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

/// Prefactored solver for A^T X + X A = S (Kronecker vectorization; the
/// certificate matrices never exceed a handful of states).
class LyapunovSolver {
  public:
    explicit LyapunovSolver(const Matrix& a) : size_(static_cast<int>(a.rows())) {
        const int N = size_;
        Matrix k = Matrix::Zero(N * N, N * N);
        // vec(A^T X) = (I kron A^T) vec(X);  vec(X A) = (A^T kron I) vec(X)
        for (int col = 0; col < N; ++col)
            for (int row = 0; row < N; ++row)
                for (int i = 0; i < N; ++i) {
                    k(col * N + row, col * N + i) += a(i, row);
                    k(col * N + row, i * N + row) += a(i, col);
                }
        lu_.compute(k);
    }

    [[nodiscard]] Matrix solve(const Matrix& rhs) const {
        const int N = size_;
        Eigen::Map<const Vector> vec_rhs(rhs.data(), N * N);
        Vector sol = lu_.solve(vec_rhs);
        return Eigen::Map<const Matrix>(sol.data(), N, N);
    }

  private:
    int size_;
    Eigen::PartialPivLU<Matrix> lu_;
};

/// Diagonal similarity scaling from Osborne-style balancing of the entrywise
/// max-magnitude envelope; tames the huge filter-row entries of the augmented
/// matrices before projecting.
inline Vector balance_scaling(const std::vector<Matrix>& mats) {
    const int N = static_cast<int>(mats.front().rows());
    Matrix env = Matrix::Zero(N, N);
    for (const auto& a : mats) env = env.cwiseMax(a.cwiseAbs());
    Vector d = Vector::Ones(N);
    for (int pass = 0; pass < 30; ++pass) {
        for (int i = 0; i < N; ++i) {
            double row = 1e-300;
            double col = 1e-300;
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                row = std::max(row, env(i, j) * d[j] / d[i]);
                col = std::max(col, env(j, i) * d[i] / d[j]);
            }
            d[i] *= std::sqrt(std::sqrt(row / col));
        }
    }
    return d;
}

struct DecayOptions {
    int max_sweeps = 5000;
    double rel_tol = 1e-8;
};

struct DecaySearch {
    bool found = false;
    Matrix P;
    double worst = std::numeric_limits<double>::infinity();  // best relative residual seen
    int sweeps = 0;
};

/// Alternating projections for the homogeneous form A_k^T P + P A_k <= -lambda P:
/// cycle over constraints, clip the positive part of each residual's spectrum,
/// and shift P by the Lyapunov correction that lands the residual on the
/// clipped target; re-symmetrize and floor the spectrum to stay positive
/// definite. Homogeneity removes any identity-target scale mismatch.
inline DecaySearch decay_feasible(const std::vector<Matrix>& mats, double lambda,
                                  const DecayOptions& opt = {},
                                  const Matrix* warm_start = nullptr) {
    const int N = static_cast<int>(mats.front().rows());
    DecaySearch result;

    std::vector<Matrix> shifted;
    shifted.reserve(mats.size());
    for (const auto& a : mats) {
        Matrix s = a + 0.5 * lambda * Matrix::Identity(N, N);
        if (max_real_eigenvalue(s) >= -1e-14) return result;  // decay rate unattainable
        shifted.push_back(std::move(s));
    }
    std::vector<LyapunovSolver> solvers;
    solvers.reserve(shifted.size());
    for (const auto& s : shifted) solvers.emplace_back(s);

    Matrix p;
    if (warm_start != nullptr && warm_start->rows() == N) {
        p = *warm_start;
    } else {
        Matrix avg = Matrix::Zero(N, N);
        for (const auto& s : shifted) avg += s;
        avg /= static_cast<double>(shifted.size());
        LyapunovSolver avg_solver(avg);
        p = symmetrized(avg_solver.solve(-Matrix::Identity(N, N)));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig;
    auto spectral_floor = [&](Matrix& mat, double floor_ratio) {
        eig.compute(symmetrized(mat));
        const double floor_val = std::max(eig.eigenvalues().maxCoeff() * floor_ratio, 1e-300);
        mat = eig.eigenvectors() *
              eig.eigenvalues().cwiseMax(floor_val).asDiagonal() *
              eig.eigenvectors().transpose();
    };
    spectral_floor(p, 1e-8);

    Matrix residual(N, N), target(N, N), correction(N, N);
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double worst = -std::numeric_limits<double>::infinity();
        const double scale = p.trace() / N;
        for (std::size_t k = 0; k < shifted.size(); ++k) {
            residual.noalias() = shifted[k].transpose() * p;
            residual.noalias() += p * shifted[k];
            residual = symmetrized(residual);
            eig.compute(residual);
            const double top = eig.eigenvalues().maxCoeff();
            worst = std::max(worst, top / scale);
            if (top > -opt.rel_tol * scale) {
                target = eig.eigenvectors() *
                         eig.eigenvalues().cwiseMin(-opt.rel_tol * scale).asDiagonal() *
                         eig.eigenvectors().transpose();
                correction = solvers[k].solve(target - residual);
                p += symmetrized(correction);
                spectral_floor(p, 1e-10);
            }
        }
        result.worst = std::min(result.worst, worst);
        result.sweeps = sweep + 1;
        if (worst <= -opt.rel_tol) {
            result.found = true;
            result.P = p;
            return result;
        }
        p /= p.trace() / N;
    }
    return result;
}

/// Largest decay rate any common certificate could certify.
inline double common_rate_ceiling(const std::vector<Matrix>& mats) {
    double ceiling = std::numeric_limits<double>::infinity();
    for (const auto& a : mats) ceiling = std::min(ceiling, 2.0 * std::abs(max_real_eigenvalue(a)));
    return ceiling;
}

}  // namespace lmi

/// Worst-case margin of A_k^T P + P A_k <= -I over the constraint list.
inline double common_inequality_margin(const Matrix& p, const std::vector<Matrix>& mats) {
    double margin = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> eig;
    const Matrix id = Matrix::Identity(p.rows(), p.cols());
    for (const auto& a : mats) {
        eig.compute(symmetrized(a.transpose() * p + p * a) + id, Eigen::EigenvaluesOnly);
        margin = std::min(margin, -eig.eigenvalues().maxCoeff());
    }
    return margin;
}

/// Worst-case margin of A_k^T P + P A_k <= -lambda P.
inline double decay_inequality_margin(const Matrix& p, const std::vector<Matrix>& mats,
                                      double lambda) {
    double margin = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> eig;
    for (const auto& a : mats) {
        eig.compute(symmetrized(a.transpose() * p + p * a) + lambda * p, Eigen::EigenvaluesOnly);
        margin = std::min(margin, -eig.eigenvalues().maxCoeff());
    }
    return margin;
}

inline double min_eigenvalue(const Matrix& p) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(p), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

/// Largest lambda with A_k^T P + P A_k <= -lambda P for a fixed P: the
/// smallest generalized eigenvalue of (-L_k, P) over all constraints.
inline double certified_decay_rate(const Matrix& p, const std::vector<Matrix>& mats) {
    double rate = std::numeric_limits<double>::infinity();
    for (const auto& a : mats) {
        const Matrix neg_l = -symmetrized(a.transpose() * p + p * a);
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(neg_l, p, Eigen::EigenvaluesOnly);
        rate = std::min(rate, ges.eigenvalues().minCoeff());
    }
    return rate;
}

struct CommonLyapunovOptions {
    int bisection_iterations = 30;
    lmi::DecayOptions decay;        // per-trial sweep budget
    double a_star = 0.5;            // recorded in the certificate for downstream bounds
    double margin_target = 1e-3;    // rescaled post-normalization margin vs -I
};

/// Seeks a single P with P >= I and A_k^T P + P A_k <= -I over every supplied
/// matrix (all modes x all vertices). A report, not a proof, when nothing is
/// found within the budget.
inline CertificationOutcome find_common_lyapunov(const std::vector<Matrix>& a_bars,
                                                 int n, int n_f, int m,
                                                 const CommonLyapunovOptions& opt = {}) {
    CertificationOutcome outcome;
    if (a_bars.empty()) {
        outcome.message = "no constraint matrices supplied";
        return outcome;
    }
    for (std::size_t k = 0; k < a_bars.size(); ++k) {
        const double re = lmi::max_real_eigenvalue(a_bars[k]);
        if (re >= 0.0) {
            outcome.message = "vertex matrix " + std::to_string(k) +
                              " is not Hurwitz (max Re eig = " + std::to_string(re) +
                              "); no certificate can exist";
            return outcome;
        }
    }

    const int N = static_cast<int>(a_bars.front().rows());
    const Vector d = lmi::balance_scaling(a_bars);
    std::vector<Matrix> balanced;
    balanced.reserve(a_bars.size());
    for (const auto& a : a_bars)
        balanced.push_back(d.cwiseInverse().asDiagonal() * a * d.asDiagonal());

    double lo = 0.0;
    double hi = lmi::common_rate_ceiling(balanced);
    Matrix best_p;
    bool found = false;
    Matrix warm;
    double best_residual = std::numeric_limits<double>::infinity();
    lmi::DecayOptions trial = opt.decay;
    trial.max_sweeps = std::max(50, opt.decay.max_sweeps / opt.bisection_iterations);
    for (int it = 0; it < opt.bisection_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto search =
            lmi::decay_feasible(balanced, mid, trial, warm.size() > 0 ? &warm : nullptr);
        best_residual = std::min(best_residual, search.worst);
        if (search.found) {
            lo = mid;
            best_p = search.P;
            warm = search.P;
            found = true;
        } else {
            hi = mid;
        }
    }
    if (!found) {
        outcome.message =
            "no common certificate found within the iteration budget "
            "(best relative residual " +
            std::to_string(best_residual) + "); feasibility is undetermined";
        outcome.best_margin = -best_residual;
        return outcome;
    }

    Matrix p = symmetrized(d.asDiagonal().inverse() * best_p * d.asDiagonal().inverse());
    p *= (1.0 + 1e-9) / min_eigenvalue(p);  // P >= I strictly after rounding
    const double raw_margin = common_inequality_margin(p, a_bars) + 1.0;  // -lambda_max(L)
    if (raw_margin <= 0.0) {
        outcome.message = "candidate lost strict feasibility after rescaling";
        return outcome;
    }
    // scaling up preserves P >= I and scales the decay residual linearly
    if (raw_margin < 1.0 + opt.margin_target) p *= (1.0 + opt.margin_target) / raw_margin;

    StabilityCertificate cert;
    cert.kind = StabilityCertificate::Kind::common;
    cert.P_bars = {p};
    cert.mu = 1.0;
    cert.tau_d = 0.0;
    cert.a_star = opt.a_star;
    cert.n = n;
    cert.n_f = n_f;
    cert.m = m;
    cert.lambda = certified_decay_rate(p, a_bars);
    cert.min_margin = common_inequality_margin(p, a_bars);
    outcome.best_margin = cert.min_margin;
    const double identity_slack = min_eigenvalue(p) - 1.0;
    if (cert.min_margin < 1e-6 || identity_slack < -1e-9 || !(cert.lambda > 0.0)) {
        outcome.message = "certificate failed independent re-verification (margin " +
                          std::to_string(cert.min_margin) + ", P-I slack " +
                          std::to_string(identity_slack) + ")";
        return outcome;
    }
    outcome.certified = true;
    outcome.certificate = std::move(cert);
    return outcome;
}

struct DwellTimeOptions {
    lmi::DecayOptions decay;
    double a_star = 0.5;
};

/// Per-mode Lyapunov family at a fixed candidate decay rate; mu is the
/// smallest scalar with P_i <= mu P_j over all mode pairs.
inline CertificationOutcome find_dwell_time_family(
    const std::vector<std::vector<Matrix>>& a_bars_by_mode, double lambda, int n, int n_f, int m,
    const DwellTimeOptions& opt = {}) {
    CertificationOutcome outcome;
    if (!(lambda > 0.0)) throw ConfigError("dwell-time certification: lambda must be positive");

    std::vector<Matrix> family;
    for (std::size_t mode = 0; mode < a_bars_by_mode.size(); ++mode) {
        const auto& mats = a_bars_by_mode[mode];
        const Vector d = lmi::balance_scaling(mats);
        std::vector<Matrix> balanced;
        balanced.reserve(mats.size());
        for (const auto& a : mats)
            balanced.push_back(d.cwiseInverse().asDiagonal() * a * d.asDiagonal());
        const auto search = lmi::decay_feasible(balanced, lambda, opt.decay);
        if (!search.found) {
            outcome.message = "mode " + std::to_string(mode) + " infeasible at lambda " +
                              std::to_string(lambda) + " (best relative residual " +
                              std::to_string(search.worst) + ")";
            outcome.best_margin = -search.worst;
            return outcome;
        }
        Matrix p = symmetrized(d.asDiagonal().inverse() * search.P * d.asDiagonal().inverse());
        p *= (1.0 + 1e-9) / min_eigenvalue(p);
        double margin = decay_inequality_margin(p, mats, lambda);
        if (margin <= 0.0) {
            outcome.message = "mode " + std::to_string(mode) + " lost feasibility after rescaling";
            return outcome;
        }
        if (margin < 1e-6) {
            p *= 2e-6 / margin;  // the decay inequality is homogeneous in P
            margin = decay_inequality_margin(p, mats, lambda);
        }
        family.push_back(std::move(p));
    }

    double mu = 1.0;
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = 0; j < family.size(); ++j) {
            if (i == j) continue;
            Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(family[i], family[j],
                                                                 Eigen::EigenvaluesOnly);
            mu = std::max(mu, ges.eigenvalues().maxCoeff());
        }
    if (mu <= 1.0 + 1e-12) mu = 1.0;  // identical families: exact zero dwell time

    StabilityCertificate cert;
    cert.kind = StabilityCertificate::Kind::dwell_time;
    cert.P_bars = family;
    cert.lambda = lambda;
    cert.mu = mu;
    cert.a_star = opt.a_star;
    cert.tau_d = dwell_time_lower_bound(mu, lambda, opt.a_star);
    cert.n = n;
    cert.n_f = n_f;
    cert.m = m;
    double min_margin = std::numeric_limits<double>::infinity();
    double identity_slack = std::numeric_limits<double>::infinity();
    for (std::size_t mode = 0; mode < family.size(); ++mode) {
        min_margin = std::min(min_margin,
                              decay_inequality_margin(family[mode], a_bars_by_mode[mode], lambda));
        identity_slack = std::min(identity_slack, min_eigenvalue(family[mode]) - 1.0);
    }
    cert.min_margin = min_margin;
    outcome.best_margin = min_margin;
    if (min_margin < 1e-6 || identity_slack < -1e-9) {
        outcome.message = "dwell-time family failed independent re-verification";
        return outcome;
    }
    outcome.certified = true;
    outcome.certificate = std::move(cert);
    return outcome;
}

/// Bisection on lambda in (0, 2|most negative vertex eigenvalue real part|],
/// returning the family at the largest feasible rate.
inline CertificationOutcome certify_dwell_time(const std::vector<std::vector<Matrix>>& a_bars_by_mode,
                                               int n, int n_f, int m,
                                               const DwellTimeOptions& opt = {},
                                               int bisection_iterations = 30) {
    double most_negative = 0.0;
    for (const auto& mats : a_bars_by_mode)
        for (const auto& a : mats) {
            Eigen::EigenSolver<Matrix> es(a, false);
            most_negative = std::min(most_negative, es.eigenvalues().real().minCoeff());
        }
    double lo = 0.0;
    double hi = 2.0 * std::abs(most_negative);
    if (!(hi > 0.0)) {
        CertificationOutcome outcome;
        outcome.message = "vertex matrices have no decaying eigenvalue";
        return outcome;
    }
    DwellTimeOptions trial = opt;
    trial.decay.max_sweeps = std::max(50, opt.decay.max_sweeps / bisection_iterations);
    CertificationOutcome best;
    for (int it = 0; it < bisection_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto attempt = find_dwell_time_family(a_bars_by_mode, mid, n, n_f, m, trial);
        if (attempt.certified) {
            lo = mid;
            best = std::move(attempt);
        } else {
            hi = mid;
            if (!best.certified) best.message = attempt.message;
        }
    }
    if (!best.certified && best.message.empty())
        best.message = "no dwell-time certificate found at any tested rate";
    return best;
}

/// Convex-combination spot check: the certified inequality holds at interior
/// points because A_bar is affine in (theta, omega).
inline bool vertex_sufficiency_holds(const StabilityCertificate& cert, const Matrix& a_interior,
                                     int mode) {
    const Matrix& p = cert.P_bar(mode);
    if (cert.kind == StabilityCertificate::Kind::common)
        return common_inequality_margin(p, {a_interior}) > -1e-9;
    return decay_inequality_margin(p, {a_interior}, cert.lambda) > -1e-9;
}

}  // namespace l1switch

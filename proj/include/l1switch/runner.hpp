#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "l1switch/certificate_io.hpp"
#include "l1switch/csv.hpp"
#include "l1switch/perf_bounds.hpp"
#include "l1switch/scenario.hpp"
#include "l1switch/simulate.hpp"

namespace l1switch {

// ============================================================================
// Pipeline drivers behind the CLI subcommands. Exit codes: 0 success or
// certified, 1 usage/parse error, 2 certificate not found, 3 bound violation
// or numerical abort.
// ============================================================================

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int not_certified = 2;
inline constexpr int violation = 3;
}  // namespace exit_code

/// Loads the configured certificate file or solves for one; loaded
/// certificates are re-verified against the scenario before use.
inline CertificationOutcome obtain_certificate(const ScenarioConfig& cfg) {
    if (!cfg.certificate_file.empty()) {
        CertificationOutcome outcome;
        StabilityCertificate cert = load_certificate(cfg.certificate_file);
        const auto mats = vertex_augmented_matrices(cfg.family, cfg.filter, cfg.bounds);
        double margin = std::numeric_limits<double>::infinity();
        if (cert.kind == StabilityCertificate::Kind::common) {
            margin = std::min(common_inequality_margin(cert.P_bar(0), mats.flat),
                              min_eigenvalue(cert.P_bar(0)) - 1.0 + 1e-12);
        } else {
            for (std::size_t mode = 0; mode < mats.by_mode.size(); ++mode) {
                margin = std::min(margin, decay_inequality_margin(cert.P_bar(static_cast<int>(mode)),
                                                                  mats.by_mode[mode], cert.lambda));
                margin = std::min(margin,
                                  min_eigenvalue(cert.P_bar(static_cast<int>(mode))) - 1.0 + 1e-12);
            }
        }
        outcome.best_margin = margin;
        if (margin < 1e-6) {
            outcome.message = "loaded certificate failed re-verification against this scenario";
            return outcome;
        }
        cert.min_margin = margin;
        outcome.certified = true;
        outcome.certificate = std::move(cert);
        return outcome;
    }
    return certify_scenario(cfg);
}

inline void write_certify_report(const std::string& path, const ScenarioConfig& cfg,
                                 const CertificationOutcome& outcome, double seconds) {
    std::ofstream out(path);
    out << "certification report\n";
    out << "kind: " << (cfg.certificate_kind == CertificateKind::common ? "common" : "dwell-time")
        << "\n";
    out << "modes: " << cfg.family.size() << "\n";
    out << "vertices: " << enumerate_vertices(cfg.bounds).size() << "\n";
    out << "certified: " << (outcome.certified ? "yes" : "no") << "\n";
    if (outcome.certified) {
        const auto& cert = outcome.certificate;
        out << "lambda: " << cert.lambda << "\n";
        out << "mu: " << cert.mu << "\n";
        out << "tau_d: " << cert.tau_d << "\n";
        out << "a_star: " << cert.a_star << "\n";
        out << "min verified margin: " << cert.min_margin << "\n";
    } else {
        out << "diagnostic: " << outcome.message << "\n";
        out << "best margin reached: " << outcome.best_margin << "\n";
    }
    out << "solve seconds: " << seconds << "\n";
}

inline int run_certify(const std::string& config_path, const std::string& out_dir) {
    const ScenarioConfig cfg = load_scenario(config_path);
    std::filesystem::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const CertificationOutcome outcome = certify_scenario(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_certify_report(out_dir + "/certify_report.txt", cfg, outcome, seconds);
    if (!outcome.certified) {
        std::cerr << "not certified: " << outcome.message << "\n";
        return exit_code::not_certified;
    }
    save_certificate(outcome.certificate, out_dir + "/certificate.json");
    std::cout << "certified: lambda=" << outcome.certificate.lambda
              << " mu=" << outcome.certificate.mu << " tau_d=" << outcome.certificate.tau_d
              << " margin=" << outcome.certificate.min_margin << " (" << seconds << " s)\n";
    return exit_code::ok;
}

struct ScenarioMetrics {
    double gamma = 0.0;
    double dt = 0.0;
    double max_xtilde = 0.0;
    double max_tracking_error = 0.0;
    double max_input_error = 0.0;
    PerformanceBounds bounds;
    bool xtilde_within = false;
    bool tracking_within = false;
    bool input_within = false;

    [[nodiscard]] bool all_within() const { return xtilde_within && tracking_within && input_within; }
};

inline ScenarioMetrics evaluate_metrics(const ScenarioConfig& cfg,
                                        const StabilityCertificate& cert,
                                        const SimulationResult& result, double gamma, double dt) {
    ScenarioMetrics metrics;
    metrics.gamma = gamma;
    metrics.dt = dt;
    metrics.max_xtilde = result.max_prediction_error();
    metrics.max_tracking_error = result.max_tracking_error();
    metrics.max_input_error = result.max_input_error();
    const double beta = beta_xtilde(cfg.bounds, cert.lambda);
    const auto blocks = vertex_error_blocks(cfg.family, cfg.filter, cfg.bounds);
    metrics.bounds = tracking_error_bound(cert, blocks, beta, gamma, cfg.a);
    metrics.xtilde_within = metrics.max_xtilde <= metrics.bounds.prediction_bound;
    metrics.tracking_within = metrics.max_tracking_error <= metrics.bounds.tracking_bound_state;
    metrics.input_within = metrics.max_input_error <= metrics.bounds.tracking_bound_input;
    return metrics;
}

inline CsvTable metrics_table(const std::vector<ScenarioMetrics>& rows,
                              const StabilityCertificate& cert) {
    CsvTable table;
    table.header = {"gamma",
                    "dt",
                    "max_xtilde",
                    "max_tracking_error",
                    "max_input_error",
                    "beta",
                    "prediction_bound",
                    "weighted_error_sq_bound",
                    "tracking_bound_state",
                    "tracking_bound_input",
                    "nu",
                    "g",
                    "lambda",
                    "mu",
                    "tau_d",
                    "xtilde_within_bound",
                    "tracking_within_bound",
                    "input_within_bound"};
    for (const auto& m : rows)
        table.rows.push_back({m.gamma, m.dt, m.max_xtilde, m.max_tracking_error,
                              m.max_input_error, m.bounds.beta, m.bounds.prediction_bound,
                              m.bounds.weighted_error_sq_bound, m.bounds.tracking_bound_state,
                              m.bounds.tracking_bound_input, m.bounds.nu, m.bounds.g, cert.lambda,
                              cert.mu, cert.tau_d, m.xtilde_within ? 1.0 : 0.0,
                              m.tracking_within ? 1.0 : 0.0, m.input_within ? 1.0 : 0.0});
    return table;
}

/// Adaptation loop frequency sqrt(gamma * max ||B^T P B||); the step size must
/// keep dt * frequency modest for the integrator. The product-form guard
/// dt * gamma * ||P B|| wildly overestimates stiffness (the adaptation loop is
/// a double integrator, its rate grows with the square root of the gain).
inline double adaptation_loop_rate(const ControllerConfig& ctrl,
                                   const std::vector<LtiSubsystem>& family, double gamma) {
    double worst = 0.0;
    for (std::size_t mode = 0; mode < family.size(); ++mode) {
        const LtiSubsystem& design = ctrl.design_for(static_cast<int>(mode), family);
        const Matrix& p = ctrl.P[static_cast<std::size_t>(ctrl.design_index(static_cast<int>(mode)))];
        const Matrix bpb = design.B.transpose() * p * design.B;
        worst = std::max(worst, bpb.operatorNorm());
    }
    return std::sqrt(gamma * worst);
}

inline double stiffness_limited_dt(double dt_config, const ControllerConfig& ctrl,
                                   const std::vector<LtiSubsystem>& family, double gamma) {
    const double rate = adaptation_loop_rate(ctrl, family, gamma);
    if (rate <= 0.0) return dt_config;
    return std::min(dt_config, 0.25 / rate);
}

inline int run_simulate(const std::string& config_path, const std::string& out_dir,
                        std::optional<double> dt_override = std::nullopt) {
    ScenarioConfig cfg = load_scenario(config_path);
    if (dt_override) cfg.dt = *dt_override;
    std::filesystem::create_directories(out_dir);
    const CertificationOutcome outcome = obtain_certificate(cfg);
    if (!outcome.certified) {
        std::cerr << "certificate unavailable: " << outcome.message << "\n";
        return exit_code::not_certified;
    }
    const StabilityCertificate& cert = outcome.certificate;
    const ControllerConfig ctrl = make_controller_config(cfg, cert);
    const Vector x0 = Vector::Zero(cfg.family.front().n());
    SimulationResult result;
    try {
        result = simulate_closed_loop(cfg.family, cfg.bounds, cfg.realization, cfg.switching, ctrl,
                                      cfg.command, x0, cfg.t_final, cfg.dt,
                                      cfg.divergence_ceiling);
    } catch (const SimulationError& err) {
        std::cerr << "simulation aborted: " << err.what() << "\n";
        return exit_code::violation;
    }
    write_trace_csv(out_dir + "/trace.csv", result, cfg.family.front().n(),
                    cfg.family.front().m(), cfg.output_stride);
    const ScenarioMetrics metrics = evaluate_metrics(cfg, cert, result, cfg.gamma, cfg.dt);
    metrics_table({metrics}, cert).write(out_dir + "/metrics.csv");
    std::cout << "max ||x_tilde|| = " << metrics.max_xtilde
              << " (bound " << metrics.bounds.prediction_bound << ")\n"
              << "max ||x_ref - x|| = " << metrics.max_tracking_error
              << " (bound " << metrics.bounds.tracking_bound_state << ")\n"
              << "max ||u_ref - u|| = " << metrics.max_input_error
              << " (bound " << metrics.bounds.tracking_bound_input << ")\n";
    if (!metrics.all_within()) {
        std::cerr << "theoretical bound violated; see metrics.csv\n";
        return exit_code::violation;
    }
    return exit_code::ok;
}

inline int run_sweep_gamma(const std::string& config_path, const std::string& out_dir,
                           const std::vector<double>& gammas,
                           std::optional<double> dt_override = std::nullopt) {
    if (gammas.size() < 2) {
        std::cerr << "sweep requires at least two gamma values\n";
        return exit_code::usage;
    }
    ScenarioConfig cfg = load_scenario(config_path);
    if (dt_override) cfg.dt = *dt_override;
    std::filesystem::create_directories(out_dir);
    const CertificationOutcome outcome = obtain_certificate(cfg);
    if (!outcome.certified) {
        std::cerr << "certificate unavailable: " << outcome.message << "\n";
        return exit_code::not_certified;
    }
    const StabilityCertificate& cert = outcome.certificate;
    std::vector<ScenarioMetrics> rows;
    for (double gamma : gammas) {
        ScenarioConfig run_cfg = cfg;
        run_cfg.gamma = gamma;
        const ControllerConfig ctrl = make_controller_config(run_cfg, cert);
        const double dt = stiffness_limited_dt(cfg.dt, ctrl, run_cfg.family, gamma);
        const Vector x0 = Vector::Zero(run_cfg.family.front().n());
        SimulationResult result;
        try {
            result = simulate_closed_loop(run_cfg.family, run_cfg.bounds, run_cfg.realization,
                                          run_cfg.switching, ctrl, run_cfg.command, x0,
                                          run_cfg.t_final, dt, run_cfg.divergence_ceiling);
        } catch (const SimulationError& err) {
            std::cerr << "simulation aborted at gamma=" << gamma << ": " << err.what() << "\n";
            return exit_code::violation;
        }
        rows.push_back(evaluate_metrics(run_cfg, cert, result, gamma, dt));
    }
    metrics_table(rows, cert).write(out_dir + "/sweep.csv");
    for (const auto& m : rows)
        if (!m.all_within()) {
            std::cerr << "theoretical bound violated in sweep; see sweep.csv\n";
            return exit_code::violation;
        }
    return exit_code::ok;
}

// ----------------------------------------------------------------------------
// Aircraft study: six-mode switched scenario with a 1 degree elevator step in
// the middle of each 20 s interval, cleared at the interval end.
// ----------------------------------------------------------------------------

inline ScenarioConfig aircraft_section_scenario() {
    ScenarioConfig cfg;
    cfg.family = aircraft_short_period_family();
    cfg.bounds.theta_lo = Matrix{{-50.0}, {-50.0}};
    cfg.bounds.theta_hi = Matrix{{50.0}, {50.0}};
    cfg.bounds.sigma_lo = Vector::Constant(1, -20.0);
    cfg.bounds.sigma_hi = Vector::Constant(1, 20.0);
    cfg.bounds.omega_lo = Matrix{{0.5}};
    cfg.bounds.omega_hi = Matrix{{1.5}};
    cfg.realization.omega = Matrix{{1.2}};
    cfg.realization.theta = ParamTrajectory::constant(Matrix{{-40.0}, {-40.0}});
    cfg.realization.sigma = ParamTrajectory::constant(Matrix{{1.0}});
    cfg.switching.dwell = 20.0;
    for (int k = 0; k < 6; ++k) {
        cfg.switching.times.push_back(20.0 * k);
        cfg.switching.modes.push_back(k);
    }
    for (int k = 0; k <= 12; ++k) {
        cfg.command.times.push_back(10.0 * k);
        cfg.command.values.push_back(Vector::Constant(1, k % 2 == 0 ? 0.0 : 1.0));
    }
    cfg.filter = FilterSpec::constant_gain(4.0 * std::acos(-1.0), 1);
    cfg.gamma = 1e4;
    cfg.k_ff_mode = FeedforwardMode::identity;
    cfg.t_final = 120.0;
    cfg.dt = 1e-4;
    return cfg;
}

struct AircraftDemoResult {
    SimulationResult sim;
    StabilityCertificate cert;
    std::vector<double> pitch_accelerations;  // least-squares q slope per interval
    double slope_ratio = 0.0;                 // max/min magnitude across intervals
    double max_switch_input_jump = 0.0;       // elevator step across switching instants
    double max_step_input_jump = 0.0;         // largest single-step elevator change overall
};

/// Least-squares slope of row `row` of `trace` over the window starting at
/// grid value `t0`.
inline double least_squares_slope(const std::vector<double>& time, const Matrix& trace, int row,
                                  double t0, double window) {
    const auto begin = std::lower_bound(time.begin(), time.end(), t0);
    if (begin == time.end()) throw ConfigError("slope window start beyond the grid");
    const auto end = std::upper_bound(time.begin(), time.end(), t0 + window);
    const auto i0 = static_cast<Eigen::Index>(begin - time.begin());
    const auto i1 = static_cast<Eigen::Index>(end - time.begin());
    double t_mean = 0.0, q_mean = 0.0;
    for (Eigen::Index k = i0; k < i1; ++k) {
        t_mean += time[static_cast<std::size_t>(k)];
        q_mean += trace(row, k);
    }
    const double count = static_cast<double>(i1 - i0);
    t_mean /= count;
    q_mean /= count;
    double num = 0.0, den = 0.0;
    for (Eigen::Index k = i0; k < i1; ++k) {
        const double dt_k = time[static_cast<std::size_t>(k)] - t_mean;
        num += dt_k * (trace(row, k) - q_mean);
        den += dt_k * dt_k;
    }
    return num / den;
}

/// Runs the switched- or fixed-reference variant of the aircraft study.
/// The slope window must clear the low-pass compensation transient; 0.75 s
/// covers roughly ten filter time constants at the 4 pi design.
inline AircraftDemoResult aircraft_demo(const std::string& variant, double dt = 1e-4,
                                        double slope_window = 0.75) {
    ScenarioConfig cfg = aircraft_section_scenario();
    cfg.dt = dt;
    const bool fixed = variant == "fixed";
    if (!fixed && variant != "switched")
        throw ConfigError("aircraft demo: variant must be 'switched' or 'fixed'");

    AircraftDemoResult demo;
    if (fixed) {
        // single design point; the only uncertainty is the plant-model mismatch
        cfg.realization.omega = Matrix{{1.0}};
        cfg.realization.theta = ParamTrajectory::constant(Matrix::Zero(2, 1));
        cfg.realization.sigma = ParamTrajectory::constant(Matrix::Zero(1, 1));
        ScenarioConfig design_cfg = cfg;
        design_cfg.family = {cfg.family.front()};
        const CertificationOutcome outcome = certify_scenario(design_cfg);
        if (!outcome.certified)
            throw ConfigError("aircraft demo: fixed design certificate not found: " +
                              outcome.message);
        demo.cert = outcome.certificate;
        ControllerConfig ctrl;
        ctrl.filter = cfg.filter;
        ctrl.gamma = cfg.gamma;
        ctrl.k_ff = {Matrix::Identity(1, 1)};
        ctrl.P = {demo.cert.adaptation_weight(0)};
        ctrl.projection = make_projection_set(cfg.bounds);
        ctrl.design_family = {cfg.family.front()};
        ctrl.design_map.assign(cfg.family.size(), 0);
        demo.sim = simulate_closed_loop(cfg.family, cfg.bounds, cfg.realization, cfg.switching,
                                        ctrl, cfg.command, Vector::Zero(2), cfg.t_final, cfg.dt);
    } else {
        const CertificationOutcome outcome = certify_scenario(cfg);
        if (!outcome.certified)
            throw ConfigError("aircraft demo: certificate not found: " + outcome.message);
        demo.cert = outcome.certificate;
        const ControllerConfig ctrl = make_controller_config(cfg, demo.cert);
        demo.sim = simulate_closed_loop(cfg.family, cfg.bounds, cfg.realization, cfg.switching,
                                        ctrl, cfg.command, Vector::Zero(2), cfg.t_final, cfg.dt);
    }

    for (int interval = 0; interval < 6; ++interval) {
        const double onset = 20.0 * interval + 10.0;
        demo.pitch_accelerations.push_back(
            least_squares_slope(demo.sim.time, demo.sim.x, 1, onset, slope_window));
    }
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (double s : demo.pitch_accelerations) {
        hi = std::max(hi, std::abs(s));
        lo = std::min(lo, std::abs(s));
    }
    demo.slope_ratio = hi / lo;

    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(demo.sim.time.size()); ++k) {
        const double jump = (demo.sim.u.col(k) - demo.sim.u.col(k - 1)).norm();
        demo.max_step_input_jump = std::max(demo.max_step_input_jump, jump);
        if (demo.sim.mode[static_cast<std::size_t>(k)] !=
            demo.sim.mode[static_cast<std::size_t>(k - 1)])
            demo.max_switch_input_jump = std::max(demo.max_switch_input_jump, jump);
    }
    return demo;
}

inline int run_aircraft_demo(const std::string& variant, const std::string& out_dir,
                             double dt = 1e-4) {
    std::filesystem::create_directories(out_dir);
    AircraftDemoResult demo;
    try {
        demo = aircraft_demo(variant, dt);
    } catch (const SimulationError& err) {
        std::cerr << "demo aborted: " << err.what() << "\n";
        return exit_code::violation;
    }
    const auto& sim = demo.sim;

    CsvTable trace;
    trace.header = {"t", "mode", "alpha", "alpha_ref", "q", "q_ref", "u", "u_ref"};
    const int stride = std::max(1, static_cast<int>(std::llround(1e-3 / dt)));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(sim.time.size()); k += stride)
        trace.rows.push_back({sim.time[static_cast<std::size_t>(k)],
                              static_cast<double>(sim.mode[static_cast<std::size_t>(k)]),
                              sim.x(0, k), sim.x_ref(0, k), sim.x(1, k), sim.x_ref(1, k),
                              sim.u(0, k), sim.u_ref(0, k)});
    trace.write(out_dir + "/aoa_trace.csv");

    CsvTable overlays;
    overlays.header = {"airspeed_kt", "t_rel", "q", "q_ref", "u", "u_ref"};
    const auto speeds = aircraft_airspeeds_knots();
    for (int interval = 0; interval < 6; ++interval) {
        const double onset = 20.0 * interval + 10.0;
        const auto begin = std::lower_bound(sim.time.begin(), sim.time.end(), onset);
        const auto end = std::upper_bound(sim.time.begin(), sim.time.end(), onset + 3.0);
        for (auto it = begin; it != end; ++it) {
            const auto k = static_cast<Eigen::Index>(it - sim.time.begin());
            overlays.rows.push_back({static_cast<double>(speeds[static_cast<std::size_t>(interval)]),
                                     *it - onset, sim.x(1, k), sim.x_ref(1, k), sim.u(0, k),
                                     sim.u_ref(0, k)});
        }
    }
    overlays.write(out_dir + "/interval_overlays.csv");

    CsvTable metrics;
    metrics.header = {"slope_162", "slope_157", "slope_152", "slope_147", "slope_142",
                      "slope_137", "slope_ratio", "max_switch_input_jump", "max_step_input_jump",
                      "max_xtilde", "max_tracking_error"};
    metrics.rows.push_back({demo.pitch_accelerations[0], demo.pitch_accelerations[1],
                            demo.pitch_accelerations[2], demo.pitch_accelerations[3],
                            demo.pitch_accelerations[4], demo.pitch_accelerations[5],
                            demo.slope_ratio, demo.max_switch_input_jump,
                            demo.max_step_input_jump, sim.max_prediction_error(),
                            sim.max_tracking_error()});
    metrics.write(out_dir + "/demo_metrics.csv");
    std::cout << variant << " variant: pitch-acceleration ratio " << demo.slope_ratio << "\n";
    return exit_code::ok;
}

}  // namespace l1switch

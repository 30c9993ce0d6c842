#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "l1switch/aircraft.hpp"
#include "l1switch/augmented.hpp"
#include "l1switch/controller.hpp"
#include "l1switch/lyapunov.hpp"
#include "l1switch/plant.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Scenario configuration: JSON document -> validated in-memory description.
// Matrices are row-major arrays of arrays. See docs in the README for the
// full schema.
// ============================================================================

enum class FeedforwardMode { identity, dc_gain, explicit_gains };
enum class CertificateKind { common, dwell_time };

struct ScenarioConfig {
    std::vector<LtiSubsystem> family;
    UncertaintyBounds bounds;
    UncertaintyRealization realization;
    SwitchingSignal switching;
    CommandSignal command;

    FilterSpec filter;
    double gamma = 0.0;
    FeedforwardMode k_ff_mode = FeedforwardMode::identity;
    std::vector<Matrix> k_ff_explicit;
    double projection_inflation = 1.1;
    double projection_epsilon = 0.1;

    CertificateKind certificate_kind = CertificateKind::common;
    double a_star = 0.5;
    double a = 0.25;
    std::string certificate_file;  // optional: load instead of solving

    double t_final = 0.0;
    double dt = 1e-4;
    int output_stride = 1;
    double divergence_ceiling = 1e9;

    [[nodiscard]] std::vector<Matrix> resolve_feedforward() const {
        std::vector<Matrix> gains;
        const int m = family.front().m();
        for (const auto& sys : family) {
            switch (k_ff_mode) {
                case FeedforwardMode::identity:
                    gains.push_back(Matrix::Identity(m, m));
                    break;
                case FeedforwardMode::dc_gain:
                    gains.push_back(dc_feedforward_gain(sys));
                    break;
                case FeedforwardMode::explicit_gains:
                    gains = k_ff_explicit;
                    return gains;
            }
        }
        return gains;
    }
};

namespace config_detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("config: missing field '" + path + key + "'");
    return *it;
}

inline double require_number(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ConfigError("config: field '" + path + key + "' must be a number");
    return v.get<double>();
}

inline Matrix parse_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty() || !v[0].is_array())
        throw ConfigError("config: field '" + path + "' must be an array of row arrays");
    const auto rows = v.size();
    const auto cols = v[0].size();
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!v[i].is_array() || v[i].size() != cols)
            throw ConfigError("config: field '" + path + "' has ragged rows");
        for (std::size_t j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(j)) =
            v[i][j].get<double>();
    }
    return out;
}

inline Matrix require_matrix(const json& j, const std::string& key, const std::string& path) {
    return parse_matrix(require(j, key, path), path + key);
}

inline Vector require_vector(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_array()) throw ConfigError("config: field '" + path + key + "' must be an array");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    return out;
}

inline ParamTrajectory parse_trajectory(const json& j, const std::string& path) {
    if (j.contains("constant")) return ParamTrajectory::constant(parse_matrix(j["constant"], path + "constant"));
    ParamTrajectory tr;
    tr.offset = require_matrix(j, "offset", path);
    tr.amplitude = require_matrix(j, "amplitude", path);
    tr.frequency = require_matrix(j, "frequency", path);
    if (tr.amplitude.rows() != tr.offset.rows() || tr.frequency.rows() != tr.offset.rows() ||
        tr.amplitude.cols() != tr.offset.cols() || tr.frequency.cols() != tr.offset.cols())
        throw ConfigError("config: trajectory '" + path + "' has mismatched shapes");
    return tr;
}

}  // namespace config_detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
    using namespace config_detail;
    ScenarioConfig cfg;

    const json& fam = require(j, "family", "");
    if (fam.is_string()) {
        if (fam.get<std::string>() != "aircraft")
            throw ConfigError("config: unknown builtin family '" + fam.get<std::string>() + "'");
        cfg.family = aircraft_short_period_family();
    } else if (fam.is_array()) {
        for (std::size_t k = 0; k < fam.size(); ++k) {
            const std::string path = "family[" + std::to_string(k) + "].";
            LtiSubsystem sys;
            sys.A = require_matrix(fam[k], "A", path);
            sys.B = require_matrix(fam[k], "B", path);
            sys.C = require_matrix(fam[k], "C", path);
            sys.label = fam[k].value("label", "mode" + std::to_string(k));
            cfg.family.push_back(std::move(sys));
        }
    } else {
        throw ConfigError("config: 'family' must be \"aircraft\" or an array of subsystems");
    }
    if (cfg.family.empty()) throw ConfigError("config: family must not be empty");
    for (const auto& sys : cfg.family) sys.validate();

    const json& bounds = require(j, "bounds", "");
    cfg.bounds.theta_lo = require_matrix(bounds, "theta_min", "bounds.");
    cfg.bounds.theta_hi = require_matrix(bounds, "theta_max", "bounds.");
    cfg.bounds.sigma_lo = require_vector(bounds, "sigma_min", "bounds.");
    cfg.bounds.sigma_hi = require_vector(bounds, "sigma_max", "bounds.");
    cfg.bounds.omega_lo = require_matrix(bounds, "omega_min", "bounds.");
    cfg.bounds.omega_hi = require_matrix(bounds, "omega_max", "bounds.");
    cfg.bounds.d_theta = bounds.value("d_theta", 0.0);
    cfg.bounds.d_sigma = bounds.value("d_sigma", 0.0);
    cfg.bounds.validate();

    const json& realization = require(j, "realization", "");
    cfg.realization.omega = require_matrix(realization, "omega", "realization.");
    cfg.realization.theta = parse_trajectory(require(realization, "theta", "realization."),
                                             "realization.theta.");
    cfg.realization.sigma = parse_trajectory(require(realization, "sigma", "realization."),
                                             "realization.sigma.");

    const json& sw = require(j, "switching", "");
    cfg.switching.times = require(sw, "times", "switching.").get<std::vector<double>>();
    cfg.switching.modes = require(sw, "modes", "switching.").get<std::vector<int>>();
    cfg.switching.dwell = require_number(sw, "dwell", "switching.");
    cfg.switching.validate(cfg.family.size());

    const json& cmd = require(j, "command", "");
    cfg.command.times = require(cmd, "times", "command.").get<std::vector<double>>();
    for (const auto& row : require(cmd, "values", "command.")) {
        Vector v(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) v[static_cast<Eigen::Index>(i)] = row[i].get<double>();
        cfg.command.values.push_back(std::move(v));
    }
    cfg.command.validate(cfg.family.front().m());

    const json& ctrl = require(j, "controller", "");
    cfg.gamma = require_number(ctrl, "gamma", "controller.");
    const json& d0 = require(ctrl, "d0", "controller.");
    if (d0.contains("gain")) {
        cfg.filter = FilterSpec::constant_gain(d0["gain"].get<double>(), cfg.family.front().m());
    } else {
        cfg.filter.A = require_matrix(d0, "A", "controller.d0.");
        cfg.filter.B = require_matrix(d0, "B", "controller.d0.");
        cfg.filter.C = require_matrix(d0, "C", "controller.d0.");
        cfg.filter.D = require_matrix(d0, "D", "controller.d0.");
    }
    cfg.filter.validate();
    const json& kff = require(ctrl, "k_ff", "controller.");
    if (kff.is_string()) {
        const std::string mode = kff.get<std::string>();
        if (mode == "identity") cfg.k_ff_mode = FeedforwardMode::identity;
        else if (mode == "dc-gain") cfg.k_ff_mode = FeedforwardMode::dc_gain;
        else throw ConfigError("config: controller.k_ff must be identity, dc-gain, or explicit gains");
    } else {
        cfg.k_ff_mode = FeedforwardMode::explicit_gains;
        for (std::size_t k = 0; k < kff.size(); ++k)
            cfg.k_ff_explicit.push_back(parse_matrix(kff[k], "controller.k_ff[" + std::to_string(k) + "]"));
        if (cfg.k_ff_explicit.size() != cfg.family.size())
            throw ConfigError("config: controller.k_ff needs one gain per mode");
    }
    if (ctrl.contains("projection")) {
        cfg.projection_inflation = ctrl["projection"].value("inflation", 1.1);
        cfg.projection_epsilon = ctrl["projection"].value("epsilon", 0.1);
    }

    if (j.contains("certificate")) {
        const json& cert = j["certificate"];
        const std::string kind = cert.value("kind", "common");
        if (kind == "common") cfg.certificate_kind = CertificateKind::common;
        else if (kind == "dwell-time") cfg.certificate_kind = CertificateKind::dwell_time;
        else throw ConfigError("config: certificate.kind must be 'common' or 'dwell-time'");
        cfg.a_star = cert.value("a_star", 0.5);
        cfg.a = cert.value("a", 0.25);
        cfg.certificate_file = cert.value("file", std::string{});
        if (!(cfg.a_star > 0.0 && cfg.a_star < 1.0 && cfg.a > 0.0 && cfg.a < cfg.a_star))
            throw ConfigError("config: need 0 < a < a_star < 1");
    }

    const json& sim = require(j, "simulation", "");
    cfg.t_final = require_number(sim, "t_final", "simulation.");
    cfg.dt = require_number(sim, "dt", "simulation.");
    cfg.output_stride = sim.value("output_stride", 1);
    cfg.divergence_ceiling = sim.value("divergence_ceiling", 1e9);
    if (cfg.output_stride < 1) throw ConfigError("config: simulation.output_stride must be >= 1");
    cfg.realization.validate_within(cfg.bounds);
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: JSON parse failure in '" + path + "': " + e.what());
    }
    return parse_scenario(j);
}

/// Augmented matrices at every (mode, vertex) pair, flattened and grouped.
struct VertexMatrices {
    std::vector<Matrix> flat;
    std::vector<std::vector<Matrix>> by_mode;
};

inline VertexMatrices vertex_augmented_matrices(const std::vector<LtiSubsystem>& family,
                                                const FilterSpec& filter,
                                                const UncertaintyBounds& bounds) {
    const auto vertices = enumerate_vertices(bounds);
    const int m = family.front().m();
    const Matrix k_unused = Matrix::Zero(m, m);  // k_ff does not enter A_bar
    VertexMatrices out;
    out.by_mode.resize(family.size());
    for (std::size_t mode = 0; mode < family.size(); ++mode) {
        for (const auto& vertex : vertices) {
            AugmentedSystem aug =
                build_augmented(family[mode], filter, vertex.theta, vertex.omega, k_unused);
            out.by_mode[mode].push_back(aug.A);
            out.flat.push_back(std::move(aug.A));
        }
    }
    return out;
}

/// Error-dynamics blocks at every (mode, vertex) pair.
inline std::vector<std::vector<ErrorDynamicsBlocks>> vertex_error_blocks(
    const std::vector<LtiSubsystem>& family, const FilterSpec& filter,
    const UncertaintyBounds& bounds) {
    const auto vertices = enumerate_vertices(bounds);
    std::vector<std::vector<ErrorDynamicsBlocks>> out(family.size());
    for (std::size_t mode = 0; mode < family.size(); ++mode)
        for (const auto& vertex : vertices)
            out[mode].push_back(build_error_blocks(family[mode], filter, vertex.omega));
    return out;
}

/// Certifies the scenario's reference system per its configured kind.
inline CertificationOutcome certify_scenario(const ScenarioConfig& cfg) {
    const auto mats = vertex_augmented_matrices(cfg.family, cfg.filter, cfg.bounds);
    const int n = cfg.family.front().n();
    const int n_f = cfg.filter.n_f();
    const int m = cfg.family.front().m();
    if (cfg.certificate_kind == CertificateKind::common) {
        CommonLyapunovOptions opt;
        opt.a_star = cfg.a_star;
        return find_common_lyapunov(mats.flat, n, n_f, m, opt);
    }
    DwellTimeOptions opt;
    opt.a_star = cfg.a_star;
    return certify_dwell_time(mats.by_mode, n, n_f, m, opt);
}

/// Controller configuration from a certificate: per-mode feedforward gains,
/// adaptation weight = leading block of the mode's certificate matrix, and
/// projection radii circumscribing the uncertainty boxes.
inline ControllerConfig make_controller_config(const ScenarioConfig& cfg,
                                               const StabilityCertificate& cert) {
    ControllerConfig ctrl;
    ctrl.filter = cfg.filter;
    ctrl.gamma = cfg.gamma;
    ctrl.k_ff = cfg.resolve_feedforward();
    for (std::size_t mode = 0; mode < cfg.family.size(); ++mode)
        ctrl.P.push_back(cert.adaptation_weight(static_cast<int>(mode)));
    ctrl.projection =
        make_projection_set(cfg.bounds, cfg.projection_inflation, cfg.projection_epsilon);
    return ctrl;
}

}  // namespace l1switch

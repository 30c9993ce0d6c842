#pragma once

#include <json.hpp>

#include <fstream>
#include <string>

#include "l1switch/lyapunov.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// Certificate documents: matrices serialized as row-major arrays so a
// certified design can be reused without re-solving.

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.size();
    const auto cols = j.at(0).size();
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    return out;
}

inline nlohmann::json certificate_to_json(const StabilityCertificate& cert) {
    nlohmann::json j;
    j["kind"] = cert.kind == StabilityCertificate::Kind::common ? "common" : "dwell-time";
    j["lambda"] = cert.lambda;
    j["mu"] = cert.mu;
    j["tau_d"] = cert.tau_d;
    j["a_star"] = cert.a_star;
    j["min_margin"] = cert.min_margin;
    j["partition"] = {{"n", cert.n}, {"n_f", cert.n_f}, {"m", cert.m}};
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& p : cert.P_bars) mats.push_back(matrix_to_json(p));
    j["P_bars"] = std::move(mats);
    return j;
}

inline StabilityCertificate certificate_from_json(const nlohmann::json& j) {
    StabilityCertificate cert;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "common") cert.kind = StabilityCertificate::Kind::common;
    else if (kind == "dwell-time") cert.kind = StabilityCertificate::Kind::dwell_time;
    else throw ConfigError("certificate: unknown kind '" + kind + "'");
    cert.lambda = j.at("lambda").get<double>();
    cert.mu = j.at("mu").get<double>();
    cert.tau_d = j.at("tau_d").get<double>();
    cert.a_star = j.at("a_star").get<double>();
    cert.min_margin = j.at("min_margin").get<double>();
    cert.n = j.at("partition").at("n").get<int>();
    cert.n_f = j.at("partition").at("n_f").get<int>();
    cert.m = j.at("partition").at("m").get<int>();
    for (const auto& p : j.at("P_bars")) cert.P_bars.push_back(matrix_from_json(p));
    if (cert.P_bars.empty()) throw ConfigError("certificate: no Lyapunov matrices present");
    return cert;
}

inline void save_certificate(const StabilityCertificate& cert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("certificate: cannot write '" + path + "'");
    out << certificate_to_json(cert).dump(2) << "\n";
}

inline StabilityCertificate load_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("certificate: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("certificate: JSON parse failure in '" + path + "': " + e.what());
    }
    return certificate_from_json(j);
}

}  // namespace l1switch

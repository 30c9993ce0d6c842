#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "l1switch/aircraft.hpp"
#include "l1switch/csv.hpp"
#include "l1switch/runner.hpp"
#include "l1switch/scenario.hpp"

using namespace l1switch;

namespace {

nlohmann::json base_config() {
    return nlohmann::json::parse(R"({
      "family": "aircraft",
      "bounds": {
        "theta_min": [[-50.0], [-50.0]], "theta_max": [[50.0], [50.0]],
        "sigma_min": [-20.0], "sigma_max": [20.0],
        "omega_min": [[0.5]], "omega_max": [[1.5]]
      },
      "realization": {
        "omega": [[1.2]],
        "theta": {"constant": [[-40.0], [-40.0]]},
        "sigma": {"constant": [[1.0]]}
      },
      "switching": {"dwell": 2.0, "times": [0.0, 2.0], "modes": [0, 5]},
      "command": {"times": [0.0, 1.0], "values": [[0.0], [1.0]]},
      "controller": {"gamma": 1e4, "d0": {"gain": 12.566370614359172}, "k_ff": "identity"},
      "certificate": {"kind": "common", "a_star": 0.5, "a": 0.25},
      "simulation": {"t_final": 4.0, "dt": 1e-3}
    })");
}

std::string write_temp(const nlohmann::json& j, const std::string& name) {
    const std::string path = name;
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

std::vector<std::vector<double>> read_csv(const std::string& path,
                                          std::vector<std::string>& header) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    std::stringstream hs(line);
    std::string cell;
    header.clear();
    while (std::getline(hs, cell, ',')) header.push_back(cell);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST_CASE("builtin aircraft models carry the published coefficients", "[scenario]") {
    const auto family = aircraft_short_period_family();
    REQUIRE(family.size() == 6);
    REQUIRE(family[0].A == (Matrix{{-0.5301, 0.9273}, {-0.9106, -0.6871}}));
    REQUIRE(family[0].B == (Matrix{{-0.0009}, {-0.0168}}));
    REQUIRE(family[1].A == (Matrix{{-0.5272, 0.9289}, {-0.8557, -0.6580}}));
    REQUIRE(family[2].B == (Matrix{{-0.0008}, {-0.0141}}));
    REQUIRE(family[3].A == (Matrix{{-0.5168, 0.9322}, {-0.6618, -0.5960}}));
    REQUIRE(family[4].B == (Matrix{{-0.0007}, {-0.0123}}));
    REQUIRE(family[5].A == (Matrix{{-0.5147, 0.9357}, {-0.6219, -0.5309}}));
    REQUIRE(family[5].B == (Matrix{{-0.0006}, {-0.0115}}));
    for (const auto& sys : family) REQUIRE_NOTHROW(sys.validate());
}

TEST_CASE("scenario JSON parses into a validated config", "[scenario]") {
    const ScenarioConfig cfg = parse_scenario(base_config());
    REQUIRE(cfg.family.size() == 6);
    REQUIRE(cfg.gamma == 1e4);
    REQUIRE(cfg.filter.n_f() == 0);
    REQUIRE(cfg.switching.modes == std::vector<int>{0, 5});
    REQUIRE(cfg.k_ff_mode == FeedforwardMode::identity);
    REQUIRE(cfg.certificate_kind == CertificateKind::common);
    REQUIRE(cfg.resolve_feedforward().size() == 6);
}

TEST_CASE("parse errors name the offending field", "[scenario]") {
    auto no_gamma = base_config();
    no_gamma["controller"].erase("gamma");
    REQUIRE_THROWS_WITH(parse_scenario(no_gamma),
                        Catch::Matchers::ContainsSubstring("controller.gamma"));

    auto bad_mode = base_config();
    bad_mode["switching"]["modes"] = {0, 17};
    REQUIRE_THROWS_AS(parse_scenario(bad_mode), ConfigError);

    auto outside = base_config();
    outside["realization"]["omega"] = {{3.0}};
    REQUIRE_THROWS_AS(parse_scenario(outside), ConfigError);

    auto ragged = base_config();
    ragged["bounds"]["theta_min"] = {{-50.0}, {-50.0, 1.0}};
    REQUIRE_THROWS_AS(parse_scenario(ragged), ConfigError);
}

TEST_CASE("explicit matrices and sinusoid trajectories parse", "[scenario]") {
    auto j = base_config();
    j["family"] = nlohmann::json::array();
    j["family"].push_back({{"label", "sys"},
                           {"A", {{-1.0, 0.0}, {0.0, -2.0}}},
                           {"B", {{0.0}, {1.0}}},
                           {"C", {{0.0, 1.0}}}});
    j["switching"] = {{"dwell", 2.0}, {"times", {0.0}}, {"modes", {0}}};
    j["bounds"]["d_theta"] = 10.0;
    j["realization"]["theta"] = {{"offset", {{0.0}, {0.0}}},
                                 {"amplitude", {{1.0}, {1.0}}},
                                 {"frequency", {{2.0}, {2.0}}}};
    j["controller"]["k_ff"] = "dc-gain";
    const ScenarioConfig cfg = parse_scenario(j);
    REQUIRE_FALSE(cfg.realization.theta.is_constant());
    REQUIRE(cfg.realization.theta.value_at(0.0) == Matrix::Zero(2, 1));
    const double quarter_period = std::acos(-1.0) / 4.0;
    REQUIRE(cfg.realization.theta.value_at(quarter_period)(0, 0) == Catch::Approx(1.0));
    REQUIRE(cfg.resolve_feedforward()[0](0, 0) == Catch::Approx(2.0));

    // derivative bound violations are caught analytically
    j["bounds"]["d_theta"] = 1.0;
    REQUIRE_THROWS_AS(parse_scenario(j), ConfigError);
}

TEST_CASE("trace CSV round-trips bitwise and matches recomputed metrics", "[scenario]") {
    ScenarioConfig cfg = parse_scenario(base_config());
    StabilityCertificate cert;
    cert.kind = StabilityCertificate::Kind::common;
    cert.P_bars = {Matrix::Identity(3, 3) * 2.0};
    cert.lambda = 0.5;
    cert.mu = 1.0;
    cert.tau_d = 0.0;
    cert.a_star = 0.5;
    cert.n = 2;
    cert.n_f = 0;
    cert.m = 1;
    const ControllerConfig ctrl = make_controller_config(cfg, cert);
    const auto res = simulate_closed_loop(cfg.family, cfg.bounds, cfg.realization, cfg.switching,
                                          ctrl, cfg.command, Vector::Zero(2), cfg.t_final, cfg.dt);
    const std::string path = "trace_roundtrip_test.csv";
    write_trace_csv(path, res, 2, 1);

    std::vector<std::string> header;
    const auto rows = read_csv(path, header);
    REQUIRE(header.size() == 2 + 2 + 2 + 2 + 1 + 1 + 2 + 1 + 1);
    REQUIRE(header[0] == "t");
    REQUIRE(header[2] == "x0");
    REQUIRE(rows.size() == res.time.size());
    double max_xtilde_csv = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        REQUIRE(rows[k][0] == res.time[k]);
        REQUIRE(rows[k][2] == res.x(0, col));
        REQUIRE(rows[k][3] == res.x(1, col));
        REQUIRE(rows[k][4] == res.x_ref(0, col));
        REQUIRE(rows[k][6] == res.x_hat(0, col));
        REQUIRE(rows[k][8] == res.u(0, col));
        REQUIRE(rows[k][9] == res.u_ref(0, col));
        const double xt = std::sqrt((rows[k][6] - rows[k][2]) * (rows[k][6] - rows[k][2]) +
                                     (rows[k][7] - rows[k][3]) * (rows[k][7] - rows[k][3]));
        max_xtilde_csv = std::max(max_xtilde_csv, xt);
    }
    REQUIRE(max_xtilde_csv == res.max_prediction_error());

    // determinism: a second emission is byte-identical
    const std::string path2 = "trace_roundtrip_test2.csv";
    write_trace_csv(path2, res, 2, 1);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    REQUIRE(sa.str() == sb.str());
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("certify pipeline writes the certificate and reports failure codes", "[scenario]") {
    // stable scenario: certificate file lands on disk, exit 0
    auto quick = base_config();
    const std::string cfg_path = write_temp(quick, "scn_certify_test.json");
    REQUIRE(run_certify(cfg_path, "scn_certify_out") == exit_code::ok);
    REQUIRE(std::filesystem::exists("scn_certify_out/certificate.json"));
    const StabilityCertificate cert = load_certificate("scn_certify_out/certificate.json");
    REQUIRE(cert.min_margin >= 1e-6);

    // unstable single-mode family: honest not-found report, exit 2
    auto unstable = base_config();
    unstable["family"] = nlohmann::json::array();
    unstable["family"].push_back({{"label", "unstable"},
                                  {"A", {{1.0, 0.0}, {0.0, 1.0}}},
                                  {"B", {{0.0}, {1.0}}},
                                  {"C", {{1.0, 0.0}}}});
    unstable["switching"] = {{"dwell", 2.0}, {"times", {0.0}}, {"modes", {0}}};
    unstable["bounds"]["theta_min"] = {{0.0}, {0.0}};
    unstable["bounds"]["theta_max"] = {{0.0}, {0.0}};
    unstable["bounds"]["sigma_min"] = {0.0};
    unstable["bounds"]["sigma_max"] = {0.0};
    unstable["bounds"]["omega_min"] = {{1.0}};
    unstable["bounds"]["omega_max"] = {{1.0}};
    unstable["realization"]["omega"] = {{1.0}};
    unstable["realization"]["theta"] = {{"constant", {{0.0}, {0.0}}}};
    unstable["realization"]["sigma"] = {{"constant", {{0.0}}}};
    const std::string bad_path = write_temp(unstable, "scn_unstable_test.json");
    REQUIRE(run_certify(bad_path, "scn_unstable_out") == exit_code::not_certified);

    // sweeps demand at least two gains
    REQUIRE(run_sweep_gamma(cfg_path, "scn_sweep_out", {1e4}) == exit_code::usage);

    std::filesystem::remove_all("scn_certify_out");
    std::filesystem::remove_all("scn_unstable_out");
    std::remove(cfg_path.c_str());
    std::remove(bad_path.c_str());
}

TEST_CASE("simulate pipeline emits trace and metrics that agree", "[scenario]") {
    auto quick = base_config();
    quick["simulation"]["t_final"] = 4.0;
    quick["simulation"]["dt"] = 1e-3;
    const std::string cfg_path = write_temp(quick, "scn_sim_test.json");
    REQUIRE(run_simulate(cfg_path, "scn_sim_out") == exit_code::ok);

    std::vector<std::string> header;
    const auto metrics = read_csv("scn_sim_out/metrics.csv", header);
    REQUIRE(metrics.size() == 1);
    const auto trace = read_csv("scn_sim_out/trace.csv", header);
    double max_xtilde = 0.0;
    for (const auto& row : trace)
        max_xtilde = std::max(max_xtilde, std::sqrt((row[6] - row[2]) * (row[6] - row[2]) + (row[7] - row[3]) * (row[7] - row[3])));
    REQUIRE(metrics[0][2] == max_xtilde);  // reported max equals the trace recomputation
    REQUIRE(metrics[0][15] == 1.0);        // prediction error within its bound

    std::filesystem::remove_all("scn_sim_out");
    std::remove(cfg_path.c_str());
}

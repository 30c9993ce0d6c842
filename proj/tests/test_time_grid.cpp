#include <catch2/catch_amalgamated.hpp>

#include "l1switch/time_grid.hpp"

using namespace l1switch;

namespace {

SwitchingSignal no_switches() {
    SwitchingSignal sw;
    sw.times = {0.0};
    sw.modes = {0};
    sw.dwell = 1.0;
    return sw;
}

CommandSignal no_commands() { return {}; }

}  // namespace

TEST_CASE("uniform grid without events", "[time_grid]") {
    const auto grid = make_time_grid(1.0, 0.5, no_switches(), no_commands());
    REQUIRE(grid == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("event times are grid points and steps never exceed dt", "[time_grid]") {
    SwitchingSignal sw;
    sw.times = {0.0, 0.3};
    sw.modes = {0, 0};
    sw.dwell = 0.25;
    const auto grid = make_time_grid(1.0, 0.5, sw, no_commands());
    REQUIRE(std::find(grid.begin(), grid.end(), 0.3) != grid.end());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        REQUIRE(grid[k + 1] > grid[k]);
        REQUIRE(grid[k + 1] - grid[k] <= 0.5 * (1.0 + 1e-12));
    }
    REQUIRE(grid.front() == 0.0);
    REQUIRE(grid.back() == 1.0);
}

TEST_CASE("long grid contains the switch instants bitwise", "[time_grid]") {
    SwitchingSignal sw;
    sw.times = {0.0, 20.0, 40.0};
    sw.modes = {0, 0, 0};
    sw.dwell = 20.0;
    const auto grid = make_time_grid(60.0, 1e-4, sw, no_commands());

    // independent enumeration: three segments of 200000 uniform steps each
    REQUIRE(grid.size() == 3 * 200000 + 1);
    REQUIRE(grid[200000] == 20.0);
    REQUIRE(grid[400000] == 40.0);
    REQUIRE(grid.back() == 60.0);
    const double h = 20.0 / 200000.0;
    for (std::size_t probe : {1UL, 137UL, 199999UL, 200001UL, 400123UL}) {
        const std::size_t seg = probe / 200000;
        const double base = 20.0 * static_cast<double>(seg);
        const double expected = base + static_cast<double>(probe - seg * 200000) * h;
        REQUIRE(grid[probe] == expected);
    }
}

TEST_CASE("command steps join the grid", "[time_grid]") {
    CommandSignal cmd;
    cmd.times = {0.25, 0.85};
    cmd.values = {Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
    const auto grid = make_time_grid(1.0, 0.5, no_switches(), cmd);
    REQUIRE(std::find(grid.begin(), grid.end(), 0.25) != grid.end());
    REQUIRE(std::find(grid.begin(), grid.end(), 0.85) != grid.end());
}

TEST_CASE("events past the horizon are rejected", "[time_grid]") {
    SwitchingSignal sw;
    sw.times = {0.0, 2.0};
    sw.modes = {0, 0};
    sw.dwell = 1.0;
    REQUIRE_THROWS_AS(make_time_grid(1.0, 0.1, sw, no_commands()), ConfigError);

    CommandSignal cmd;
    cmd.times = {1.5};
    cmd.values = {Vector::Constant(1, 1.0)};
    REQUIRE_THROWS_AS(make_time_grid(1.0, 0.1, no_switches(), cmd), ConfigError);
    REQUIRE_THROWS_AS(make_time_grid(0.0, 0.1, no_switches(), no_commands()), ConfigError);
    REQUIRE_THROWS_AS(make_time_grid(1.0, 0.0, no_switches(), no_commands()), ConfigError);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "l1switch/plant.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

/// Builds the integration grid: includes 0, t_final, every switching time and
/// every command step time as exact grid points; segments between required
/// points are uniform with step <= dt.
inline std::vector<double> make_time_grid(double t_final, double dt,
                                          const SwitchingSignal& switching,
                                          const CommandSignal& command) {
    if (!(dt > 0.0)) throw ConfigError("time grid: dt must be positive");
    if (!(t_final > 0.0)) throw ConfigError("time grid: t_final must be positive");

    std::vector<double> breaks{0.0, t_final};
    for (double t : switching.times) {
        if (t > t_final)
            throw ConfigError("switching time " + std::to_string(t) + " beyond t_final");
        breaks.push_back(t);
    }
    for (double t : command.times) {
        if (t > t_final)
            throw ConfigError("command time " + std::to_string(t) + " beyond t_final");
        if (t < 0.0) throw ConfigError("command time must be >= 0");
        breaks.push_back(t);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(t_final / dt) + breaks.size() + 2);
    grid.push_back(breaks.front());
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double a = breaks[s];
        const double b = breaks[s + 1];
        const auto nsub = static_cast<long>(std::ceil((b - a) / dt - 1e-9));
        const long steps = std::max<long>(1, nsub);
        const double h = (b - a) / static_cast<double>(steps);
        for (long k = 1; k < steps; ++k) grid.push_back(a + static_cast<double>(k) * h);
        grid.push_back(b);  // breakpoint kept bitwise
    }
    return grid;
}

}  // namespace l1switch

#pragma once

#include <vector>

#include "l1switch/plant.hpp"

namespace l1switch {

// ============================================================================
// Short-period models of a transport-class aircraft on approach, one per
// 5-knot increment from flaps-down (162 kt) to approach speed (137 kt).
// States: angle of attack [deg], pitch rate [deg/s]. Input: elevator [deg].
// The regulated output reads the angle of attack.
// ============================================================================

inline std::vector<LtiSubsystem> aircraft_short_period_family() {
    auto model = [](const char* label, double a00, double a01, double a10, double a11, double b0,
                    double b1) {
        LtiSubsystem sys;
        sys.A = Matrix{{a00, a01}, {a10, a11}};
        sys.B = Matrix{{b0}, {b1}};
        sys.C = Matrix{{1.0, 0.0}};
        sys.label = label;
        return sys;
    };
    return {
        model("162kt", -0.5301, 0.9273, -0.9106, -0.6871, -0.0009, -0.0168),
        model("157kt", -0.5272, 0.9289, -0.8557, -0.6580, -0.0008, -0.0154),
        model("152kt", -0.5201, 0.9305, -0.7229, -0.6279, -0.0008, -0.0141),
        model("147kt", -0.5168, 0.9322, -0.6618, -0.5960, -0.0007, -0.0132),
        model("142kt", -0.5171, 0.9339, -0.6669, -0.5637, -0.0007, -0.0123),
        model("137kt", -0.5147, 0.9357, -0.6219, -0.5309, -0.0006, -0.0115),
    };
}

inline std::vector<int> aircraft_airspeeds_knots() { return {162, 157, 152, 147, 142, 137}; }

}  // namespace l1switch

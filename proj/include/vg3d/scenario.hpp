#pragma once

#include <array>
#include <string_view>

namespace vg3d {

// The five description-scene evaluation cases. A pair is zero-target (ZT),
// single-target (ST) or multi-target (MT) by the number of referred objects;
// ZT and ST split further on whether the scene holds a distractor of the
// target's semantic class.
enum class Scenario {
    ZtWithoutDistractor,
    ZtWithDistractor,
    StWithoutDistractor,
    StWithDistractor,
    Mt,
};

inline constexpr std::array<Scenario, 5> kAllScenarios = {
    Scenario::ZtWithoutDistractor, Scenario::ZtWithDistractor,
    Scenario::StWithoutDistractor, Scenario::StWithDistractor,
    Scenario::Mt,
};

// Stable report keys; fixed by the report schema.
constexpr std::string_view scenario_key(Scenario s) {
    switch (s) {
        case Scenario::ZtWithoutDistractor: return "zt_wo_d";
        case Scenario::ZtWithDistractor: return "zt_w_d";
        case Scenario::StWithoutDistractor: return "st_wo_d";
        case Scenario::StWithDistractor: return "st_w_d";
        case Scenario::Mt: return "mt";
    }
    return "unknown";
}

}  // namespace vg3d

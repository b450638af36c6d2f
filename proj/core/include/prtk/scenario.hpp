#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "prtk/poisoning.hpp"

namespace prtk {

struct Scenario {
    AttackParams params;
    OffsetModel model = OffsetModel::reference_flow_label();
    bool use_machine = false;        // drive the simulator from a machine model
    MeasurementConfig machine;
    int trials = 10000;
    std::uint64_t seed = 1;
};

// Resolver timeout presets (seconds); range entries use the midpoint.
std::optional<double> resolver_timeout_preset(std::string_view name);

// key = value text, '#' comments. Unknown keys are rejected.
Scenario parse_scenario(std::istream& in);
Scenario parse_scenario_file(const std::string& path);

}  // namespace prtk

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "prtk/field_codec.hpp"
#include "prtk/prng.hpp"

namespace prtk {

enum class Consumer {
    flow_label,
    udp_port,
    ipid,
    hidden,
    drift,   // trace marker only
    reseed,  // trace marker only
};

std::string_view consumer_name(Consumer c);
std::optional<Consumer> consumer_from_name(std::string_view name);

struct ScriptRequest {
    std::uint64_t time_ms = 0;
    Consumer consumer = Consumer::flow_label;
    int core = -1;  // explicit core, used by the scripted scheduler
};

// After a request of the trigger kind, consume `count` extra draws with the
// given probability on the same core (nullopt trigger matches any field draw).
struct HiddenRule {
    std::optional<Consumer> trigger;
    double probability = 1.0;
    int count = 1;
};

enum class SchedulerPolicy { sticky, round_robin, scripted };

struct MachineModel {
    int core_count = 1;
    std::vector<CoreState> cores;
    SchedulerPolicy scheduler = SchedulerPolicy::sticky;
    double switch_probability = 0.0;  // sticky policy: per-request re-pick chance
    bool reseed_enabled = false;      // periodic reseeds, interval uniform in [40,80] s
    double drift_rate = 0.0;          // per-consumption chance of a drift event
    std::vector<HiddenRule> hidden_rules;
    PortRange port_range = kPortRangeModern;
};

struct TraceEvent {
    std::uint64_t time_ms = 0;
    int core = 0;  // -1 for machine-wide events (reseed)
    Consumer consumer = Consumer::flow_label;
    std::optional<std::uint32_t> raw;  // pre-encoding output word, when meaningful
    std::uint32_t field_value = 0;
};

// Derives `count` core states from a seed, one per core.
std::vector<CoreState> seed_cores(int count, std::uint64_t seed);

// Deterministic multi-core run: serves each scripted request from the
// scheduled core, fires periodic reseeds on all cores at once, applies drift
// events (s1,s2 advance once while s3,s4 advance twice) and hidden
// consumption per the model. Identical seeds yield identical traces.
std::vector<TraceEvent> simulate_machine(const MachineModel& model,
                                         std::span<const ScriptRequest> script,
                                         std::uint64_t seed);

}  // namespace prtk

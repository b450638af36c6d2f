#include "prtk/machine.hpp"

#include <limits>
#include <stdexcept>

#include "prtk/rng.hpp"

namespace prtk {

std::string_view consumer_name(Consumer c) {
    switch (c) {
        case Consumer::flow_label: return "flow_label";
        case Consumer::udp_port: return "udp_port";
        case Consumer::ipid: return "ipid";
        case Consumer::hidden: return "hidden";
        case Consumer::drift: return "drift";
        case Consumer::reseed: return "reseed";
    }
    return "?";
}

std::optional<Consumer> consumer_from_name(std::string_view name) {
    for (Consumer c : {Consumer::flow_label, Consumer::udp_port, Consumer::ipid,
                       Consumer::hidden, Consumer::drift, Consumer::reseed})
        if (consumer_name(c) == name)
            return c;
    return std::nullopt;
}

std::vector<CoreState> seed_cores(int count, std::uint64_t seed) {
    std::vector<CoreState> cores;
    cores.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        SplitMix64 rng = SplitMix64::derive(seed, 0x636F7265ull + static_cast<std::uint64_t>(i));
        cores.push_back(seed_full(rng.next_u32(), rng.next_u32(), rng.next_u32(), rng.next_u32()));
    }
    return cores;
}

namespace {

void apply_drift(CoreState& st) {
    // A consumer draw interleaved with an interrupt-context draw: the low two
    // registers keep the pre-interrupt view, the high two are stepped twice.
    st.s1 = step_register(st.s1, kRegisters[0]);
    st.s2 = step_register(st.s2, kRegisters[1]);
    st.s3 = step_register(step_register(st.s3, kRegisters[2]), kRegisters[2]);
    st.s4 = step_register(step_register(st.s4, kRegisters[3]), kRegisters[3]);
}

std::uint32_t encode_for(const MachineModel& model, Consumer c, std::uint32_t raw) {
    switch (c) {
        case Consumer::flow_label: return encode_field(FieldKind::flow_label(), raw);
        case Consumer::ipid: return encode_field(FieldKind::ipid(), raw);
        case Consumer::udp_port:
            return encode_field(FieldKind::udp_port(model.port_range), raw);
        default: return 0;
    }
}

}  // namespace

std::vector<TraceEvent> simulate_machine(const MachineModel& model,
                                         std::span<const ScriptRequest> script,
                                         std::uint64_t seed) {
    if (model.core_count < 1 || model.cores.empty())
        throw std::invalid_argument("machine model needs at least one core");
    if (static_cast<int>(model.cores.size()) != model.core_count)
        throw std::invalid_argument("core_count does not match the core list");

    SplitMix64 rng(seed);
    std::vector<CoreState> cores = model.cores;
    std::vector<TraceEvent> trace;
    trace.reserve(script.size());

    const double kMsPerSecond = 1000.0;
    auto draw_reseed_gap = [&] { return (40.0 + rng.uniform() * 40.0) * kMsPerSecond; };
    double reseed_at = model.reseed_enabled ? draw_reseed_gap()
                                            : std::numeric_limits<double>::infinity();

    int sticky_core = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.core_count)));
    std::uint64_t last_time = 0;
    std::size_t request_index = 0;

    auto consume = [&](int core, Consumer kind, std::uint64_t time) {
        if (model.drift_rate > 0.0 && rng.chance(model.drift_rate)) {
            apply_drift(cores[static_cast<std::size_t>(core)]);
            trace.push_back(TraceEvent{time, core, Consumer::drift, std::nullopt, 0});
        }
        std::uint32_t raw = next_u32(cores[static_cast<std::size_t>(core)]);
        trace.push_back(TraceEvent{time, core, kind,
                                   kind == Consumer::hidden ? std::nullopt
                                                            : std::optional<std::uint32_t>(raw),
                                   encode_for(model, kind, raw)});
    };

    for (const ScriptRequest& req : script) {
        if (req.time_ms < last_time)
            throw std::invalid_argument("script timestamps must be non-decreasing");
        last_time = req.time_ms;
        if (req.consumer == Consumer::drift || req.consumer == Consumer::reseed)
            throw std::invalid_argument("drift/reseed are trace markers, not requests");

        while (static_cast<double>(req.time_ms) >= reseed_at) {
            std::uint32_t entropy = rng.next_u32();
            for (CoreState& c : cores)
                c = reseed(c, entropy);
            trace.push_back(TraceEvent{static_cast<std::uint64_t>(reseed_at), -1,
                                       Consumer::reseed, std::nullopt, 0});
            reseed_at += draw_reseed_gap();
        }

        int core;
        switch (model.scheduler) {
            case SchedulerPolicy::sticky:
                if (model.switch_probability > 0.0 && rng.chance(model.switch_probability))
                    sticky_core = static_cast<int>(
                        rng.below(static_cast<std::uint64_t>(model.core_count)));
                core = sticky_core;
                break;
            case SchedulerPolicy::round_robin:
                core = static_cast<int>(request_index % static_cast<std::size_t>(model.core_count));
                break;
            case SchedulerPolicy::scripted:
                if (req.core < 0 || req.core >= model.core_count)
                    throw std::invalid_argument("scripted request without a valid core");
                core = req.core;
                break;
            default:
                core = 0;
        }
        ++request_index;

        consume(core, req.consumer, req.time_ms);

        if (req.consumer != Consumer::hidden) {
            for (const HiddenRule& rule : model.hidden_rules) {
                if (rule.trigger && *rule.trigger != req.consumer)
                    continue;
                if (!rng.chance(rule.probability))
                    continue;
                for (int i = 0; i < rule.count; ++i)
                    consume(core, Consumer::hidden, req.time_ms);
            }
        }
    }
    return trace;
}

}  // namespace prtk

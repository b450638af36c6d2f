#include <doctest.h>

#include <sstream>

#include "prtk/machine.hpp"
#include "prtk/recovery.hpp"
#include "prtk/trace_io.hpp"

using namespace prtk;

namespace {

std::vector<ScriptRequest> burst(int count, Consumer kind, std::uint64_t start_ms = 0,
                                 std::uint64_t step_ms = 5) {
    std::vector<ScriptRequest> script;
    for (int i = 0; i < count; ++i)
        script.push_back(ScriptRequest{start_ms + static_cast<std::uint64_t>(i) * step_ms, kind, -1});
    return script;
}

}  // namespace

TEST_CASE("single core, no noise: trace equals consecutive outputs") {
    MachineModel model;
    model.core_count = 1;
    model.cores = seed_cores(1, 7);
    auto trace = simulate_machine(model, burst(10, Consumer::flow_label), 1);
    REQUIRE(trace.size() == 10);
    CoreState st = model.cores[0];
    for (const TraceEvent& e : trace) {
        std::uint32_t raw = next_u32(st);
        CHECK(e.core == 0);
        CHECK(e.raw == raw);
        CHECK(e.field_value == encode_field(FieldKind::flow_label(), raw));
    }
}

TEST_CASE("rejects an empty model and bad scripts") {
    MachineModel model;
    model.core_count = 0;
    CHECK_THROWS_AS(simulate_machine(model, {}, 1), std::invalid_argument);
    model.core_count = 1;
    model.cores = seed_cores(1, 7);
    std::vector<ScriptRequest> bad = {{10, Consumer::ipid, -1}, {5, Consumer::ipid, -1}};
    CHECK_THROWS_AS(simulate_machine(model, bad, 1), std::invalid_argument);
}

TEST_CASE("sticky scheduler with zero switch probability stays on one core") {
    MachineModel model;
    model.core_count = 4;
    model.cores = seed_cores(4, 123);
    model.switch_probability = 0.0;
    auto trace = simulate_machine(model, burst(50, Consumer::ipid), 99);
    REQUIRE_FALSE(trace.empty());
    int core = trace.front().core;
    for (const TraceEvent& e : trace)
        CHECK(e.core == core);
}

TEST_CASE("round robin cycles cores") {
    MachineModel model;
    model.core_count = 3;
    model.cores = seed_cores(3, 5);
    model.scheduler = SchedulerPolicy::round_robin;
    auto trace = simulate_machine(model, burst(9, Consumer::ipid), 4);
    for (std::size_t i = 0; i < trace.size(); ++i)
        CHECK(trace[i].core == static_cast<int>(i % 3));
}

TEST_CASE("scripted scheduler follows explicit cores and validates them") {
    MachineModel model;
    model.core_count = 2;
    model.cores = seed_cores(2, 5);
    model.scheduler = SchedulerPolicy::scripted;
    std::vector<ScriptRequest> script = {{0, Consumer::ipid, 1}, {1, Consumer::ipid, 0}};
    auto trace = simulate_machine(model, script, 4);
    CHECK(trace[0].core == 1);
    CHECK(trace[1].core == 0);
    script.push_back({2, Consumer::ipid, 5});
    CHECK_THROWS_AS(simulate_machine(model, script, 4), std::invalid_argument);
}

TEST_CASE("identical seeds give identical traces, different seeds differ") {
    MachineModel model;
    model.core_count = 4;
    model.cores = seed_cores(4, 1);
    model.switch_probability = 0.3;
    model.drift_rate = 0.05;
    model.hidden_rules.push_back(HiddenRule{Consumer::flow_label, 0.5, 1});
    auto a = simulate_machine(model, burst(40, Consumer::flow_label), 11);
    auto b = simulate_machine(model, burst(40, Consumer::flow_label), 11);
    auto c = simulate_machine(model, burst(40, Consumer::flow_label), 12);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].core == b[i].core);
        CHECK(a[i].field_value == b[i].field_value);
    }
    bool differs = a.size() != c.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i)
        differs = a[i].field_value != c[i].field_value || a[i].core != c[i].core;
    CHECK(differs);
}

TEST_CASE("drift between samples breaks recovery consistency") {
    MachineModel model;
    model.core_count = 1;
    model.cores = seed_cores(1, 3);
    // Force a drift event with certainty inside the burst.
    model.drift_rate = 1.0;
    auto trace = simulate_machine(model, burst(8, Consumer::flow_label), 2);
    auto obs = observations_from_trace(trace, FieldKind::flow_label());
    REQUIRE(obs.size() == 8);
    RecoveryResult r = recover_state(obs);
    CHECK(r.best_verified() == nullptr);
    // drift markers present in the trace
    int drift_markers = 0;
    for (const TraceEvent& e : trace)
        if (e.consumer == Consumer::drift)
            ++drift_markers;
    CHECK(drift_markers == 8);
}

TEST_CASE("drift advances only s3 and s4 an extra step") {
    MachineModel model;
    model.core_count = 1;
    CoreState start = seed_cores(1, 3)[0];
    model.cores = {start};
    model.drift_rate = 1.0;
    auto trace = simulate_machine(model, burst(1, Consumer::ipid), 2);
    REQUIRE(trace.size() == 2);  // drift marker + the draw
    CHECK(trace[0].consumer == Consumer::drift);
    std::uint32_t observed = *trace[1].raw;
    CoreState manual{step_register(start.s1, kRegisters[0]),
                     step_register(start.s2, kRegisters[1]),
                     advance(start, 2).s3, advance(start, 2).s4};
    std::uint32_t expect = next_u32(manual);
    CHECK(observed == expect);
}

TEST_CASE("reseeds fire on schedule, hit every core, and keep s2..s4") {
    MachineModel model;
    model.core_count = 2;
    model.cores = seed_cores(2, 9);
    model.reseed_enabled = true;
    // two draws 200 seconds apart guarantee at least one reseed between them
    std::vector<ScriptRequest> script = {{0, Consumer::ipid, -1},
                                         {200'000, Consumer::ipid, -1}};
    auto trace = simulate_machine(model, script, 77);
    int reseeds = 0;
    for (const TraceEvent& e : trace)
        if (e.consumer == Consumer::reseed) {
            ++reseeds;
            CHECK(e.core == -1);
            CHECK(e.time_ms >= 40'000);
            CHECK(e.time_ms <= 200'000);
        }
    CHECK(reseeds >= 1);
    CHECK(reseeds <= 5);
}

TEST_CASE("hidden rules consume extra draws on the same core") {
    MachineModel model;
    model.core_count = 1;
    model.cores = seed_cores(1, 10);
    model.hidden_rules.push_back(HiddenRule{Consumer::flow_label, 1.0, 2});
    auto trace = simulate_machine(model, burst(3, Consumer::flow_label), 5);
    REQUIRE(trace.size() == 9);  // each request followed by 2 hidden draws
    for (std::size_t i = 0; i < trace.size(); ++i)
        CHECK(trace[i].consumer == (i % 3 == 0 ? Consumer::flow_label : Consumer::hidden));
    // the hidden draws really advanced the state: recovery needs gap hints
    auto obs = observations_from_trace(trace, FieldKind::flow_label(), true);
    REQUIRE(obs.size() == 3);
    CHECK(obs[1].gap_hint == 2);
    CHECK(obs[2].gap_hint == 2);
}

TEST_CASE("trace round-trips through the jsonl codec") {
    MachineModel model;
    model.core_count = 2;
    model.cores = seed_cores(2, 21);
    model.switch_probability = 0.5;
    model.drift_rate = 0.2;
    auto trace = simulate_machine(model, burst(20, Consumer::udp_port), 3);
    std::stringstream buf;
    write_trace(buf, trace);
    auto back = read_trace(buf);
    REQUIRE(back.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(back[i].time_ms == trace[i].time_ms);
        CHECK(back[i].core == trace[i].core);
        CHECK(back[i].consumer == trace[i].consumer);
        CHECK(back[i].raw == trace[i].raw);
        CHECK(back[i].field_value == trace[i].field_value);
    }
}

TEST_CASE("observation files round-trip") {
    std::vector<Observation> obs = {
        {0, FieldKind::flow_label(), 0x12345, 0},
        {1, FieldKind::udp_port(kPortRangeAndroid), 40000, 2},
        {2, FieldKind::ipid(), 77, 1},
    };
    std::stringstream buf;
    write_observations(buf, obs);
    auto back = read_observations(buf);
    REQUIRE(back.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(back[i].seq == obs[i].seq);
        CHECK(back[i].kind == obs[i].kind);
        CHECK(back[i].value == obs[i].value);
        CHECK(back[i].gap_hint == obs[i].gap_hint);
    }
}

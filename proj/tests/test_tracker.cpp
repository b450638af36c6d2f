#include <doctest.h>

#include <set>
#include <sstream>

#include "prtk/rng.hpp"
#include "prtk/tracker.hpp"

using namespace prtk;

namespace {

ReducedState random_reduced(SplitMix64& rng) {
    CoreState st = seed_full(rng.next_u32(), rng.next_u32(), rng.next_u32(), rng.next_u32());
    return reduce(st);
}

ReducedState advance_reduced(ReducedState st, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) {
        st.s2 = step_register(st.s2, kRegisters[1]);
        st.s3 = step_register(st.s3, kRegisters[2]);
        st.s4 = step_register(st.s4, kRegisters[3]);
    }
    return st;
}

// d drift events: s3/s4 gain two steps while s2 gains one.
ReducedState inject_drift(ReducedState st, std::uint64_t d) {
    for (std::uint64_t i = 0; i < d; ++i) {
        st.s2 = step_register(st.s2, kRegisters[1]);
        st.s3 = step_register(step_register(st.s3, kRegisters[2]), kRegisters[2]);
        st.s4 = step_register(step_register(st.s4, kRegisters[3]), kRegisters[3]);
    }
    return st;
}

}  // namespace

TEST_CASE("key packing round-trips and stays within 82 bits") {
    SplitMix64 rng(1);
    for (int i = 0; i < 200; ++i) {
        ReducedState st = random_reduced(rng);
        Key128 key = pack_reduced(st);
        CHECK(key.hi < (1ull << 18));  // 82 - 64
        ReducedState masked{st.s2 & kRegisters[1].mask, st.s3 & kRegisters[2].mask,
                            st.s4 & kRegisters[3].mask};
        CHECK(unpack_reduced(key) == masked);
        Key128 drift_key = pack_drift(st);
        CHECK(drift_key.hi == 0);
        CHECK(drift_key.lo < (1ull << 53));
    }
}

TEST_CASE("bsgs stride is the ceiling square root") {
    CHECK(bsgs_stride(1) == 1);
    CHECK(bsgs_stride(4) == 2);
    CHECK(bsgs_stride(5) == 3);
    CHECK(bsgs_stride(1'000'000) == 1000);
    CHECK(bsgs_stride(10'000'000) == 3163);
}

TEST_CASE("link after n steps returns the device and the exact n (exhaustive, N=1e4)") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 16;
    GiantTable table(cfg);
    SplitMix64 rng(2);
    ReducedState origin = random_reduced(rng);
    LinkResult reg = table.link_or_register(origin);
    CHECK_FALSE(reg.matched);
    CHECK(table.entry_count() == table.stride());

    ReducedState cur = origin;
    for (std::uint64_t n = 0; n < cfg.span_steps; ++n) {
        auto hit = table.find(cur);
        REQUIRE(hit.has_value());
        CHECK(hit->device == reg.device);
        CHECK(hit->steps == n);
        cur = advance_reduced(cur, 1);
    }
}

TEST_CASE("immediate re-observation matches at baby step zero") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 4;
    GiantTable table(cfg);
    SplitMix64 rng(3);
    ReducedState st = random_reduced(rng);
    LinkResult reg = table.link_or_register(st);
    LinkResult again = table.link_or_register(st);
    CHECK(again.matched);
    CHECK(again.device == reg.device);
    CHECK(again.steps == 0);
}

TEST_CASE("sampled links at N=1e6") {
    TrackerConfig cfg;
    cfg.span_steps = 1'000'000;
    cfg.capacity = 4;
    GiantTable table(cfg);
    SplitMix64 rng(4);
    ReducedState origin = random_reduced(rng);
    DeviceId id = table.link_or_register(origin).device;
    for (std::uint64_t n : {1ull, 999ull, 1000ull, 999'999ull, 123'456ull, 500'000ull}) {
        ReducedState moved = origin;
        // use the transition matrices for the long jumps
        moved.s2 = transition_power(1, n).apply(moved.s2);
        moved.s3 = transition_power(2, n).apply(moved.s3);
        moved.s4 = transition_power(3, n).apply(moved.s4);
        auto hit = table.find(moved);
        REQUIRE(hit.has_value());
        CHECK(hit->device == id);
        CHECK(hit->steps == n);
    }
}

TEST_CASE("unrelated states register as new devices") {
    TrackerConfig cfg;
    cfg.span_steps = 100'000;
    cfg.capacity = 64;
    GiantTable table(cfg);
    SplitMix64 rng(5);
    std::set<DeviceId> ids;
    for (int d = 0; d < 30; ++d) {
        LinkResult r = table.link_or_register(random_reduced(rng));
        CHECK_FALSE(r.matched);
        CHECK(ids.insert(r.device).second);  // fresh id each time
    }
    CHECK(table.entry_count() == 30 * table.stride());
    CHECK(table.registered_states() == 30);
}

TEST_CASE("capacity is enforced") {
    TrackerConfig cfg;
    cfg.span_steps = 100;
    cfg.capacity = 2;
    GiantTable table(cfg);
    SplitMix64 rng(6);
    table.link_or_register(random_reduced(rng));
    table.link_or_register(random_reduced(rng));
    CHECK_THROWS_AS(table.link_or_register(random_reduced(rng)), std::length_error);
}

TEST_CASE("linking is immune to reseeds between observations") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 4;
    GiantTable table(cfg);
    SplitMix64 rng(7);
    CoreState full = seed_full(rng.next_u32(), rng.next_u32(), rng.next_u32(), rng.next_u32());
    DeviceId id = table.link_or_register(reduce(full)).device;
    // arbitrary interleaving of draws and reseeds
    std::uint64_t draws = 0;
    for (int i = 0; i < 50; ++i) {
        std::uint64_t burst = rng.below(100);
        full = advance(full, burst);
        draws += burst;
        full = reseed(full, rng.next_u32());
    }
    auto hit = table.find(reduce(full));
    REQUIRE(hit.has_value());
    CHECK(hit->device == id);
    CHECK(hit->steps == draws);
}

TEST_CASE("config warning fires above the 2^70 product") {
    TrackerConfig big;
    big.span_steps = 1ull << 40;
    big.capacity = 1ull << 31;
    CHECK(GiantTable(big).config_warning().has_value());
    TrackerConfig small;
    small.span_steps = 1'000'000;
    small.capacity = 1'000'000;
    CHECK_FALSE(GiantTable(small).config_warning().has_value());
}

TEST_CASE("drift table links drifted devices") {
    TrackerConfig cfg;
    cfg.span_steps = 100'000;
    cfg.capacity = 8;
    cfg.drift_window = cfg.span_steps / 5000;  // K = 20
    DriftTable table(cfg);
    SplitMix64 rng(8);
    ReducedState origin = random_reduced(rng);
    DeviceId id = table.link_or_register(origin).device;

    for (std::uint64_t d : {0ull, 1ull, 7ull, 20ull}) {
        std::uint64_t n = 1 + rng.below(cfg.span_steps - 2 * cfg.drift_window - 2);
        ReducedState moved = inject_drift(advance_reduced(origin, n), d);
        auto hit = table.find(moved);
        REQUIRE(hit.has_value());
        CHECK(hit->device == id);
        // steps reported against the (s3,s4) progress
        CHECK(hit->steps == n + 2 * d);
    }
}

TEST_CASE("drift beyond the window misses") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 8;
    cfg.drift_window = 10;
    DriftTable table(cfg);
    SplitMix64 rng(9);
    ReducedState origin = random_reduced(rng);
    table.link_or_register(origin);
    int misses = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        std::uint64_t n = 1 + rng.below(cfg.span_steps / 2);
        ReducedState moved = inject_drift(advance_reduced(origin, n), 3 * cfg.drift_window);
        if (!table.find(moved))
            ++misses;
    }
    // the s2 window scan cannot reach 3K of drift; random matches are ~2K/2^29
    CHECK(misses == trials);
}

TEST_CASE("drift table with d=0 behaves like plain linking") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 8;
    cfg.drift_window = 2;
    DriftTable table(cfg);
    SplitMix64 rng(10);
    ReducedState origin = random_reduced(rng);
    DeviceId id = table.link_or_register(origin).device;
    for (std::uint64_t n : {0ull, 1ull, 50ull, 9'999ull}) {
        auto hit = table.find(advance_reduced(origin, n));
        REQUIRE(hit.has_value());
        CHECK(hit->device == id);
        CHECK(hit->steps == n);
    }
}

TEST_CASE("session linking shares one id across sessions with a common core") {
    TrackerConfig cfg;
    cfg.span_steps = 100'000;
    cfg.capacity = 64;
    GiantTable table(cfg);
    SplitMix64 rng(11);
    // 8-core device; two sessions observe 5 cores each, overlapping on 2.
    std::vector<ReducedState> cores;
    for (int i = 0; i < 8; ++i)
        cores.push_back(random_reduced(rng));
    std::vector<ReducedState> first(cores.begin(), cores.begin() + 5);
    SessionResult a = session_link(table, first, 8);
    CHECK_FALSE(a.matched);
    CHECK(a.common_core_guarantee);

    std::vector<ReducedState> second;
    for (int i = 3; i < 8; ++i)
        second.push_back(advance_reduced(cores[static_cast<std::size_t>(i)], 500 + i));
    SessionResult b = session_link(table, second, 8);
    CHECK(b.matched);
    CHECK(b.device == a.device);
    CHECK(b.conflicts.empty());
}

TEST_CASE("single-core sessions degenerate to link_or_register") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 8;
    GiantTable table(cfg);
    SplitMix64 rng(12);
    ReducedState st = random_reduced(rng);
    SessionResult s = session_link(table, std::vector<ReducedState>{st}, 1);
    CHECK_FALSE(s.matched);
    CHECK(s.common_core_guarantee);
    SessionResult again = session_link(table, std::vector<ReducedState>{advance_reduced(st, 42)}, 1);
    CHECK(again.matched);
    CHECK(again.device == s.device);
}

TEST_CASE("disjoint sessions get distinct ids and a guarantee warning") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 64;
    GiantTable table(cfg);
    SplitMix64 rng(13);
    std::vector<ReducedState> a = {random_reduced(rng), random_reduced(rng)};
    std::vector<ReducedState> b = {random_reduced(rng), random_reduced(rng)};
    SessionResult sa = session_link(table, a, 8);  // 2 < floor(8/2)+1
    SessionResult sb = session_link(table, b, 8);
    CHECK_FALSE(sa.common_core_guarantee);
    CHECK(sa.device != sb.device);
}

TEST_CASE("store round-trips through the binary format") {
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 16;
    GiantTable table(cfg);
    SplitMix64 rng(14);
    ReducedState a = random_reduced(rng);
    ReducedState b = random_reduced(rng);
    DeviceId ida = table.link_or_register(a).device;
    DeviceId idb = table.link_or_register(b).device;

    std::stringstream buf;
    table.save(buf);
    std::string blob = buf.str();
    // header: magic + version + N + K + stride, then 28-byte records
    CHECK(blob.size() == 4 + 2 + 8 + 8 + 4 + table.entry_count() * 28);
    CHECK(blob.substr(0, 4) == "PRTK");

    std::stringstream in(blob);
    GiantTable loaded = GiantTable::load(in, cfg.capacity);
    CHECK(loaded.entry_count() == table.entry_count());
    CHECK(loaded.registered_states() == 2);
    auto hit = loaded.find(advance_reduced(a, 777));
    REQUIRE(hit.has_value());
    CHECK(hit->device == ida);
    CHECK(hit->steps == 777);
    // new registrations continue from fresh ids
    LinkResult fresh = loaded.link_or_register(random_reduced(rng));
    CHECK(fresh.device > std::max(ida, idb));
}

TEST_CASE("store records are sorted by key") {
    TrackerConfig cfg;
    cfg.span_steps = 2'500;
    cfg.capacity = 8;
    GiantTable table(cfg);
    SplitMix64 rng(15);
    table.link_or_register(random_reduced(rng));
    table.link_or_register(random_reduced(rng));
    std::stringstream buf;
    table.save(buf);
    std::string blob = buf.str();
    const std::size_t header = 4 + 2 + 8 + 8 + 4;
    auto key_at = [&](std::size_t i) {
        std::size_t off = header + i * 28;
        std::uint64_t lo = 0, hi = 0;
        for (int b = 7; b >= 0; --b) {
            lo = (lo << 8) | static_cast<unsigned char>(blob[off + static_cast<std::size_t>(b)]);
            hi = (hi << 8) |
                 static_cast<unsigned char>(blob[off + 8 + static_cast<std::size_t>(b)]);
        }
        return std::pair<std::uint64_t, std::uint64_t>(hi, lo);
    };
    for (std::size_t i = 1; i < table.entry_count(); ++i)
        CHECK(key_at(i - 1) < key_at(i));
}

TEST_CASE("variant loader picks the right table type") {
    TrackerConfig cfg;
    cfg.span_steps = 1'000;
    cfg.capacity = 4;
    SplitMix64 rng(16);

    GiantTable plain(cfg);
    plain.link_or_register(random_reduced(rng));
    std::stringstream pbuf;
    plain.save(pbuf);
    auto v1 = load_tracker(pbuf, cfg.capacity);
    CHECK(std::holds_alternative<GiantTable>(v1));

    cfg.drift_window = 5;
    DriftTable drifty(cfg);
    drifty.link_or_register(random_reduced(rng));
    std::stringstream dbuf;
    drifty.save(dbuf);
    auto v2 = load_tracker(dbuf, cfg.capacity);
    CHECK(std::holds_alternative<DriftTable>(v2));
}

TEST_CASE("collection planning") {
    // paper-preset granularity: equations padded to 128
    CollectionPlan padded = plan_collection(500, 8, 128);
    CHECK(padded.packets_per_iteration == 31);
    CHECK(padded.iterations == 16);
    // pure constraint at k = 8
    CollectionPlan pure = plan_collection(500, 8);
    CHECK(pure.packets_per_iteration == 29);
    CHECK(pure.iterations == 17);
    CHECK_THROWS_AS(plan_collection(28, 8), std::invalid_argument);
}

TEST_CASE("entropy accounting") {
    CHECK(entropy_bits(10'000'000) == doctest::Approx(57.747).epsilon(0.00002));
    CHECK(entropy_bits(1) == doctest::Approx(81.0));
    CHECK(entropy_bits(10'000'000, 2000) == doctest::Approx(45.781).epsilon(0.0001));
}

TEST_CASE("lookup cost stays within the probe budget") {
    // The backward baby walk probes at most stride keys, and reconstructing
    // the giant index walks at most stride more.
    TrackerConfig cfg;
    cfg.span_steps = 10'000;
    cfg.capacity = 4;
    GiantTable table(cfg);
    CHECK(table.stride() == 100);
    CHECK(table.entry_count() == 0);
    SplitMix64 rng(17);
    table.link_or_register(random_reduced(rng));
    CHECK(table.entry_count() == table.stride());  // exactly sqrt(N) inserts
}

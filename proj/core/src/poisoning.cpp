#include "prtk/poisoning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "prtk/recovery.hpp"
#include "prtk/rng.hpp"

namespace prtk {

namespace {

// Published baseline rate: TXID fraction covered per (Mb/s)*s with 146-byte
// answers, rounded to four significant digits.
constexpr double kBruteCoverRate = 0.01306;

// Offset-0 port hit rate of the cache-less iteration loop.
constexpr double kCachelessHitRate = 1.0 / 11.0;

double exact_cover_rate(const AttackParams& p) {
    return 1.0e6 / (8.0 * p.packet_bytes * p.txid_space);
}

std::uint64_t burst_packet_count(const AttackParams& p) {
    double sendable = p.attack_window_s() * p.bandwidth_mbps * 1.0e6 / (8.0 * p.packet_bytes);
    double cap = static_cast<double>(p.txid_space) * p.resolver_count;
    return static_cast<std::uint64_t>(std::min(sendable, cap));
}

Aggregate aggregate_of(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty())
        return a;
    double sum = 0;
    for (double x : xs)
        sum += x;
    a.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs)
            ss += (x - a.mean) * (x - a.mean);
        double stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        a.ci_half_width = 1.96 * stddev / std::sqrt(static_cast<double>(xs.size()));
    }
    return a;
}

void finalize_outcome(SimOutcome& out) {
    std::vector<double> t, m, it;
    t.reserve(out.trials.size());
    m.reserve(out.trials.size());
    it.reserve(out.trials.size());
    for (const TrialRecord& r : out.trials) {
        t.push_back(r.total_time_s);
        m.push_back(static_cast<double>(r.packets));
        it.push_back(static_cast<double>(r.iterations));
    }
    out.time_s = aggregate_of(t);
    out.packets = aggregate_of(m);
    out.iterations = aggregate_of(it);
}

template <typename TrialFn>
SimOutcome run_trials(int trials, int threads, TrialFn&& fn) {
    if (trials < 1)
        throw std::invalid_argument("need at least one trial");
    SimOutcome out;
    out.trials.resize(static_cast<std::size_t>(trials));
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int i = 0; i < trials; ++i)
            out.trials[static_cast<std::size_t>(i)] = fn(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1))
                    out.trials[static_cast<std::size_t>(i)] = fn(i);
            });
        for (auto& th : pool)
            th.join();
    }
    finalize_outcome(out);
    return out;
}

}  // namespace

double burst_coverage(const AttackParams& p) {
    if (p.attack_window_s() <= 0)
        throw std::invalid_argument("attack window is not positive");
    if (p.resolver_count < 1)
        throw std::invalid_argument("need at least one resolver");
    double c = exact_cover_rate(p) * p.attack_window_s() * p.bandwidth_mbps /
               static_cast<double>(p.resolver_count);
    return std::min(1.0, c);
}

OffsetModel OffsetModel::reference_flow_label() {
    OffsetModel m;
    m.recovery_probability = 0.914;
    m.trigger_probability = 0.117 / 0.914;  // aggregate P(trigger) = 0.117
    m.port_given_trigger = 0.796;
    m.rule = AttackRule::flow_label;
    m.failure_probability = 0.086;
    m.no_match_probability = 0.814;
    m.match_probability = {0.093, 0.0047, 0.0014, 0.0019};
    return m;
}

OffsetModel OffsetModel::reference_ipid() {
    OffsetModel m = reference_flow_label();
    m.recovery_probability = 0.261;
    m.rule = AttackRule::ipid;
    return m;
}

AnalyticMetrics analytic_metrics(const AttackParams& p, const OffsetModel& m) {
    if (m.attack_probability() <= 0 || m.port_given_trigger <= 0)
        throw std::invalid_argument("offset model has zero attack or success probability");
    AnalyticMetrics r;
    r.coverage = burst_coverage(p);
    r.p_burst = r.coverage * m.port_given_trigger;
    r.expected_time_s = p.iteration_s() / (m.attack_probability() * r.p_burst) +
                        p.attack_window_s() / r.p_burst;
    r.expected_packets =
        static_cast<double>(p.txid_space) * p.resolver_count / m.port_given_trigger;
    r.brute_time_s = static_cast<double>(p.port_range.count()) * p.resolver_count /
                     (kBruteCoverRate * p.bandwidth_mbps);
    r.brute_packets = static_cast<double>(p.txid_space) *
                      static_cast<double>(p.port_range.count()) * p.resolver_count;
    r.gain = r.brute_time_s / r.expected_time_s;
    return r;
}

double cacheless_gain(const AttackParams& p) {
    double denom_ms =
        p.rtt_attacker_target_ms + p.inter_step_delay_ms + p.rtt_target_resolver_ms;
    if (denom_ms <= 0)
        throw std::invalid_argument("non-positive iteration time");
    return static_cast<double>(p.port_range.count()) * kCachelessHitRate *
           p.rtt_target_resolver_ms / denom_ms;
}

SimOutcome simulate_poisoning(const AttackParams& p, const OffsetModel& m,
                              std::uint64_t seed, int trials, int threads) {
    const double coverage = burst_coverage(p);
    const double attack_p = m.attack_probability();
    if (attack_p <= 0 || m.port_given_trigger <= 0)
        throw std::invalid_argument("offset model has zero attack or success probability");
    const double iter_s = p.iteration_s();
    const double window_s = p.attack_window_s();
    const std::uint64_t burst = burst_packet_count(p);

    return run_trials(trials, threads, [&](int trial) {
        SplitMix64 rng = SplitMix64::derive(seed, static_cast<std::uint64_t>(trial));
        TrialRecord rec;
        for (;;) {
            ++rec.iterations;
            rec.total_time_s += iter_s;
            if (!rng.chance(attack_p))
                continue;
            rec.total_time_s += window_s;
            rec.packets += burst;
            bool port_right = rng.chance(m.port_given_trigger);
            if (port_right && rng.chance(coverage))
                return rec;
        }
    });
}

// ---------------------------------------------------------------------------
// Machine-backed measurement

namespace {

struct SandwichOutcome {
    bool recovered = false;
    std::optional<std::uint32_t> post_offset;  // O_P
    std::optional<std::uint32_t> port_offset;  // O_U, when the port core matches
    std::uint32_t actual_port = 0;
    CoreState last_known{};  // attacker's view after the probe burst
};

// One measurement iteration: probe burst, DNS port draw on a resolver-chosen
// core (with optional extra consumption before it), follow-up draws, post probe.
SandwichOutcome run_sandwich(std::vector<CoreState>& cores, int& server_core,
                             const MeasurementConfig& cfg, const PortRange& range,
                             SplitMix64& rng) {
    const int n = static_cast<int>(cores.size());
    SandwichOutcome out;

    // Background activity between iterations.
    for (auto& c : cores)
        c = advance(c, rng.below(static_cast<std::uint64_t>(cfg.inter_iteration_skip) + 1));

    // Pre-DNS probe burst. A core switch inside the burst breaks recovery.
    std::vector<Observation> probes;
    probes.reserve(static_cast<std::size_t>(cfg.probe_count));
    for (int i = 0; i < cfg.probe_count; ++i) {
        if (rng.chance(cfg.probe_switch_probability))
            server_core = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        std::uint32_t raw = next_u32(cores[static_cast<std::size_t>(server_core)]);
        probes.push_back(Observation{static_cast<std::uint64_t>(i), cfg.probe_kind,
                                     encode_field(cfg.probe_kind, raw), 0});
    }

    RecoveryResult rec = recover_state(probes);
    const RecoveryCandidate* cand = rec.best_verified();

    // DNS query: the resolver process lands on its own core.
    int resolver_core = rng.chance(cfg.resolver_same_core_bias)
                            ? server_core
                            : static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::uint32_t before = rng.chance(cfg.noise_before_port) ? 1 : 0;
    cores[static_cast<std::size_t>(resolver_core)] =
        advance(cores[static_cast<std::size_t>(resolver_core)], before);
    out.actual_port =
        next_u32_max(cores[static_cast<std::size_t>(resolver_core)], range.count()) + range.low;
    if (resolver_core == server_core)
        out.port_offset = before;
    cores[static_cast<std::size_t>(resolver_core)] = advance(
        cores[static_cast<std::size_t>(resolver_core)],
        static_cast<std::uint64_t>(cfg.dns_followup_draws));

    // Post-DNS probe from the server context.
    if (rng.chance(cfg.probe_switch_probability))
        server_core = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::uint32_t post_raw = next_u32(cores[static_cast<std::size_t>(server_core)]);
    std::uint32_t post_field = encode_field(cfg.probe_kind, post_raw);

    if (!cand)
        return out;
    out.recovered = true;
    out.last_known = cand->end_state;
    out.post_offset = match_offset(out.last_known, cfg.probe_kind, post_field, cfg.match_window);
    return out;
}

}  // namespace

OffsetModel measure_offset_model(const MeasurementConfig& cfg, const PortRange& range,
                                 int iterations, std::uint64_t seed) {
    if (iterations < 1)
        throw std::invalid_argument("need at least one iteration");
    SplitMix64 rng(seed);
    std::vector<CoreState> cores = seed_cores(cfg.cores, rng.next());
    int server_core = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.cores)));

    int failures = 0;
    int no_match = 0;
    std::vector<int> match_at;
    int triggered = 0;
    int triggered_and_port_right = 0;

    const FieldKind port_kind = FieldKind::udp_port(range);
    for (int i = 0; i < iterations; ++i) {
        SandwichOutcome s = run_sandwich(cores, server_core, cfg, range, rng);
        if (!s.recovered) {
            ++failures;
            continue;
        }
        // O_U statistics come from matching the recorded DNS port.
        auto udp_offset = match_offset(s.last_known, port_kind, s.actual_port, cfg.match_window);
        if (!udp_offset)
            ++no_match;
        else {
            if (match_at.size() <= *udp_offset)
                match_at.resize(*udp_offset + 1, 0);
            ++match_at[*udp_offset];
        }
        if (s.post_offset && *s.post_offset >= 4) {
            ++triggered;
            std::uint32_t predicted;
            if (cfg.probe_kind.tag == FieldKind::Tag::ipid) {
                auto preds = predict(s.last_known, port_kind, *s.post_offset - 4 + 1);
                predicted = preds.back().field_value;
            } else {
                predicted = predict(s.last_known, port_kind, 1).front().field_value;
            }
            if (predicted == s.actual_port)
                ++triggered_and_port_right;
        }
    }

    OffsetModel m;
    const double total = iterations;
    m.rule = cfg.probe_kind.tag == FieldKind::Tag::ipid ? AttackRule::ipid
                                                        : AttackRule::flow_label;
    m.failure_probability = failures / total;
    m.recovery_probability = 1.0 - m.failure_probability;
    m.no_match_probability = no_match / total;
    for (int c : match_at)
        m.match_probability.push_back(c / total);
    double p_trigger_unconditional = triggered / total;
    m.trigger_probability = m.recovery_probability > 0
                                ? p_trigger_unconditional / m.recovery_probability
                                : 0.0;
    m.port_given_trigger =
        triggered > 0 ? static_cast<double>(triggered_and_port_right) / triggered : 0.0;
    return m;
}

SimOutcome simulate_poisoning_machine(const AttackParams& p, const MeasurementConfig& cfg,
                                      std::uint64_t seed, int trials) {
    const double coverage = burst_coverage(p);
    const double iter_s = p.iteration_s();
    const double window_s = p.attack_window_s();
    const std::uint64_t burst = burst_packet_count(p);
    const FieldKind port_kind = FieldKind::udp_port(p.port_range);

    return run_trials(trials, 1, [&](int trial) {
        SplitMix64 rng = SplitMix64::derive(seed, static_cast<std::uint64_t>(trial));
        std::vector<CoreState> cores = seed_cores(cfg.cores, rng.next());
        int server_core = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.cores)));
        TrialRecord rec;
        for (;;) {
            ++rec.iterations;
            rec.total_time_s += iter_s;
            SandwichOutcome s = run_sandwich(cores, server_core, cfg, p.port_range, rng);
            if (!s.recovered || !s.post_offset || *s.post_offset < 4)
                continue;
            rec.total_time_s += window_s;
            rec.packets += burst;
            std::uint32_t predicted;
            if (cfg.probe_kind.tag == FieldKind::Tag::ipid) {
                auto preds = predict(s.last_known, port_kind, *s.post_offset - 4 + 1);
                predicted = preds.back().field_value;
            } else {
                predicted = predict(s.last_known, port_kind, 1).front().field_value;
            }
            if (predicted == s.actual_port && rng.chance(coverage))
                return rec;
        }
    });
}

}  // namespace prtk

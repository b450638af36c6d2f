#pragma once

#include <cstdint>
#include <vector>

#include "prtk/field_codec.hpp"
#include "prtk/machine.hpp"

namespace prtk {

struct AttackParams {
    double bandwidth_mbps = 30.0;          // b, effective spoofing bandwidth
    double rtt_attacker_target_ms = 83.47; // attacker <-> target round trip
    double rtt_target_resolver_ms = 55.29; // target <-> recursive resolver
    double resolver_timeout_s = 1.0;       // recursive resolver gives up after this
    double inter_step_delay_ms = 224.0;    // attacker-inserted delay per iteration
    int resolver_count = 2;                // |R| configured recursive resolvers
    PortRange port_range = kPortRangeModern;
    int packet_bytes = 146;                // spoofed answer size at the IP layer
    int txid_space = 65536;

    double attack_window_s() const {
        return resolver_timeout_s +
               (rtt_target_resolver_ms - rtt_attacker_target_ms) / 1000.0;
    }
    double iteration_s() const {
        return (inter_step_delay_ms + 2.0 * rtt_attacker_target_ms) / 1000.0;
    }
};

// Fraction of the (TXID x resolver) space one spoofed burst covers, capped
// at 1. With 146-byte answers the per-Mb/s rate works out to 0.013064.
double burst_coverage(const AttackParams& p);

enum class AttackRule {
    flow_label,  // attack iff the post-probe offset is >= 4; predict offset 0
    ipid,        // predict the port at post-probe offset minus 4
};

// Per-iteration outcome probabilities of the sandwich measurement, either
// supplied directly or measured against a simulated machine.
struct OffsetModel {
    double recovery_probability = 1.0;  // consistent core-state extraction
    double trigger_probability = 0.117; // P(post-probe offset >= 4 | recovered)
    double port_given_trigger = 0.796;  // P(port predicted right | attack fired)
    AttackRule rule = AttackRule::flow_label;

    // Marginal outcome distribution, kept for reporting.
    double failure_probability = 0.0;
    double no_match_probability = 0.0;
    std::vector<double> match_probability;  // P(match at offset j)

    double attack_probability() const { return recovery_probability * trigger_probability; }

    // Defaults measured on a 4-core reference target.
    static OffsetModel reference_flow_label();
    static OffsetModel reference_ipid();
};

struct AnalyticMetrics {
    double coverage = 0;
    double p_burst = 0;           // burst poisons the cache
    double expected_time_s = 0;   // E(t_Total)
    double expected_packets = 0;  // E(M)
    double brute_time_s = 0;      // brute-force baseline E(t)
    double brute_packets = 0;     // brute-force baseline E(M), exact
    double gain = 0;              // brute_time_s / expected_time_s
};

AnalyticMetrics analytic_metrics(const AttackParams& p, const OffsetModel& m);

// Expected speedup over brute force for targets without a DNS cache, where
// every iteration ends in a short burst sized by the target<->resolver RTT.
double cacheless_gain(const AttackParams& p);

struct TrialRecord {
    std::uint64_t iterations = 0;
    double total_time_s = 0;
    std::uint64_t packets = 0;
};

struct Aggregate {
    double mean = 0;
    double ci_half_width = 0;  // 95% normal-approximation interval
};

struct SimOutcome {
    std::vector<TrialRecord> trials;
    Aggregate time_s;
    Aggregate packets;
    Aggregate iterations;
};

// Monte Carlo over independent attack runs; every trial runs to success.
// Each trial draws from its own stream derived from (seed, trial index), so
// results are identical for a given seed regardless of thread count.
SimOutcome simulate_poisoning(const AttackParams& p, const OffsetModel& m,
                              std::uint64_t seed, int trials, int threads = 1);

// Knobs of the simulated measurement procedure (pre-DNS probe burst, DNS
// query on a resolver-chosen core, post-DNS probe).
struct MeasurementConfig {
    int cores = 4;
    int probe_count = 8;
    FieldKind probe_kind = FieldKind::flow_label();
    double probe_switch_probability = 0.013;  // per probe-burst core switch
    double resolver_same_core_bias = 0.0;     // 0: resolver core uniform
    int dns_followup_draws = 3;               // consumption after the port draw
    double noise_before_port = 0.05;          // extra hidden draw before the port
    std::uint32_t match_window = 16;
    int inter_iteration_skip = 4;             // background draws between iterations
};

// Runs the sandwich measurement against a live multi-core machine and
// tallies the offset statistics into an OffsetModel.
OffsetModel measure_offset_model(const MeasurementConfig& cfg, const PortRange& range,
                                 int iterations, std::uint64_t seed);

// Full attack simulation against the simulated machine rather than a fixed
// offset model: recovery, offset matching and port prediction all run for real.
SimOutcome simulate_poisoning_machine(const AttackParams& p, const MeasurementConfig& cfg,
                                      std::uint64_t seed, int trials);

}  // namespace prtk

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace prtk {

struct PortRange {
    std::uint32_t low = 32768;
    std::uint32_t high = 60999;

    std::uint32_t count() const { return high - low + 1; }
    friend bool operator==(const PortRange&, const PortRange&) = default;
};

// The three hard-wired kernel ranges; arbitrary pairs are accepted elsewhere.
inline constexpr PortRange kPortRangeModern{32768, 60999};
inline constexpr PortRange kPortRangeLegacy{32768, 61000};
inline constexpr PortRange kPortRangeAndroid{37000, 50000};

struct FieldKind {
    enum class Tag { flow_label, ipid, udp_port };
    Tag tag = Tag::flow_label;
    PortRange range{};  // used only by udp_port

    static FieldKind flow_label() { return {Tag::flow_label, {}}; }
    static FieldKind ipid() { return {Tag::ipid, {}}; }
    static FieldKind udp_port(PortRange r) { return {Tag::udp_port, r}; }

    friend bool operator==(const FieldKind&, const FieldKind&) = default;
};

inline std::uint32_t swap16(std::uint32_t x) { return (x >> 16) | (x << 16); }

// flow_label: swap 16-bit halves, keep 20 LSBs. ipid: 16 LSBs.
// udp_port: floor((H-L+1) * x / 2^32) + L.
std::uint32_t encode_field(const FieldKind& kind, std::uint32_t x);

// Number of observable field bits per sample (ports: depends on the chosen k).
int field_bits(const FieldKind& kind);

struct PortInterval {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
};

// Exact preimage of a port under the scaling map: every x in [lo, hi] encodes
// to P and no x outside does. Throws when P is outside the range.
PortInterval port_interval(std::uint32_t port, const PortRange& range);

enum class MsbStrategy { guess, discard, enumerate };

struct MsbEstimate {
    int k = 0;
    bool certain = false;
    std::uint32_t i_star = 0;        // lower candidate for the k MSBs
    std::uint32_t cover_low = 0;     // |I_{i*} ∩ X| when ambiguous
    std::uint32_t cover_high = 0;    // |I_{i*+1} ∩ X| when ambiguous
    std::optional<std::uint32_t> resolved;  // per-strategy single value if any

    // Candidate MSB values: one when certain, both when ambiguous.
    std::vector<std::uint32_t> candidates() const;
};

// Extracts the k most significant bits of the PRNG output behind a port.
// The preimage interval spans at most two aligned 2^(32-k) blocks; when it
// spans two, the strategy decides: guess takes the majority-cover block
// (ties to the lower), discard resolves nothing, enumerate keeps both.
MsbEstimate msb_estimate(std::uint32_t port, const PortRange& range, int k,
                         MsbStrategy strategy);

struct SuccessProbabilities {
    double p_k = 0;                 // P(preimage inside a single block)
    double p_guess_k = 0;           // P(guess strategy picks correctly)
    double all_samples_bound = 0;   // p_guess_k ^ ceil(113/k)
};

SuccessProbabilities success_probabilities(int k, const PortRange& range);

// Largest admissible k for a range: 2^k must stay below H-L+1.
int max_msb_bits(const PortRange& range);

}  // namespace prtk

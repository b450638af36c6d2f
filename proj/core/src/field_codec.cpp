#include "prtk/field_codec.hpp"

#include <cmath>
#include <stdexcept>

#include "prtk/prng.hpp"

namespace prtk {

namespace {

using u128 = unsigned __int128;

constexpr u128 kTwo32 = u128{1} << 32;

std::uint64_t ceil_div(u128 num, std::uint64_t den) {
    return static_cast<std::uint64_t>((num + den - 1) / den);
}

}  // namespace

std::uint32_t encode_field(const FieldKind& kind, std::uint32_t x) {
    switch (kind.tag) {
        case FieldKind::Tag::flow_label:
            return swap16(x) & 0xFFFFFu;
        case FieldKind::Tag::ipid:
            return x & 0xFFFFu;
        case FieldKind::Tag::udp_port:
            return scale_u32_max(kind.range.count(), x) + kind.range.low;
    }
    return 0;
}

int field_bits(const FieldKind& kind) {
    switch (kind.tag) {
        case FieldKind::Tag::flow_label:
            return 20;
        case FieldKind::Tag::ipid:
            return 16;
        case FieldKind::Tag::udp_port:
            return static_cast<int>(std::ceil(std::log2(kind.range.count())));
    }
    return 0;
}

PortInterval port_interval(std::uint32_t port, const PortRange& range) {
    if (port < range.low || port > range.high)
        throw std::invalid_argument("port outside the configured range");
    const std::uint64_t n = range.count();
    const std::uint64_t off = port - range.low;
    std::uint64_t lo = ceil_div(kTwo32 * off, n);
    std::uint64_t hi = ceil_div(kTwo32 * (off + 1), n) - 1;
    if (hi > 0xFFFFFFFFull)
        hi = 0xFFFFFFFFull;  // top port: the preimage ends at 2^32 - 1
    return PortInterval{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)};
}

int max_msb_bits(const PortRange& range) {
    int k = 0;
    while ((1u << (k + 1)) < range.count())
        ++k;
    return k;  // largest k with 2^k < H-L+1
}

std::vector<std::uint32_t> MsbEstimate::candidates() const {
    if (certain)
        return {i_star};
    return {i_star, i_star + 1};
}

MsbEstimate msb_estimate(std::uint32_t port, const PortRange& range, int k,
                         MsbStrategy strategy) {
    if (k <= 0 || (std::uint64_t{1} << k) >= range.count())
        throw std::invalid_argument("k must satisfy 0 < k < log2(H-L+1)");
    PortInterval x = port_interval(port, range);
    const int shift = 32 - k;
    MsbEstimate est;
    est.k = k;
    est.i_star = x.lo >> shift;
    if ((x.hi >> shift) == est.i_star) {
        est.certain = true;
        est.resolved = est.i_star;
        return est;
    }
    const std::uint64_t boundary = (std::uint64_t{est.i_star} + 1) << shift;
    est.cover_low = static_cast<std::uint32_t>(boundary - x.lo);
    est.cover_high = static_cast<std::uint32_t>(std::uint64_t{x.hi} - boundary + 1);
    switch (strategy) {
        case MsbStrategy::guess:
            est.resolved = est.cover_low >= est.cover_high ? est.i_star : est.i_star + 1;
            break;
        case MsbStrategy::discard:
        case MsbStrategy::enumerate:
            break;
    }
    return est;
}

SuccessProbabilities success_probabilities(int k, const PortRange& range) {
    if (k <= 0 || (std::uint64_t{1} << k) >= range.count())
        throw std::invalid_argument("k must satisfy 0 < k < log2(H-L+1)");
    const double n = range.count();
    SuccessProbabilities p;
    p.p_k = 1.0 - std::ldexp(1.0, k) / n;
    p.p_guess_k = 1.0 - std::ldexp(1.0, k - 1) / n;
    const int samples = (kStateBits + k - 1) / k;
    p.all_samples_bound = std::pow(p.p_guess_k, samples);
    return p;
}

}  // namespace prtk

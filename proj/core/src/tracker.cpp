#include "prtk/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prtk {

namespace {

constexpr std::uint64_t kLiveTotalBits = 82;  // k2 + k3 + k4

void check_minima(const ReducedState& st) {
    if (st.s2 < kRegisters[1].seed_min || st.s3 < kRegisters[2].seed_min ||
        st.s4 < kRegisters[3].seed_min)
        throw std::invalid_argument("reduced state violates register minima");
}

std::uint64_t mix_key(const Key128& key) {
    std::uint64_t h = key.lo ^ (key.hi * 0x9E3779B97F4A7C15ull);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDull;
    h ^= h >> 33;
    h *= 0xC4CEB9FE1A85EC53ull;
    h ^= h >> 33;
    return h;
}

}  // namespace

Key128 pack_reduced(const ReducedState& st) {
    const std::uint64_t live2 = (st.s2 & kRegisters[1].mask) >> kRegisters[1].dead_bits;  // 29 bits
    const std::uint64_t live3 = (st.s3 & kRegisters[2].mask) >> kRegisters[2].dead_bits;  // 28 bits
    const std::uint64_t live4 = (st.s4 & kRegisters[3].mask) >> kRegisters[3].dead_bits;  // 25 bits
    Key128 key;
    key.lo = live2 | (live3 << 29) | (live4 << 57);
    key.hi = live4 >> 7;  // top 18 of the 25 s4 bits
    return key;
}

ReducedState unpack_reduced(const Key128& key) {
    ReducedState st;
    st.s2 = static_cast<std::uint32_t>(key.lo & ((1ull << 29) - 1)) << kRegisters[1].dead_bits;
    st.s3 = static_cast<std::uint32_t>((key.lo >> 29) & ((1ull << 28) - 1)) << kRegisters[2].dead_bits;
    std::uint64_t live4 = (key.lo >> 57) | (key.hi << 7);
    st.s4 = static_cast<std::uint32_t>(live4 & ((1ull << 25) - 1)) << kRegisters[3].dead_bits;
    return st;
}

Key128 pack_drift(const ReducedState& st) {
    const std::uint64_t live3 = (st.s3 & kRegisters[2].mask) >> kRegisters[2].dead_bits;
    const std::uint64_t live4 = (st.s4 & kRegisters[3].mask) >> kRegisters[3].dead_bits;
    return Key128{live3 | (live4 << 28), 0};
}

std::uint64_t bsgs_stride(std::uint64_t span_steps) {
    if (span_steps == 0)
        throw std::invalid_argument("span must be positive");
    auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(span_steps)));
    while (s * s < span_steps)
        ++s;
    while (s > 1 && (s - 1) * (s - 1) >= span_steps)
        --s;
    return s;
}

namespace detail {

SlotMap::SlotMap() : slots_(1024), mask_(1023) {}

std::size_t SlotMap::index_of(const Key128& key) const {
    return static_cast<std::size_t>(mix_key(key)) & mask_;
}

void SlotMap::grow() {
    std::vector<Slot> old = std::move(slots_);
    slots_.assign(old.size() * 2, Slot{});
    mask_ = slots_.size() - 1;
    for (const Slot& s : old) {
        if (s.id == 0)
            continue;
        std::size_t i = index_of(s.key);
        while (slots_[i].id != 0)
            i = (i + 1) & mask_;
        slots_[i] = s;
    }
}

void SlotMap::insert(const Key128& key, std::uint64_t id, std::uint32_t s2) {
    if ((count_ + 1) * 3 > slots_.size() * 2)  // keep load under 2/3
        grow();
    std::size_t i = index_of(key);
    while (slots_[i].id != 0)
        i = (i + 1) & mask_;
    slots_[i] = Slot{key, id, s2};
    ++count_;
}

bool SlotMap::contains(const Key128& key, std::uint64_t id) const {
    return for_each_match(key, [&](const Slot& s) { return s.id == id; });
}

RegisterSteppers::RegisterSteppers(std::uint64_t stride) {
    for (int i = 0; i < 3; ++i) {
        const int reg = i + 1;  // registers s2, s3, s4
        BitMatrix32 step = register_step_matrix(reg);
        forward[static_cast<std::size_t>(i)] = step;
        backward[static_cast<std::size_t>(i)] = step.invert_live(kRegisters[reg].mask);
        giant[static_cast<std::size_t>(i)] = step.pow(stride);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GiantTable

GiantTable::GiantTable(const TrackerConfig& config)
    : cfg_(config), stride_(bsgs_stride(config.span_steps)), steppers_(stride_) {
    if (cfg_.capacity == 0)
        throw std::invalid_argument("capacity must be positive");
}

std::optional<std::string> GiantTable::config_warning() const {
    long double product = static_cast<long double>(cfg_.capacity) *
                          static_cast<long double>(cfg_.span_steps);
    if (product > std::ldexp(1.0L, 70))
        return "capacity * span exceeds 2^70; false-link bound R*N/2^82 is no longer small";
    return std::nullopt;
}

ReducedState GiantTable::step_back(const ReducedState& s) const {
    return ReducedState{steppers_.backward[0].apply(s.s2), steppers_.backward[1].apply(s.s3),
                        steppers_.backward[2].apply(s.s4)};
}

ReducedState GiantTable::step_giant(const ReducedState& s) const {
    return ReducedState{steppers_.giant[0].apply(s.s2), steppers_.giant[1].apply(s.s3),
                        steppers_.giant[2].apply(s.s4)};
}

std::uint64_t GiantTable::giant_index_of(const ReducedState& at_match, DeviceId id) const {
    // Stored offsets run 0..stride-1; walking forward by giant strides counts
    // how many entries remain ahead of the matched one.
    std::uint64_t ahead = 0;
    ReducedState cur = step_giant(at_match);
    while (ahead < stride_ && map_.contains(pack_reduced(cur), id)) {
        ++ahead;
        cur = step_giant(cur);
    }
    return stride_ - 1 - ahead;
}

std::optional<LinkResult> GiantTable::find(const ReducedState& state) const {
    check_minima(state);
    ReducedState cur = state;
    for (std::uint64_t j = 0; j < stride_; ++j) {
        DeviceId hit = 0;
        map_.for_each_match(pack_reduced(cur), [&](const detail::SlotMap::Slot& s) {
            hit = s.id;
            return true;
        });
        if (hit != 0) {
            std::uint64_t g = giant_index_of(cur, hit);
            return LinkResult{hit, true, g * stride_ + j};
        }
        cur = step_back(cur);
    }
    return std::nullopt;
}

void GiantTable::register_state(const ReducedState& state, DeviceId id) {
    check_minima(state);
    if (registered_ >= cfg_.capacity)
        throw std::length_error("tracker capacity exceeded");
    ReducedState cur = state;
    for (std::uint64_t g = 0; g < stride_; ++g) {
        map_.insert(pack_reduced(cur), id, 0);
        cur = step_giant(cur);
    }
    ++registered_;
    if (id >= next_id_)
        next_id_ = id + 1;
}

LinkResult GiantTable::link_or_register(const ReducedState& state) {
    if (auto hit = find(state))
        return *hit;
    DeviceId id = allocate_id();
    register_state(state, id);
    return LinkResult{id, false, std::nullopt};
}

// ---------------------------------------------------------------------------
// DriftTable

DriftTable::DriftTable(const TrackerConfig& config)
    : cfg_(config), stride_(bsgs_stride(config.span_steps)), steppers_(stride_) {
    if (cfg_.capacity == 0)
        throw std::invalid_argument("capacity must be positive");
    if (cfg_.drift_window == 0)
        throw std::invalid_argument("drift table needs a positive drift window");
}

std::optional<std::string> DriftTable::config_warning() const {
    long double product = static_cast<long double>(cfg_.capacity) *
                          static_cast<long double>(cfg_.span_steps) *
                          static_cast<long double>(2 * cfg_.drift_window);
    if (product > std::ldexp(1.0L, 70))
        return "2K * capacity * span exceeds 2^70; random-match rate is no longer small";
    return std::nullopt;
}

std::pair<std::uint32_t, std::uint32_t> DriftTable::step_back34(std::uint32_t s3,
                                                                std::uint32_t s4) const {
    return {steppers_.backward[1].apply(s3), steppers_.backward[2].apply(s4)};
}

std::pair<std::uint32_t, std::uint32_t> DriftTable::step_giant34(std::uint32_t s3,
                                                                 std::uint32_t s4) const {
    return {steppers_.giant[1].apply(s3), steppers_.giant[2].apply(s4)};
}

std::uint64_t DriftTable::giant_index_of(std::uint32_t s3, std::uint32_t s4, DeviceId id) const {
    std::uint64_t ahead = 0;
    auto [c3, c4] = step_giant34(s3, s4);
    while (ahead < stride_ && map_.contains(pack_drift(ReducedState{0, c3, c4}), id)) {
        ++ahead;
        std::tie(c3, c4) = step_giant34(c3, c4);
    }
    return stride_ - 1 - ahead;
}

bool DriftTable::s2_confirms(std::uint32_t stored_s2, std::uint32_t observed_s2,
                             std::uint64_t n) const {
    // s2 trails the (s3,s4) progress by the accumulated drift, at most K;
    // scan the full 2K+1 window around n to also absorb opposite skew.
    const std::uint64_t k = cfg_.drift_window;
    const std::uint64_t t0 = n > k ? n - k : 0;
    const std::uint64_t t1 = n + k;
    const BitMatrix32 to_start = register_step_matrix(1).pow(t0);
    std::uint32_t cand = to_start.apply(stored_s2);
    for (std::uint64_t t = t0; t <= t1; ++t) {
        if (cand == observed_s2)
            return true;
        cand = steppers_.forward[0].apply(cand);
    }
    return false;
}

std::optional<LinkResult> DriftTable::find(const ReducedState& state) const {
    check_minima(state);
    std::uint32_t c3 = state.s3;
    std::uint32_t c4 = state.s4;
    for (std::uint64_t j = 0; j < stride_; ++j) {
        std::optional<LinkResult> result;
        map_.for_each_match(pack_drift(ReducedState{0, c3, c4}),
                            [&](const detail::SlotMap::Slot& s) {
                                std::uint64_t g = giant_index_of(c3, c4, s.id);
                                std::uint64_t n = g * stride_ + j;
                                if (s2_confirms(s.s2, state.s2, n)) {
                                    result = LinkResult{s.id, true, n};
                                    return true;
                                }
                                return false;
                            });
        if (result)
            return result;
        std::tie(c3, c4) = step_back34(c3, c4);
    }
    return std::nullopt;
}

void DriftTable::register_state(const ReducedState& state, DeviceId id) {
    check_minima(state);
    if (registered_ >= cfg_.capacity)
        throw std::length_error("tracker capacity exceeded");
    std::uint32_t c3 = state.s3;
    std::uint32_t c4 = state.s4;
    for (std::uint64_t g = 0; g < stride_; ++g) {
        map_.insert(pack_drift(ReducedState{0, c3, c4}), id, state.s2);
        std::tie(c3, c4) = step_giant34(c3, c4);
    }
    ++registered_;
    if (id >= next_id_)
        next_id_ = id + 1;
}

LinkResult DriftTable::link_or_register(const ReducedState& state) {
    if (auto hit = find(state))
        return *hit;
    DeviceId id = allocate_id();
    register_state(state, id);
    return LinkResult{id, false, std::nullopt};
}

// ---------------------------------------------------------------------------

template <typename Table>
SessionResult session_link(Table& table, std::span<const ReducedState> states, int core_count) {
    if (states.empty())
        throw std::invalid_argument("session without states");
    SessionResult result;
    result.common_core_guarantee =
        static_cast<int>(states.size()) >= core_count / 2 + 1;

    // Lookup pass: tally matches per existing device, in first-match order.
    std::vector<std::pair<DeviceId, int>> tally;
    std::vector<std::optional<DeviceId>> matched_device(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (auto hit = table.find(states[i])) {
            matched_device[i] = hit->device;
            auto it = std::find_if(tally.begin(), tally.end(),
                                   [&](const auto& p) { return p.first == hit->device; });
            if (it == tally.end())
                tally.emplace_back(hit->device, 1);
            else
                ++it->second;
        }
    }

    DeviceId winner;
    if (!tally.empty()) {
        // Most matching cores wins; ties keep the first-matched device.
        auto best = tally.begin();
        for (auto it = tally.begin(); it != tally.end(); ++it)
            if (it->second > best->second)
                best = it;
        winner = best->first;
        result.matched = true;
        for (const auto& [id, count] : tally)
            if (id != winner)
                result.conflicts.push_back(id);
    } else {
        winner = table.link_or_register(states[0]).device;
        matched_device[0] = winner;  // just registered
    }
    result.device = winner;

    // Register the states not already known anywhere under the winner.
    for (std::size_t i = 0; i < states.size(); ++i)
        if (!matched_device[i])
            table.register_state(states[i], winner);
    return result;
}

template SessionResult session_link<GiantTable>(GiantTable&, std::span<const ReducedState>, int);
template SessionResult session_link<DriftTable>(DriftTable&, std::span<const ReducedState>, int);

CollectionPlan plan_collection(int budget_packets, int k_min, int equations_target) {
    if (k_min <= 0 || equations_target <= 0)
        throw std::invalid_argument("invalid collection constraints");
    const int samples_needed = (equations_target + k_min - 1) / k_min;
    // floor((L+1)/2) >= samples_needed, so a single core switch still leaves
    // one same-core run long enough to solve.
    const int packets = 2 * samples_needed - 1;
    if (packets > budget_packets)
        throw std::invalid_argument("budget below the minimal burst length");
    return CollectionPlan{packets, budget_packets / packets};
}

double entropy_bits(std::uint64_t span_steps, std::optional<std::uint64_t> drift_window) {
    if (span_steps == 0)
        throw std::invalid_argument("span must be positive");
    double bits = static_cast<double>(kLiveTotalBits) - 1.0 -
                  std::log2(static_cast<double>(span_steps));
    if (drift_window && *drift_window > 0)
        bits -= std::log2(2.0 * static_cast<double>(*drift_window));
    return bits;
}

}  // namespace prtk

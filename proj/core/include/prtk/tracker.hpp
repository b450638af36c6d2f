#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "prtk/gf2.hpp"
#include "prtk/prng.hpp"

namespace prtk {

// Reseed-immune projection of a core state: s1 is the only register a reseed
// touches, so (s2, s3, s4) survive across reseed events.
struct ReducedState {
    std::uint32_t s2 = 0;
    std::uint32_t s3 = 0;
    std::uint32_t s4 = 0;

    friend bool operator==(const ReducedState&, const ReducedState&) = default;
};

inline ReducedState reduce(const CoreState& st) { return ReducedState{st.s2, st.s3, st.s4}; }

using DeviceId = std::uint64_t;

struct TrackerConfig {
    std::uint64_t span_steps = 1'000'000;  // N: max step distance still linkable
    std::uint64_t capacity = 1'000'000;    // R: max registered core-states
    int max_cores = 8;                     // C: per-device core bound
    std::uint64_t drift_window = 0;        // K: max relative drift (drift tables)
};

struct LinkResult {
    DeviceId device = 0;
    bool matched = false;
    std::optional<std::uint64_t> steps;  // advance since registration, when matched
};

struct Key128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    friend bool operator==(const Key128&, const Key128&) = default;
};

// 82-bit key: live bits of s2, s3, s4 concatenated, top bits zero.
Key128 pack_reduced(const ReducedState& st);
ReducedState unpack_reduced(const Key128& key);
// 53-bit key over (s3, s4) only, for the drift variant.
Key128 pack_drift(const ReducedState& st);

namespace detail {

// Open-addressing multimap, append-only. Duplicate keys are kept (the drift
// table maps one (s3,s4) key to a list of (device, s2) tuples).
class SlotMap {
  public:
    struct Slot {
        Key128 key;
        std::uint64_t id = 0;  // 0 marks an empty slot; device ids start at 1
        std::uint32_t s2 = 0;
    };

    SlotMap();
    void insert(const Key128& key, std::uint64_t id, std::uint32_t s2);
    // Calls f for each slot with the key; stops early when f returns true.
    template <typename F>
    bool for_each_match(const Key128& key, F&& f) const {
        std::size_t i = index_of(key);
        while (slots_[i].id != 0) {
            if (slots_[i].key == key && f(slots_[i]))
                return true;
            i = (i + 1) & mask_;
        }
        return false;
    }
    bool contains(const Key128& key, std::uint64_t id) const;
    std::size_t size() const { return count_; }
    const std::vector<Slot>& slots() const { return slots_; }

  private:
    std::vector<Slot> slots_;
    std::size_t mask_ = 0;
    std::size_t count_ = 0;

    std::size_t index_of(const Key128& key) const;
    void grow();
};

// The three reseed-surviving registers, in fixed order s2, s3, s4.
struct RegisterSteppers {
    std::array<BitMatrix32, 3> forward;
    std::array<BitMatrix32, 3> backward;
    std::array<BitMatrix32, 3> giant;  // forward^stride

    explicit RegisterSteppers(std::uint64_t stride);
};

}  // namespace detail

std::uint64_t bsgs_stride(std::uint64_t span_steps);  // ceil(sqrt(N))

// Baby-step giant-step observation linker. Registration stores ceil(sqrt(N))
// stride-spaced states of the new device (offsets 0, stride, 2*stride, ...);
// a lookup walks ceil(sqrt(N)) baby steps backward from the observed state,
// so an observation n steps past registration hits the entry at offset
// a*stride with n = a*stride + j for every 0 <= n < N.
class GiantTable {
  public:
    explicit GiantTable(const TrackerConfig& config);

    LinkResult link_or_register(const ReducedState& state);
    // Lookup without side effects.
    std::optional<LinkResult> find(const ReducedState& state) const;
    // Registers a state under an existing device (session linking).
    void register_state(const ReducedState& state, DeviceId id);

    const TrackerConfig& config() const { return cfg_; }
    std::uint64_t stride() const { return stride_; }
    std::size_t entry_count() const { return map_.size(); }
    std::uint64_t registered_states() const { return registered_; }
    std::optional<std::string> config_warning() const;

    void save(std::ostream& out) const;
    static GiantTable load(std::istream& in, std::uint64_t capacity);

  private:
    TrackerConfig cfg_;
    std::uint64_t stride_;
    detail::RegisterSteppers steppers_;
    detail::SlotMap map_;
    DeviceId next_id_ = 1;
    std::uint64_t registered_ = 0;

    DeviceId allocate_id() { return next_id_++; }
    ReducedState step_back(const ReducedState& s) const;
    ReducedState step_giant(const ReducedState& s) const;
    std::uint64_t giant_index_of(const ReducedState& at_match, DeviceId id) const;
};

// Drift-tolerant variant: keyed on (s3, s4) only; each candidate match is
// confirmed by scanning the stored s2 across a 2K+1 step window around the
// (s3, s4) progress, absorbing interrupt-induced relative drift up to K.
class DriftTable {
  public:
    explicit DriftTable(const TrackerConfig& config);

    LinkResult link_or_register(const ReducedState& state);
    std::optional<LinkResult> find(const ReducedState& state) const;
    void register_state(const ReducedState& state, DeviceId id);

    const TrackerConfig& config() const { return cfg_; }
    std::uint64_t stride() const { return stride_; }
    std::size_t entry_count() const { return map_.size(); }
    std::uint64_t registered_states() const { return registered_; }
    std::optional<std::string> config_warning() const;

    void save(std::ostream& out) const;
    static DriftTable load(std::istream& in, std::uint64_t capacity);

  private:
    TrackerConfig cfg_;
    std::uint64_t stride_;
    detail::RegisterSteppers steppers_;
    detail::SlotMap map_;
    DeviceId next_id_ = 1;
    std::uint64_t registered_ = 0;

    DeviceId allocate_id() { return next_id_++; }
    std::pair<std::uint32_t, std::uint32_t> step_back34(std::uint32_t s3, std::uint32_t s4) const;
    std::pair<std::uint32_t, std::uint32_t> step_giant34(std::uint32_t s3, std::uint32_t s4) const;
    std::uint64_t giant_index_of(std::uint32_t s3, std::uint32_t s4, DeviceId id) const;
    bool s2_confirms(std::uint32_t stored_s2, std::uint32_t observed_s2, std::uint64_t n) const;
};

struct SessionResult {
    DeviceId device = 0;
    bool matched = false;
    std::vector<DeviceId> conflicts;      // other devices some state matched
    bool common_core_guarantee = false;   // supplied states >= floor(C/2)+1
};

// Links a multi-core observation session: any state matching an existing
// device claims that DeviceId (most matching cores wins on conflict);
// otherwise all states register under one fresh device.
template <typename Table>
SessionResult session_link(Table& table, std::span<const ReducedState> states, int core_count);

extern template SessionResult session_link<GiantTable>(GiantTable&,
                                                       std::span<const ReducedState>, int);
extern template SessionResult session_link<DriftTable>(DriftTable&,
                                                       std::span<const ReducedState>, int);

// Load either table variant based on the stored drift window.
std::variant<GiantTable, DriftTable> load_tracker(std::istream& in, std::uint64_t capacity);

struct CollectionPlan {
    int packets_per_iteration = 0;  // L
    int iterations = 0;             // I
};

// Plans a packet-budgeted collection: L is the smallest burst length whose
// longer half still yields `equations_target` bits at k_min bits per sample
// (so one core switch inside the burst leaves a solvable same-core run),
// I = budget / L.
CollectionPlan plan_collection(int budget_packets, int k_min, int equations_target = kStateBits);

// Device-ID entropy of the linking scheme: 82 - 1 - log2(N), minus log2(2K)
// for the drift variant.
double entropy_bits(std::uint64_t span_steps, std::optional<std::uint64_t> drift_window = {});

}  // namespace prtk

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prtk/field_codec.hpp"
#include "prtk/gf2.hpp"
#include "prtk/prng.hpp"
#include "prtk/recovery_types.hpp"

namespace prtk {

struct RecoveryOptions {
    int k_min = 8;   // port recovery sweeps k from k_max down to k_min
    int k_max = 13;
    MsbStrategy strategy = MsbStrategy::guess;
    int enumerate_budget = 256;   // max branch combinations for enumerate
    int gap_search_budget = 0;    // 0 disables the unknown-gap search
    int gap_search_max = 2;       // per-position cap in the gap search
};

struct RecoveryCandidate {
    CoreState end_state{};  // state right after the last observed draw
    int k_used = 0;         // bits contributed per sample
    bool verified = false;  // held-out bits of every sample reproduced
};

struct RecoveryDiagnostics {
    int rank = 0;
    bool consistent = true;
    std::size_t equation_count = 0;
};

struct RecoveryResult {
    enum class Outcome { recovered, underdetermined, inconsistent };
    Outcome outcome = Outcome::underdetermined;
    std::vector<RecoveryCandidate> candidates;  // strongest verification first
    RecoveryDiagnostics diagnostics;

    const RecoveryCandidate* best_verified() const {
        for (const auto& c : candidates)
            if (c.verified)
                return &c;
        return nullptr;
    }
};

// Rebuilds a core state from a same-kind observation burst. Flow labels give
// 20 bits per sample and IPIDs 16; ports contribute the k most significant
// bits via the interval analysis, with the remaining low bits of every sample
// used as the verification check.
RecoveryResult recover_state(std::span<const Observation> observations,
                             const RecoveryOptions& options = {});

struct Prediction {
    std::uint32_t offset = 0;
    std::uint32_t field_value = 0;
};

// Field values derived from the next `window` outputs; offset 0 is the
// immediate next draw.
std::vector<Prediction> predict(const CoreState& state, const FieldKind& kind,
                                std::uint32_t window);

// Smallest offset in [0, window) whose prediction equals the observed value.
std::optional<std::uint32_t> match_offset(const CoreState& state, const FieldKind& kind,
                                          std::uint32_t observed, std::uint32_t window);

}  // namespace prtk

#include "prtk/recovery.hpp"

#include <algorithm>
#include <stdexcept>

namespace prtk {

namespace {

// Output-bit positions observed for one sample value, as (output bit, bit value).
struct ObservedBits {
    std::array<std::pair<int, int>, 20> bits;
    int count = 0;

    void add(int out_bit, int value_bit) { bits[static_cast<std::size_t>(count++)] = {out_bit, value_bit}; }
};

ObservedBits flow_label_bits(std::uint32_t value) {
    ObservedBits b;
    // Field bits 0..15 come from output bits 16..31, field bits 16..19 from 0..3.
    for (int j = 16; j <= 31; ++j)
        b.add(j, static_cast<int>((value >> (j - 16)) & 1u));
    for (int j = 0; j <= 3; ++j)
        b.add(j, static_cast<int>((value >> (j + 16)) & 1u));
    return b;
}

ObservedBits ipid_bits(std::uint32_t value) {
    ObservedBits b;
    for (int j = 0; j <= 15; ++j)
        b.add(j, static_cast<int>((value >> j) & 1u));
    return b;
}

ObservedBits msb_bits(std::uint32_t msb_value, int k) {
    ObservedBits b;
    for (int j = 32 - k; j <= 31; ++j)
        b.add(j, static_cast<int>((msb_value >> (j - (32 - k))) & 1u));
    return b;
}

void validate_observations(std::span<const Observation> obs) {
    if (obs.empty())
        throw std::invalid_argument("no observations");
    const FieldKind& kind = obs.front().kind;
    for (const Observation& o : obs) {
        if (!(o.kind == kind))
            throw std::invalid_argument("observations mix field kinds");
        switch (kind.tag) {
            case FieldKind::Tag::flow_label:
                if (o.value > 0xFFFFFu)
                    throw std::invalid_argument("flow label out of range");
                break;
            case FieldKind::Tag::ipid:
                if (o.value > 0xFFFFu)
                    throw std::invalid_argument("ipid out of range");
                break;
            case FieldKind::Tag::udp_port:
                if (o.value < kind.range.low || o.value > kind.range.high)
                    throw std::invalid_argument("port outside the configured range");
                break;
        }
    }
}

struct Attempt {
    Solution solution;
    RecoveryCandidate candidate;
    bool has_candidate = false;
};

// Replays the consumption pattern from a solved initial state and checks every
// sample; for ports this covers the low bits the equations never used.
bool verify_solution(const CoreState& initial, std::span<const Observation> obs,
                     CoreState& end_state) {
    CoreState st = initial;
    bool ok = true;
    for (const Observation& o : obs) {
        st = advance(st, o.gap_hint);
        std::uint32_t x = next_u32(st);
        if (encode_field(o.kind, x) != o.value)
            ok = false;
    }
    end_state = st;
    return ok;
}

// Builds and solves the system for one fixed assignment of per-sample bits.
// `sample_bits[i]` may be empty (discarded sample): the advance still happens.
Attempt run_attempt(std::span<const Observation> obs,
                    std::span<const ObservedBits> sample_bits, int k_used) {
    SymbolicSystem sys;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sys.advance(obs[i].gap_hint);
        sys.advance(1);
        const ObservedBits& bits = sample_bits[i];
        for (int t = 0; t < bits.count; ++t)
            sys.add_output_equation(bits.bits[static_cast<std::size_t>(t)].first,
                                    bits.bits[static_cast<std::size_t>(t)].second);
    }
    Attempt a;
    a.solution = sys.solve_collected();
    if (a.solution.kind == Solution::Kind::unique) {
        CoreState end{};
        bool ok = verify_solution(a.solution.state, obs, end);
        a.candidate = RecoveryCandidate{end, k_used, ok};
        a.has_candidate = true;
    }
    return a;
}

struct SweepState {
    RecoveryResult result;
    int best_rank = -1;
    bool saw_inconsistent = false;
    bool saw_unique = false;
};

void fold_attempt(SweepState& sw, const Attempt& a, std::size_t equation_count) {
    if (a.solution.rank > sw.best_rank) {
        sw.best_rank = a.solution.rank;
        sw.result.diagnostics.rank = a.solution.rank;
        sw.result.diagnostics.equation_count = equation_count;
    }
    if (a.solution.kind == Solution::Kind::inconsistent) {
        sw.saw_inconsistent = true;
        sw.result.diagnostics.consistent = false;
    }
    if (a.has_candidate) {
        sw.saw_unique = true;
        sw.result.candidates.push_back(a.candidate);
    }
}

void finalize(SweepState& sw) {
    std::stable_sort(sw.result.candidates.begin(), sw.result.candidates.end(),
                     [](const RecoveryCandidate& a, const RecoveryCandidate& b) {
                         return a.verified > b.verified;
                     });
    if (sw.saw_unique)
        sw.result.outcome = RecoveryResult::Outcome::recovered;
    else if (sw.saw_inconsistent)
        sw.result.outcome = RecoveryResult::Outcome::inconsistent;
    else
        sw.result.outcome = RecoveryResult::Outcome::underdetermined;
}

// Port recovery for one k: resolve each sample per strategy, enumerate branch
// combinations when asked, stop at the first verified candidate.
void sweep_ports_at_k(SweepState& sw, std::span<const Observation> obs,
                      const RecoveryOptions& opt, int k) {
    const PortRange range = obs.front().kind.range;
    std::vector<ObservedBits> fixed(obs.size());
    std::vector<std::size_t> ambiguous;  // indices resolved per combination
    std::vector<MsbEstimate> estimates(obs.size());
    std::size_t equations = 0;

    for (std::size_t i = 0; i < obs.size(); ++i) {
        estimates[i] = msb_estimate(obs[i].value, range, k, opt.strategy);
        if (estimates[i].resolved) {
            fixed[i] = msb_bits(*estimates[i].resolved, k);
            equations += static_cast<std::size_t>(k);
        } else if (opt.strategy == MsbStrategy::enumerate) {
            ambiguous.push_back(i);
            equations += static_cast<std::size_t>(k);
        }
        // discard: ambiguous sample contributes no equations
    }

    if (opt.strategy != MsbStrategy::enumerate || ambiguous.empty()) {
        fold_attempt(sw, run_attempt(obs, fixed, k), equations);
        return;
    }

    std::uint64_t combos = ambiguous.size() >= 63
                               ? std::uint64_t(-1)
                               : (std::uint64_t{1} << ambiguous.size());
    combos = std::min<std::uint64_t>(combos, static_cast<std::uint64_t>(opt.enumerate_budget));
    for (std::uint64_t mask = 0; mask < combos; ++mask) {
        std::vector<ObservedBits> bits = fixed;
        for (std::size_t t = 0; t < ambiguous.size(); ++t) {
            const MsbEstimate& e = estimates[ambiguous[t]];
            // Bit 0 of the mask keeps the majority-cover block; a set bit flips.
            bool take_high = ((mask >> t) & 1u) != 0;
            std::uint32_t base = e.cover_low >= e.cover_high ? e.i_star : e.i_star + 1;
            std::uint32_t alt = e.cover_low >= e.cover_high ? e.i_star + 1 : e.i_star;
            bits[ambiguous[t]] = msb_bits(take_high ? alt : base, k);
        }
        Attempt a = run_attempt(obs, bits, k);
        fold_attempt(sw, a, equations);
        if (a.has_candidate && a.candidate.verified)
            return;
    }
}

void sweep_all(SweepState& sw, std::span<const Observation> obs, const RecoveryOptions& opt) {
    const FieldKind& kind = obs.front().kind;
    switch (kind.tag) {
        case FieldKind::Tag::flow_label:
        case FieldKind::Tag::ipid: {
            std::vector<ObservedBits> bits(obs.size());
            std::size_t equations = 0;
            for (std::size_t i = 0; i < obs.size(); ++i) {
                bits[i] = kind.tag == FieldKind::Tag::flow_label ? flow_label_bits(obs[i].value)
                                                                 : ipid_bits(obs[i].value);
                equations += static_cast<std::size_t>(bits[i].count);
            }
            fold_attempt(sw, run_attempt(obs, bits, bits.front().count), equations);
            return;
        }
        case FieldKind::Tag::udp_port: {
            int k_hi = std::min(opt.k_max, max_msb_bits(kind.range));
            for (int k = k_hi; k >= opt.k_min; --k) {
                sweep_ports_at_k(sw, obs, opt, k);
                if (!sw.result.candidates.empty() && sw.result.candidates.front().verified)
                    return;
            }
            return;
        }
    }
}

// Extra-gap patterns over the n-1 inter-sample positions, smallest total
// extra consumption first, capped at `budget` patterns.
std::vector<std::vector<std::uint32_t>> gap_patterns(std::size_t positions, int per_gap_max,
                                                     int budget) {
    std::vector<std::vector<std::uint32_t>> out;
    std::vector<std::uint32_t> cur(positions, 0);
    const int max_total = static_cast<int>(positions) * per_gap_max;
    auto rec = [&](auto&& self, std::size_t idx, int remaining) -> void {
        if (static_cast<int>(out.size()) >= budget)
            return;
        if (idx == positions) {
            if (remaining == 0)
                out.push_back(cur);
            return;
        }
        for (int v = 0; v <= std::min(per_gap_max, remaining); ++v) {
            cur[idx] = static_cast<std::uint32_t>(v);
            self(self, idx + 1, remaining - v);
        }
        cur[idx] = 0;
    };
    for (int total = 1; total <= max_total && static_cast<int>(out.size()) < budget; ++total)
        rec(rec, 0, total);
    return out;
}

}  // namespace

RecoveryResult recover_state(std::span<const Observation> observations,
                             const RecoveryOptions& options) {
    validate_observations(observations);
    std::vector<Observation> obs(observations.begin(), observations.end());
    std::stable_sort(obs.begin(), obs.end(),
                     [](const Observation& a, const Observation& b) { return a.seq < b.seq; });

    SweepState sw;
    sweep_all(sw, obs, options);

    if (options.gap_search_budget > 0 && obs.size() > 1) {
        bool have_verified =
            !sw.result.candidates.empty() &&
            std::any_of(sw.result.candidates.begin(), sw.result.candidates.end(),
                        [](const RecoveryCandidate& c) { return c.verified; });
        if (!have_verified) {
            for (const auto& extra :
                 gap_patterns(obs.size() - 1, options.gap_search_max, options.gap_search_budget)) {
                std::vector<Observation> shifted = obs;
                for (std::size_t i = 1; i < shifted.size(); ++i)
                    shifted[i].gap_hint = obs[i].gap_hint + extra[i - 1];
                SweepState trial;
                sweep_all(trial, shifted, options);
                if (!trial.result.candidates.empty() && trial.result.candidates.front().verified) {
                    for (auto& c : trial.result.candidates)
                        sw.result.candidates.push_back(c);
                    sw.saw_unique = true;
                    sw.result.diagnostics = trial.result.diagnostics;
                    break;
                }
            }
        }
    }

    finalize(sw);
    return sw.result;
}

std::vector<Prediction> predict(const CoreState& state, const FieldKind& kind,
                                std::uint32_t window) {
    if (window < 1)
        throw std::invalid_argument("window must be at least 1");
    std::vector<Prediction> out;
    out.reserve(window);
    CoreState st = state;
    for (std::uint32_t j = 0; j < window; ++j)
        out.push_back(Prediction{j, encode_field(kind, next_u32(st))});
    return out;
}

std::optional<std::uint32_t> match_offset(const CoreState& state, const FieldKind& kind,
                                          std::uint32_t observed, std::uint32_t window) {
    CoreState st = state;
    for (std::uint32_t j = 0; j < window; ++j)
        if (encode_field(kind, next_u32(st)) == observed)
            return j;
    return std::nullopt;
}

}  // namespace prtk

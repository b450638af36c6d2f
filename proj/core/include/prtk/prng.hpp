#pragma once

#include <array>
#include <cstdint>

namespace prtk {

// One per-core generator instance: four combined Tausworthe registers
// (register lengths 31/29/28/25, 113 significant bits total).
struct CoreState {
    std::uint32_t s1 = 0;
    std::uint32_t s2 = 0;
    std::uint32_t s3 = 0;
    std::uint32_t s4 = 0;

    friend bool operator==(const CoreState&, const CoreState&) = default;
};

// Per-register recurrence parameters: s' = ((s & mask) << d) ^ (((s << a) ^ s) >> b).
// The mask doubles as the live-bit mask; bits below it never influence the sequence.
struct RegisterParams {
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t mask;
    std::uint32_t d;
    int live_bits;           // number of significant bits
    int dead_bits;           // trailing bits the recurrence ignores
    std::uint32_t seed_min;  // smallest admissible seed word (= lowest live bit)
};

inline constexpr std::array<RegisterParams, 4> kRegisters = {{
    {6u, 13u, 0xFFFFFFFEu, 18u, 31, 1, 2u},
    {2u, 27u, 0xFFFFFFF8u, 2u, 29, 3, 8u},
    {13u, 21u, 0xFFFFFFF0u, 7u, 28, 4, 16u},
    {3u, 12u, 0xFFFFFF80u, 13u, 25, 7, 128u},
}};

inline constexpr int kStateBits = 113;  // 31 + 29 + 28 + 25

// Advances one register one composite step.
constexpr std::uint32_t step_register(std::uint32_t s, const RegisterParams& p) {
    return ((s & p.mask) << p.d) ^ (((s << p.a) ^ s) >> p.b);
}

// The raw linear update map on all four registers, no output, no minima handling.
constexpr CoreState step_registers(CoreState st) {
    return CoreState{
        step_register(st.s1, kRegisters[0]),
        step_register(st.s2, kRegisters[1]),
        step_register(st.s3, kRegisters[2]),
        step_register(st.s4, kRegisters[3]),
    };
}

// Bumps a seed word below the register minimum up into the admissible range.
constexpr std::uint32_t adjust_seed_word(std::uint32_t w, std::uint32_t min) {
    return w < min ? w + min : w;
}

// Builds a full core state from four seed words, enforcing per-register minima.
CoreState seed_full(std::uint32_t w1, std::uint32_t w2, std::uint32_t w3, std::uint32_t w4);
CoreState seed_full(const std::array<std::uint32_t, 4>& words);

// Advances the state one step and returns the 32-bit output word.
inline std::uint32_t next_u32(CoreState& st) {
    st = step_registers(st);
    return st.s1 ^ st.s2 ^ st.s3 ^ st.s4;
}

// The bounded-draw scaling map: floor(m * x / 2^32).
constexpr std::uint32_t scale_u32_max(std::uint32_t m, std::uint32_t x) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(m) * x) >> 32);
}

// Draws one value in [0, m); consumes exactly one output.
inline std::uint32_t next_u32_max(CoreState& st, std::uint32_t m) {
    return scale_u32_max(m, next_u32(st));
}

// Mixes an entropy word into s1 only; s2..s4 are untouched.
CoreState reseed(CoreState st, std::uint32_t entropy);

// n composite steps (n may be 0).
CoreState advance(CoreState st, std::uint64_t n);

}  // namespace prtk

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "prtk/prng.hpp"

namespace prtk {

// Coefficient row over the 113 state unknowns, packed into two 64-bit words.
// Unknown layout: register 1 live bits first (indices 0..30), then register 2
// (31..59), register 3 (60..87), register 4 (88..112).
struct BitVec113 {
    std::array<std::uint64_t, 2> w{0, 0};

    bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1u; }
    void set(int i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void flip(int i) { w[i >> 6] ^= std::uint64_t{1} << (i & 63); }
    bool any() const { return (w[0] | w[1]) != 0; }

    BitVec113& operator^=(const BitVec113& o) {
        w[0] ^= o.w[0];
        w[1] ^= o.w[1];
        return *this;
    }
    friend BitVec113 operator^(BitVec113 a, const BitVec113& b) { return a ^= b; }
    friend bool operator==(const BitVec113&, const BitVec113&) = default;

    // Index of the lowest set bit; undefined when empty.
    int leading() const;
    // Parity of the AND with another vector (GF(2) dot product).
    bool dot(const BitVec113& o) const;
};

// First unknown index of each register in the 113-bit layout.
inline constexpr std::array<int, 4> kUnknownBase = {0, 31, 60, 88};

// Packs a concrete state's live bits into the unknown layout (dead bits dropped).
BitVec113 unknowns_from_state(const CoreState& st);
// Inverse of unknowns_from_state; dead bits come back as zero.
CoreState state_from_unknowns(const BitVec113& u);

// One linear equation: <lhs, unknowns> = rhs.
struct Equation {
    BitVec113 lhs;
    std::uint8_t rhs = 0;
};

struct Solution {
    enum class Kind { unique, underdetermined, inconsistent };
    Kind kind = Kind::underdetermined;
    CoreState state{};  // meaningful only when kind == unique
    int rank = 0;
};

// Gaussian elimination over GF(2), fixed left-to-right pivot order.
// Redundant equations are reduced and checked; a contradiction anywhere
// yields Kind::inconsistent.
Solution solve(std::span<const Equation> equations);

// Dense 32x32 GF(2) matrix; row j holds the input-bit mask feeding output bit j.
struct BitMatrix32 {
    std::array<std::uint32_t, 32> row{};

    static BitMatrix32 identity();
    std::uint32_t apply(std::uint32_t v) const;
    friend BitMatrix32 operator*(const BitMatrix32& a, const BitMatrix32& b);
    friend bool operator==(const BitMatrix32&, const BitMatrix32&) = default;

    BitMatrix32 pow(std::uint64_t e) const;
    // Inverse restricted to the live-bit subspace; dead rows/columns are zero.
    BitMatrix32 invert_live(std::uint32_t live_mask) const;
};

// Single-step matrix of one register (index 0..3).
BitMatrix32 register_step_matrix(int reg);

// Matrix applying e concrete steps of the given register (1-based index per
// the register naming s1..s4 is avoided: reg is 0..3).
BitMatrix32 transition_power(int reg, std::uint64_t e);

// Tracks every register bit as a linear form over the 113 initial-state
// unknowns, and accumulates observed-output equations.
class SymbolicSystem {
  public:
    // Identity embedding: live bit j of register r maps to its own unknown,
    // dead bits to the zero form.
    SymbolicSystem();

    // Applies the step-linear map `steps` times to all coefficient rows.
    void advance(std::uint64_t steps);

    // Linear form of output bit j of the value produced *at* the current
    // state (i.e. after the advance that produced it): XOR of the four
    // registers' rows at bit j.
    BitVec113 output_form(int bit) const;
    std::array<BitVec113, 32> output_forms() const;

    // Coefficient row of register reg (0..3), bit position (0..31).
    BitVec113 state_form(int reg, int bit) const;

    // Evaluates the symbolic register rows at a concrete initial state.
    CoreState evaluate(const CoreState& initial) const;
    // Evaluates the 32 output forms at a concrete initial state.
    std::uint32_t evaluate_output(const CoreState& initial) const;

    // Equation collection (redundancy is kept for consistency checking).
    void add_equation(const BitVec113& lhs, int observed_bit);
    // Adds the equation for output bit `bit` observed as `observed_bit`.
    void add_output_equation(int bit, int observed_bit);
    const std::vector<Equation>& equations() const { return equations_; }

    Solution solve_collected() const { return solve(equations_); }

  private:
    // rows_[reg][bit]: mask over the *initial* bit positions of that register.
    // Register independence keeps each row inside its own register's word.
    std::array<std::array<std::uint32_t, 32>, 4> rows_;
    std::vector<Equation> equations_;

    void advance_one();
    void advance_by_matrix(const BitMatrix32& m, int reg);
};

}  // namespace prtk

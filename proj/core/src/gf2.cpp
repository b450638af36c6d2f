#include "prtk/gf2.hpp"

#include <bit>
#include <optional>
#include <stdexcept>

namespace prtk {

int BitVec113::leading() const {
    if (w[0] != 0)
        return std::countr_zero(w[0]);
    return 64 + std::countr_zero(w[1]);
}

bool BitVec113::dot(const BitVec113& o) const {
    return (std::popcount(w[0] & o.w[0]) + std::popcount(w[1] & o.w[1])) & 1;
}

BitVec113 unknowns_from_state(const CoreState& st) {
    const std::array<std::uint32_t, 4> words = {st.s1, st.s2, st.s3, st.s4};
    BitVec113 u;
    for (int r = 0; r < 4; ++r) {
        const auto& p = kRegisters[r];
        std::uint32_t live = (words[r] & p.mask) >> p.dead_bits;
        for (int i = 0; i < p.live_bits; ++i)
            if ((live >> i) & 1u)
                u.set(kUnknownBase[r] + i);
    }
    return u;
}

CoreState state_from_unknowns(const BitVec113& u) {
    std::array<std::uint32_t, 4> words{};
    for (int r = 0; r < 4; ++r) {
        const auto& p = kRegisters[r];
        std::uint32_t live = 0;
        for (int i = 0; i < p.live_bits; ++i)
            if (u.get(kUnknownBase[r] + i))
                live |= 1u << i;
        words[r] = live << p.dead_bits;
    }
    return CoreState{words[0], words[1], words[2], words[3]};
}

Solution solve(std::span<const Equation> equations) {
    std::array<std::optional<Equation>, kStateBits> pivot;
    int rank = 0;
    bool inconsistent = false;

    for (const Equation& in : equations) {
        BitVec113 lhs = in.lhs;
        std::uint8_t rhs = in.rhs & 1u;
        while (lhs.any()) {
            int c = lhs.leading();
            if (!pivot[c]) {
                pivot[c] = Equation{lhs, rhs};
                ++rank;
                break;
            }
            lhs ^= pivot[c]->lhs;
            rhs ^= pivot[c]->rhs;
        }
        if (!lhs.any() && rhs != 0)
            inconsistent = true;  // keep reducing the rest for full diagnostics
    }

    if (inconsistent)
        return Solution{Solution::Kind::inconsistent, {}, rank};
    if (rank < kStateBits)
        return Solution{Solution::Kind::underdetermined, {}, rank};

    // Back substitution, highest pivot column first.
    BitVec113 x;
    for (int c = kStateBits - 1; c >= 0; --c) {
        BitVec113 lhs = pivot[c]->lhs;
        lhs.flip(c);
        std::uint8_t v = pivot[c]->rhs ^ static_cast<std::uint8_t>(lhs.dot(x));
        if (v)
            x.set(c);
    }
    return Solution{Solution::Kind::unique, state_from_unknowns(x), rank};
}

BitMatrix32 BitMatrix32::identity() {
    BitMatrix32 m;
    for (int j = 0; j < 32; ++j)
        m.row[j] = 1u << j;
    return m;
}

std::uint32_t BitMatrix32::apply(std::uint32_t v) const {
    std::uint32_t out = 0;
    for (int j = 0; j < 32; ++j)
        out |= static_cast<std::uint32_t>(std::popcount(row[j] & v) & 1) << j;
    return out;
}

BitMatrix32 operator*(const BitMatrix32& a, const BitMatrix32& b) {
    BitMatrix32 c;
    for (int j = 0; j < 32; ++j) {
        std::uint32_t acc = 0;
        std::uint32_t bits = a.row[j];
        while (bits) {
            int m = std::countr_zero(bits);
            bits &= bits - 1;
            acc ^= b.row[m];
        }
        c.row[j] = acc;
    }
    return c;
}

BitMatrix32 BitMatrix32::pow(std::uint64_t e) const {
    BitMatrix32 result = identity();
    BitMatrix32 base = *this;
    while (e) {
        if (e & 1)
            result = result * base;
        base = base * base;
        e >>= 1;
    }
    return result;
}

BitMatrix32 BitMatrix32::invert_live(std::uint32_t live_mask) const {
    // Gauss-Jordan on the live block, augmented with the identity.
    std::array<std::uint32_t, 32> lhs{};
    std::array<std::uint32_t, 32> rhs{};
    std::vector<int> live;
    for (int j = 0; j < 32; ++j) {
        if ((live_mask >> j) & 1u) {
            lhs[j] = row[j] & live_mask;
            rhs[j] = 1u << j;
            live.push_back(j);
        }
    }
    std::array<int, 32> pivot_row_of_col;
    pivot_row_of_col.fill(-1);
    std::vector<int> free_rows = live;
    for (int col : live) {
        int pr = -1;
        for (std::size_t i = 0; i < free_rows.size(); ++i) {
            if ((lhs[free_rows[i]] >> col) & 1u) {
                pr = free_rows[i];
                free_rows.erase(free_rows.begin() + static_cast<long>(i));
                break;
            }
        }
        if (pr < 0)
            throw std::invalid_argument("matrix is singular on the live subspace");
        pivot_row_of_col[col] = pr;
        for (int r : live) {
            if (r != pr && ((lhs[r] >> col) & 1u)) {
                lhs[r] ^= lhs[pr];
                rhs[r] ^= rhs[pr];
            }
        }
    }
    BitMatrix32 inv{};
    for (int col : live)
        inv.row[col] = rhs[pivot_row_of_col[col]];
    return inv;
}

BitMatrix32 register_step_matrix(int reg) {
    const auto& p = kRegisters[reg];
    BitMatrix32 m{};
    for (int j = 0; j < 32; ++j) {
        std::uint32_t r = 0;
        int src = j - static_cast<int>(p.d);
        if (src >= 0 && ((p.mask >> src) & 1u))
            r ^= 1u << src;
        int shifted = j + static_cast<int>(p.b);
        if (shifted <= 31) {
            int from = shifted - static_cast<int>(p.a);
            if (from >= 0)
                r ^= 1u << from;
            r ^= 1u << shifted;
        }
        m.row[j] = r;
    }
    return m;
}

BitMatrix32 transition_power(int reg, std::uint64_t e) {
    return register_step_matrix(reg).pow(e);
}

SymbolicSystem::SymbolicSystem() {
    for (int r = 0; r < 4; ++r) {
        const auto& p = kRegisters[r];
        for (int j = 0; j < 32; ++j)
            rows_[r][j] = (p.mask >> j) & 1u ? 1u << j : 0u;
    }
}

void SymbolicSystem::advance_one() {
    for (int r = 0; r < 4; ++r) {
        const auto& p = kRegisters[r];
        const auto& old = rows_[r];
        std::array<std::uint32_t, 32> next{};
        for (int j = 0; j < 32; ++j) {
            std::uint32_t acc = 0;
            int src = j - static_cast<int>(p.d);
            if (src >= 0 && ((p.mask >> src) & 1u))
                acc ^= old[src];
            int shifted = j + static_cast<int>(p.b);
            if (shifted <= 31) {
                int from = shifted - static_cast<int>(p.a);
                if (from >= 0)
                    acc ^= old[from];
                acc ^= old[shifted];
            }
            next[j] = acc;
        }
        rows_[r] = next;
    }
}

void SymbolicSystem::advance_by_matrix(const BitMatrix32& m, int reg) {
    const auto& old = rows_[reg];
    std::array<std::uint32_t, 32> next{};
    for (int j = 0; j < 32; ++j) {
        std::uint32_t acc = 0;
        std::uint32_t bits = m.row[j];
        while (bits) {
            int b = std::countr_zero(bits);
            bits &= bits - 1;
            acc ^= old[b];
        }
        next[j] = acc;
    }
    rows_[reg] = next;
}

void SymbolicSystem::advance(std::uint64_t steps) {
    if (steps <= 64) {
        for (std::uint64_t i = 0; i < steps; ++i)
            advance_one();
        return;
    }
    for (int r = 0; r < 4; ++r)
        advance_by_matrix(transition_power(r, steps), r);
}

BitVec113 SymbolicSystem::state_form(int reg, int bit) const {
    const auto& p = kRegisters[reg];
    BitVec113 v;
    std::uint32_t bits = rows_[reg][bit] & p.mask;
    while (bits) {
        int pos = std::countr_zero(bits);
        bits &= bits - 1;
        v.set(kUnknownBase[reg] + pos - p.dead_bits);
    }
    return v;
}

BitVec113 SymbolicSystem::output_form(int bit) const {
    BitVec113 v;
    for (int r = 0; r < 4; ++r)
        v ^= state_form(r, bit);
    return v;
}

std::array<BitVec113, 32> SymbolicSystem::output_forms() const {
    std::array<BitVec113, 32> forms;
    for (int j = 0; j < 32; ++j)
        forms[j] = output_form(j);
    return forms;
}

CoreState SymbolicSystem::evaluate(const CoreState& initial) const {
    const std::array<std::uint32_t, 4> words = {initial.s1, initial.s2, initial.s3, initial.s4};
    std::array<std::uint32_t, 4> out{};
    for (int r = 0; r < 4; ++r) {
        std::uint32_t masked = words[r] & kRegisters[r].mask;
        for (int j = 0; j < 32; ++j)
            out[r] |= static_cast<std::uint32_t>(std::popcount(rows_[r][j] & masked) & 1) << j;
    }
    return CoreState{out[0], out[1], out[2], out[3]};
}

std::uint32_t SymbolicSystem::evaluate_output(const CoreState& initial) const {
    CoreState st = evaluate(initial);
    return st.s1 ^ st.s2 ^ st.s3 ^ st.s4;
}

void SymbolicSystem::add_equation(const BitVec113& lhs, int observed_bit) {
    equations_.push_back(Equation{lhs, static_cast<std::uint8_t>(observed_bit & 1)});
}

void SymbolicSystem::add_output_equation(int bit, int observed_bit) {
    add_equation(output_form(bit), observed_bit);
}

}  // namespace prtk

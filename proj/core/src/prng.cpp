#include "prtk/prng.hpp"

namespace prtk {

CoreState seed_full(std::uint32_t w1, std::uint32_t w2, std::uint32_t w3, std::uint32_t w4) {
    return CoreState{
        adjust_seed_word(w1, kRegisters[0].seed_min),
        adjust_seed_word(w2, kRegisters[1].seed_min),
        adjust_seed_word(w3, kRegisters[2].seed_min),
        adjust_seed_word(w4, kRegisters[3].seed_min),
    };
}

CoreState seed_full(const std::array<std::uint32_t, 4>& words) {
    return seed_full(words[0], words[1], words[2], words[3]);
}

CoreState reseed(CoreState st, std::uint32_t entropy) {
    st.s1 = adjust_seed_word(st.s1 ^ entropy, kRegisters[0].seed_min);
    return st;
}

CoreState advance(CoreState st, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i)
        st = step_registers(st);
    return st;
}

}  // namespace prtk

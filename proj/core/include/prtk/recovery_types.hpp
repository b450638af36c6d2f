#pragma once

#include <cstdint>

#include "prtk/field_codec.hpp"

namespace prtk {

// One captured protocol-field value. gap_hint is the assumed number of hidden
// PRNG consumptions since the previous observation in the burst.
struct Observation {
    std::uint64_t seq = 0;
    FieldKind kind = FieldKind::flow_label();
    std::uint32_t value = 0;
    std::uint32_t gap_hint = 0;
};

}  // namespace prtk

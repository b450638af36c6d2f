#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "prtk/machine.hpp"
#include "prtk/recovery_types.hpp"

namespace prtk {

// Trace files are line-delimited JSON objects with fields
// time_ms, core, consumer, raw_u32 (optional) and field_value.
void write_trace(std::ostream& out, std::span<const TraceEvent> trace);
std::vector<TraceEvent> read_trace(std::istream& in);

// Observation files carry seq, kind, value and gap_hint per line.
void write_observations(std::ostream& out, std::span<const Observation> obs);
std::vector<Observation> read_observations(std::istream& in);

// Extracts the observations of one field kind from a trace. When
// gaps_from_trace is set, hidden-consumption markers between samples become
// gap hints; drift markers cannot be expressed as gaps and are ignored.
std::vector<Observation> observations_from_trace(std::span<const TraceEvent> trace,
                                                 const FieldKind& kind,
                                                 bool gaps_from_trace = false);

}  // namespace prtk

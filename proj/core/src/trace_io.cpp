#include "prtk/trace_io.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace prtk {

namespace {

using nlohmann::json;

std::string kind_name(const FieldKind& kind) {
    switch (kind.tag) {
        case FieldKind::Tag::flow_label: return "flow_label";
        case FieldKind::Tag::ipid: return "ipid";
        case FieldKind::Tag::udp_port: return "udp_port";
    }
    return "?";
}

FieldKind kind_from(const json& j) {
    std::string name = j.at("kind").get<std::string>();
    if (name == "flow_label")
        return FieldKind::flow_label();
    if (name == "ipid")
        return FieldKind::ipid();
    if (name == "udp_port") {
        PortRange r = kPortRangeModern;
        if (j.contains("range_low"))
            r = PortRange{j.at("range_low").get<std::uint32_t>(),
                          j.at("range_high").get<std::uint32_t>()};
        return FieldKind::udp_port(r);
    }
    throw std::invalid_argument("unknown observation kind: " + name);
}

}  // namespace

void write_trace(std::ostream& out, std::span<const TraceEvent> trace) {
    for (const TraceEvent& e : trace) {
        json j;
        j["time_ms"] = e.time_ms;
        j["core"] = e.core;
        j["consumer"] = consumer_name(e.consumer);
        if (e.raw)
            j["raw_u32"] = *e.raw;
        j["field_value"] = e.field_value;
        out << j.dump() << '\n';
    }
}

std::vector<TraceEvent> read_trace(std::istream& in) {
    std::vector<TraceEvent> trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        json j = json::parse(line);
        TraceEvent e;
        e.time_ms = j.at("time_ms").get<std::uint64_t>();
        e.core = j.at("core").get<int>();
        auto consumer = consumer_from_name(j.at("consumer").get<std::string>());
        if (!consumer)
            throw std::invalid_argument("unknown consumer in trace: " + line);
        e.consumer = *consumer;
        if (j.contains("raw_u32"))
            e.raw = j.at("raw_u32").get<std::uint32_t>();
        e.field_value = j.value("field_value", 0u);
        trace.push_back(e);
    }
    return trace;
}

void write_observations(std::ostream& out, std::span<const Observation> obs) {
    for (const Observation& o : obs) {
        json j;
        j["seq"] = o.seq;
        j["kind"] = kind_name(o.kind);
        if (o.kind.tag == FieldKind::Tag::udp_port) {
            j["range_low"] = o.kind.range.low;
            j["range_high"] = o.kind.range.high;
        }
        j["value"] = o.value;
        j["gap_hint"] = o.gap_hint;
        out << j.dump() << '\n';
    }
}

std::vector<Observation> read_observations(std::istream& in) {
    std::vector<Observation> obs;
    std::string line;
    std::uint64_t fallback_seq = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        json j = json::parse(line);
        Observation o;
        o.seq = j.value("seq", fallback_seq);
        o.kind = kind_from(j);
        o.value = j.at("value").get<std::uint32_t>();
        o.gap_hint = j.value("gap_hint", 0u);
        obs.push_back(o);
        ++fallback_seq;
    }
    return obs;
}

std::vector<Observation> observations_from_trace(std::span<const TraceEvent> trace,
                                                 const FieldKind& kind,
                                                 bool gaps_from_trace) {
    Consumer wanted;
    switch (kind.tag) {
        case FieldKind::Tag::flow_label: wanted = Consumer::flow_label; break;
        case FieldKind::Tag::ipid: wanted = Consumer::ipid; break;
        case FieldKind::Tag::udp_port: wanted = Consumer::udp_port; break;
        default: throw std::invalid_argument("bad field kind");
    }
    std::vector<Observation> obs;
    std::uint32_t pending_gap = 0;
    std::uint64_t seq = 0;
    for (const TraceEvent& e : trace) {
        if (e.consumer == wanted) {
            obs.push_back(Observation{seq++, kind, e.field_value,
                                      gaps_from_trace ? pending_gap : 0u});
            pending_gap = 0;
        } else if (e.consumer == Consumer::hidden) {
            ++pending_gap;
        }
        // drift/reseed markers are not gaps; recovery flags them via inconsistency
    }
    return obs;
}

}  // namespace prtk

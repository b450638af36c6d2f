#include "prtk/scenario.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace prtk {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double d = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("bad numeric value for " + key + ": " + value);
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw std::invalid_argument("bad integer value for " + key + ": " + value);
    return v;
}

PortRange parse_range(const std::string& value) {
    std::size_t colon = value.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("port_range must look like L:H");
    PortRange r;
    r.low = static_cast<std::uint32_t>(to_u64("port_range", value.substr(0, colon)));
    r.high = static_cast<std::uint32_t>(to_u64("port_range", value.substr(colon + 1)));
    if (r.low >= r.high)
        throw std::invalid_argument("port_range needs L < H");
    return r;
}

}  // namespace

std::optional<double> resolver_timeout_preset(std::string_view name) {
    if (name == "google") return 1.5;
    if (name == "quad9") return 1.5;
    if (name == "yandex") return 2.5;
    if (name == "cloudflare") return 4.0;
    if (name == "opendns") return 6.0;
    if (name == "msdns") return 7.5;
    if (name == "bind") return 10.0;
    if (name == "unbound") return 15.0;
    return std::nullopt;
}

Scenario parse_scenario(std::istream& in) {
    Scenario sc;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        std::string body = trim(line);
        if (body.empty())
            continue;
        std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("scenario line " + std::to_string(line_no) +
                                        " is not key = value");
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (value.empty())
            throw std::invalid_argument("empty value for " + key);

        if (key == "bandwidth_mbps") {
            sc.params.bandwidth_mbps = to_double(key, value);
        } else if (key == "rtt_at_ms") {
            sc.params.rtt_attacker_target_ms = to_double(key, value);
        } else if (key == "rtt_tr_ms") {
            sc.params.rtt_target_resolver_ms = to_double(key, value);
        } else if (key == "timeout_s") {
            if (auto preset = resolver_timeout_preset(value))
                sc.params.resolver_timeout_s = *preset;
            else
                sc.params.resolver_timeout_s = to_double(key, value);
        } else if (key == "t_delta_ms") {
            sc.params.inter_step_delay_ms = to_double(key, value);
        } else if (key == "resolvers") {
            sc.params.resolver_count = static_cast<int>(to_u64(key, value));
        } else if (key == "port_range") {
            sc.params.port_range = parse_range(value);
        } else if (key == "packet_bytes") {
            sc.params.packet_bytes = static_cast<int>(to_u64(key, value));
        } else if (key == "rule") {
            if (value == "flow_label") {
                sc.model.rule = AttackRule::flow_label;
                sc.machine.probe_kind = FieldKind::flow_label();
            } else if (value == "ipid") {
                sc.model.rule = AttackRule::ipid;
                sc.machine.probe_kind = FieldKind::ipid();
            } else {
                throw std::invalid_argument("rule must be flow_label or ipid");
            }
        } else if (key == "trials") {
            sc.trials = static_cast<int>(to_u64(key, value));
        } else if (key == "seed") {
            sc.seed = to_u64(key, value);
        } else if (key == "p_recovery") {
            sc.model.recovery_probability = to_double(key, value);
        } else if (key == "p_trigger") {
            sc.model.trigger_probability = to_double(key, value);
        } else if (key == "p_port_given_trigger") {
            sc.model.port_given_trigger = to_double(key, value);
        } else if (key == "model") {
            if (value == "offsets")
                sc.use_machine = false;
            else if (value == "machine")
                sc.use_machine = true;
            else
                throw std::invalid_argument("model must be offsets or machine");
        } else if (key == "machine_cores") {
            sc.machine.cores = static_cast<int>(to_u64(key, value));
        } else if (key == "machine_switch_prob") {
            sc.machine.probe_switch_probability = to_double(key, value);
        } else if (key == "machine_followups") {
            sc.machine.dns_followup_draws = static_cast<int>(to_u64(key, value));
        } else if (key == "machine_noise") {
            sc.machine.noise_before_port = to_double(key, value);
        } else {
            throw std::invalid_argument("unknown scenario key: " + key);
        }
    }
    return sc;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file: " + path);
    return parse_scenario(in);
}

}  // namespace prtk

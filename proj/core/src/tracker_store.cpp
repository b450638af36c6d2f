#include <algorithm>
#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "prtk/tracker.hpp"

namespace prtk {

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'R', 'T', 'K'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        int c = in.get();
        if (c < 0)
            throw std::runtime_error("truncated tracker store");
        value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return value;
}

struct Record {
    Key128 key;
    std::uint64_t id;
    std::uint32_t s2;
};

void write_store(std::ostream& out, const TrackerConfig& cfg, std::uint64_t stride,
                 const std::vector<detail::SlotMap::Slot>& slots) {
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint16_t>(out, kVersion);
    put_le<std::uint64_t>(out, cfg.span_steps);
    put_le<std::uint64_t>(out, cfg.drift_window);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stride));

    std::vector<Record> records;
    for (const auto& s : slots)
        if (s.id != 0)
            records.push_back(Record{s.key, s.id, s.s2});
    std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
        return a.key.hi != b.key.hi ? a.key.hi < b.key.hi : a.key.lo < b.key.lo;
    });
    for (const Record& r : records) {
        put_le<std::uint64_t>(out, r.key.lo);
        put_le<std::uint64_t>(out, r.key.hi);
        put_le<std::uint64_t>(out, r.id);
        put_le<std::uint32_t>(out, r.s2);
    }
}

struct StoreHeader {
    std::uint64_t span;
    std::uint64_t drift_window;
    std::uint32_t stride;
};

StoreHeader read_header(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kMagic)
        throw std::runtime_error("not a tracker store (bad magic)");
    if (get_le<std::uint16_t>(in) != kVersion)
        throw std::runtime_error("unsupported tracker store version");
    StoreHeader h;
    h.span = get_le<std::uint64_t>(in);
    h.drift_window = get_le<std::uint64_t>(in);
    h.stride = get_le<std::uint32_t>(in);
    return h;
}

std::vector<Record> read_records(std::istream& in) {
    std::vector<Record> records;
    while (true) {
        int c = in.peek();
        if (c == std::char_traits<char>::eof())
            break;
        Record r;
        r.key.lo = get_le<std::uint64_t>(in);
        r.key.hi = get_le<std::uint64_t>(in);
        r.id = get_le<std::uint64_t>(in);
        r.s2 = get_le<std::uint32_t>(in);
        records.push_back(r);
    }
    return records;
}

}  // namespace

void GiantTable::save(std::ostream& out) const {
    write_store(out, cfg_, stride_, map_.slots());
}

void DriftTable::save(std::ostream& out) const {
    write_store(out, cfg_, stride_, map_.slots());
}

GiantTable GiantTable::load(std::istream& in, std::uint64_t capacity) {
    StoreHeader h = read_header(in);
    if (h.drift_window != 0)
        throw std::runtime_error("store holds a drift table");
    GiantTable table(TrackerConfig{h.span, capacity, 8, 0});
    if (table.stride_ != h.stride)
        throw std::runtime_error("stride mismatch in tracker store");
    auto records = read_records(in);
    if (!records.empty() && records.size() % table.stride_ != 0)
        throw std::runtime_error("record count is not a multiple of the stride");
    for (const Record& r : records) {
        table.map_.insert(r.key, r.id, r.s2);
        if (r.id >= table.next_id_)
            table.next_id_ = r.id + 1;
    }
    table.registered_ = records.size() / table.stride_;
    if (table.registered_ > capacity)
        throw std::runtime_error("store exceeds the requested capacity");
    return table;
}

DriftTable DriftTable::load(std::istream& in, std::uint64_t capacity) {
    StoreHeader h = read_header(in);
    if (h.drift_window == 0)
        throw std::runtime_error("store holds a plain table");
    DriftTable table(TrackerConfig{h.span, capacity, 8, h.drift_window});
    if (table.stride_ != h.stride)
        throw std::runtime_error("stride mismatch in tracker store");
    auto records = read_records(in);
    if (!records.empty() && records.size() % table.stride_ != 0)
        throw std::runtime_error("record count is not a multiple of the stride");
    for (const Record& r : records) {
        table.map_.insert(r.key, r.id, r.s2);
        if (r.id >= table.next_id_)
            table.next_id_ = r.id + 1;
    }
    table.registered_ = records.size() / table.stride_;
    if (table.registered_ > capacity)
        throw std::runtime_error("store exceeds the requested capacity");
    return table;
}

std::variant<GiantTable, DriftTable> load_tracker(std::istream& in, std::uint64_t capacity) {
    // Peek at the header to pick the variant, then rewind.
    std::streampos start = in.tellg();
    StoreHeader h = read_header(in);
    in.seekg(start);
    if (h.drift_window == 0)
        return GiantTable::load(in, capacity);
    return DriftTable::load(in, capacity);
}

}  // namespace prtk

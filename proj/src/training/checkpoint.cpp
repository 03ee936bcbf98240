#include "stylestruct/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "stylestruct/error.hpp"

namespace stylestruct {

namespace fs = std::filesystem;

namespace {

std::size_t dtype_size(DType t) {
    switch (t) {
        case DType::F32: return 4;
        case DType::F64: return 8;
        case DType::I32: return 4;
        case DType::U64: return 8;
        case DType::U8: return 1;
    }
    return 0;
}

const char* dtype_name(DType t) {
    switch (t) {
        case DType::F32: return "f32";
        case DType::F64: return "f64";
        case DType::I32: return "i32";
        case DType::U64: return "u64";
        case DType::U8: return "u8";
    }
    return "?";
}

// Every supported host is little-endian; values are copied byte for byte.
static_assert(std::endian::native == std::endian::little);

template <typename T>
std::vector<std::uint8_t> to_bytes(const std::vector<T>& v) {
    std::vector<std::uint8_t> b(v.size() * sizeof(T));
    if (!b.empty()) std::memcpy(b.data(), v.data(), b.size());
    return b;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<std::uint8_t>& b) {
    std::vector<T> v(b.size() / sizeof(T));
    if (!v.empty()) std::memcpy(v.data(), b.data(), v.size() * sizeof(T));
    return v;
}

template <typename T>
void append(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

    template <typename T>
    T read(const std::string& field, const char* part) {
        T v;
        take(&v, sizeof(T), field, part);
        return v;
    }

    void take(void* dst, std::size_t n, const std::string& field, const char* part) {
        if (b_.size() - pos_ < n)
            throw DataError("checkpoint truncated in field '" + field + "' (" + part + ")");
        if (n) std::memcpy(dst, b_.data() + pos_, n);
        pos_ += n;
    }

    bool done() const { return pos_ == b_.size(); }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

void Archive::put(Entry e) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& x) { return x.name == e.name; });
    if (it != entries_.end()) *it = std::move(e);
    else entries_.push_back(std::move(e));
}

void Archive::put_f32(const std::string& name, const Shape& shape, const std::vector<float>& v) {
    if (numel(shape) != static_cast<Index>(v.size())) throw ConfigError("archive field '" + name + "': shape mismatch");
    put({name, DType::F32, shape, to_bytes(v)});
}

void Archive::put_f64(const std::string& name, const Shape& shape, const std::vector<double>& v) {
    if (numel(shape) != static_cast<Index>(v.size())) throw ConfigError("archive field '" + name + "': shape mismatch");
    put({name, DType::F64, shape, to_bytes(v)});
}

void Archive::put_i32(const std::string& name, const std::vector<std::int32_t>& v) {
    put({name, DType::I32, {static_cast<Index>(v.size())}, to_bytes(v)});
}

void Archive::put_u64(const std::string& name, const std::vector<std::uint64_t>& v) {
    put({name, DType::U64, {static_cast<Index>(v.size())}, to_bytes(v)});
}

void Archive::put_string(const std::string& name, const std::string& s) {
    put({name, DType::U8, {static_cast<Index>(s.size())}, std::vector<std::uint8_t>(s.begin(), s.end())});
}

bool Archive::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

const Archive::Entry& Archive::entry(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw DataError("checkpoint has no field '" + name + "'");
}

namespace {

const Archive::Entry& typed(const Archive& a, const std::string& name, DType want) {
    const auto& e = a.entry(name);
    if (e.dtype != want)
        throw DataError("checkpoint field '" + name + "' has type " + dtype_name(e.dtype) + ", expected " +
                        dtype_name(want));
    return e;
}

}  // namespace

std::vector<float> Archive::f32(const std::string& name) const {
    return from_bytes<float>(typed(*this, name, DType::F32).bytes);
}
std::vector<double> Archive::f64(const std::string& name) const {
    return from_bytes<double>(typed(*this, name, DType::F64).bytes);
}
std::vector<std::int32_t> Archive::i32(const std::string& name) const {
    return from_bytes<std::int32_t>(typed(*this, name, DType::I32).bytes);
}
std::vector<std::uint64_t> Archive::u64(const std::string& name) const {
    return from_bytes<std::uint64_t>(typed(*this, name, DType::U64).bytes);
}

std::uint64_t Archive::u64_scalar(const std::string& name) const {
    const auto v = u64(name);
    if (v.size() != 1) throw DataError("checkpoint field '" + name + "' is not a scalar");
    return v[0];
}

std::string Archive::string(const std::string& name) const {
    const auto& b = typed(*this, name, DType::U8).bytes;
    return {b.begin(), b.end()};
}

std::vector<std::string> Archive::names(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (e.name.compare(0, prefix.size(), prefix) == 0) out.push_back(e.name);
    return out;
}

std::vector<std::uint8_t> Archive::encode() const {
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    append(out, kCheckpointVersion);
    append(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        append(out, static_cast<std::uint32_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        append(out, static_cast<std::uint8_t>(e.dtype));
        append(out, static_cast<std::uint32_t>(e.shape.size()));
        for (Index d : e.shape) append(out, static_cast<std::uint64_t>(d));
        append(out, static_cast<std::uint64_t>(e.bytes.size()));
        out.insert(out.end(), e.bytes.begin(), e.bytes.end());
    }
    return out;
}

Archive Archive::decode(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[8];
    r.take(magic, sizeof magic, "header", "magic");
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw DataError("not a checkpoint (bad magic)");
    const auto version = r.read<std::uint32_t>("header", "version");
    if (version != kCheckpointVersion)
        throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    const auto count = r.read<std::uint32_t>("header", "entry count");
    Archive a;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string slot = "#" + std::to_string(i);
        Entry e;
        const auto len = r.read<std::uint32_t>(slot, "name length");
        if (len > 4096) throw DataError("checkpoint field " + slot + ": name length " + std::to_string(len));
        e.name.resize(len);
        r.take(e.name.data(), len, slot, "name");
        const auto dt = r.read<std::uint8_t>(e.name, "dtype");
        if (dt > static_cast<std::uint8_t>(DType::U8))
            throw DataError("checkpoint field '" + e.name + "': unknown dtype " + std::to_string(dt));
        e.dtype = static_cast<DType>(dt);
        const auto rank = r.read<std::uint32_t>(e.name, "rank");
        if (rank > 8) throw DataError("checkpoint field '" + e.name + "': rank " + std::to_string(rank));
        for (std::uint32_t k = 0; k < rank; ++k)
            e.shape.push_back(static_cast<Index>(r.read<std::uint64_t>(e.name, "dims")));
        const auto n = r.read<std::uint64_t>(e.name, "byte count");
        if (n != static_cast<std::uint64_t>(numel(e.shape)) * dtype_size(e.dtype))
            throw DataError("checkpoint field '" + e.name + "': byte count does not match shape " +
                            shape_str(e.shape));
        if (n > bytes.size()) throw DataError("checkpoint truncated in field '" + e.name + "' (data)");
        e.bytes.resize(n);
        r.take(e.bytes.data(), n, e.name, "data");
        a.entries_.push_back(std::move(e));
    }
    if (!r.done()) throw DataError("checkpoint has trailing bytes");
    return a;
}

void Archive::save(const std::string& path) const {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp + "'");
        const auto b = encode();
        out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
        out.flush();
        if (!out) throw DataError("short write to '" + tmp + "'");
    }
    fs::rename(tmp, p);
}

Archive Archive::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint '" + path + "'");
    std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode(b);
    } catch (const DataError& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

}  // namespace stylestruct

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylestruct/tensor.hpp"

namespace stylestruct {

inline constexpr char kCheckpointMagic[8] = {'S', 'T', 'S', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { F32 = 0, F64 = 1, I32 = 2, U64 = 3, U8 = 4 };

/// Named arrays in insertion order.
///
/// File layout, little-endian: 8-byte magic, u32 version, u32 entry count,
/// then per entry: u32 name length, name, u8 dtype, u32 rank, u64 dims,
/// u64 byte count, raw data.
class Archive {
public:
    struct Entry {
        std::string name;
        DType dtype = DType::F32;
        Shape shape;
        std::vector<std::uint8_t> bytes;
    };

    void put_f32(const std::string& name, const Shape& shape, const std::vector<float>& v);
    void put_f64(const std::string& name, const Shape& shape, const std::vector<double>& v);
    void put_i32(const std::string& name, const std::vector<std::int32_t>& v);
    void put_u64(const std::string& name, const std::vector<std::uint64_t>& v);
    void put_string(const std::string& name, const std::string& s);

    bool contains(const std::string& name) const;
    const Entry& entry(const std::string& name) const;
    /// Typed reads. A missing name or wrong dtype is a DataError naming the field.
    std::vector<float> f32(const std::string& name) const;
    std::vector<double> f64(const std::string& name) const;
    std::vector<std::int32_t> i32(const std::string& name) const;
    std::vector<std::uint64_t> u64(const std::string& name) const;
    std::uint64_t u64_scalar(const std::string& name) const;
    std::string string(const std::string& name) const;

    /// Names starting with `prefix`, in insertion order.
    std::vector<std::string> names(const std::string& prefix = "") const;
    const std::vector<Entry>& entries() const { return entries_; }

    std::vector<std::uint8_t> encode() const;
    /// Throws DataError naming the field and part that ran short.
    static Archive decode(const std::vector<std::uint8_t>& bytes);

    /// Writes to `path.tmp` then renames over `path`.
    void save(const std::string& path) const;
    static Archive load(const std::string& path);

private:
    void put(Entry e);
    std::vector<Entry> entries_;
};

}  // namespace stylestruct

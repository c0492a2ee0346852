#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "oihrl/common/errors.hpp"

namespace oihrl::io {

// All on-disk integers and floats are little-endian.

template <typename UInt>
inline auto to_little(UInt v) noexcept -> UInt {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        UInt r = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            r = static_cast<UInt>((r << 8) | ((v >> (8 * i)) & 0xff));
        }
        return r;
    }
}

inline void write_u32(std::ostream &os, std::uint32_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

inline void write_u64(std::ostream &os, std::uint64_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

inline void write_f64(std::ostream &os, double d) {
    write_u64(os, std::bit_cast<std::uint64_t>(d));
}

inline void write_u8(std::ostream &os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

inline auto read_u64(std::istream &is) -> std::uint64_t {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v)) {
        throw LoadError("unexpected end of file");
    }
    return to_little(v);
}

inline auto read_u32(std::istream &is) -> std::uint32_t {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char *>(&v), sizeof v)) {
        throw LoadError("unexpected end of file");
    }
    return to_little(v);
}

inline auto read_f64(std::istream &is) -> double {
    return std::bit_cast<double>(read_u64(is));
}

inline auto read_u8(std::istream &is) -> std::uint8_t {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) {
        throw LoadError("unexpected end of file");
    }
    return static_cast<std::uint8_t>(c);
}

}    // namespace oihrl::io

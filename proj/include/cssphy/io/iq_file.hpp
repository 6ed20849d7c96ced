#pragma once

// IQ capture files: interleaved complex float32, little-endian.
//
// Framed layout (32-byte header, then the body):
//   0  magic     "CSSPHYIQ"
//   8  version   u32 (1)
//  12  format    u32 (1 = cf32 little-endian)
//  16  rate      f64, Hz
//  24  count     u64, complex samples in the body
// Raw mode is the body alone; the caller supplies the rate.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cssphy/iq.hpp"

namespace cssphy::io {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 8> kIqMagic{'C', 'S', 'S', 'P', 'H', 'Y', 'I', 'Q'};
inline constexpr std::uint32_t kIqVersion = 1;
inline constexpr std::uint32_t kFormatCf32Le = 1;
inline constexpr std::size_t kIqHeaderBytes = 32;

struct IqFileHeader {
    std::uint32_t version = kIqVersion;
    std::uint32_t format = kFormatCf32Le;
    double sample_rate = 0.0;
    std::uint64_t sample_count = 0;
};

namespace detail {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class U>
U get_le(const std::uint8_t* p) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
}

inline std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read error on '" + path + "'");
    return bytes;
}

inline void spill(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write error on '" + path + "'");
}

inline void append_body(std::vector<std::uint8_t>& out, const IqBuffer& buf) {
    out.reserve(out.size() + buf.size() * 8);
    for (const cf64& z : buf.samples) {
        put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(z.real())));
        put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(z.imag())));
    }
}

inline std::vector<cf64> parse_body(const std::uint8_t* p, std::size_t count) {
    std::vector<cf64> s(count);
    for (std::size_t i = 0; i < count; ++i, p += 8) {
        const float re = std::bit_cast<float>(get_le<std::uint32_t>(p));
        const float im = std::bit_cast<float>(get_le<std::uint32_t>(p + 4));
        s[i] = cf64{re, im};
    }
    return s;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_iq(const IqBuffer& buf) {
    std::vector<std::uint8_t> out(kIqMagic.begin(), kIqMagic.end());
    detail::put_le(out, kIqVersion);
    detail::put_le(out, kFormatCf32Le);
    detail::put_le(out, std::bit_cast<std::uint64_t>(buf.rate));
    detail::put_le(out, static_cast<std::uint64_t>(buf.size()));
    detail::append_body(out, buf);
    return out;
}

inline IqFileHeader decode_iq_header(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kIqHeaderBytes) throw io_error("IQ file shorter than its 32-byte header");
    if (std::memcmp(bytes.data(), kIqMagic.data(), kIqMagic.size()) != 0) throw io_error("bad IQ magic");
    IqFileHeader h;
    h.version = detail::get_le<std::uint32_t>(bytes.data() + 8);
    h.format = detail::get_le<std::uint32_t>(bytes.data() + 12);
    h.sample_rate = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes.data() + 16));
    h.sample_count = detail::get_le<std::uint64_t>(bytes.data() + 24);
    if (h.version != kIqVersion) throw io_error("unsupported IQ version " + std::to_string(h.version));
    if (h.format != kFormatCf32Le) throw io_error("unsupported IQ sample format " + std::to_string(h.format));
    if (!(h.sample_rate > 0)) throw io_error("IQ header has a non-positive sample rate");
    if ((bytes.size() - kIqHeaderBytes) / 8 != h.sample_count || (bytes.size() - kIqHeaderBytes) % 8 != 0)
        throw io_error("IQ sample count " + std::to_string(h.sample_count) + " does not match body length");
    return h;
}

inline IqBuffer decode_iq(const std::vector<std::uint8_t>& bytes) {
    const IqFileHeader h = decode_iq_header(bytes);
    return IqBuffer{detail::parse_body(bytes.data() + kIqHeaderBytes, h.sample_count), h.sample_rate};
}

inline IqBuffer decode_raw(const std::vector<std::uint8_t>& bytes, double rate) {
    if (bytes.size() % 8 != 0) throw io_error("raw IQ length is not a multiple of 8 bytes");
    return IqBuffer{detail::parse_body(bytes.data(), bytes.size() / 8), rate};
}

inline void write_iq(const std::string& path, const IqBuffer& buf) { detail::spill(path, encode_iq(buf)); }

inline void write_raw(const std::string& path, const IqBuffer& buf) {
    std::vector<std::uint8_t> out;
    detail::append_body(out, buf);
    detail::spill(path, out);
}

inline IqBuffer read_iq(const std::string& path) { return decode_iq(detail::slurp(path)); }

inline IqBuffer read_raw(const std::string& path, double rate) { return decode_raw(detail::slurp(path), rate); }

inline std::vector<std::uint8_t> read_bytes(const std::string& path) { return detail::slurp(path); }

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) { detail::spill(path, bytes); }

inline void write_text(const std::string& path, const std::string& text) {
    detail::spill(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace cssphy::io

#pragma once

// PHY frame: n_pre upchirps | sync word (2 symbols) | 2.25 downchirps |
// [header block] | payload+CRC blocks.
//
// Header (16 bits, LSB first per field, always cr=4, not whitened):
//   payload_len:8  cr:3  has_crc:1  checksum:4 (XOR of the three preceding nibbles)
// It is zero-padded to one interleaving block, i.e. 8 symbols.
//
// Payload bytes are serialized LSB first, followed by CRC-16/XMODEM
// (poly 0x1021, init 0x0000) low byte then high byte, zero-padded to whole
// interleaving blocks and sent through tx_chain.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cssphy/codec.hpp"
#include "cssphy/iq.hpp"
#include "cssphy/modulator.hpp"
#include "cssphy/params.hpp"

namespace cssphy {

struct decode_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyncWord {
    std::array<std::uint32_t, 2> symbols{24, 16};
    bool operator==(const SyncWord&) const = default;
};

struct FrameConfig {
    bool has_header = true;
    bool has_crc = true;
    CodeRate cr{4};
    std::size_t payload_len = 0;  ///< bytes
    SyncWord sync_word{};
};

struct Frame {
    std::vector<std::uint8_t> payload;
    FrameConfig config;
};

inline constexpr std::size_t kHeaderSymbols = 8;

inline std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes) {
    std::uint16_t crc = 0x0000;
    for (std::uint8_t b : bytes) {
        crc ^= static_cast<std::uint16_t>(b) << 8;
        for (int i = 0; i < 8; ++i)
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
    }
    return crc;
}

inline BitBlock bytes_to_bits(std::span<const std::uint8_t> bytes) {
    BitBlock bits;
    bits.reserve(bytes.size() * 8);
    for (std::uint8_t b : bytes)
        for (int i = 0; i < 8; ++i) bits.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
    return bits;
}

inline std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
    for (std::size_t i = 0; i < bytes.size() * 8; ++i)
        bytes[i / 8] |= static_cast<std::uint8_t>(bits[i] << (i % 8));
    return bytes;
}

// ------------------------------------------------------------------ layout

enum class ChirpKind { up, down };

/// One transmitted chirp segment. `chips` is the segment length at os=1
/// (2^sf for full symbols, 2^sf/4 for the trailing quarter downchirp).
struct ChirpSegment {
    ChirpKind kind = ChirpKind::up;
    Symbol symbol{};
    std::uint32_t chips = 0;
};

inline std::vector<ChirpSegment> frame_layout(std::span<const Symbol> data, const LoraParams& p,
                                              const SyncWord& sync = {}) {
    const std::uint32_t n = p.chips();
    std::vector<ChirpSegment> seg;
    seg.reserve(static_cast<std::size_t>(p.n_pre) + 5 + data.size());
    for (int i = 0; i < p.n_pre; ++i) seg.push_back({ChirpKind::up, Symbol{0}, n});
    for (std::uint32_t s : sync.symbols) seg.push_back({ChirpKind::up, make_symbol(s, p), n});
    seg.push_back({ChirpKind::down, Symbol{0}, n});
    seg.push_back({ChirpKind::down, Symbol{0}, n});
    seg.push_back({ChirpKind::down, Symbol{0}, n / 4});
    for (Symbol s : data) seg.push_back({ChirpKind::up, s, n});
    return seg;
}

/// Samples from frame start to the first post-delimiter symbol.
inline std::size_t delimiter_end_sample(const LoraParams& p) {
    return static_cast<std::size_t>(p.n_pre + 4) * p.samples_per_symbol() + p.samples_per_symbol() / 4;
}

/// Renders a layout at the nominal rate os*bw.
inline IqBuffer render_layout(std::span<const ChirpSegment> layout, const LoraParams& p) {
    const std::size_t len = p.samples_per_symbol();
    std::size_t total = 0;
    for (const auto& s : layout) total += static_cast<std::size_t>(s.chips) * static_cast<std::size_t>(p.os);
    std::vector<cf64> out(total);
    std::vector<cf64> sym(len);
    std::size_t pos = 0;
    for (const auto& s : layout) {
        detail::render_symbol(s.symbol, p, sym);
        const std::size_t count = static_cast<std::size_t>(s.chips) * static_cast<std::size_t>(p.os);
        for (std::size_t i = 0; i < count; ++i)
            out[pos + i] = s.kind == ChirpKind::down ? std::conj(sym[i]) : sym[i];
        pos += count;
    }
    return IqBuffer(std::move(out), p.sample_rate());
}

// ------------------------------------------------------------------ header

struct HeaderFields {
    std::size_t payload_len = 0;
    CodeRate cr{4};
    bool has_crc = true;
};

inline std::uint8_t header_checksum(std::uint16_t low12) {
    return static_cast<std::uint8_t>((low12 ^ (low12 >> 4) ^ (low12 >> 8)) & 0xF);
}

inline std::vector<Symbol> encode_header(const HeaderFields& h, const LoraParams& p) {
    if (h.payload_len > 255) throw std::invalid_argument("explicit header limits payload to 255 bytes");
    const std::uint16_t low12 = static_cast<std::uint16_t>(
        h.payload_len | (static_cast<unsigned>(h.cr.value) << 8) | (h.has_crc ? 1u << 11 : 0u));
    const std::uint16_t word = static_cast<std::uint16_t>(low12 | (header_checksum(low12) << 12));
    BitBlock bits(block_data_bits(p.sf), 0);
    for (int i = 0; i < 16; ++i) bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((word >> i) & 1u);
    const CodeRate hcr{4};
    std::vector<Symbol> out;
    for (std::uint32_t w : interleave(hamming_encode(bits, hcr), p.sf, hcr))
        out.push_back(Symbol{gray_deindex(Symbol{w}, p.sf)});
    return out;
}

inline HeaderFields decode_header(std::span<const Symbol> symbols, const LoraParams& p) {
    if (symbols.size() < kHeaderSymbols) throw decode_error("frame too short for header");
    const CodeRate hcr{4};
    std::vector<std::uint32_t> words(kHeaderSymbols);
    for (std::size_t i = 0; i < kHeaderSymbols; ++i) words[i] = gray_index(symbols[i].value, p.sf).value;
    const HammingResult dec = hamming_decode(deinterleave(words, p.sf, hcr), hcr);
    if (dec.uncorrectable) throw decode_error("header: uncorrectable codeword");
    std::uint16_t word = 0;
    for (int i = 0; i < 16; ++i) word |= static_cast<std::uint16_t>(dec.data[static_cast<std::size_t>(i)] << i);
    const std::uint16_t low12 = word & 0x0FFF;
    if (header_checksum(low12) != (word >> 12)) throw decode_error("header checksum mismatch");
    const int cr = (low12 >> 8) & 0x7;
    if (cr < 1 || cr > 4) throw decode_error("header carries invalid code rate");
    return HeaderFields{static_cast<std::size_t>(low12 & 0xFF), CodeRate{cr}, ((low12 >> 11) & 1u) != 0};
}

// ---------------------------------------------------------- frame symbols

inline std::size_t payload_symbol_count(std::size_t payload_len, bool has_crc, CodeRate cr, int sf) {
    const std::size_t bits = payload_len * 8 + (has_crc ? 16 : 0);
    const std::size_t unit = block_data_bits(sf);
    return (bits + unit - 1) / unit * static_cast<std::size_t>(cr.codeword_bits());
}

inline std::size_t data_symbol_count(const FrameConfig& cfg, int sf) {
    return (cfg.has_header ? kHeaderSymbols : 0) + payload_symbol_count(cfg.payload_len, cfg.has_crc, cfg.cr, sf);
}

inline void validate_frame(const Frame& f) {
    if (f.payload.size() != f.config.payload_len)
        throw std::invalid_argument("payload length does not match frame config");
    if (f.config.has_header && f.config.payload_len > 255)
        throw std::invalid_argument("explicit header limits payload to 255 bytes");
}

/// Header (if any) followed by payload/CRC symbols.
inline std::vector<Symbol> frame_symbols(const Frame& f, const LoraParams& p) {
    validate_frame(f);
    std::vector<Symbol> out;
    if (f.config.has_header)
        out = encode_header(HeaderFields{f.config.payload_len, f.config.cr, f.config.has_crc}, p);
    BitBlock bits = bytes_to_bits(f.payload);
    if (f.config.has_crc) {
        const std::uint16_t crc = crc16_ccitt(f.payload);
        const std::uint8_t tail[2] = {static_cast<std::uint8_t>(crc & 0xFF), static_cast<std::uint8_t>(crc >> 8)};
        const BitBlock cb = bytes_to_bits(tail);
        bits.insert(bits.end(), cb.begin(), cb.end());
    }
    const std::vector<Symbol> body = tx_chain(pad_to_blocks(std::move(bits), p.sf), p, f.config.cr);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

inline IqBuffer build_frame(const Frame& f, const LoraParams& p) {
    const std::vector<Symbol> data = frame_symbols(f, p);
    return render_layout(frame_layout(data, p, f.config.sync_word), p);
}

struct ParsedFrame {
    Frame frame;
    bool crc_ok = false;
    bool fec_uncorrectable = false;
    std::size_t corrected_bits = 0;
};

/// Inverse of frame_symbols. With has_header the header's length/cr/crc flag
/// override `cfg`. CRC mismatch is reported through crc_ok.
inline ParsedFrame parse_frame(std::span<const Symbol> symbols, const FrameConfig& cfg, const LoraParams& p) {
    FrameConfig actual = cfg;
    std::size_t pos = 0;
    if (cfg.has_header) {
        const HeaderFields h = decode_header(symbols, p);
        actual.payload_len = h.payload_len;
        actual.cr = h.cr;
        actual.has_crc = h.has_crc;
        pos = kHeaderSymbols;
    }
    const std::size_t count = payload_symbol_count(actual.payload_len, actual.has_crc, actual.cr, p.sf);
    if (symbols.size() < pos + count) throw decode_error("frame truncated: payload symbols missing");
    const ChainResult dec = rx_chain(symbols.subspan(pos, count), p, actual.cr);

    ParsedFrame out;
    out.frame.config = actual;
    const std::vector<std::uint8_t> bytes = bits_to_bytes(dec.bits);
    out.frame.payload.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(actual.payload_len));
    out.fec_uncorrectable = dec.uncorrectable;
    out.corrected_bits = dec.corrected;
    if (actual.has_crc) {
        const std::uint16_t rx = static_cast<std::uint16_t>(bytes[actual.payload_len] |
                                                            (bytes[actual.payload_len + 1] << 8));
        out.crc_ok = rx == crc16_ccitt(out.frame.payload);
    } else {
        out.crc_ok = true;
    }
    return out;
}

}  // namespace cssphy

#pragma once

// Bit-domain chain: Hamming coding, whitening, diagonal interleaving and Gray
// mapping, plus their inverses.
//
// Hamming codewords are systematic, bit order [d0 d1 d2 d3 p0 p1 p2 p3]:
//   p0 = d0^d1^d3   p1 = d0^d2^d3   p2 = d1^d2^d3   p3 = parity of the other 7
// cr=4 sends all eight (SECDED), cr=3 drops p3 (Hamming(7,4)), cr=2 keeps
// [d p0 p1], cr=1 keeps [d, d0^d1^d2^d3]. cr<=2 only detects.
//
// Whitening XORs with PN9 (x^9 + x^5 + 1, state seeded 0x1FF, output = LSB).
//
// Interleaving takes sf codewords of (4+cr) bits and emits (4+cr) words of sf
// bits: bit (i + j) mod sf of word i is bit i of codeword j.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cssphy/modulator.hpp"
#include "cssphy/params.hpp"

namespace cssphy {

using BitBlock = std::vector<std::uint8_t>;

/// Coded block length 4 + value per 4 data bits.
struct CodeRate {
    int value = 4;

    int codeword_bits() const noexcept { return 4 + value; }
    bool operator==(const CodeRate&) const = default;
};

inline CodeRate make_code_rate(int cr) {
    if (cr < 1 || cr > 4) throw std::invalid_argument("code rate " + std::to_string(cr) + " outside 1..4");
    return CodeRate{cr};
}

// ---------------------------------------------------------------- Hamming

namespace detail {

inline void encode_nibble(const std::uint8_t* d, CodeRate cr, std::uint8_t* out) {
    const std::uint8_t p0 = d[0] ^ d[1] ^ d[3];
    const std::uint8_t p1 = d[0] ^ d[2] ^ d[3];
    const std::uint8_t p2 = d[1] ^ d[2] ^ d[3];
    for (int i = 0; i < 4; ++i) out[i] = d[i];
    switch (cr.value) {
        case 1: out[4] = d[0] ^ d[1] ^ d[2] ^ d[3]; break;
        case 2: out[4] = p0; out[5] = p1; break;
        case 3: out[4] = p0; out[5] = p1; out[6] = p2; break;
        default:
            out[4] = p0; out[5] = p1; out[6] = p2;
            out[7] = d[0] ^ d[1] ^ d[2] ^ d[3] ^ p0 ^ p1 ^ p2;
            break;
    }
}

// syndrome value (s0 + 2 s1 + 4 s2) -> codeword position of the single error
inline constexpr int kSyndromePosition[8] = {-1, 4, 5, 0, 6, 1, 2, 3};

}  // namespace detail

struct HammingResult {
    BitBlock data;
    std::size_t corrected = 0;
    bool uncorrectable = false;
};

inline void check_bits(std::span<const std::uint8_t> bits) {
    for (auto b : bits)
        if (b > 1) throw std::invalid_argument("bit block holds a value other than 0/1");
}

inline BitBlock hamming_encode(std::span<const std::uint8_t> data, CodeRate cr) {
    if (data.size() % 4 != 0) throw std::invalid_argument("Hamming input length not a multiple of 4");
    check_bits(data);
    const std::size_t cw = static_cast<std::size_t>(cr.codeword_bits());
    BitBlock out(data.size() / 4 * cw);
    for (std::size_t i = 0; i < data.size() / 4; ++i)
        detail::encode_nibble(&data[4 * i], cr, &out[i * cw]);
    return out;
}

inline HammingResult hamming_decode(std::span<const std::uint8_t> coded, CodeRate cr) {
    const std::size_t cw = static_cast<std::size_t>(cr.codeword_bits());
    if (coded.size() % cw != 0)
        throw std::invalid_argument("Hamming codeword stream length not a multiple of " + std::to_string(cw));
    check_bits(coded);
    HammingResult res;
    res.data.resize(coded.size() / cw * 4);
    for (std::size_t i = 0; i < coded.size() / cw; ++i) {
        std::uint8_t c[8] = {};
        for (std::size_t b = 0; b < cw; ++b) c[b] = coded[i * cw + b];
        if (cr.value >= 3) {
            const int s0 = c[4] ^ c[0] ^ c[1] ^ c[3];
            const int s1 = c[5] ^ c[0] ^ c[2] ^ c[3];
            const int s2 = c[6] ^ c[1] ^ c[2] ^ c[3];
            const int syndrome = s0 | (s1 << 1) | (s2 << 2);
            if (cr.value == 3) {
                if (syndrome != 0) {
                    c[detail::kSyndromePosition[syndrome]] ^= 1;
                    ++res.corrected;
                }
            } else {
                int parity = 0;
                for (int b = 0; b < 8; ++b) parity ^= c[b];
                if (syndrome != 0 && parity == 1) {
                    c[detail::kSyndromePosition[syndrome]] ^= 1;
                    ++res.corrected;
                } else if (syndrome != 0) {
                    res.uncorrectable = true;  // even overall parity: two errors
                } else if (parity == 1) {
                    ++res.corrected;  // the overall parity bit itself
                }
            }
        } else if (cr.value == 2) {
            const int s0 = c[4] ^ c[0] ^ c[1] ^ c[3];
            const int s1 = c[5] ^ c[0] ^ c[2] ^ c[3];
            if (s0 | s1) res.uncorrectable = true;
        } else {
            if (c[0] ^ c[1] ^ c[2] ^ c[3] ^ c[4]) res.uncorrectable = true;
        }
        for (int b = 0; b < 4; ++b) res.data[i * 4 + b] = c[b];
    }
    return res;
}

// -------------------------------------------------------------- whitening

inline BitBlock whitening_sequence(std::size_t n) {
    BitBlock seq(n);
    std::uint32_t state = 0x1FF;
    for (std::size_t i = 0; i < n; ++i) {
        seq[i] = static_cast<std::uint8_t>(state & 1u);
        const std::uint32_t fb = (state ^ (state >> 5)) & 1u;
        state = (state >> 1) | (fb << 8);
    }
    return seq;
}

inline BitBlock whiten(std::span<const std::uint8_t> data) {
    BitBlock out(data.begin(), data.end());
    const BitBlock seq = whitening_sequence(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= seq[i];
    return out;
}

inline BitBlock dewhiten(std::span<const std::uint8_t> data) { return whiten(data); }

// ----------------------------------------------------------- interleaving

inline std::size_t interleave_block_bits(int sf, CodeRate cr) {
    return static_cast<std::size_t>(sf) * static_cast<std::size_t>(cr.codeword_bits());
}

inline std::vector<std::uint32_t> interleave(std::span<const std::uint8_t> block, int sf, CodeRate cr) {
    const int cw = cr.codeword_bits();
    if (block.size() != interleave_block_bits(sf, cr))
        throw std::invalid_argument("interleaver block must hold sf*(4+cr) bits");
    std::vector<std::uint32_t> words(static_cast<std::size_t>(cw), 0);
    for (int i = 0; i < cw; ++i)
        for (int j = 0; j < sf; ++j)
            if (block[static_cast<std::size_t>(j * cw + i)])
                words[static_cast<std::size_t>(i)] |= 1u << ((i + j) % sf);
    return words;
}

inline BitBlock deinterleave(std::span<const std::uint32_t> words, int sf, CodeRate cr) {
    const int cw = cr.codeword_bits();
    if (words.size() != static_cast<std::size_t>(cw))
        throw std::invalid_argument("deinterleaver needs 4+cr words");
    BitBlock block(interleave_block_bits(sf, cr));
    for (int i = 0; i < cw; ++i)
        for (int j = 0; j < sf; ++j)
            block[static_cast<std::size_t>(j * cw + i)] =
                static_cast<std::uint8_t>((words[static_cast<std::size_t>(i)] >> ((i + j) % sf)) & 1u);
    return block;
}

// ------------------------------------------------------------------- Gray

inline Symbol gray_index(std::uint32_t word, int sf) {
    if (word >= (1u << sf)) throw std::invalid_argument("word out of range for Gray mapping");
    return Symbol{word ^ (word >> 1)};
}

inline std::uint32_t gray_deindex(Symbol s, int sf) {
    if (s.value >= (1u << sf)) throw std::invalid_argument("symbol out of range for Gray mapping");
    std::uint32_t w = s.value;
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) w ^= w >> shift;
    return w;
}

// ------------------------------------------------------------ full chain

/// Data bits carried by one interleaving block.
inline std::size_t block_data_bits(int sf) { return 4 * static_cast<std::size_t>(sf); }

inline BitBlock pad_to_blocks(BitBlock bits, int sf) {
    const std::size_t unit = block_data_bits(sf);
    bits.resize((bits.size() + unit - 1) / unit * unit, 0);
    return bits;
}

/// Encode -> whiten -> interleave -> inverse Gray. The receiver's Gray map
/// then turns a +-1 bin error into a single bit error in one codeword.
inline std::vector<Symbol> tx_chain(std::span<const std::uint8_t> payload, const LoraParams& p, CodeRate cr) {
    if (payload.size() % block_data_bits(p.sf) != 0)
        throw std::invalid_argument("payload must fill whole interleaving blocks (multiple of 4*sf bits)");
    const BitBlock coded = whiten(hamming_encode(payload, cr));
    const std::size_t blk = interleave_block_bits(p.sf, cr);
    std::vector<Symbol> symbols;
    symbols.reserve(coded.size() / static_cast<std::size_t>(p.sf));
    for (std::size_t off = 0; off < coded.size(); off += blk) {
        for (std::uint32_t w : interleave(std::span(coded).subspan(off, blk), p.sf, cr))
            symbols.push_back(Symbol{gray_deindex(Symbol{w}, p.sf)});
    }
    return symbols;
}

struct ChainResult {
    BitBlock bits;
    std::size_t corrected = 0;
    bool uncorrectable = false;
};

inline ChainResult rx_chain(std::span<const Symbol> symbols, const LoraParams& p, CodeRate cr) {
    const std::size_t cw = static_cast<std::size_t>(cr.codeword_bits());
    if (symbols.size() % cw != 0)
        throw std::invalid_argument("symbol count not a multiple of 4+cr");
    BitBlock coded;
    coded.reserve(symbols.size() * static_cast<std::size_t>(p.sf));
    std::vector<std::uint32_t> words(cw);
    for (std::size_t off = 0; off < symbols.size(); off += cw) {
        for (std::size_t i = 0; i < cw; ++i) words[i] = gray_index(symbols[off + i].value, p.sf).value;
        const BitBlock blk = deinterleave(words, p.sf, cr);
        coded.insert(coded.end(), blk.begin(), blk.end());
    }
    HammingResult dec = hamming_decode(dewhiten(coded), cr);
    return ChainResult{std::move(dec.data), dec.corrected, dec.uncorrectable};
}

}  // namespace cssphy

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "cssphy/demodulator.hpp"
#include "cssphy/framing.hpp"

using namespace cssphy;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) b = static_cast<std::uint8_t>(rng());
    return v;
}

Frame make_frame(std::vector<std::uint8_t> payload, bool header = true, bool crc = true, int cr = 4) {
    Frame f;
    f.config.has_header = header;
    f.config.has_crc = crc;
    f.config.cr = CodeRate{cr};
    f.config.payload_len = payload.size();
    f.payload = std::move(payload);
    return f;
}

}  // namespace

TEST(Crc, CheckValue) {
    const std::string s = "123456789";
    EXPECT_EQ(crc16_ccitt(std::vector<std::uint8_t>(s.begin(), s.end())), 0x31C3);
    EXPECT_EQ(crc16_ccitt(std::vector<std::uint8_t>{}), 0x0000);
}

TEST(Crc, DetectsEverySingleBitFlip) {
    std::mt19937_64 rng(8);
    const auto data = random_bytes(40, rng);
    const std::uint16_t ref = crc16_ccitt(data);
    for (std::size_t bit = 0; bit < data.size() * 8; ++bit) {
        auto d = data;
        d[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        ASSERT_NE(crc16_ccitt(d), ref);
    }
}

TEST(Bytes, LsbFirstRoundtrip) {
    const std::vector<std::uint8_t> b{0x01, 0x80, 0xA5};
    const BitBlock bits = bytes_to_bits(b);
    ASSERT_EQ(bits.size(), 24u);
    EXPECT_EQ(bits[0], 1);
    EXPECT_EQ(bits[15], 1);
    EXPECT_EQ(bits_to_bytes(bits), b);
}

TEST(Layout, EmptyFrameLengthIsPreamblePlusDelimiter) {
    const LoraParams p = make_params(8, 125000, 1, 8);
    const IqBuffer x = build_frame(make_frame({}, false, false), p);
    EXPECT_EQ(x.size(), static_cast<std::size_t>(12.25 * 256));
    EXPECT_EQ(delimiter_end_sample(p), x.size());
}

TEST(Layout, SampleCountFormula) {
    std::mt19937_64 rng(9);
    for (int sf : {6, 8, 11})
        for (int os : {1, 2})
            for (std::size_t len : {0u, 1u, 17u, 100u}) {
                const LoraParams p = make_params(sf, 250000, os, 8);
                const Frame f = make_frame(random_bytes(len, rng));
                const std::size_t n_data = data_symbol_count(f.config, sf);
                EXPECT_EQ(frame_symbols(f, p).size(), n_data);
                const double expected = (8 + 4.25 + static_cast<double>(n_data)) * os * p.chips();
                EXPECT_EQ(build_frame(f, p).size(), static_cast<std::size_t>(expected));
            }
}

TEST(Layout, DelimiterStructure) {
    const LoraParams p = make_params(8, 125000, 1, 8);
    const SyncWord sync{{24, 16}};
    const IqBuffer x = build_frame(make_frame({0x42}), p);
    const DftDemodulator demod(p);
    const std::size_t L = 256;
    for (int i = 0; i < 8; ++i) EXPECT_EQ(demod(x.view(i * L, L)).symbol.value, 0u);
    EXPECT_EQ(demod(x.view(8 * L, L)).symbol.value, sync.symbols[0]);
    EXPECT_EQ(demod(x.view(9 * L, L)).symbol.value, sync.symbols[1]);
    const IqBuffer up = gen_upchirp(p);
    for (std::size_t n = 0; n < 2 * L + L / 4; ++n)
        ASSERT_LT(std::abs(x[10 * L + n] - std::conj(up[n % L])), 1e-12) << n;
}

TEST(Layout, FourBitPayloadFillsOneBlock) {
    const LoraParams p = make_params(8, 125000);
    const auto sym = tx_chain(pad_to_blocks(BitBlock{1, 0, 1, 1}, 8), p, CodeRate{4});
    EXPECT_EQ(sym.size(), 8u);
    EXPECT_EQ(payload_symbol_count(1, false, CodeRate{4}, 8), 8u);
}

TEST(Layout, Deterministic) {
    const LoraParams p = make_params(7, 125000, 2);
    const Frame f = make_frame({1, 2, 3, 4});
    EXPECT_EQ(build_frame(f, p).samples, build_frame(f, p).samples);
}

TEST(Header, RoundtripAllFields) {
    for (int sf = 6; sf <= 12; ++sf) {
        const LoraParams p = make_params(sf, 125000);
        for (std::size_t len : {0u, 1u, 77u, 255u})
            for (int cr = 1; cr <= 4; ++cr)
                for (bool crc : {false, true}) {
                    const auto sym = encode_header(HeaderFields{len, CodeRate{cr}, crc}, p);
                    ASSERT_EQ(sym.size(), kHeaderSymbols);
                    const HeaderFields h = decode_header(sym, p);
                    EXPECT_EQ(h.payload_len, len);
                    EXPECT_EQ(h.cr.value, cr);
                    EXPECT_EQ(h.has_crc, crc);
                }
    }
}

TEST(Header, ChecksumIsXorOfNibbles) {
    EXPECT_EQ(header_checksum(0x000), 0);
    EXPECT_EQ(header_checksum(0x123), 0x1 ^ 0x2 ^ 0x3);
    EXPECT_EQ(header_checksum(0xFFF), 0xF);
}

TEST(Header, SurvivesAdjacentBinError) {
    const LoraParams p = make_params(8, 125000);
    auto sym = encode_header(HeaderFields{42, CodeRate{3}, true}, p);
    sym[5].value = (sym[5].value + 1) % 256;
    EXPECT_EQ(decode_header(sym, p).payload_len, 42u);
}

TEST(Header, RejectsGarbage) {
    const LoraParams p = make_params(8, 125000);
    EXPECT_THROW(decode_header(std::vector<Symbol>(3), p), decode_error);
    EXPECT_THROW(encode_header(HeaderFields{256, CodeRate{4}, true}, p), std::invalid_argument);
    std::mt19937_64 rng(10);
    int rejected = 0;
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<Symbol> sym(8);
        for (auto& s : sym) s.value = static_cast<std::uint32_t>(rng() % 256);
        try {
            decode_header(sym, p);
        } catch (const decode_error&) {
            ++rejected;
        }
    }
    EXPECT_GT(rejected, 450);  // SECDED flags plus a 4-bit checksum
}

TEST(Frame, RoundtripRandomPayloads) {
    std::mt19937_64 rng(11);
    int cases = 0;
    for (int sf = 6; sf <= 12; ++sf)
        for (int cr : {3, 4})
            for (int rep = 0; rep < 75; ++rep, ++cases) {
                const LoraParams p = make_params(sf, 125000);
                const bool header = rep % 3 != 0;
                const bool crc = rep % 2 == 0;
                const Frame f = make_frame(random_bytes(rng() % 64, rng), header, crc, cr);
                const ParsedFrame out = parse_frame(frame_symbols(f, p), f.config, p);
                ASSERT_EQ(out.frame.payload, f.payload);
                ASSERT_TRUE(out.crc_ok);
                ASSERT_FALSE(out.fec_uncorrectable);
                ASSERT_EQ(out.frame.config.cr, f.config.cr);
            }
    EXPECT_GE(cases, 1000);
}

TEST(Frame, EmptyPayload) {
    const LoraParams p = make_params(8, 125000);
    const Frame f = make_frame({});
    const ParsedFrame out = parse_frame(frame_symbols(f, p), f.config, p);
    EXPECT_TRUE(out.frame.payload.empty());
    EXPECT_TRUE(out.crc_ok);
}

TEST(Frame, CorruptedPayloadFailsCrc) {
    const LoraParams p = make_params(8, 125000);
    const Frame f = make_frame({10, 20, 30, 40, 50}, true, true, 4);
    auto sym = frame_symbols(f, p);
    // two adjacent-bin errors in one block exceed what the code repairs
    sym[kHeaderSymbols + 0].value ^= 0x55;
    sym[kHeaderSymbols + 1].value ^= 0xAA;
    sym[kHeaderSymbols + 2].value ^= 0x0F;
    const ParsedFrame out = parse_frame(sym, f.config, p);
    EXPECT_FALSE(out.crc_ok);
}

TEST(Frame, ImplicitHeaderUsesConfig) {
    const LoraParams p = make_params(9, 125000);
    const Frame f = make_frame({1, 2, 3}, false, true, 3);
    const auto sym = frame_symbols(f, p);
    EXPECT_EQ(sym.size(), payload_symbol_count(3, true, CodeRate{3}, 9));
    EXPECT_EQ(parse_frame(sym, f.config, p).frame.payload, f.payload);
}

TEST(Frame, ValidationAndTruncation) {
    const LoraParams p = make_params(8, 125000);
    Frame f = make_frame({1, 2, 3});
    f.config.payload_len = 4;
    EXPECT_THROW(frame_symbols(f, p), std::invalid_argument);
    EXPECT_THROW(frame_symbols(make_frame(std::vector<std::uint8_t>(256)), p), std::invalid_argument);
    const Frame g = make_frame({1, 2, 3});
    auto sym = frame_symbols(g, p);
    sym.pop_back();
    EXPECT_THROW(parse_frame(sym, g.config, p), decode_error);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cssphy/modulator.hpp"
#include "oracles.hpp"

using namespace cssphy;

namespace {

double phase_distance(cf64 a, cf64 b) { return std::abs(std::arg(a * std::conj(b))); }

}  // namespace

TEST(Modulator, FirstSampleIsOne) {
    for (int os : {1, 2})
        for (std::uint32_t s : {0u, 1u, 77u, 255u}) {
            const IqBuffer x = gen_symbol(Symbol{s}, make_params(8, 125000, os));
            EXPECT_NEAR(std::abs(x[0] - cf64{1.0, 0.0}), 0.0, 1e-15);
        }
}

TEST(Modulator, FoldIndex) {
    EXPECT_EQ(fold_index(Symbol{64}, make_params(7, 125000)), 64u);
    EXPECT_EQ(fold_index(Symbol{0}, make_params(7, 125000)), 128u);
    EXPECT_EQ(fold_index(Symbol{64}, make_params(7, 125000, 2)), 128u);
}

TEST(Modulator, HandEvaluatedPhase) {
    // sf 7, s 1, n 1: 1/256 + 1/128 - 1/2 cycles
    const IqBuffer x = gen_symbol(Symbol{1}, make_params(7, 125000));
    const double expected = 2 * std::numbers::pi * (1.0 / 256 + 1.0 / 128 - 0.5);
    EXPECT_LT(phase_distance(x[1], std::polar(1.0, expected)), 1e-12);
}

TEST(Modulator, MatchesContinuousTimeOracle) {
    std::mt19937_64 rng(11);
    for (int sf : {6, 8, 10})
        for (int os : {1, 2, 4}) {
            const LoraParams p = make_params(sf, 125000, os);
            for (int rep = 0; rep < 6; ++rep) {
                const auto s = static_cast<std::uint32_t>(rng() % p.chips());
                const IqBuffer x = gen_symbol(Symbol{s}, p);
                const auto ref = oracle::chirp(s, p);
                for (std::size_t n = 0; n < x.size(); ++n) ASSERT_LT(std::abs(x[n] - ref[n]), 1e-9) << "sf " << sf << " s " << s;
            }
        }
}

TEST(Modulator, UnitModulusEverywhere) {
    for (int sf = 6; sf <= 10; ++sf)
        for (int os : {1, 2}) {
            const LoraParams p = make_params(sf, 250000, os);
            for (std::uint32_t s = 0; s < p.chips(); s += 7) {
                const IqBuffer x = gen_symbol(Symbol{s}, p);
                for (const cf64& z : x.samples) ASSERT_NEAR(std::abs(z), 1.0, 1e-12);
            }
        }
}

TEST(Modulator, OrthogonalAtCriticalSampling) {
    const LoraParams p = make_params(7, 125000);
    std::vector<IqBuffer> sym;
    for (std::uint32_t s = 0; s < p.chips(); ++s) sym.push_back(gen_symbol(Symbol{s}, p));
    for (std::uint32_t a = 0; a < p.chips(); ++a)
        for (std::uint32_t b = 0; b < p.chips(); ++b) {
            cf64 acc{};
            for (std::size_t n = 0; n < sym[a].size(); ++n) acc += sym[a][n] * std::conj(sym[b][n]);
            if (a == b)
                ASSERT_NEAR(std::abs(acc), 128.0, 1e-9);
            else
                ASSERT_LT(std::abs(acc), 1e-9) << a << " vs " << b;
        }
}

TEST(Modulator, FrequencyWrapsOnlyAtFold) {
    // os 4 keeps |f| <= fs/8, so sample-to-sample phase steps never alias
    const LoraParams p = make_params(8, 125000, 4);
    for (std::uint32_t s : {1u, 64u, 128u, 200u, 255u}) {
        const IqBuffer x = gen_symbol(Symbol{s}, p);
        std::vector<double> f(x.size() - 1);
        for (std::size_t n = 0; n + 1 < x.size(); ++n) f[n] = std::arg(x[n + 1] * std::conj(x[n]));
        std::size_t drops = 0, at = 0;
        for (std::size_t n = 0; n + 1 < f.size(); ++n)
            if (f[n + 1] < f[n]) {
                ++drops;
                at = n + 1;
            }
        EXPECT_EQ(drops, 1u) << "s " << s;
        EXPECT_EQ(at, fold_index(Symbol{s}, p)) << "s " << s;  // first low step is n_fold -> n_fold+1
    }
}

TEST(Modulator, UpchirpIsSymbolZeroAndDownchirpIsItsConjugate) {
    const LoraParams p = make_params(9, 500000, 2);
    const IqBuffer up = gen_upchirp(p), down = gen_downchirp(p), s0 = gen_symbol(Symbol{0}, p);
    ASSERT_EQ(up.size(), down.size());
    for (std::size_t n = 0; n < up.size(); ++n) {
        EXPECT_EQ(up[n], s0[n]);
        EXPECT_EQ(down[n], std::conj(up[n]));
        EXPECT_NEAR(std::abs(up[n] * down[n] - cf64{1, 0}), 0.0, 1e-12);
    }
    EXPECT_NEAR(std::abs(down[0] - cf64{1, 0}), 0.0, 1e-15);
}

TEST(Modulator, ConcatenationHasNoGaps) {
    const LoraParams p = make_params(8, 125000, 2);
    EXPECT_TRUE(modulate_symbols({}, p).empty());
    const std::vector<Symbol> one{Symbol{42}};
    EXPECT_EQ(modulate_symbols(one, p).samples, gen_symbol(Symbol{42}, p).samples);
    const std::vector<Symbol> many{Symbol{1}, Symbol{2}, Symbol{250}};
    const IqBuffer x = modulate_symbols(many, p);
    ASSERT_EQ(x.size(), 3 * p.samples_per_symbol());
    EXPECT_DOUBLE_EQ(x.rate, p.sample_rate());
    for (std::size_t i = 0; i < many.size(); ++i) {
        const IqBuffer g = gen_symbol(many[i], p);
        for (std::size_t n = 0; n < g.size(); ++n) ASSERT_EQ(x[i * g.size() + n], g[n]);
    }
}

TEST(Modulator, RejectsOutOfRangeSymbols) {
    const LoraParams p = make_params(7, 125000);
    EXPECT_THROW(make_symbol(128, p), std::invalid_argument);
    EXPECT_THROW(gen_symbol(Symbol{128}, p), std::invalid_argument);
    const std::vector<Symbol> bad{Symbol{3}, Symbol{999}};
    EXPECT_THROW(modulate_symbols(bad, p), std::invalid_argument);
    EXPECT_EQ(make_symbol(127, p).value, 127u);
}

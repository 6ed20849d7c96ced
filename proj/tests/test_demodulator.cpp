#include <gtest/gtest.h>

#include <random>

#include "cssphy/demodulator.hpp"
#include "cssphy/fft.hpp"
#include "oracles.hpp"

using namespace cssphy;

TEST(Fft, MatchesNaiveDft) {
    std::mt19937_64 rng(3);
    for (std::size_t n : {1u, 2u, 8u, 64u, 256u, 1024u}) {
        auto x = oracle::complex_noise(n, 1.0, rng);
        const auto ref = oracle::naive_dft(x);
        detail::fft_inplace(x);
        for (std::size_t k = 0; k < n; ++k) ASSERT_LT(std::abs(x[k] - ref[k]), 1e-9) << "n " << n << " k " << k;
    }
}

TEST(Fft, RejectsNonPowerOfTwo) {
    std::vector<cf64> x(12);
    EXPECT_THROW(detail::fft_inplace(x), std::invalid_argument);
}

TEST(Demodulator, DechirpOfUpchirpIsAllOnes) {
    const LoraParams p = make_params(8, 125000, 2);
    const IqBuffer z = dechirp(gen_upchirp(p), p);
    for (const cf64& v : z.samples) EXPECT_NEAR(std::abs(v - cf64{1, 0}), 0.0, 1e-12);
}

TEST(Demodulator, DechirpOfSymbolIsATone) {
    const LoraParams p = make_params(7, 125000);
    for (std::uint32_t s : {0u, 5u, 100u}) {
        const IqBuffer z = dechirp(gen_symbol(Symbol{s}, p), p);
        // e^{j 2 pi n s / N}; the fold contributes a whole number of cycles at os 1
        for (std::size_t n = 0; n < z.size(); ++n) {
            const double ph = 2 * std::numbers::pi * static_cast<double>((n * s) % p.chips()) / p.chips();
            ASSERT_LT(std::abs(z[n] - std::polar(1.0, ph)), 1e-9);
        }
    }
}

TEST(Demodulator, DechirpOfZerosIsZeros) {
    const LoraParams p = make_params(8, 125000);
    const IqBuffer z = dechirp(IqBuffer(std::vector<cf64>(256), p.sample_rate()), p);
    for (const cf64& v : z.samples) EXPECT_EQ(v, cf64{});
}

TEST(Demodulator, NoiselessPeakAndFloor) {
    const LoraParams p = make_params(8, 125000);
    for (std::uint32_t s : {0u, 1u, 128u, 255u}) {
        const DemodResult r = demod_dft(gen_symbol(Symbol{s}, p), p);
        EXPECT_EQ(r.symbol.value, s);
        EXPECT_NEAR(r.peak_magnitude, 256.0, 1e-9);
        ASSERT_EQ(r.magnitudes.size(), 256u);
        for (std::uint32_t k = 0; k < 256; ++k) {
            if (k != s) {
                ASSERT_LT(r.magnitudes[k], 1e-9);
            }
        }
    }
}

TEST(Demodulator, ExhaustiveRoundtripSmallSpreadingFactors) {
    for (int sf = 6; sf <= 9; ++sf)
        for (int os : {1, 2}) {
            const LoraParams p = make_params(sf, 125000, os);
            const DftDemodulator demod(p);
            for (std::uint32_t s = 0; s < p.chips(); ++s)
                ASSERT_EQ(demod(gen_symbol(Symbol{s}, p).view()).symbol.value, s) << "sf " << sf << " os " << os;
        }
}

TEST(Demodulator, MatchedFilterAgreesWithOracleBank) {
    const LoraParams p = make_params(6, 125000);
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto y = oracle::complex_noise(p.samples_per_symbol(), 1.0, rng);
        const auto ref = oracle::matched_filter_bank(y, p);
        const DemodResult r = demod_matched_filter(std::span<const cf64>(y), p);
        for (std::size_t k = 0; k < ref.size(); ++k) ASSERT_NEAR(r.magnitudes[k], ref[k], 1e-9 * (1 + ref[k]));
    }
}

TEST(Demodulator, DftEquivalentToMatchedFilterUnderNoise) {
    const LoraParams p = make_params(8, 125000);
    std::mt19937_64 rng(17);
    for (double snr_db : {-10.0, 0.0, 10.0})
        for (int rep = 0; rep < 100; ++rep) {
            const auto s = static_cast<std::uint32_t>(rng() % 256);
            IqBuffer y = gen_symbol(Symbol{s}, p);
            const auto w = oracle::complex_noise(y.size(), std::pow(10.0, -snr_db / 10), rng);
            for (std::size_t n = 0; n < y.size(); ++n) y[n] += w[n];
            const DemodResult a = demod_dft(y, p), b = demod_matched_filter(y, p);
            ASSERT_EQ(a.symbol, b.symbol);
            for (std::size_t k = 0; k < 256; ++k)
                ASSERT_LE(std::abs(a.magnitudes[k] - b.magnitudes[k]), 1e-6 * std::max(1.0, b.magnitudes[k]));
        }
}

TEST(Demodulator, DecisionIsScaleInvariant) {
    const LoraParams p = make_params(8, 125000);
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 50; ++rep) {
        IqBuffer y = gen_symbol(Symbol{static_cast<std::uint32_t>(rng() % 256)}, p);
        const auto w = oracle::complex_noise(y.size(), 3.0, rng);
        for (std::size_t n = 0; n < y.size(); ++n) y[n] += w[n];
        const Symbol base = demod_dft(y, p).symbol;
        for (cf64 h : {cf64{0.01, 0}, cf64{-3, 2}, cf64{0, 1e6}}) {
            IqBuffer z = y;
            for (auto& v : z.samples) v *= h;
            ASSERT_EQ(demod_dft(z, p).symbol, base);
        }
    }
}

TEST(Demodulator, OversampledFoldCollectsAliasedBins) {
    const LoraParams p = make_params(7, 125000, 2);
    for (std::uint32_t s : {0u, 3u, 64u, 127u}) {
        const DemodResult r = demod_dft(gen_symbol(Symbol{s}, p), p);
        EXPECT_EQ(r.symbol.value, s);
        EXPECT_NEAR(r.peak_magnitude, static_cast<double>(p.samples_per_symbol()), 1e-6);
    }
}

TEST(Demodulator, TiesGoToLowestIndex) {
    const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
    EXPECT_EQ(argmax_lowest(v), 1u);
    const LoraParams p = make_params(6, 125000);
    EXPECT_EQ(demod_dft(IqBuffer(std::vector<cf64>(64), p.sample_rate()), p).symbol.value, 0u);
}

TEST(Demodulator, LengthMismatchThrows) {
    const LoraParams p = make_params(8, 125000);
    const IqBuffer y(std::vector<cf64>(255), p.sample_rate());
    EXPECT_THROW(demod_dft(y, p), std::invalid_argument);
    EXPECT_THROW(demod_matched_filter(y, p), std::invalid_argument);
    EXPECT_THROW(dechirp(y, p), std::invalid_argument);
}

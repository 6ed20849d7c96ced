#pragma once

// Channel impairments. Composition order used by impair():
//   (synthesis, with SFO if any) -> fading -> CFO -> delay -> AWGN
//
// SNR is per sample: sigma^2 = 10^(-snr_db/10) for unit-magnitude samples.
// Noise comes from std::mt19937_64 seeded with the impairment seed, mapped to
// Gaussians by Box-Muller (two 53-bit uniforms per complex sample).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cssphy/framing.hpp"
#include "cssphy/iq.hpp"
#include "cssphy/params.hpp"

namespace cssphy {

struct ChannelImpairments {
    double snr_db = std::numeric_limits<double>::infinity();
    cf64 h{1.0, 0.0};
    double cfo_hz = 0.0;
    double sfo_hz = 0.0;  ///< f'_s - bw, scaled by os at the receiver
    std::size_t delay_samples = 0;
    std::uint64_t seed = 0;

    double noise_variance() const noexcept {
        return std::isinf(snr_db) && snr_db > 0 ? 0.0 : std::pow(10.0, -snr_db / 10.0);
    }
};

inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept { return seed ^ trial; }

/// Circular complex Gaussian samples with E|z|^2 = variance.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double uniform_open() {  // (0, 1]
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    cf64 next(double variance) {
        const double r = std::sqrt(-variance * std::log(uniform_open()));
        const double theta = 2.0 * std::numbers::pi * uniform_open();
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

inline IqBuffer apply_awgn(IqBuffer y, const ChannelImpairments& imp) {
    const double var = imp.noise_variance();
    if (var == 0.0) return y;
    GaussianSource src(imp.seed);
    for (auto& z : y.samples) z += src.next(var);
    return y;
}

inline IqBuffer apply_fading(IqBuffer y, const ChannelImpairments& imp) {
    if (imp.h == cf64{0.0, 0.0}) throw std::invalid_argument("fading coefficient h must be nonzero");
    if (imp.h == cf64{1.0, 0.0}) return y;
    for (auto& z : y.samples) z *= imp.h;
    return y;
}

/// Rotates sample n by e^{-j 2 pi n cfo / rate}, so a dechirped symbol S lands
/// at S/2^sf - cfo/fs cycles per sample.
inline IqBuffer apply_cfo(IqBuffer y, const ChannelImpairments& imp) {
    if (imp.cfo_hz == 0.0) return y;
    if (y.rate <= 0) throw std::invalid_argument("buffer has no sample rate");
    const double step = imp.cfo_hz / y.rate;
    for (std::size_t n = 0; n < y.size(); ++n) {
        double cyc = step * static_cast<double>(n);
        cyc -= std::floor(cyc);
        y[n] *= std::polar(1.0, -2.0 * std::numbers::pi * cyc);
    }
    return y;
}

inline IqBuffer apply_delay(IqBuffer y, const ChannelImpairments& imp) {
    if (imp.delay_samples == 0) return y;
    y.samples.insert(y.samples.begin(), imp.delay_samples, cf64{});
    return y;
}

inline IqBuffer impair(IqBuffer y, const ChannelImpairments& imp) {
    return apply_awgn(apply_delay(apply_cfo(apply_fading(std::move(y), imp), imp), imp), imp);
}

// ------------------------------------------------------------------ SFO

inline double receiver_rate(const LoraParams& p, double sfo_hz) noexcept {
    return static_cast<double>(p.os) * (static_cast<double>(p.bw) + sfo_hz);
}

/// Evaluates the continuous-time transmit waveform of `layout` at the receiver
/// instants t = n / f'_s, with f'_s = os * (bw + sfo_hz). No resampling filter.
inline IqBuffer synthesize_layout(std::span<const ChirpSegment> layout, const LoraParams& p, double sfo_hz) {
    const double fs_rx = receiver_rate(p, sfo_hz);
    const double chips_per_sample = static_cast<double>(p.bw) / fs_rx;
    const double n_chips = p.chips();

    std::vector<double> starts(layout.size() + 1, 0.0);
    for (std::size_t i = 0; i < layout.size(); ++i) starts[i + 1] = starts[i] + layout[i].chips;
    const double total = starts.back();

    std::vector<cf64> out;
    out.reserve(static_cast<std::size_t>(total / chips_per_sample) + 1);
    std::size_t seg = 0;
    for (std::size_t n = 0;; ++n) {
        const double u = static_cast<double>(n) * chips_per_sample;  // chips since frame start
        if (u >= total) break;
        while (u >= starts[seg + 1]) ++seg;
        const ChirpSegment& s = layout[seg];
        const double local = u - starts[seg];
        const double sym = s.kind == ChirpKind::down ? 0.0 : static_cast<double>(s.symbol.value);
        double cyc = local * local / (2.0 * n_chips) + (sym / n_chips - 0.5) * local;
        if (local >= n_chips - sym) cyc -= local;
        cyc -= std::floor(cyc);
        const double ph = 2.0 * std::numbers::pi * cyc;
        out.emplace_back(std::cos(ph), s.kind == ChirpKind::down ? -std::sin(ph) : std::sin(ph));
    }
    return IqBuffer(std::move(out), fs_rx);
}

/// Full frame (preamble, delimiters, `data`) as seen by a receiver sampling at
/// os * (bw + imp.sfo_hz).
inline IqBuffer synthesize_with_sfo(std::span<const Symbol> data, const LoraParams& p,
                                    const ChannelImpairments& imp, const SyncWord& sync = {}) {
    return synthesize_layout(frame_layout(data, p, sync), p, imp.sfo_hz);
}

}  // namespace cssphy

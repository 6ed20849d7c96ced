#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cssphy {

/// Global PHY parameter set. Immutable once built by make_params().
struct LoraParams {
    int sf = 8;                 ///< spreading factor, 6..12
    std::uint32_t bw = 125000;  ///< chirp bandwidth [Hz]
    int os = 1;                 ///< receiver oversampling, fs = os * bw
    int n_pre = 8;              ///< preamble upchirps

    std::uint32_t chips() const noexcept { return std::uint32_t{1} << sf; }
    std::size_t samples_per_symbol() const noexcept {
        return static_cast<std::size_t>(chips()) * static_cast<std::size_t>(os);
    }
    double sample_rate() const noexcept { return static_cast<double>(os) * bw; }
    double symbol_duration() const noexcept { return static_cast<double>(chips()) / bw; }

    bool operator==(const LoraParams&) const = default;
};

inline bool valid_bandwidth(std::uint32_t bw) noexcept {
    return bw == 125000 || bw == 250000 || bw == 500000;
}

inline LoraParams make_params(int sf, std::uint32_t bw, int os = 1, int n_pre = 8) {
    if (sf < 6 || sf > 12)
        throw std::invalid_argument("spreading factor " + std::to_string(sf) + " outside 6..12");
    if (!valid_bandwidth(bw))
        throw std::invalid_argument("bandwidth " + std::to_string(bw) +
                                    " Hz not one of 125000, 250000, 500000");
    if (os < 1 || (os & (os - 1)) != 0)
        throw std::invalid_argument("oversampling factor must be a power of two >= 1");
    if (n_pre < 2)
        throw std::invalid_argument("preamble needs at least two upchirps");
    return LoraParams{sf, bw, os, n_pre};
}

}  // namespace cssphy

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cssphy {

using cf64 = std::complex<double>;

/// Complex baseband samples tagged with their sample rate [Hz].
struct IqBuffer {
    std::vector<cf64> samples;
    double rate = 0.0;

    IqBuffer() = default;
    IqBuffer(std::vector<cf64> s, double r) : samples(std::move(s)), rate(r) {}

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    cf64& operator[](std::size_t i) { return samples[i]; }
    const cf64& operator[](std::size_t i) const { return samples[i]; }

    std::span<const cf64> view() const noexcept { return samples; }
    std::span<const cf64> view(std::size_t first, std::size_t count) const {
        if (first > samples.size() || count > samples.size() - first)
            throw std::out_of_range("IQ view past end of buffer");
        return std::span<const cf64>(samples).subspan(first, count);
    }

    void append(std::span<const cf64> more) { samples.insert(samples.end(), more.begin(), more.end()); }
};

}  // namespace cssphy

#pragma once

// Iterative radix-2 FFT. Plans are cached per thread, so concurrent callers
// never share a workspace.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cssphy/iq.hpp"

namespace cssphy::detail {

class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n), twiddle_(n / 2), bitrev_(n) {
        if (n == 0 || (n & (n - 1)) != 0)
            throw std::invalid_argument("FFT size must be a power of two");
        int bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (int b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
        // exact k/n reduction per twiddle; no recurrence drift
        for (std::size_t k = 0; k < n / 2; ++k)
            twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                              static_cast<double>(n));
    }

    std::size_t size() const noexcept { return n_; }

    /// In-place forward transform, X_k = sum_n x[n] e^{-j 2 pi n k / N}.
    void forward(std::span<cf64> x) const {
        if (x.size() != n_) throw std::invalid_argument("FFT input length mismatch");
        for (std::size_t i = 0; i < n_; ++i)
            if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const cf64 t = twiddle_[j * stride] * x[i + j + half];
                    x[i + j + half] = x[i + j] - t;
                    x[i + j] += t;
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<cf64> twiddle_;
    std::vector<std::size_t> bitrev_;
};

inline const FftPlan& fft_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

inline void fft_inplace(std::span<cf64> x) { fft_plan(x.size()).forward(x); }

}  // namespace cssphy::detail

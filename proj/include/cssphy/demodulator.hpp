#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "cssphy/fft.hpp"
#include "cssphy/iq.hpp"
#include "cssphy/modulator.hpp"
#include "cssphy/params.hpp"

namespace cssphy {

/// Outcome of one symbol decision: |X_k| for the 2^sf decision bins and the
/// argmax (lowest index on ties).
struct DemodResult {
    Symbol symbol;
    std::vector<double> magnitudes;
    double peak_magnitude = 0.0;
};

inline std::size_t argmax_lowest(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

inline DemodResult decide(std::vector<double> magnitudes) {
    const std::size_t k = argmax_lowest(magnitudes);
    const double peak = magnitudes.empty() ? 0.0 : magnitudes[k];
    return DemodResult{Symbol{static_cast<std::uint32_t>(k)}, std::move(magnitudes), peak};
}

inline void check_symbol_length(std::size_t n, const LoraParams& p) {
    if (n != p.samples_per_symbol())
        throw std::invalid_argument("symbol buffer holds " + std::to_string(n) +
                                    " samples, expected " +
                                    std::to_string(p.samples_per_symbol()));
}

/// Dechirp + DFT demodulator bound to one parameter set. Holds the reference
/// downchirp; transforms run in a per-thread workspace.
class DftDemodulator {
public:
    explicit DftDemodulator(const LoraParams& p) : params_(p), ref_(gen_downchirp(p).samples) {}

    const LoraParams& params() const noexcept { return params_; }

    /// Folded bin magnitudes: decision bin k collects |X_{k + m 2^sf}| for m < os.
    std::vector<double> magnitudes(std::span<const cf64> y) const {
        check_symbol_length(y.size(), params_);
        thread_local std::vector<cf64> work;
        work.resize(y.size());
        for (std::size_t n = 0; n < y.size(); ++n) work[n] = y[n] * ref_[n];
        detail::fft_inplace(work);
        const std::size_t chips = params_.chips();
        std::vector<double> mags(chips, 0.0);
        for (std::size_t k = 0; k < work.size(); ++k) mags[k % chips] += std::abs(work[k]);
        return mags;
    }

    DemodResult operator()(std::span<const cf64> y) const { return decide(magnitudes(y)); }

private:
    LoraParams params_;
    std::vector<cf64> ref_;
};

inline IqBuffer dechirp(const IqBuffer& y, const LoraParams& p) {
    check_symbol_length(y.size(), p);
    const IqBuffer down = gen_downchirp(p);
    IqBuffer out = y;
    for (std::size_t n = 0; n < out.size(); ++n) out[n] *= down[n];
    return out;
}

inline DemodResult demod_dft(std::span<const cf64> y, const LoraParams& p) {
    return DftDemodulator(p)(y);
}
inline DemodResult demod_dft(const IqBuffer& y, const LoraParams& p) { return demod_dft(y.view(), p); }

/// Bank of 2^sf correlators against the candidate symbols.
inline DemodResult demod_matched_filter(std::span<const cf64> y, const LoraParams& p) {
    check_symbol_length(y.size(), p);
    std::vector<double> mags(p.chips());
    std::vector<cf64> ref(y.size());
    for (std::uint32_t k = 0; k < p.chips(); ++k) {
        detail::render_symbol(Symbol{k}, p, ref);
        cf64 acc{};
        for (std::size_t n = 0; n < y.size(); ++n) acc += y[n] * std::conj(ref[n]);
        mags[k] = std::abs(acc);
    }
    return decide(std::move(mags));
}
inline DemodResult demod_matched_filter(const IqBuffer& y, const LoraParams& p) {
    return demod_matched_filter(y.view(), p);
}

}  // namespace cssphy

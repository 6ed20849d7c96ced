#pragma once

// Receiver synchronization: preamble detection, frame alignment with the
// CFO-induced time offset left in place, residual CFO estimation and
// compensation, and SFO boundary realignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cssphy/demodulator.hpp"
#include "cssphy/framing.hpp"
#include "cssphy/iq.hpp"
#include "cssphy/params.hpp"

namespace cssphy {

/// Negative threshold selects the automatic rule.
inline constexpr double kAutoThreshold = -1.0;

struct SyncState {
    std::uint32_t s_pre_hat = 0;  ///< preamble peak bin
    std::size_t frame_start = 0;  ///< first sample of the first confirming block
    bool detected = false;
};

inline std::uint32_t circular_distance(std::uint32_t a, std::uint32_t b, std::uint32_t n) noexcept {
    const std::uint32_t d = a > b ? a - b : b - a;
    return std::min(d, n - d);
}

/// 4 * sqrt(2^sf) * sigma_hat, with sigma_hat taken from the median magnitude
/// of the non-peak bins (Rayleigh median = rms * sqrt(ln 2)).
inline double auto_threshold(std::span<const double> mags, std::size_t peak, double factor = 4.0) {
    std::vector<double> rest;
    rest.reserve(mags.size());
    for (std::size_t k = 0; k < mags.size(); ++k)
        if (k != peak) rest.push_back(mags[k]);
    if (rest.empty()) return 0.0;
    auto mid = rest.begin() + static_cast<std::ptrdiff_t>(rest.size() / 2);
    std::nth_element(rest.begin(), mid, rest.end());
    return factor * (*mid) / std::sqrt(std::numbers::ln2);
}

/// Slides symbol-sized blocks over `stream`. A block counts when its peak
/// exceeds the threshold; detection needs n_pre - 1 consecutive counting blocks
/// whose peak bins stay within one bin (circularly) of the first one.
/// s_pre_hat is the peak of the magnitude spectra summed over those blocks.
inline SyncState detect_preamble(const IqBuffer& stream, const LoraParams& p, double threshold = kAutoThreshold) {
    const std::size_t len = p.samples_per_symbol();
    const std::uint32_t chips = p.chips();
    const int needed = std::max(1, p.n_pre - 1);
    const DftDemodulator demod(p);

    int run = 0;
    std::uint32_t run_bin = 0;
    std::size_t run_start = 0;
    std::vector<double> acc(chips, 0.0);
    for (std::size_t start = 0; start + len <= stream.size(); start += len) {
        const std::vector<double> mags = demod.magnitudes(stream.view(start, len));
        const std::size_t k = argmax_lowest(mags);
        const double thr = threshold >= 0 ? threshold : auto_threshold(mags, k);
        if (!(mags[k] > thr) || mags[k] <= 0.0) {
            run = 0;
            continue;
        }
        const auto bin = static_cast<std::uint32_t>(k);
        if (run > 0 && circular_distance(bin, run_bin, chips) <= 1) {
            ++run;
            for (std::size_t i = 0; i < chips; ++i) acc[i] += mags[i];
        } else {
            run = 1;
            run_bin = bin;
            run_start = start;
            acc = mags;
        }
        if (run >= needed)
            return SyncState{static_cast<std::uint32_t>(argmax_lowest(acc)), run_start, true};
    }
    return SyncState{};
}

struct FrameTiming {
    std::size_t preamble_start = 0;   ///< aligned upchirp boundary
    std::size_t preamble_blocks = 0;  ///< aligned upchirp blocks before the sync word
    std::size_t data_start = 0;       ///< first post-delimiter sample
};

/// Skips (2^sf - s_pre_hat) * os samples, then finds the sync word among the
/// following aligned blocks and steps over it and the 2.25 downchirps. A CFO
/// shows up as an extra round(cfo/fs * 2^sf) sample offset which is kept.
inline FrameTiming synchronize(const IqBuffer& stream, const SyncState& sync, const LoraParams& p,
                               const SyncWord& word = {}) {
    if (!sync.detected) throw std::invalid_argument("synchronize needs a detected preamble");
    const std::size_t len = p.samples_per_symbol();
    const std::uint32_t chips = p.chips();
    const std::size_t aligned =
        sync.frame_start + static_cast<std::size_t>(chips - sync.s_pre_hat) * static_cast<std::size_t>(p.os);
    const DftDemodulator demod(p);

    auto near_mag = [&](const std::vector<double>& mags, std::uint32_t s) {
        double best = 0.0;
        for (std::uint32_t dk : {chips - 1, 0u, 1u}) best = std::max(best, mags[(s + dk) % chips]);
        return best;
    };

    std::optional<std::size_t> best_p;
    double best_score = -1.0;
    std::vector<std::vector<double>> cache;
    for (std::size_t cand = 0; cand <= static_cast<std::size_t>(p.n_pre) + 1; ++cand) {
        if (aligned + (cand + 2) * len > stream.size()) break;
        while (cache.size() < cand + 2) cache.push_back(demod.magnitudes(stream.view(aligned + cache.size() * len, len)));
        const double score = near_mag(cache[cand], word.symbols[0]) + near_mag(cache[cand + 1], word.symbols[1]);
        if (score > best_score) {
            best_score = score;
            best_p = cand;
        }
    }
    if (!best_p) throw decode_error("stream ends before the sync word");
    const std::size_t data = aligned + (*best_p + 4) * len + len / 4;
    return FrameTiming{aligned, *best_p, data};
}

// -------------------------------------------------------------------- CFO

struct CfoEstimate {
    double delta_phi_hat = 0.0;  ///< phase advance per symbol [rad], in [-pi, pi)
};

inline double wrap_phase(double x) noexcept {
    x = std::remainder(x, 2.0 * std::numbers::pi);
    if (x >= std::numbers::pi) x -= 2.0 * std::numbers::pi;
    return x;
}

/// arg( sum_n y[n] conj(y[n + L]) ) over every pair of consecutive upchirps in
/// `preamble` (whole symbols only).
inline CfoEstimate estimate_residual_cfo(std::span<const cf64> preamble, const LoraParams& p) {
    const std::size_t len = p.samples_per_symbol();
    const std::size_t blocks = preamble.size() / len;
    if (blocks < 2) throw std::invalid_argument("CFO estimate needs at least two upchirps");
    cf64 acc{};
    for (std::size_t n = 0; n + len < blocks * len; ++n) acc += preamble[n] * std::conj(preamble[n + len]);
    return CfoEstimate{wrap_phase(std::arg(acc))};
}
inline CfoEstimate estimate_residual_cfo(const IqBuffer& preamble, const LoraParams& p) {
    return estimate_residual_cfo(preamble.view(), p);
}

/// y[n] * e^{j (first_index + n) dphi / L}; removes the tone the estimate saw.
inline IqBuffer compensate_cfo(IqBuffer y, const CfoEstimate& est, const LoraParams& p, std::size_t first_index = 0) {
    if (est.delta_phi_hat == 0.0) return y;
    const double step = est.delta_phi_hat / (2.0 * std::numbers::pi * static_cast<double>(p.samples_per_symbol()));
    for (std::size_t n = 0; n < y.size(); ++n) {
        double cyc = step * static_cast<double>(first_index + n);
        cyc -= std::floor(cyc);
        y[n] *= std::polar(1.0, 2.0 * std::numbers::pi * cyc);
    }
    return y;
}

/// Peak bin of `blocks` aligned preamble upchirps summed; mapped to {-1, 0, +1}
/// (anything else reads as 0). After residual compensation a wrapped estimate
/// leaves every symbol one bin off, which this offset undoes.
inline int preamble_reference_bin(std::span<const cf64> stream, std::size_t start, std::size_t blocks,
                                  const LoraParams& p) {
    const std::size_t len = p.samples_per_symbol();
    const std::uint32_t chips = p.chips();
    const DftDemodulator demod(p);
    std::vector<double> acc(chips, 0.0);
    std::size_t used = 0;
    for (std::size_t b = 0; b < blocks && start + (b + 1) * len <= stream.size(); ++b, ++used) {
        const auto mags = demod.magnitudes(stream.subspan(start + b * len, len));
        for (std::size_t i = 0; i < chips; ++i) acc[i] += mags[i];
    }
    if (used == 0) return 0;
    const std::size_t k = argmax_lowest(acc);
    if (k == 1) return 1;
    if (k == chips - 1) return -1;
    return 0;
}

// -------------------------------------------------------------------- SFO

struct DriftPoint {
    std::size_t d = 0;  ///< symbol index
    std::size_t n = 0;  ///< sample within the symbol
    bool operator==(const DriftPoint&) const = default;
};

/// Tracks when half a sample of drift has accumulated between the receiver
/// grid (rate fs_rx) and the nominal grid (os * bw). Output sample j of the
/// realigned stream reads input sample j + k, k = net samples dropped.
///   fs_rx > nominal: drop when (j + k + 1/2) / fs_rx < j / nominal
///   fs_rx < nominal: repeat when (j + k - 1/2) / fs_rx > j / nominal
class SfoTracker {
public:
    SfoTracker(double bw, double fs_rx, int os = 1) : bw_(bw), fs_rx_(fs_rx), os_(os) {
        if (bw <= 0 || fs_rx <= 0 || os < 1) throw std::invalid_argument("invalid SFO tracker rates");
        next_ = search(0);
    }

    double bw() const noexcept { return bw_; }
    double fs_rx() const noexcept { return fs_rx_; }
    double fs_nominal() const noexcept { return static_cast<double>(os_) * bw_; }
    int os() const noexcept { return os_; }
    long long adjustment() const noexcept { return k_; }
    bool drops() const noexcept { return fs_rx_ > fs_nominal(); }

    std::optional<std::size_t> next_drift_sample() const noexcept { return next_; }

    /// Records the realignment at next_drift_sample() and moves to the next one.
    void advance() {
        if (!next_) return;
        k_ += drops() ? 1 : -1;
        next_ = search(*next_ + 1);
    }

private:
    bool fires(std::size_t j) const {
        const double jd = static_cast<double>(j);
        const double kd = static_cast<double>(k_);
        if (drops()) return (jd + kd + 0.5) / fs_rx_ < jd / fs_nominal();
        return (jd + kd - 0.5) / fs_rx_ > jd / fs_nominal();
    }

    std::optional<std::size_t> search(std::size_t from) const {
        const double nom = fs_nominal();
        if (fs_rx_ == nom) return std::nullopt;
        const double kd = static_cast<double>(k_);
        const double guess = drops() ? (kd + 0.5) * nom / (fs_rx_ - nom) : (0.5 - kd) * nom / (nom - fs_rx_);
        if (!(guess < 1e18)) return std::nullopt;
        std::size_t j = std::max<std::size_t>(from, guess > 3.0 ? static_cast<std::size_t>(guess) - 3 : 0);
        while (j > from && fires(j - 1)) --j;
        while (!fires(j)) ++j;
        return j;
    }

    double bw_;
    double fs_rx_;
    int os_;
    long long k_ = 0;
    std::optional<std::size_t> next_;
};

inline std::optional<DriftPoint> sfo_next_drift(const SfoTracker& tracker, int sf) {
    const auto j = tracker.next_drift_sample();
    if (!j) return std::nullopt;
    const std::size_t len = (std::size_t{1} << sf) * static_cast<std::size_t>(tracker.os());
    return DriftPoint{*j / len, *j % len};
}

inline constexpr std::size_t kAllBlocks = std::numeric_limits<std::size_t>::max();

/// Realigned symbol blocks. Drift accounting starts at samples[0]; blocks are
/// cut from output index `first_output` on. Throws when fewer than
/// `block_count` complete blocks are available (kAllBlocks: as many as fit).
inline std::vector<IqBuffer> realign_stream(std::span<const cf64> samples, SfoTracker& tracker, const LoraParams& p,
                                            std::size_t first_output, std::size_t block_count, double rate = 0.0) {
    const std::size_t len = p.samples_per_symbol();
    std::vector<IqBuffer> blocks;
    std::vector<cf64> cur;
    cur.reserve(len);
    long long k = 0;
    for (std::size_t j = 0; blocks.size() < block_count; ++j) {
        if (const auto next = tracker.next_drift_sample(); next && *next == j) {
            k += tracker.drops() ? 1 : -1;
            tracker.advance();
        }
        const long long m = static_cast<long long>(j) + k;
        if (m < 0 || static_cast<std::size_t>(m) >= samples.size()) {
            if (block_count == kAllBlocks) break;
            throw decode_error("stream exhausted mid-symbol during realignment");
        }
        if (j < first_output) continue;
        cur.push_back(samples[static_cast<std::size_t>(m)]);
        if (cur.size() == len) {
            blocks.emplace_back(std::move(cur), rate);
            cur = {};
            cur.reserve(len);
        }
    }
    return blocks;
}

}  // namespace cssphy

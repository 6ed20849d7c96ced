#pragma once

// Monte-Carlo BER engine.
//
// Each frame trial is a pure function of (spec, snr, trial seed): random
// payload -> tx_chain -> frame -> channel -> receiver(mode) -> rx_chain.
// Trials run in fixed batches across worker threads and are reduced in trial
// order, so the stop point and every count are independent of thread count.
//
// Receivers know the coarse frame position (delay_samples). The sync modes
// take their time offset from the peak of the preamble spectra summed over
// all n_pre preamble blocks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cssphy/channel.hpp"
#include "cssphy/codec.hpp"
#include "cssphy/demodulator.hpp"
#include "cssphy/framing.hpp"
#include "cssphy/sync.hpp"

namespace cssphy {

enum class ReceiverMode {
    aligned_no_comp,
    timeoffset_sync,
    timeoffset_sync_cfo_comp,
    sfo_no_realign,
    sfo_realign,
};

inline std::string_view to_string(ReceiverMode m) {
    switch (m) {
        case ReceiverMode::aligned_no_comp: return "aligned-no-comp";
        case ReceiverMode::timeoffset_sync: return "timeoffset-sync";
        case ReceiverMode::timeoffset_sync_cfo_comp: return "timeoffset-sync+cfo-comp";
        case ReceiverMode::sfo_no_realign: return "sfo-no-realign";
        case ReceiverMode::sfo_realign: return "sfo-realign";
    }
    return "?";
}

inline ReceiverMode parse_receiver_mode(std::string_view s) {
    for (auto m : {ReceiverMode::aligned_no_comp, ReceiverMode::timeoffset_sync, ReceiverMode::timeoffset_sync_cfo_comp,
                   ReceiverMode::sfo_no_realign, ReceiverMode::sfo_realign})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown receiver mode '" + std::string(s) + "'");
}

struct StopRule {
    std::uint64_t min_bit_errors = 100;
    std::uint64_t max_frames = 100000;
    std::uint64_t min_frames = 1;
};

struct SweepSpec {
    LoraParams params{};
    CodeRate cr{4};
    std::size_t frame_len_symbols = 32;  ///< payload symbols, rounded up to whole blocks
    std::vector<double> snr_points;
    ChannelImpairments impairments{};    ///< snr_db and seed are set per point/trial
    ReceiverMode mode = ReceiverMode::aligned_no_comp;
    StopRule stop{};
    double stop_below_ber = 0.0;  ///< end the sweep after the first point below this (0: off)
    std::uint64_t seed = 1;
    unsigned threads = 0;  ///< 0: hardware concurrency
};

enum class StopReason { min_errors, max_frames };

inline std::string_view to_string(StopReason r) { return r == StopReason::min_errors ? "min_errors" : "max_frames"; }

struct BerRecord {
    double snr_db = 0.0;
    std::uint64_t frames = 0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t symbols = 0;
    std::uint64_t symbol_errors = 0;
    std::uint64_t frame_errors = 0;
    double ber = 0.0;
    double wall_time = 0.0;  ///< seconds
    StopReason stop_reason = StopReason::max_frames;
    // configuration echo for CSV rows
    ReceiverMode mode = ReceiverMode::aligned_no_comp;
    double cfo_hz = 0.0;
    double sfo_hz = 0.0;
    int sf = 0;
    int cr = 0;
    int os = 0;
    std::uint64_t seed = 0;
    std::size_t frame_symbols = 0;

    double ser() const noexcept { return symbols ? static_cast<double>(symbol_errors) / static_cast<double>(symbols) : 0.0; }
};

inline void validate(const SweepSpec& s) {
    if (s.snr_points.empty()) throw std::invalid_argument("sweep needs at least one SNR point");
    if (s.stop.min_bit_errors < 1) throw std::invalid_argument("min_bit_errors must be >= 1");
    if (s.stop.max_frames < 1) throw std::invalid_argument("max_frames must be >= 1");
    if (s.frame_len_symbols == 0) throw std::invalid_argument("frame_len_symbols must be positive");
    if (s.impairments.h == cf64{0.0, 0.0}) throw std::invalid_argument("fading coefficient h must be nonzero");
}

inline std::size_t payload_symbols(const SweepSpec& s) {
    const std::size_t cw = static_cast<std::size_t>(s.cr.codeword_bits());
    return (s.frame_len_symbols + cw - 1) / cw * cw;
}

inline std::size_t payload_bits(const SweepSpec& s) {
    return payload_symbols(s) / static_cast<std::size_t>(s.cr.codeword_bits()) * block_data_bits(s.params.sf);
}

struct TrialOutcome {
    std::uint64_t bit_errors = 0;
    std::uint64_t symbol_errors = 0;
};

namespace detail {

inline bool uses_sfo_path(ReceiverMode m) {
    return m == ReceiverMode::sfo_no_realign || m == ReceiverMode::sfo_realign;
}

/// Signed time offset [samples] from the preamble peak summed over n_pre blocks.
inline long long preamble_time_offset(std::span<const cf64> rx, std::size_t origin, const LoraParams& p,
                                      const DftDemodulator& demod) {
    const std::size_t len = p.samples_per_symbol();
    const std::uint32_t chips = p.chips();
    std::vector<double> acc(chips, 0.0);
    for (int b = 0; b < p.n_pre; ++b) {
        const std::size_t start = origin + static_cast<std::size_t>(b) * len;
        if (start + len > rx.size()) break;
        const auto mags = demod.magnitudes(rx.subspan(start, len));
        for (std::size_t i = 0; i < chips; ++i) acc[i] += mags[i];
    }
    const auto s_hat = static_cast<long long>(argmax_lowest(acc));
    long long skip = (static_cast<long long>(chips) - s_hat) % static_cast<long long>(chips);
    if (skip > static_cast<long long>(chips) / 2) skip -= chips;
    return skip * p.os;
}

}  // namespace detail

/// One frame trial.
inline TrialOutcome run_trial(const SweepSpec& spec, double snr_db, std::uint64_t seed, const DftDemodulator& demod) {
    const LoraParams& p = spec.params;
    const std::size_t n_bits = payload_bits(spec);
    std::mt19937_64 payload_rng(seed ^ 0x9E3779B97F4A7C15ull);
    BitBlock bits(n_bits);
    for (std::size_t i = 0; i < n_bits; i += 64) {
        const std::uint64_t r = payload_rng();
        for (std::size_t b = 0; b < 64 && i + b < n_bits; ++b) bits[i + b] = static_cast<std::uint8_t>((r >> b) & 1u);
    }
    const std::vector<Symbol> tx = tx_chain(bits, p, spec.cr);

    ChannelImpairments imp = spec.impairments;
    imp.snr_db = snr_db;
    imp.seed = seed;
    IqBuffer rx = detail::uses_sfo_path(spec.mode) ? synthesize_with_sfo(tx, p, imp)
                                                    : render_layout(frame_layout(tx, p), p);
    // trailing silence so late-synced windows still see (noisy) samples
    rx.samples.resize(rx.size() + p.samples_per_symbol(), cf64{});
    rx = impair(std::move(rx), imp);

    const std::size_t len = p.samples_per_symbol();
    const std::size_t origin = imp.delay_samples;
    const std::size_t nominal_data = origin + delimiter_end_sample(p);
    std::vector<Symbol> decided(tx.size());
    int ref_bin = 0;

    auto demod_at = [&](long long data_start) {
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const long long start = data_start + static_cast<long long>(i * len);
            if (start < 0 || static_cast<std::size_t>(start) + len > rx.size()) {
                decided[i] = Symbol{0};
                continue;
            }
            const auto v = demod(rx.view(static_cast<std::size_t>(start), len)).symbol.value;
            decided[i] = Symbol{static_cast<std::uint32_t>((static_cast<long long>(v) - ref_bin + p.chips()) % p.chips())};
        }
    };

    switch (spec.mode) {
        case ReceiverMode::aligned_no_comp:
        case ReceiverMode::sfo_no_realign:
            demod_at(static_cast<long long>(nominal_data));
            break;
        case ReceiverMode::timeoffset_sync:
        case ReceiverMode::timeoffset_sync_cfo_comp: {
            const long long offset = detail::preamble_time_offset(rx.view(), origin, p, demod);
            if (spec.mode == ReceiverMode::timeoffset_sync_cfo_comp) {
                const std::size_t pre_len = static_cast<std::size_t>(p.n_pre) * len;
                const CfoEstimate est = estimate_residual_cfo(rx.view(origin, std::min(pre_len, rx.size() - origin)), p);
                rx = compensate_cfo(std::move(rx), est, p);
                // aligned preamble blocks lying wholly inside the preamble
                const std::size_t first = offset < 0 ? 1 : 0;
                const std::size_t last = offset > 0 ? static_cast<std::size_t>(p.n_pre) - 1 : static_cast<std::size_t>(p.n_pre);
                const long long start = static_cast<long long>(origin) + offset + static_cast<long long>(first * len);
                if (last > first && start >= 0)
                    ref_bin = preamble_reference_bin(rx.view(), static_cast<std::size_t>(start), last - first, p);
            }
            demod_at(static_cast<long long>(nominal_data) + offset);
            break;
        }
        case ReceiverMode::sfo_realign: {
            SfoTracker tracker(p.bw, receiver_rate(p, imp.sfo_hz), p.os);
            const auto blocks = realign_stream(rx.view().subspan(origin), tracker, p, delimiter_end_sample(p), kAllBlocks);
            for (std::size_t i = 0; i < tx.size(); ++i)
                decided[i] = i < blocks.size() ? demod(blocks[i].view()).symbol : Symbol{0};
            break;
        }
    }

    TrialOutcome out;
    for (std::size_t i = 0; i < tx.size(); ++i) out.symbol_errors += decided[i] != tx[i];
    const ChainResult dec = rx_chain(decided, p, spec.cr);
    for (std::size_t i = 0; i < n_bits; ++i) out.bit_errors += dec.bits[i] != bits[i];
    return out;
}

inline BerRecord run_point(const SweepSpec& spec, double snr_db, std::uint64_t seed) {
    validate(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const DftDemodulator demod(spec.params);
    const unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    constexpr std::uint64_t kBatch = 64;

    BerRecord rec;
    rec.snr_db = snr_db;
    rec.mode = spec.mode;
    rec.cfo_hz = spec.impairments.cfo_hz;
    rec.sfo_hz = spec.impairments.sfo_hz;
    rec.sf = spec.params.sf;
    rec.cr = spec.cr.value;
    rec.os = spec.params.os;
    rec.seed = seed;
    rec.frame_symbols = payload_symbols(spec);
    const std::uint64_t bits_per_frame = payload_bits(spec);

    std::vector<TrialOutcome> batch;
    bool done = false;
    for (std::uint64_t base = 0; !done; base += kBatch) {
        const std::uint64_t count = std::min<std::uint64_t>(kBatch, spec.stop.max_frames - base);
        batch.assign(count, {});
        auto work = [&](unsigned w) {
            for (std::uint64_t i = w; i < count; i += workers)
                batch[i] = run_trial(spec, snr_db, trial_seed(seed, base + i), demod);
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        }
        for (const TrialOutcome& t : batch) {
            ++rec.frames;
            rec.bits += bits_per_frame;
            rec.symbols += rec.frame_symbols;
            rec.bit_errors += t.bit_errors;
            rec.symbol_errors += t.symbol_errors;
            rec.frame_errors += t.bit_errors > 0;
            if (rec.bit_errors >= spec.stop.min_bit_errors && rec.frames >= spec.stop.min_frames) {
                rec.stop_reason = StopReason::min_errors;
                done = true;
                break;
            }
            if (rec.frames >= spec.stop.max_frames) {
                rec.stop_reason = StopReason::max_frames;
                done = true;
                break;
            }
        }
    }
    rec.ber = static_cast<double>(rec.bit_errors) / static_cast<double>(rec.bits);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

inline std::uint64_t point_seed(std::uint64_t master, std::size_t index) noexcept {
    return master ^ (static_cast<std::uint64_t>(index) << 40);
}

inline std::vector<BerRecord> run_sweep(const SweepSpec& spec) {
    validate(spec);
    std::vector<BerRecord> out;
    for (std::size_t i = 0; i < spec.snr_points.size(); ++i) {
        out.push_back(run_point(spec, spec.snr_points[i], point_seed(spec.seed, i)));
        if (spec.stop_below_ber > 0.0 && out.back().ber < spec.stop_below_ber) break;
    }
    return out;
}

// -------------------------------------------------------------------- CSV

inline constexpr std::string_view kCsvHeader =
    "snr_db,frames,bits,bit_errors,symbol_errors,frame_errors,ber,mode,cfo_hz,sfo_hz,sf,cr,os,seed,frame_symbols,stop_reason";

inline std::string to_csv_row(const BerRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.2f,%llu,%llu,%llu,%llu,%llu,%.6e,%s,%.1f,%.1f,%d,%d,%d,%llu,%zu,%s", r.snr_db,
                  static_cast<unsigned long long>(r.frames), static_cast<unsigned long long>(r.bits),
                  static_cast<unsigned long long>(r.bit_errors), static_cast<unsigned long long>(r.symbol_errors),
                  static_cast<unsigned long long>(r.frame_errors), r.ber, std::string(to_string(r.mode)).c_str(), r.cfo_hz,
                  r.sfo_hz, r.sf, r.cr, r.os, static_cast<unsigned long long>(r.seed), r.frame_symbols,
                  std::string(to_string(r.stop_reason)).c_str());
    return buf;
}

inline std::string to_csv(const std::vector<BerRecord>& records) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : records) {
        out += to_csv_row(r);
        out += '\n';
    }
    return out;
}

// ------------------------------------------------------ figure replication

inline std::vector<double> snr_grid(double from, double to, double step) {
    std::vector<double> g;
    for (int i = 0;; ++i) {
        const double v = from + step * i;
        if (v > to + 1e-9) break;
        g.push_back(v);
    }
    return g;
}

/// SF 8, cr 4, bw 125 kHz, 32 payload symbols. No-CFO baseline plus the
/// three CFO receivers at 10 kHz and 10.1 kHz.
inline std::vector<SweepSpec> fig2_specs(std::uint64_t seed, unsigned threads = 0) {
    SweepSpec base;
    base.params = make_params(8, 125000, 1, 8);
    base.cr = CodeRate{4};
    base.frame_len_symbols = 32;
    base.snr_points = snr_grid(-14.0, 0.0, 0.5);
    base.stop = StopRule{100, 20000, 50};
    base.stop_below_ber = 1e-3;
    base.seed = seed;
    base.threads = threads;

    std::vector<SweepSpec> specs;
    specs.push_back(base);  // ideal, no CFO
    for (double cfo : {10000.0, 10100.0}) {
        for (auto mode : {ReceiverMode::aligned_no_comp, ReceiverMode::timeoffset_sync,
                          ReceiverMode::timeoffset_sync_cfo_comp}) {
            SweepSpec s = base;
            s.impairments.cfo_hz = cfo;
            s.mode = mode;
            specs.push_back(s);
        }
    }
    return specs;
}

/// SF 8, cr 4, bw 250 kHz. SFO 5 Hz and 10 Hz; 32- and 200-symbol frames;
/// no realignment, realignment at os 1 and at os 2.
inline std::vector<SweepSpec> fig3_specs(std::uint64_t seed, unsigned threads = 0) {
    SweepSpec base;
    base.cr = CodeRate{4};
    base.snr_points = snr_grid(-14.0, 0.0, 1.0);
    base.stop = StopRule{100, 2000, 50};
    base.stop_below_ber = 1e-5;
    base.seed = seed;
    base.threads = threads;

    std::vector<SweepSpec> specs;
    for (double sfo : {5.0, 10.0}) {
        for (std::size_t frame : {std::size_t{32}, std::size_t{200}}) {
            for (auto [mode, os] : {std::pair{ReceiverMode::sfo_no_realign, 1}, std::pair{ReceiverMode::sfo_realign, 1},
                                    std::pair{ReceiverMode::sfo_realign, 2}}) {
                SweepSpec s = base;
                s.params = make_params(8, 250000, os, 8);
                s.frame_len_symbols = frame;
                s.impairments.sfo_hz = sfo;
                s.mode = mode;
                specs.push_back(s);
            }
        }
    }
    return specs;
}

inline std::vector<BerRecord> run_sweeps(const std::vector<SweepSpec>& specs) {
    std::vector<BerRecord> all;
    for (const auto& s : specs) {
        auto recs = run_sweep(s);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    return all;
}

inline std::string replicate_fig2(std::uint64_t seed, unsigned threads = 0) { return to_csv(run_sweeps(fig2_specs(seed, threads))); }
inline std::string replicate_fig3(std::uint64_t seed, unsigned threads = 0) { return to_csv(run_sweeps(fig3_specs(seed, threads))); }

}  // namespace cssphy

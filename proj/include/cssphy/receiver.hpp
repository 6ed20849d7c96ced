#pragma once

// Full receive path over a captured stream:
//   detect -> synchronize -> residual CFO estimate/compensation
//   -> (optional) SFO realignment -> demodulate -> header -> rx_chain.

#include <cstdint>
#include <optional>
#include <vector>

#include "cssphy/channel.hpp"
#include "cssphy/demodulator.hpp"
#include "cssphy/framing.hpp"
#include "cssphy/sync.hpp"

namespace cssphy {

struct ReceiverConfig {
    double threshold = kAutoThreshold;
    bool cfo_comp = true;
    bool sfo_realign = false;
    double sfo_hz = 0.0;  ///< known f'_s - bw used by the realignment tracker
};

/// One demodulated symbol, as written to the trace CSV.
struct TraceRow {
    std::size_t index = 0;
    std::size_t start_sample = 0;
    std::uint32_t peak_bin = 0;
    std::uint32_t symbol = 0;
    double peak_magnitude = 0.0;
    double delta_phi_hat = 0.0;
};

struct DecodeReport {
    SyncState sync;
    FrameTiming timing;
    CfoEstimate cfo;
    int reference_bin = 0;
    std::vector<Symbol> symbols;
    std::vector<TraceRow> trace;
    ParsedFrame parsed;
};

inline DecodeReport decode_stream(const IqBuffer& stream, const LoraParams& p, const FrameConfig& cfg,
                                  const ReceiverConfig& rc = {}) {
    DecodeReport rep;
    rep.sync = detect_preamble(stream, p, rc.threshold);
    if (!rep.sync.detected) throw decode_error("no preamble found");
    rep.timing = synchronize(stream, rep.sync, p, cfg.sync_word);

    const std::size_t len = p.samples_per_symbol();
    const std::uint32_t chips = p.chips();
    IqBuffer work = stream;
    // the capture is read as followed by silence, so a late-synced last symbol still has a window
    work.samples.resize(work.size() + len, cf64{});
    if (rc.cfo_comp && rep.timing.preamble_blocks >= 2) {
        rep.cfo = estimate_residual_cfo(work.view(rep.timing.preamble_start, rep.timing.preamble_blocks * len), p);
        work = compensate_cfo(std::move(work), rep.cfo, p);
        rep.reference_bin = preamble_reference_bin(work.view(), rep.timing.preamble_start, rep.timing.preamble_blocks, p);
    }

    // Block source: either fixed boundaries or the SFO-realigned stream.
    std::vector<IqBuffer> realigned;
    if (rc.sfo_realign) {
        const std::size_t lead = delimiter_end_sample(p);
        const std::size_t origin = rep.timing.data_start >= lead ? rep.timing.data_start - lead : 0;
        SfoTracker tracker(p.bw, receiver_rate(p, rc.sfo_hz), p.os);
        realigned = realign_stream(work.view().subspan(origin), tracker, p, rep.timing.data_start - origin, kAllBlocks,
                                   work.rate);
    }
    auto block = [&](std::size_t i) -> std::optional<std::span<const cf64>> {
        if (rc.sfo_realign) {
            if (i >= realigned.size()) return std::nullopt;
            return realigned[i].view();
        }
        const std::size_t start = rep.timing.data_start + i * len;
        if (start + len > work.size()) return std::nullopt;
        return work.view(start, len);
    };

    const DftDemodulator demod(p);
    auto demod_until = [&](std::size_t count) {
        while (rep.symbols.size() < count) {
            const std::size_t i = rep.symbols.size();
            const auto blk = block(i);
            if (!blk) throw decode_error("frame truncated: stream ends before the last symbol");
            const DemodResult r = demod(*blk);
            const auto corrected = static_cast<std::uint32_t>(
                (static_cast<std::int64_t>(r.symbol.value) - rep.reference_bin + chips) % chips);
            rep.symbols.push_back(Symbol{corrected});
            rep.trace.push_back(TraceRow{i, rep.timing.data_start + i * len, r.symbol.value, corrected,
                                         r.peak_magnitude, rep.cfo.delta_phi_hat});
        }
    };

    FrameConfig actual = cfg;
    if (cfg.has_header) {
        demod_until(kHeaderSymbols);
        const HeaderFields h = decode_header(rep.symbols, p);
        actual.payload_len = h.payload_len;
        actual.cr = h.cr;
        actual.has_crc = h.has_crc;
    }
    demod_until(data_symbol_count(actual, p.sf));
    rep.parsed = parse_frame(rep.symbols, cfg, p);
    return rep;
}

}  // namespace cssphy

// cssphy: command-line front end for the CSS PHY library.
//
// Exit codes: 0 ok, 1 usage/config, 2 decode failure, 3 I/O.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cssphy/ber.hpp"
#include "cssphy/demodulator.hpp"
#include "cssphy/framing.hpp"
#include "cssphy/io/config.hpp"
#include "cssphy/io/iq_file.hpp"
#include "cssphy/receiver.hpp"

namespace {

using namespace cssphy;

enum ExitCode : int { kOk = 0, kUsage = 1, kDecodeFailure = 2, kIoFailure = 3 };

struct InputOptions {
    std::string path;
    bool raw = false;
    double rate = 0.0;  ///< raw mode only; 0 means os * bw
};

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;

    // modulate
    std::string payload_path;
    std::string payload_text;
    std::string out_path;
    bool out_raw = false;
    bool impair_channel = false;

    // demodulate / decode
    InputOptions in;
    std::size_t offset = 0;
    std::size_t count = 0;
    std::string trace_path;

    // ber / fig
    unsigned threads = 0;
    std::uint64_t max_frames = 0;
};

io::RunConfig load_config(const Options& o) {
    io::RunConfig c;
    if (!o.config_path.empty()) {
        const auto bytes = io::read_bytes(o.config_path);
        c = io::parse_config(std::string(bytes.begin(), bytes.end()));
    } else {
        c = io::parse_config("{}");
    }
    io::apply_env_seed(c);
    if (o.seed) {
        c.seed = *o.seed;
        io::sync_sweep(c);
    }
    return c;
}

IqBuffer load_input(const InputOptions& in, const LoraParams& p) {
    if (in.raw) return io::read_raw(in.path, in.rate > 0 ? in.rate : p.sample_rate());
    IqBuffer buf = io::read_iq(in.path);
    if (std::abs(buf.rate - p.sample_rate()) > 1e-6 * p.sample_rate())
        std::cerr << "warning: file rate " << buf.rate << " Hz differs from os*bw = " << p.sample_rate() << " Hz\n";
    return buf;
}

void write_output(const std::string& path, bool raw, const IqBuffer& buf) {
    if (raw)
        io::write_raw(path, buf);
    else
        io::write_iq(path, buf);
}

std::string hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

int cmd_modulate(const Options& o) {
    const io::RunConfig c = load_config(o);
    Frame f;
    if (!o.payload_path.empty())
        f.payload = io::read_bytes(o.payload_path);
    else
        f.payload.assign(o.payload_text.begin(), o.payload_text.end());
    f.config = c.frame;
    f.config.payload_len = f.payload.size();

    const std::vector<Symbol> data = frame_symbols(f, c.params);
    IqBuffer iq;
    if (o.impair_channel && c.channel.sfo_hz != 0.0) {
        iq = synthesize_layout(frame_layout(data, c.params, f.config.sync_word), c.params, c.channel.sfo_hz);
    } else {
        iq = render_layout(frame_layout(data, c.params, f.config.sync_word), c.params);
    }
    if (o.impair_channel) {
        ChannelImpairments imp = c.channel;
        imp.seed = c.seed;
        iq = impair(std::move(iq), imp);
    }
    write_output(o.out_path, o.out_raw, iq);
    if (!o.quiet)
        std::cerr << "modulate: " << f.payload.size() << " bytes -> " << data.size() << " data symbols, "
                  << iq.size() << " samples at " << iq.rate << " Hz\n";
    return kOk;
}

int cmd_demodulate(const Options& o) {
    const io::RunConfig c = load_config(o);
    const IqBuffer iq = load_input(o.in, c.params);
    const std::size_t len = c.params.samples_per_symbol();
    if (o.offset > iq.size()) throw std::invalid_argument("--offset lies beyond the end of the input");
    const std::size_t available = (iq.size() - o.offset) / len;
    const std::size_t n = o.count ? std::min(o.count, available) : available;

    std::ostringstream out;
    out << "symbol_index,start_sample,symbol,peak_magnitude\n";
    const DftDemodulator demod(c.params);
    char line[128];
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = o.offset + i * len;
        const DemodResult r = demod(iq.view(start, len));
        std::snprintf(line, sizeof line, "%zu,%zu,%u,%.6f\n", i, start, r.symbol.value, r.peak_magnitude);
        out << line;
    }
    if (o.out_path.empty())
        std::cout << out.str();
    else
        io::write_text(o.out_path, out.str());
    return kOk;
}

std::string trace_csv(const DecodeReport& rep) {
    std::string s = "symbol_index,start_sample,peak_bin,symbol,peak_magnitude,delta_phi_hat\n";
    char line[160];
    for (const TraceRow& t : rep.trace) {
        std::snprintf(line, sizeof line, "%zu,%zu,%u,%u,%.6f,%.9f\n", t.index, t.start_sample, t.peak_bin, t.symbol,
                      t.peak_magnitude, t.delta_phi_hat);
        s += line;
    }
    return s;
}

int cmd_decode(const Options& o) {
    const io::RunConfig c = load_config(o);
    const IqBuffer iq = load_input(o.in, c.params);
    ReceiverConfig rc = c.receiver;
    const DecodeReport rep = decode_stream(iq, c.params, c.frame, rc);

    if (!o.trace_path.empty()) io::write_text(o.trace_path, trace_csv(rep));
    const auto& payload = rep.parsed.frame.payload;
    if (o.out_path.empty())
        std::cout << hex(payload) << '\n';
    else
        io::write_bytes(o.out_path, payload);

    if (!o.quiet) {
        std::cerr << "decode: " << rep.timing.preamble_blocks << " preamble blocks from sample "
                  << rep.timing.preamble_start << ", data at " << rep.timing.data_start << ", delta_phi_hat "
                  << rep.cfo.delta_phi_hat << " rad, " << payload.size() << " bytes, cr " << rep.parsed.frame.config.cr.value << ", " << rep.parsed.corrected_bits << " bits corrected\n";
    }
    if (rep.parsed.frame.config.has_crc && !rep.parsed.crc_ok) {
        std::cerr << "error: payload CRC mismatch\n";
        return kDecodeFailure;
    }
    if (!rep.parsed.frame.config.has_crc && rep.parsed.fec_uncorrectable) {
        std::cerr << "error: uncorrectable codeword and no CRC to arbitrate\n";
        return kDecodeFailure;
    }
    return kOk;
}

std::string run_specs(const std::vector<SweepSpec>& specs, const std::string& label, bool quiet) {
    std::vector<BerRecord> all;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        const auto t0 = std::chrono::steady_clock::now();
        auto recs = run_sweep(s);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!quiet) {
            std::fprintf(stderr, "%s [%zu/%zu] %s sf=%d os=%d cfo=%.1f sfo=%.1f frame=%zu: %zu points, %.1f s\n",
                         label.c_str(), i + 1, specs.size(), std::string(to_string(s.mode)).c_str(), s.params.sf,
                         s.params.os, s.impairments.cfo_hz, s.impairments.sfo_hz, s.frame_len_symbols, recs.size(), dt);
        }
        all.insert(all.end(), recs.begin(), recs.end());
    }
    return to_csv(all);
}

void emit_csv(const Options& o, const std::string& csv) {
    if (o.out_path.empty())
        std::cout << csv;
    else
        io::write_text(o.out_path, csv);
}

int cmd_ber(const Options& o) {
    io::RunConfig c = load_config(o);
    if (o.threads) c.sweep.threads = o.threads;
    if (o.max_frames) c.sweep.stop.max_frames = o.max_frames;
    emit_csv(o, run_specs({c.sweep}, "ber", o.quiet));
    return kOk;
}

int cmd_figure(const Options& o, bool fig2) {
    io::RunConfig c = load_config(o);
    auto specs = fig2 ? fig2_specs(c.seed, o.threads) : fig3_specs(c.seed, o.threads);
    if (o.max_frames)
        for (auto& s : specs) {
            s.stop.max_frames = o.max_frames;
            s.stop.min_frames = std::min(s.stop.min_frames, o.max_frames);
        }
    emit_csv(o, run_specs(specs, fig2 ? "fig2" : "fig3", o.quiet));
    return kOk;
}

void add_input(CLI::App* sub, InputOptions& in) {
    sub->add_option("-i,--input", in.path, "IQ file to read")->required();
    sub->add_flag("--raw", in.raw, "input is headerless cf32 little-endian");
    sub->add_option("--rate", in.rate, "sample rate for --raw input [Hz] (default os*bw)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chirp spread spectrum PHY: modulation, decoding and BER sweeps"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config_path, "JSON configuration file");
        sub->add_option("--seed", o.seed, "master seed (overrides config and CSSPHY_SEED)");
        sub->add_flag("-q,--quiet", o.quiet, "suppress progress on stderr");
    };

    auto* mod = app.add_subcommand("modulate", "build a frame and write it as an IQ file");
    common(mod);
    auto* src = mod->add_option_group("payload");
    src->add_option("-p,--payload", o.payload_path, "payload file (bytes)");
    src->add_option("-t,--text", o.payload_text, "payload given inline as text");
    src->require_option(1);
    mod->add_option("-o,--output", o.out_path, "IQ file to write")->required();
    mod->add_flag("--out-raw", o.out_raw, "write headerless cf32 instead of the framed format");
    mod->add_flag("--impair", o.impair_channel, "apply the config's channel section (fading, CFO, SFO, delay, AWGN)");

    auto* dem = app.add_subcommand("demodulate", "demodulate consecutive aligned symbols (no sync)");
    common(dem);
    add_input(dem, o.in);
    dem->add_option("--offset", o.offset, "first sample of the first symbol");
    dem->add_option("-n,--count", o.count, "symbols to demodulate (default: all that fit)");
    dem->add_option("-o,--output", o.out_path, "CSV output (default stdout)");

    auto* dec = app.add_subcommand("decode", "detect, synchronize and decode one frame");
    common(dec);
    add_input(dec, o.in);
    dec->add_option("-o,--output", o.out_path, "payload file (default: hex on stdout)");
    dec->add_option("--trace", o.trace_path, "per-symbol diagnostic CSV");

    auto* ber = app.add_subcommand("ber", "Monte-Carlo BER sweep described by the config's sweep section");
    common(ber);
    ber->add_option("-o,--output", o.out_path, "CSV output (default stdout)");
    ber->add_option("--threads", o.threads, "worker threads (0: all cores)");
    ber->add_option("--max-frames", o.max_frames, "override the per-point frame cap");

    auto* f2 = app.add_subcommand("fig2", "BER vs SNR under CFO, three receivers plus no-CFO baseline");
    auto* f3 = app.add_subcommand("fig3", "BER vs SNR under SFO with and without realignment");
    for (auto* sub : {f2, f3}) {
        common(sub);
        sub->add_option("-o,--output", o.out_path, "CSV output (default stdout)");
        sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
        sub->add_option("--max-frames", o.max_frames, "override the per-point frame cap (quick runs)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (mod->parsed()) return cmd_modulate(o);
        if (dem->parsed()) return cmd_demodulate(o);
        if (dec->parsed()) return cmd_decode(o);
        if (ber->parsed()) return cmd_ber(o);
        if (f2->parsed()) return cmd_figure(o, true);
        if (f3->parsed()) return cmd_figure(o, false);
    } catch (const io::io_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const decode_error& e) {
        std::cerr << "decode failed: " << e.what() << '\n';
        return kDecodeFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

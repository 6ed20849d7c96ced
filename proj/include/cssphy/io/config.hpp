#pragma once

// JSON run configuration. Every section and key is optional; unknown keys and
// wrong types are rejected with the dotted key path in the message.
//
// {
//   "seed": 1,
//   "params":   { "sf": 8, "bw": 125000, "os": 1, "n_pre": 8 },
//   "frame":    { "has_header": true, "has_crc": true, "cr": 4, "payload_len": 0, "sync_word": [24, 16] },
//   "channel":  { "snr_db": null, "h": [1, 0], "cfo_hz": 0, "sfo_hz": 0, "delay_samples": 0 },
//   "receiver": { "threshold": -1, "cfo_comp": true, "sfo_realign": false, "sfo_hz": 0 },
//   "sweep":    { "mode": "aligned-no-comp", "frame_len_symbols": 32,
//                 "snr_db": [-10, -8] | { "from": -14, "to": 0, "step": 1 },
//                 "min_bit_errors": 100, "max_frames": 100000, "min_frames": 1,
//                 "stop_below_ber": 0, "threads": 0 }
// }
//
// CSSPHY_SEED in the environment replaces "seed".

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cssphy/ber.hpp"
#include "cssphy/framing.hpp"
#include "cssphy/params.hpp"
#include "cssphy/receiver.hpp"

namespace cssphy::io {

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::uint64_t seed = 1;
    LoraParams params{};
    FrameConfig frame{};
    ChannelImpairments channel{};
    ReceiverConfig receiver{};
    SweepSpec sweep{};  ///< params, cr, impairments and seed are filled from the sections above
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw config_error("config key '" + path + "': " + what);
}

inline std::string join(const std::string& parent, std::string_view key) {
    return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

inline void require_object(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (auto allowed : keys) known = known || allowed == k;
        if (!known) fail(join(path, k), "unknown key");
    }
}

template <class T>
T read_number(const json& j, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) fail(path, "expected true or false");
        return j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) fail(path, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (j.is_number_unsigned()) {
                const auto v = j.get<std::uint64_t>();
                if (v > std::numeric_limits<T>::max()) fail(path, "value out of range");
                return static_cast<T>(v);
            }
            const auto v = j.get<std::int64_t>();
            if (v < 0) fail(path, "must not be negative");
            if (static_cast<std::uint64_t>(v) > std::numeric_limits<T>::max()) fail(path, "value out of range");
            return static_cast<T>(v);
        } else {
            const auto v = j.get<std::int64_t>();
            if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max()) fail(path, "value out of range");
            return static_cast<T>(v);
        }
    } else {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<T>();
    }
}

template <class T>
void assign(const json& obj, std::string_view key, const std::string& path, T& out) {
    if (auto it = obj.find(key); it != obj.end()) out = read_number<T>(*it, join(path, key));
}

inline void read_params(const json& j, RunConfig& c) {
    require_object(j, "params", {"sf", "bw", "os", "n_pre"});
    LoraParams p = c.params;
    assign(j, "sf", "params", p.sf);
    assign(j, "bw", "params", p.bw);
    assign(j, "os", "params", p.os);
    assign(j, "n_pre", "params", p.n_pre);
    try {
        c.params = make_params(p.sf, p.bw, p.os, p.n_pre);
    } catch (const std::invalid_argument& e) {
        fail("params", e.what());
    }
}

inline void read_frame(const json& j, RunConfig& c) {
    require_object(j, "frame", {"has_header", "has_crc", "cr", "payload_len", "sync_word"});
    assign(j, "has_header", "frame", c.frame.has_header);
    assign(j, "payload_len", "frame", c.frame.payload_len);
    assign(j, "has_crc", "frame", c.frame.has_crc);
    if (auto it = j.find("cr"); it != j.end()) {
        const int cr = read_number<int>(*it, "frame.cr");
        try {
            c.frame.cr = make_code_rate(cr);
        } catch (const std::invalid_argument& e) {
            fail("frame.cr", e.what());
        }
    }
    if (auto it = j.find("sync_word"); it != j.end()) {
        if (!it->is_array() || it->size() != 2) fail("frame.sync_word", "expected two symbol values");
        for (std::size_t i = 0; i < 2; ++i) {
            const std::string path = "frame.sync_word[" + std::to_string(i) + "]";
            const auto v = read_number<std::uint32_t>((*it)[i], path);
            if (v >= c.params.chips()) fail(path, "symbol value must be below 2^sf");
            c.frame.sync_word.symbols[i] = v;
        }
    }
}

inline void read_channel(const json& j, RunConfig& c) {
    require_object(j, "channel", {"snr_db", "h", "cfo_hz", "sfo_hz", "delay_samples"});
    if (auto it = j.find("snr_db"); it != j.end())
        c.channel.snr_db = it->is_null() ? std::numeric_limits<double>::infinity() : read_number<double>(*it, "channel.snr_db");
    if (auto it = j.find("h"); it != j.end()) {
        if (!it->is_array() || it->size() != 2) fail("channel.h", "expected [real, imag]");
        c.channel.h = cf64{read_number<double>((*it)[0], "channel.h[0]"), read_number<double>((*it)[1], "channel.h[1]")};
        if (c.channel.h == cf64{0.0, 0.0}) fail("channel.h", "fading coefficient must be nonzero");
    }
    assign(j, "cfo_hz", "channel", c.channel.cfo_hz);
    assign(j, "sfo_hz", "channel", c.channel.sfo_hz);
    assign(j, "delay_samples", "channel", c.channel.delay_samples);
}

inline void read_receiver(const json& j, RunConfig& c) {
    require_object(j, "receiver", {"threshold", "cfo_comp", "sfo_realign", "sfo_hz"});
    assign(j, "threshold", "receiver", c.receiver.threshold);
    assign(j, "cfo_comp", "receiver", c.receiver.cfo_comp);
    assign(j, "sfo_realign", "receiver", c.receiver.sfo_realign);
    assign(j, "sfo_hz", "receiver", c.receiver.sfo_hz);
}

inline void read_sweep(const json& j, RunConfig& c) {
    require_object(j, "sweep", {"mode", "frame_len_symbols", "snr_db", "min_bit_errors", "max_frames", "min_frames",
                                "stop_below_ber", "threads"});
    SweepSpec& s = c.sweep;
    if (auto it = j.find("mode"); it != j.end()) {
        if (!it->is_string()) fail("sweep.mode", "expected a string");
        try {
            s.mode = parse_receiver_mode(it->get<std::string>());
        } catch (const std::invalid_argument& e) {
            fail("sweep.mode", e.what());
        }
    }
    assign(j, "frame_len_symbols", "sweep", s.frame_len_symbols);
    if (s.frame_len_symbols == 0) fail("sweep.frame_len_symbols", "must be positive");
    if (auto it = j.find("snr_db"); it != j.end()) {
        if (it->is_array()) {
            s.snr_points.clear();
            for (std::size_t i = 0; i < it->size(); ++i)
                s.snr_points.push_back(read_number<double>((*it)[i], "sweep.snr_db[" + std::to_string(i) + "]"));
        } else if (it->is_object()) {
            require_object(*it, "sweep.snr_db", {"from", "to", "step"});
            double from = 0, to = 0, step = 1;
            assign(*it, "from", "sweep.snr_db", from);
            assign(*it, "to", "sweep.snr_db", to);
            assign(*it, "step", "sweep.snr_db", step);
            if (!(step > 0)) fail("sweep.snr_db.step", "must be positive");
            if (to < from) fail("sweep.snr_db.to", "must not be below 'from'");
            s.snr_points = snr_grid(from, to, step);
        } else {
            fail("sweep.snr_db", "expected a list or {from, to, step}");
        }
        if (s.snr_points.empty()) fail("sweep.snr_db", "needs at least one point");
    }
    assign(j, "min_bit_errors", "sweep", s.stop.min_bit_errors);
    assign(j, "max_frames", "sweep", s.stop.max_frames);
    assign(j, "min_frames", "sweep", s.stop.min_frames);
    if (s.stop.min_bit_errors < 1) fail("sweep.min_bit_errors", "must be >= 1");
    if (s.stop.max_frames < 1) fail("sweep.max_frames", "must be >= 1");
    assign(j, "stop_below_ber", "sweep", s.stop_below_ber);
    if (s.stop_below_ber < 0) fail("sweep.stop_below_ber", "must not be negative");
    assign(j, "threads", "sweep", s.threads);
}

}  // namespace detail

/// Copies the shared sections into the sweep description.
inline void sync_sweep(RunConfig& c) {
    c.sweep.params = c.params;
    c.sweep.cr = c.frame.cr;
    c.sweep.impairments = c.channel;
    c.sweep.seed = c.seed;
}

inline std::uint64_t parse_seed(std::string_view text, const std::string& origin) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw config_error(origin + ": '" + std::string(text) + "' is not an unsigned 64-bit integer");
    return v;
}

/// Applies CSSPHY_SEED when set.
inline void apply_env_seed(RunConfig& c) {
    if (const char* env = std::getenv("CSSPHY_SEED"); env != nullptr) {
        c.seed = parse_seed(env, "CSSPHY_SEED");
        sync_sweep(c);
    }
}

inline RunConfig parse_config(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    c.sweep.snr_points = {0.0};
    detail::require_object(j, "", {"seed", "params", "frame", "channel", "receiver", "sweep"});
    detail::assign(j, "seed", "", c.seed);
    // params first: sync_word validation depends on sf
    if (auto it = j.find("params"); it != j.end()) detail::read_params(*it, c);
    if (auto it = j.find("frame"); it != j.end()) detail::read_frame(*it, c);
    if (auto it = j.find("channel"); it != j.end()) detail::read_channel(*it, c);
    if (auto it = j.find("receiver"); it != j.end()) detail::read_receiver(*it, c);
    if (auto it = j.find("sweep"); it != j.end()) detail::read_sweep(*it, c);
    sync_sweep(c);
    return c;
}

}  // namespace cssphy::io

#pragma once

// CSS symbol generation.
//
// A symbol S at sample rate fs = os * bw has phase (in cycles)
//
//   n^2 / (2 N os^2) + (S/N - 1/2) n / os          before the fold
//   n^2 / (2 N os^2) + (S/N - 3/2) n / os          from n_fold = (N - S) os on
//
// with N = 2^sf. Multiplying through by D = 2 N os^2 leaves an integer
// numerator, so the phase is reduced exactly modulo one cycle before the
// complex exponential is taken. Every symbol starts at phase 0.

#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cssphy/iq.hpp"
#include "cssphy/params.hpp"

namespace cssphy {

/// Data symbol, 0 <= value < 2^sf.
struct Symbol {
    std::uint32_t value = 0;
    auto operator<=>(const Symbol&) const = default;
};

inline Symbol make_symbol(std::uint32_t value, const LoraParams& p) {
    if (value >= p.chips())
        throw std::invalid_argument("symbol " + std::to_string(value) + " out of range for SF" +
                                    std::to_string(p.sf));
    return Symbol{value};
}

inline std::size_t fold_index(Symbol s, const LoraParams& p) noexcept {
    return static_cast<std::size_t>(p.chips() - s.value) * static_cast<std::size_t>(p.os);
}

namespace detail {

inline void render_symbol(Symbol s, const LoraParams& p, std::span<cf64> out) {
    const std::int64_t n_chips = p.chips();
    const std::int64_t os = p.os;
    const std::int64_t den = 2 * n_chips * os * os;
    const std::int64_t len = n_chips * os;
    const std::int64_t n_fold = (n_chips - static_cast<std::int64_t>(s.value)) * os;
    const std::int64_t lin = (2 * static_cast<std::int64_t>(s.value) - n_chips) * os;
    const double scale = 2.0 * std::numbers::pi / static_cast<double>(den);
    for (std::int64_t n = 0; n < len; ++n) {
        std::int64_t num = n * n + lin * n;
        if (n >= n_fold) num -= 2 * n_chips * os * n;
        num %= den;
        if (num < 0) num += den;
        out[static_cast<std::size_t>(n)] = std::polar(1.0, scale * static_cast<double>(num));
    }
}

}  // namespace detail

inline IqBuffer gen_symbol(Symbol s, const LoraParams& p) {
    if (s.value >= p.chips()) throw std::invalid_argument("symbol out of range");
    std::vector<cf64> out(p.samples_per_symbol());
    detail::render_symbol(s, p, out);
    return IqBuffer(std::move(out), p.sample_rate());
}

inline IqBuffer gen_upchirp(const LoraParams& p) { return gen_symbol(Symbol{0}, p); }

inline IqBuffer gen_downchirp(const LoraParams& p) {
    IqBuffer b = gen_upchirp(p);
    for (auto& z : b.samples) z = std::conj(z);
    return b;
}

inline IqBuffer modulate_symbols(std::span<const Symbol> symbols, const LoraParams& p) {
    const std::size_t len = p.samples_per_symbol();
    std::vector<cf64> out(symbols.size() * len);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i].value >= p.chips()) throw std::invalid_argument("symbol out of range");
        detail::render_symbol(symbols[i], p, std::span<cf64>(out).subspan(i * len, len));
    }
    return IqBuffer(std::move(out), p.sample_rate());
}

}  // namespace cssphy

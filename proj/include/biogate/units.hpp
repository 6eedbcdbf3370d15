#pragma once

// Quantity literals: a decimal number followed by an optional SI prefix and a
// unit symbol, with no space ("10Mohm", "-2.25V", "0.8A", "600s", "30C").

#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

namespace biogate {

enum class Dimension { none, seconds, amperes, volts, ohms, celsius };

constexpr std::string_view unit_symbol(Dimension d) noexcept {
    switch (d) {
        case Dimension::none: return "";
        case Dimension::seconds: return "s";
        case Dimension::amperes: return "A";
        case Dimension::volts: return "V";
        case Dimension::ohms: return "ohm";
        case Dimension::celsius: return "C";
    }
    return "";
}

enum class QuantityStatus { ok, bad_number, bad_unit };

struct Quantity {
    QuantityStatus status = QuantityStatus::bad_number;
    double value = 0.0;
};

namespace detail {

constexpr double prefix_scale(char c) noexcept {
    switch (c) {
        case 'p': return 1e-12;
        case 'n': return 1e-9;
        case 'u': return 1e-6;
        case 'm': return 1e-3;
        case 'k': return 1e3;
        case 'M': return 1e6;
        case 'G': return 1e9;
        case 'T': return 1e12;
        default: return 0.0;
    }
}

}  // namespace detail

inline Quantity parse_quantity(std::string_view token, Dimension dim) {
    double number = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, number, std::chars_format::general);
    if (ec != std::errc{} || ptr == first || !std::isfinite(number)) return {QuantityStatus::bad_number, 0.0};

    std::string_view suffix(ptr, static_cast<std::size_t>(last - ptr));
    if (dim == Dimension::none) {
        return suffix.empty() ? Quantity{QuantityStatus::ok, number} : Quantity{QuantityStatus::bad_unit, 0.0};
    }
    const std::string_view unit = unit_symbol(dim);
    if (suffix == unit) return {QuantityStatus::ok, number};
    if (dim == Dimension::ohms && suffix == "Ω") return {QuantityStatus::ok, number};
    if (dim != Dimension::celsius && suffix.size() > 1) {
        const std::string_view base = suffix.substr(1);
        const double scale = detail::prefix_scale(suffix.front());
        if (scale != 0.0 && (base == unit || (dim == Dimension::ohms && base == "Ω")))
            return {QuantityStatus::ok, number * scale};
    }
    return {QuantityStatus::bad_unit, 0.0};
}

/// Shortest decimal that reads back to exactly `value`.
inline std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

inline std::string format_quantity(double value, Dimension dim) {
    return format_number(value) + std::string(unit_symbol(dim));
}

}  // namespace biogate

#pragma once
// Shared scalar/timestamp/error primitives used across the library.

#include <cstdint>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace trace_enrich {

// All timestamps live on one integer-millisecond timeline.
using TimestampMs = std::int64_t;
using DurationMs = std::int64_t;

using EntityIdx = std::uint32_t;
using EventIdx = std::uint32_t;
using ClassIdx = std::uint32_t;

inline constexpr std::uint32_t kNoIdx = 0xffffffffu;

enum class Role : std::uint8_t { None = 0, Input = 1, Output = 2 };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::Input: return "input";
        case Role::Output: return "output";
        default: return "none";
    }
}

// Attribute values preserve the JSON type they were read with.
using Scalar = std::variant<bool, std::int64_t, double, std::string>;

inline bool scalar_is_numeric(const Scalar& s) {
    return std::holds_alternative<std::int64_t>(s) || std::holds_alternative<double>(s);
}

inline double scalar_as_double(const Scalar& s) {
    if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
    return std::get<double>(s);
}

// Cross-type numeric equality (10 == 10.0); strings and bools compare by value.
inline bool scalar_equals(const Scalar& a, const Scalar& b) {
    if (scalar_is_numeric(a) && scalar_is_numeric(b))
        return scalar_as_double(a) == scalar_as_double(b);
    return a == b;
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input data (dangling references, duplicate ids, malformed records).
struct DataError : Error {
    using Error::Error;
};

// Pattern DSL syntax or validation failure; 1-based position of the offending token.
struct DslError : Error {
    std::size_t line = 0;
    std::size_t col = 0;
    DslError(std::size_t l, std::size_t c, const std::string& msg)
        : Error(msg + " (line " + std::to_string(l) + ", column " + std::to_string(c) + ")"),
          line(l),
          col(c) {}
};

struct IoError : Error {
    using Error::Error;
};

// --- timestamp parsing -------------------------------------------------------

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool parse_fixed_uint(const char* s, int n, std::int64_t& out) {
    out = 0;
    for (int i = 0; i < n; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

}  // namespace detail

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]Z" (UTC only). Returns epoch milliseconds.
inline std::optional<TimestampMs> parse_iso8601_utc(const std::string& text) {
    const char* s = text.c_str();
    const std::size_t n = text.size();
    if (n < 20) return std::nullopt;
    std::int64_t year, mon, day, hh, mm, ss;
    if (!detail::parse_fixed_uint(s, 4, year) || s[4] != '-' ||
        !detail::parse_fixed_uint(s + 5, 2, mon) || s[7] != '-' ||
        !detail::parse_fixed_uint(s + 8, 2, day) || s[10] != 'T' ||
        !detail::parse_fixed_uint(s + 11, 2, hh) || s[13] != ':' ||
        !detail::parse_fixed_uint(s + 14, 2, mm) || s[16] != ':' ||
        !detail::parse_fixed_uint(s + 17, 2, ss))
        return std::nullopt;
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;
    std::size_t pos = 19;
    std::int64_t millis = 0;
    if (s[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        std::int64_t frac = 0;
        while (pos < n && s[pos] >= '0' && s[pos] <= '9' && digits < 9) {
            frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        while (digits > 3) {
            frac /= 10;
            --digits;
        }
        millis = frac;
    }
    if (pos + 1 != n || s[pos] != 'Z') return std::nullopt;
    const std::int64_t days = detail::days_from_civil(year, static_cast<unsigned>(mon),
                                                      static_cast<unsigned>(day));
    return ((days * 24 + hh) * 60 + mm) * 60000 + ss * 1000 + millis;
}

// --- number formatting -------------------------------------------------------

// Shortest decimal form that round-trips; integral values print without a fraction.
inline std::string format_number(double v) {
    if (v == 0.0) return "0";  // normalizes -0
    const double r = static_cast<double>(static_cast<std::int64_t>(v));
    if (r == v && v > -9.2e18 && v < 9.2e18) {
        char buf[24];
        auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<std::int64_t>(v));
        return std::string(buf, res.ptr);
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// --- stderr diagnostics ------------------------------------------------------

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel& log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("TRACE_ENRICH_LOG");
        if (!env) return LogLevel::Warn;
        const std::string v = env;
        if (v == "error") return LogLevel::Error;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

}  // namespace trace_enrich

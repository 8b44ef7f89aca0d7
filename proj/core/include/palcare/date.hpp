#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace palcare {

/// A calendar day, stored as a signed count of days since 1970-01-01.
/// Differences between days are plain integers.
class Day {
public:
    constexpr Day() = default;
    constexpr explicit Day(int32_t days_since_epoch) : value_(days_since_epoch) {}

    static Day from_ymd(int year, unsigned month, unsigned day);
    /// Parses a strict ISO-8601 calendar date (YYYY-MM-DD).
    static std::optional<Day> parse(std::string_view text);

    std::string iso() const;
    constexpr int32_t days_since_epoch() const { return value_; }

    constexpr auto operator<=>(const Day&) const = default;

    constexpr Day operator+(int32_t days) const { return Day(value_ + days); }
    constexpr Day operator-(int32_t days) const { return Day(value_ - days); }
    constexpr int32_t operator-(Day other) const { return value_ - other.value_; }

private:
    int32_t value_ = 0;
};

}  // namespace palcare

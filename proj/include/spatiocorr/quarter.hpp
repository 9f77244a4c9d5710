#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace spatiocorr {

/// A calendar quarter. Totally ordered; no date arithmetic beyond stepping.
struct Quarter {
    int year = 0;
    int quarter = 1; // 1..4

    constexpr auto operator<=>(const Quarter&) const = default;

    constexpr int ordinal() const noexcept { return year * 4 + (quarter - 1); }

    static constexpr Quarter from_ordinal(int ordinal) noexcept {
        const int y = ordinal >= 0 ? ordinal / 4 : -((-ordinal + 3) / 4);
        return Quarter{y, ordinal - y * 4 + 1};
    }

    constexpr Quarter next() const noexcept { return from_ordinal(ordinal() + 1); }
    constexpr Quarter prev() const noexcept { return from_ordinal(ordinal() - 1); }
    constexpr Quarter plus(int n) const noexcept { return from_ordinal(ordinal() + n); }

    /// Canonical label, e.g. "1993Q4".
    std::string to_string() const;

    /// Accepts "1993Q4", "1993q4", "1993/Q4", "1993-Q4", "1993 Q4" and "1993.4".
    /// Throws InvalidArgument on anything else.
    static Quarter parse(std::string_view text);
};

/// Signed number of quarter steps from `from` to `to`.
constexpr int quarters_between(Quarter from, Quarter to) noexcept {
    return to.ordinal() - from.ordinal();
}

} // namespace spatiocorr

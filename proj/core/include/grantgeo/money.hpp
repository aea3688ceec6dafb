// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace grantgeo
{

enum class Rounding
{
    half_away_from_zero,
    toward_zero,
};

/// Fixed-point US dollars with twelve fractional digits (picodollars).
/// Token prices quoted to six decimals per million tokens multiply out exactly.
class Usd
{
  public:
    static constexpr std::int64_t pico_per_dollar = 1'000'000'000'000;

    constexpr Usd() = default;

    [[nodiscard]] static constexpr Usd from_pico(std::int64_t pico) { return Usd(pico); }

    /// Parses a plain decimal literal such as "10.00" or "0.0046165" without going through binary floating point.
    [[nodiscard]] static Usd parse(std::string_view text);

    /// Nearest picodollar; only for values that are not already decimal literals.
    [[nodiscard]] static Usd from_double(double dollars);

    [[nodiscard]] constexpr std::int64_t pico() const { return _pico; }
    [[nodiscard]] double to_double() const { return static_cast<double>(_pico) / static_cast<double>(pico_per_dollar); }

    /// Decimal rendering to `digits` places (0..12).
    [[nodiscard]] std::string to_string(int digits = 12, Rounding mode = Rounding::half_away_from_zero) const;

    /// Exact quotient rounded half away from zero to the nearest picodollar.
    [[nodiscard]] Usd divided_by(std::int64_t divisor) const;

    constexpr Usd& operator+=(Usd other)
    {
        _pico += other._pico;
        return *this;
    }
    friend constexpr Usd operator+(Usd a, Usd b) { return a += b; }
    friend constexpr Usd operator*(Usd a, std::int64_t k) { return Usd(a._pico * k); }
    friend constexpr auto operator<=>(const Usd&, const Usd&) = default;

  private:
    constexpr explicit Usd(std::int64_t pico): _pico(pico) {}

    std::int64_t _pico = 0;
};

} // namespace grantgeo

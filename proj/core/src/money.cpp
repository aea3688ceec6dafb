// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/money.hpp>

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace grantgeo
{

namespace
{

std::int64_t pow10(int n)
{
    auto v = std::int64_t { 1 };
    for (auto i = 0; i < n; ++i)
        v *= 10;
    return v;
}

std::int64_t rounded_div(__int128 numerator, __int128 divisor)
{
    auto const negative = (numerator < 0) != (divisor < 0);
    auto const n = numerator < 0 ? -numerator : numerator;
    auto const d = divisor < 0 ? -divisor : divisor;
    auto q = n / d;
    if ((n % d) * 2 >= d)
        ++q;
    return static_cast<std::int64_t>(negative ? -q : q);
}

} // namespace

Usd Usd::parse(std::string_view text)
{
    auto const original = text;
    while (!text.empty() && text.front() == ' ')
        text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ')
        text.remove_suffix(1);
    auto negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+'))
    {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    if (!text.empty() && text.front() == '$')
        text.remove_prefix(1);

    auto whole = __int128 { 0 };
    auto frac = __int128 { 0 };
    auto frac_digits = 0;
    auto seen_digit = false;
    auto seen_point = false;
    for (auto c: text)
    {
        if (c == ',' && !seen_point)
            continue;
        if (c == '.' && !seen_point)
        {
            seen_point = true;
            continue;
        }
        if (c < '0' || c > '9')
            throw Error(ErrorCode::ConfigInvalid, fmt::format("'{}' is not a decimal amount", original));
        seen_digit = true;
        if (seen_point)
        {
            if (++frac_digits > 12)
                throw Error(ErrorCode::ConfigInvalid, fmt::format("'{}' has more than 12 decimals", original));
            frac = frac * 10 + (c - '0');
        }
        else
            whole = whole * 10 + (c - '0');
        if (whole > std::numeric_limits<std::int64_t>::max() / pico_per_dollar)
            throw Error(ErrorCode::ConfigInvalid, fmt::format("'{}' is out of range", original));
    }
    if (!seen_digit)
        throw Error(ErrorCode::ConfigInvalid, fmt::format("'{}' is not a decimal amount", original));

    auto const pico = whole * pico_per_dollar + frac * pow10(12 - frac_digits);
    return Usd(static_cast<std::int64_t>(negative ? -pico : pico));
}

Usd Usd::from_double(double dollars)
{
    return Usd(static_cast<std::int64_t>(std::llround(dollars * static_cast<double>(pico_per_dollar))));
}

std::string Usd::to_string(int digits, Rounding mode) const
{
    digits = digits < 0 ? 0 : (digits > 12 ? 12 : digits);
    auto const scaled = mode == Rounding::toward_zero ? _pico / pow10(12 - digits) : rounded_div(_pico, pow10(12 - digits));
    auto const negative = scaled < 0;
    auto const magnitude = negative ? -scaled : scaled;
    auto const unit = pow10(digits);
    auto const sign = negative ? "-" : "";
    if (digits == 0)
        return fmt::format("{}{}", sign, magnitude);
    return fmt::format("{}{}.{:0{}}", sign, magnitude / unit, magnitude % unit, digits);
}

Usd Usd::divided_by(std::int64_t divisor) const
{
    if (divisor == 0)
        throw Error(ErrorCode::EmptyInput, "division of a dollar amount by zero");
    return Usd(rounded_div(_pico, divisor));
}

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grantgeo
{

enum class ErrorCode
{
    Unparseable,
    TooFewPoints,
    DegenerateMean,
    InvalidCoordinate,
    MalformedRow,
    DuplicateId,
    SampleTooLarge,
    BackendUnavailable,
    FixtureExhausted,
    Timeout,
    AllCallsFailed,
    BudgetExhausted,
    NotFound,
    ProviderError,
    ArgumentInvalid,
    EmptyGold,
    EmptyInput,
    KTooLarge,
    DegenerateX,
    ZeroHitRate,
    ConfigInvalid,
    DataMissing,
    NoResults,
    AxisInapplicable,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can dispatch without string matching.
class Error: public std::runtime_error
{
  public:
    Error(ErrorCode code, const std::string& message);

    [[nodiscard]] ErrorCode code() const noexcept { return _code; }

  private:
    ErrorCode _code;
};

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>

namespace grantgeo
{

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code)
    {
        case ErrorCode::Unparseable: return "Unparseable";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::DegenerateMean: return "DegenerateMean";
        case ErrorCode::InvalidCoordinate: return "InvalidCoordinate";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::SampleTooLarge: return "SampleTooLarge";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::FixtureExhausted: return "FixtureExhausted";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::AllCallsFailed: return "AllCallsFailed";
        case ErrorCode::BudgetExhausted: return "BudgetExhausted";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::ProviderError: return "ProviderError";
        case ErrorCode::ArgumentInvalid: return "ArgumentInvalid";
        case ErrorCode::EmptyGold: return "EmptyGold";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::DegenerateX: return "DegenerateX";
        case ErrorCode::ZeroHitRate: return "ZeroHitRate";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::DataMissing: return "DataMissing";
        case ErrorCode::NoResults: return "NoResults";
        case ErrorCode::AxisInapplicable: return "AxisInapplicable";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message):
    std::runtime_error(std::string(to_string(code)) + ": " + message), _code(code)
{
}

} // namespace grantgeo

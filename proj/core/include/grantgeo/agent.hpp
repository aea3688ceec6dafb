// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/geocoder.hpp>
#include <grantgeo/runners.hpp>

#include <map>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace grantgeo
{

struct AgentBudget
{
    std::size_t max_tool_calls = 10;
    std::size_t max_geocode_failures = 6;

    void validate() const;
};

inline constexpr std::string_view agent_system_prompt =
    R"(You are an expert historical geographer specialising in colonial-era Virginia land records.
Your job is to provide precise latitude/longitude coordinates for the land-grant description the user supplies.

Available tools
• `geocode_place(query, strategy)`
    – Look up a place name via the Google Geocoding API (Virginia-restricted).
    – Returns JSON: `{lat, lng, formatted_address, strategy, query_used}`.
• `compute_centroid(points)`
    – Accepts **two or more** objects like `{lat: 37.1, lng: -76.7}` and returns their average.

Workflow
0. Craft the most specific initial search string you can (creek, branch, river-mouth, parish, neighbor surname + county + "Virginia").

1. Call `geocode_place` with that string. If the result is in the expected or an adjacent county *and* the feature lies in Virginia (or an NC border county), treat it as **plausible**. A matching feature keyword in `formatted_address` is *preferred* but not mandatory after several attempts.

2. If the first call is not plausible, iteratively refine the query (alternate spelling, nearby landmark, bordering county, etc.) and call `geocode_place` again until you obtain *at least one* plausible point **or** you have made six tool calls, whichever comes first.

3. Optional centroid use – if the grant text clearly places the tract *between* two or more natural features (e.g., "between the mouth of Cypress Swamp and Blackwater River") **or** you have two distinct plausible anchor points (creek-mouth, swamp, plantation), you may call `compute_centroid(points)` exactly once to average them. Otherwise skip this step.

4. You may make up to **ten** total tool calls. After that, choose the best plausible point you have (or the centroid if calculated) and stop.

5. Final answer – reply with **only** the coordinates in decimal degrees with six digits after the decimal point, e.g., `36.757059, -77.836728`. No explanatory text.

Important rules
• Always perform at least one successful `geocode_place` call before any other tool.
• Invoke `compute_centroid` only when you already have two or more plausible anchor points and averaging will help locate a "between" description.
• Never invent coordinates—derive them from tool output.
• Return no explanatory text, symbols, or degree signs—just `lat, lon`.)";

inline constexpr std::string_view budget_nudge = "Provide your final coordinates now.";

inline constexpr std::string_view geocode_place_schema = R"({
  "type": "function",
  "name": "geocode_place",
  "description": "Resolve a place description to coordinates.",
  "parameters": {
    "type": "object",
    "properties": {
      "query": {
        "type": "string",
        "description": "Free-form geocoding query, e.g. 'Blackwater River, Isle of Wight County'."
      },
      "strategy": {
        "type": "string",
        "enum": [
          "natural_feature", "restricted_va", "standard_va", "county_fallback"
        ],
        "description": "Search heuristic controlling how the backend constructs variant queries."
      }
    },
    "required": ["query"]
  }
})";

inline constexpr std::string_view compute_centroid_schema = R"({
  "type": "function",
  "name": "compute_centroid",
  "description": "Return the centroid (average lat/lng) of two or more coordinate points.",
  "parameters": {
    "type": "object",
    "properties": {
      "points": {
        "type": "array",
        "minItems": 2,
        "items": {
          "type": "object",
          "properties": {
            "lat": {"type": "number"},
            "lng": {"type": "number"}
          },
          "required": ["lat", "lng"]
        }
      }
    },
    "required": ["points"]
  }
})";

/// Both tool documents, parsed, in catalog order.
[[nodiscard]] const nlohmann::json& tool_catalog();

struct GeocodeArgs
{
    std::string query;
    std::optional<GeocodeStrategy> strategy;
};

struct CentroidArgs
{
    std::vector<Coordinate> points;
};

using ToolArgs = std::variant<GeocodeArgs, CentroidArgs>;

/// Checks the call against the JSON-Schema subset used by the catalog (type,
/// properties, required, enum, minItems, items). Throws Error(ArgumentInvalid).
[[nodiscard]] ToolArgs validate_tool_call(const ToolCallRequest& request, const nlohmann::json& catalog = tool_catalog());

/// Throws Error(NotFound) when nothing survives the Virginia filter; ProviderError passes through.
[[nodiscard]] GeocodeOutcome handle_geocode_place(Geocoder& geocoder, std::string_view query,
                                                  std::optional<GeocodeStrategy> strategy);

/// {"lat": <8 digits>, "lng": <8 digits>}
[[nodiscard]] std::string handle_compute_centroid(std::span<const Coordinate> points);

/// Marks the calls whose coordinates back `answer` (within `tol_deg` on both axes),
/// including geocode calls whose points fed a selected centroid call.
void attribute_selected(std::vector<ToolCallRecord>& trace, const Coordinate& answer, double tol_deg = 1e-6);

[[nodiscard]] Prediction run_tool_chain(ChatBackend& backend, Geocoder& geocoder, const ModelConfig& cfg,
                                        const GrantAbstract& grant, const AgentBudget& budget,
                                        const RunContext& context);

struct CallDistribution
{
    double mean = 0.0;
    double sd = 0.0; ///< sample standard deviation; 0 for fewer than two entries
    double median = 0.0;
    std::size_t min = 0;
    std::size_t max = 0;
};

struct ToolUsageSummary
{
    std::string method_id;
    std::size_t entries = 0;
    CallDistribution geocode;
    CallDistribution centroid;
    CallDistribution total;
    std::optional<double> geocode_centroid_ratio; ///< absent when no centroid call was made
    std::optional<double> first_call_success_rate;
    std::optional<double> mean_selected_index;
    std::optional<double> median_selected_index;
};

/// Per-method summaries over every prediction of that method; methods with no
/// tool calls at all are omitted.
[[nodiscard]] std::map<std::string, ToolUsageSummary> trace_statistics(std::span<const Prediction> predictions);

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/corpus.hpp>
#include <grantgeo/geo.hpp>
#include <grantgeo/model.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grantgeo
{

struct Prediction
{
    std::string method_id;
    std::string row_id;
    std::optional<Coordinate> coordinate;
    std::optional<double> error_km;
    std::string provenance; ///< baselines: entity / county / statewide; empty for model runs
    RunRecord run;

    /// Sets error_km from the truth when both coordinates are present.
    void score(const std::optional<Coordinate>& truth);
};

struct EnsembleConfig
{
    std::size_t k = 5;
    double eps_km = 0.5;
    std::size_t min_cluster = 3;
    std::vector<std::int64_t> seeds { 1, 2, 3, 4, 5 };
    bool concurrent_members = false;

    void validate() const;
};

/// Method id and price list shared by every runner invocation.
struct RunContext
{
    std::string method_id;
    const PriceTable* prices = nullptr;
};

inline constexpr std::string_view one_shot_prompt =
    "Geolocate this colonial Virginia land grant to precise latitude and longitude coordinates.\n"
    "Respond with ONLY the coordinates in this format: [DD]°[MM]'[SS].[SSSSS]\"N [DDD]°[MM]'[SS].[SSSSS]\"W";

/// The two instruction lines, a blank line, then the abstract.
[[nodiscard]] std::string one_shot_message(std::string_view abstract_text);

/// Temperature 0.2 for GPT-family models when the caller left both sampling knobs unset.
[[nodiscard]] ModelConfig with_one_shot_defaults(ModelConfig cfg);

[[nodiscard]] Prediction run_one_shot(ChatBackend& backend, const ModelConfig& cfg, const GrantAbstract& grant,
                                      const RunContext& context);

/// Cluster vote over member answers: centroid of the largest cluster of at least
/// min_cluster points, else the centroid of every point.
[[nodiscard]] Coordinate aggregate_ensemble(std::span<const Coordinate> points, const EnsembleConfig& cfg);

[[nodiscard]] Prediction run_ensemble(ChatBackend& backend, const ModelConfig& cfg, const EnsembleConfig& ens,
                                      const GrantAbstract& grant, const RunContext& context);

[[nodiscard]] std::string truncate_for_log(std::string_view text, std::size_t limit = 240);

} // namespace grantgeo

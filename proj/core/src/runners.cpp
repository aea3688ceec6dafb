// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/runners.hpp>

#include <fmt/format.h>

#include <future>

namespace grantgeo
{

namespace
{

struct MemberOutcome
{
    std::optional<Coordinate> coordinate;
    TokenUsage usage;
    Usd cost;
    Interaction interaction;
    std::string raw;
    std::string reason;
};

Usd priced(const RunContext& context, const std::string& model_id, const TokenUsage& usage)
{
    if (context.prices == nullptr)
        return Usd {};
    return call_cost(usage, context.prices->at(model_id));
}

MemberOutcome one_call(ChatBackend& backend, const ModelConfig& cfg, const GrantAbstract& grant, const RunContext& context)
{
    auto request = ChatRequest {};
    request.model = cfg;
    request.messages.push_back(ChatMessage { .role = Role::user, .content = one_shot_message(grant.text) });
    request.method_id = context.method_id;
    request.row_id = grant.row_id;

    auto outcome = MemberOutcome {};
    outcome.interaction.seed = cfg.seed;
    outcome.interaction.request_summary = truncate_for_log(request.messages.back().content);
    try
    {
        auto const response = backend.complete(request);
        outcome.usage = response.usage;
        outcome.cost = priced(context, cfg.model_id, response.usage);
        outcome.raw = response.text;
        outcome.interaction.usage = response.usage;
        outcome.interaction.response_summary = truncate_for_log(response.text);
        try
        {
            outcome.coordinate = parse_coordinate_text(response.text);
        }
        catch (const Error& e)
        {
            outcome.reason = std::string(to_string(e.code()));
        }
    }
    catch (const Error& e)
    {
        outcome.reason = std::string(to_string(e.code()));
        outcome.interaction.response_summary = e.what();
    }
    return outcome;
}

double mean_pairwise_km(std::span<const Coordinate> points, const std::vector<std::size_t>& members)
{
    if (members.size() < 2)
        return 0.0;
    auto sum = 0.0;
    auto pairs = 0;
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
        {
            sum += haversine_km(points[members[a]], points[members[b]]);
            ++pairs;
        }
    return sum / pairs;
}

Coordinate centroid_of(std::span<const Coordinate> points)
{
    if (points.size() == 1)
        return points.front();
    return spherical_centroid(points);
}

} // namespace

void Prediction::score(const std::optional<Coordinate>& truth)
{
    error_km.reset();
    if (coordinate && truth)
        error_km = haversine_km(*coordinate, *truth);
}

void EnsembleConfig::validate() const
{
    if (k == 0)
        throw Error(ErrorCode::ConfigInvalid, "ensemble k must be positive");
    if (!(eps_km > 0.0))
        throw Error(ErrorCode::ConfigInvalid, "ensemble eps_km must be positive");
    if (min_cluster == 0 || min_cluster > k)
        throw Error(ErrorCode::ConfigInvalid, fmt::format("min_cluster {} must lie in [1, k = {}]", min_cluster, k));
    if (seeds.size() != k)
        throw Error(ErrorCode::ConfigInvalid, fmt::format("ensemble needs {} seeds, got {}", k, seeds.size()));
}

std::string one_shot_message(std::string_view abstract_text)
{
    return fmt::format("{}\n\n{}", one_shot_prompt, abstract_text);
}

ModelConfig with_one_shot_defaults(ModelConfig cfg)
{
    if (!cfg.temperature && !cfg.reasoning_effort && cfg.model_id.starts_with("gpt-"))
        cfg.temperature = 0.2;
    return cfg;
}

std::string truncate_for_log(std::string_view text, std::size_t limit)
{
    if (text.size() <= limit)
        return std::string(text);
    return fmt::format("{}...", text.substr(0, limit));
}

Prediction run_one_shot(ChatBackend& backend, const ModelConfig& cfg, const GrantAbstract& grant, const RunContext& context)
{
    cfg.validate();
    auto const clock = Stopwatch {};
    auto outcome = one_call(backend, cfg, grant, context);

    auto prediction = Prediction {};
    prediction.method_id = context.method_id;
    prediction.row_id = grant.row_id;
    prediction.coordinate = outcome.coordinate;
    prediction.run.method_id = context.method_id;
    prediction.run.row_id = grant.row_id;
    prediction.run.model_id = cfg.model_id;
    prediction.run.usage = outcome.usage;
    prediction.run.cost_usd = outcome.cost;
    prediction.run.raw_response = outcome.raw;
    prediction.run.interactions.push_back(std::move(outcome.interaction));
    prediction.run.failed = !outcome.coordinate;
    prediction.run.reason = outcome.reason;
    prediction.run.latency_s = clock.elapsed_s();
    prediction.score(grant.ground_truth);
    return prediction;
}

Coordinate aggregate_ensemble(std::span<const Coordinate> points, const EnsembleConfig& cfg)
{
    if (points.empty())
        throw Error(ErrorCode::AllCallsFailed, "no ensemble member produced a coordinate");

    auto const clusters = geodesic_dbscan(points, cfg.eps_km, cfg.min_cluster);
    auto best = std::optional<std::vector<std::size_t>> {};
    auto best_spread = 0.0;
    for (auto c = 0; c < clusters.cluster_count(); ++c)
    {
        auto members = clusters.members(c);
        if (members.size() < cfg.min_cluster)
            continue;
        auto const spread = mean_pairwise_km(points, members);
        auto const better = !best || members.size() > best->size()
                            || (members.size() == best->size()
                                && (spread < best_spread || (spread == best_spread && members.front() < best->front())));
        if (better)
        {
            best = std::move(members);
            best_spread = spread;
        }
    }

    if (!best)
        return centroid_of(points);
    auto chosen = std::vector<Coordinate> {};
    for (auto i: *best)
        chosen.push_back(points[i]);
    return centroid_of(chosen);
}

Prediction run_ensemble(ChatBackend& backend, const ModelConfig& cfg, const EnsembleConfig& ens,
                        const GrantAbstract& grant, const RunContext& context)
{
    cfg.validate();
    ens.validate();
    auto const clock = Stopwatch {};

    auto member_cfg = [&](std::size_t i) {
        auto c = cfg;
        c.seed = ens.seeds[i];
        return c;
    };

    auto outcomes = std::vector<MemberOutcome>(ens.k);
    if (ens.concurrent_members)
    {
        auto futures = std::vector<std::future<MemberOutcome>> {};
        for (std::size_t i = 0; i < ens.k; ++i)
            futures.push_back(std::async(std::launch::async, [&, i] { return one_call(backend, member_cfg(i), grant, context); }));
        for (std::size_t i = 0; i < ens.k; ++i)
            outcomes[i] = futures[i].get();
    }
    else
    {
        for (std::size_t i = 0; i < ens.k; ++i)
            outcomes[i] = one_call(backend, member_cfg(i), grant, context);
    }

    auto prediction = Prediction {};
    prediction.method_id = context.method_id;
    prediction.row_id = grant.row_id;
    auto& run = prediction.run;
    run.method_id = context.method_id;
    run.row_id = grant.row_id;
    run.model_id = cfg.model_id;

    // Member index order, whatever order the calls finished in.
    auto points = std::vector<Coordinate> {};
    auto raw = nlohmann::json::array();
    for (auto& o: outcomes)
    {
        run.usage += o.usage;
        run.cost_usd += o.cost;
        raw.push_back(o.raw);
        if (o.coordinate)
            points.push_back(*o.coordinate);
        run.interactions.push_back(std::move(o.interaction));
    }
    run.raw_response = raw.dump();

    try
    {
        prediction.coordinate = aggregate_ensemble(points, ens);
    }
    catch (const Error& e)
    {
        run.failed = true;
        run.reason = std::string(to_string(e.code()));
    }
    run.latency_s = clock.elapsed_s();
    prediction.score(grant.ground_truth);
    return prediction;
}

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/agent.hpp>
#include <grantgeo/error.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace grantgeo
{

namespace
{

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& path, std::string_view what)
{
    throw Error(ErrorCode::ArgumentInvalid, fmt::format("{}: {}", path.empty() ? "arguments" : path, what));
}

void check_schema(const json& value, const json& schema, const std::string& path)
{
    if (auto it = schema.find("type"); it != schema.end())
    {
        auto const& type = it->get_ref<const std::string&>();
        auto const ok = (type == "object" && value.is_object()) || (type == "array" && value.is_array())
                        || (type == "string" && value.is_string()) || (type == "number" && value.is_number())
                        || (type == "integer" && value.is_number_integer()) || (type == "boolean" && value.is_boolean());
        if (!ok)
            invalid(path, fmt::format("expected {}", type));
    }
    if (auto it = schema.find("enum"); it != schema.end())
        if (std::find(it->begin(), it->end(), value) == it->end())
            invalid(path, fmt::format("value {} not in enum", value.dump()));
    if (value.is_object())
    {
        if (auto it = schema.find("required"); it != schema.end())
            for (auto const& name: *it)
                if (!value.contains(name.get<std::string>()))
                    invalid(path, fmt::format("missing required field '{}'", name.get<std::string>()));
        if (auto it = schema.find("properties"); it != schema.end())
            for (auto const& [name, sub]: it->items())
                if (auto v = value.find(name); v != value.end())
                    check_schema(*v, sub, path.empty() ? name : fmt::format("{}.{}", path, name));
    }
    if (value.is_array())
    {
        if (auto it = schema.find("minItems"); it != schema.end() && value.size() < it->get<std::size_t>())
            invalid(path, fmt::format("needs at least {} items, got {}", it->get<std::size_t>(), value.size()));
        if (auto it = schema.find("items"); it != schema.end())
            for (std::size_t i = 0; i < value.size(); ++i)
                check_schema(value[i], *it, fmt::format("{}[{}]", path, i));
    }
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::optional<std::pair<double, double>> result_point(const ToolCallRecord& r)
{
    if (r.is_error || !r.result.is_object() || !r.result.contains("lat") || !r.result.contains("lng"))
        return std::nullopt;
    return std::pair { r.result["lat"].get<double>(), r.result["lng"].get<double>() };
}

double median_of(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    auto const n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CallDistribution distribution(const std::vector<std::size_t>& counts)
{
    auto d = CallDistribution {};
    if (counts.empty())
        return d;
    auto values = std::vector<double>(counts.begin(), counts.end());
    auto const n = static_cast<double>(values.size());
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1)
    {
        auto ss = 0.0;
        for (auto x: values)
            ss += (x - d.mean) * (x - d.mean);
        d.sd = std::sqrt(ss / (n - 1.0));
    }
    d.median = median_of(values);
    d.min = *std::min_element(counts.begin(), counts.end());
    d.max = *std::max_element(counts.begin(), counts.end());
    return d;
}

std::string describe_tool_turn(const ChatResponse& response)
{
    auto names = std::vector<std::string> {};
    for (auto const& c: response.tool_calls)
        names.push_back(fmt::format("{}({})", c.name, c.raw_arguments.empty() ? c.arguments.dump() : c.raw_arguments));
    return fmt::format("tool_calls: {}", fmt::join(names, "; "));
}

} // namespace

void AgentBudget::validate() const
{
    if (max_tool_calls == 0)
        throw Error(ErrorCode::ConfigInvalid, "max_tool_calls must be positive");
    if (max_geocode_failures == 0)
        throw Error(ErrorCode::ConfigInvalid, "max_geocode_failures must be positive");
}

const json& tool_catalog()
{
    static auto const catalog = json::array({ json::parse(geocode_place_schema), json::parse(compute_centroid_schema) });
    return catalog;
}

ToolArgs validate_tool_call(const ToolCallRequest& request, const json& catalog)
{
    auto const tool = std::find_if(catalog.begin(), catalog.end(),
                                   [&](const json& t) { return t.value("name", std::string {}) == request.name; });
    if (tool == catalog.end())
        throw Error(ErrorCode::ArgumentInvalid, fmt::format("unknown tool '{}'", request.name));
    if (request.arguments.is_null() || request.arguments.is_discarded())
        throw Error(ErrorCode::ArgumentInvalid, "arguments are not valid JSON");
    check_schema(request.arguments, tool->at("parameters"), "");

    auto const& args = request.arguments;
    if (request.name == "geocode_place")
    {
        auto out = GeocodeArgs { .query = args["query"].get<std::string>(), .strategy = std::nullopt };
        if (out.query.find_first_not_of(" \t\r\n") == std::string::npos)
            invalid("query", "must not be empty");
        if (auto it = args.find("strategy"); it != args.end())
            out.strategy = parse_geocode_strategy(it->get<std::string>());
        return out;
    }
    if (request.name == "compute_centroid")
    {
        auto out = CentroidArgs {};
        for (auto const& p: args["points"])
        {
            try
            {
                out.points.emplace_back(p["lat"].get<double>(), p["lng"].get<double>());
            }
            catch (const Error& e)
            {
                invalid("points", e.what());
            }
        }
        return out;
    }
    throw Error(ErrorCode::ArgumentInvalid, fmt::format("tool '{}' has no handler", request.name));
}

GeocodeOutcome handle_geocode_place(Geocoder& geocoder, std::string_view query, std::optional<GeocodeStrategy> strategy)
{
    auto outcome = geocoder.geocode(query, strategy);
    if (!outcome.result)
        throw Error(ErrorCode::NotFound, fmt::format("no Virginia result for '{}'", query));
    return outcome;
}

std::string handle_compute_centroid(std::span<const Coordinate> points)
{
    if (points.size() < 2)
        throw Error(ErrorCode::ArgumentInvalid, "compute_centroid needs at least 2 points");
    auto const c = spherical_centroid(points);
    // Truncated, not rounded, to reproduce the recorded tool transcripts digit for digit.
    auto const cut = [](double v) { return std::trunc(v * 1e8 + std::copysign(1e-4, v)) / 1e8; };
    return fmt::format(R"({{"lat": {:.8f}, "lng": {:.8f}}})", cut(c.lat()), cut(c.lon()));
}

void attribute_selected(std::vector<ToolCallRecord>& trace, const Coordinate& answer, double tol)
{
    for (auto& r: trace)
        r.selected = false;

    auto feeds = std::vector<std::pair<double, double>> {};
    for (auto& r: trace)
    {
        auto const p = result_point(r);
        if (!p || !near(p->first, answer.lat(), tol) || !near(p->second, answer.lon(), tol))
            continue;
        r.selected = true;
        if (r.tool_name == "compute_centroid" && r.arguments.contains("points"))
            for (auto const& q: r.arguments["points"])
                if (q.is_object() && q.contains("lat") && q.contains("lng") && q["lat"].is_number() && q["lng"].is_number())
                    feeds.emplace_back(q["lat"].get<double>(), q["lng"].get<double>());
    }
    for (auto& r: trace)
    {
        if (r.tool_name != "geocode_place" || r.selected)
            continue;
        auto const p = result_point(r);
        if (!p)
            continue;
        r.selected = std::any_of(feeds.begin(), feeds.end(), [&](const auto& f) {
            return near(p->first, f.first, tol) && near(p->second, f.second, tol);
        });
    }
}

Prediction run_tool_chain(ChatBackend& backend, Geocoder& geocoder, const ModelConfig& cfg, const GrantAbstract& grant,
                          const AgentBudget& budget, const RunContext& context)
{
    cfg.validate();
    budget.validate();
    auto const clock = Stopwatch {};

    auto prediction = Prediction {};
    prediction.method_id = context.method_id;
    prediction.row_id = grant.row_id;
    auto& run = prediction.run;
    run.method_id = context.method_id;
    run.row_id = grant.row_id;
    run.model_id = cfg.model_id;

    auto request = ChatRequest {};
    request.model = cfg;
    request.method_id = context.method_id;
    request.row_id = grant.row_id;
    request.tools = tool_catalog();
    request.messages.push_back(ChatMessage { .role = Role::system, .content = std::string(agent_system_prompt) });
    request.messages.push_back(ChatMessage { .role = Role::user, .content = grant.text });

    auto executed = std::size_t { 0 };
    auto geocode_failures = std::size_t { 0 };
    auto nudged = false;

    auto fail = [&](ErrorCode code) {
        run.failed = true;
        run.reason = std::string(to_string(code));
    };

    while (true)
    {
        auto interaction = Interaction {};
        interaction.seed = cfg.seed;
        interaction.request_summary = truncate_for_log(request.messages.back().content.empty()
                                                           ? std::string("[tool results]")
                                                           : request.messages.back().content);
        auto response = ChatResponse {};
        try
        {
            response = backend.complete(request);
        }
        catch (const Error& e)
        {
            interaction.response_summary = e.what();
            run.interactions.push_back(std::move(interaction));
            fail(e.code());
            break;
        }
        run.usage += response.usage;
        if (context.prices != nullptr)
            run.cost_usd += call_cost(response.usage, context.prices->at(cfg.model_id));
        interaction.usage = response.usage;
        interaction.response_summary =
            truncate_for_log(response.has_tool_calls() ? describe_tool_turn(response) : response.text);
        run.interactions.push_back(std::move(interaction));

        if (!response.has_tool_calls())
        {
            run.raw_response = response.text;
            try
            {
                prediction.coordinate = parse_coordinate_text(response.text);
            }
            catch (const Error& e)
            {
                fail(e.code());
            }
            break;
        }
        if (nudged)
        {
            run.raw_response = response.text;
            fail(ErrorCode::BudgetExhausted);
            break;
        }

        request.messages.push_back(ChatMessage { .role = Role::assistant, .content = response.text, .tool_calls = response.tool_calls });
        auto refused = false;
        for (auto const& call: response.tool_calls)
        {
            if (executed >= budget.max_tool_calls || geocode_failures >= budget.max_geocode_failures)
            {
                refused = true;
                request.messages.push_back(ChatMessage { .role = Role::tool,
                                                         .content = R"({"error": "BudgetExhausted"})",
                                                         .tool_call_id = call.call_id });
                continue;
            }
            ++executed;

            auto record = ToolCallRecord {};
            record.turn_index = executed;
            record.tool_name = call.name;
            record.arguments = call.arguments.is_null() ? json(call.raw_arguments) : call.arguments;
            auto payload = std::string {};
            try
            {
                auto const args = validate_tool_call(call);
                if (auto const* g = std::get_if<GeocodeArgs>(&args))
                {
                    auto outcome = geocoder.geocode(g->query, g->strategy);
                    payload = outcome.payload;
                    record.result = json::parse(payload);
                    if (!outcome.result)
                    {
                        record.is_error = true;
                        ++geocode_failures;
                    }
                }
                else
                {
                    payload = handle_compute_centroid(std::get<CentroidArgs>(args).points);
                    record.result = json::parse(payload);
                }
            }
            catch (const Error& e)
            {
                if (call.name == "geocode_place" && e.code() == ErrorCode::ProviderError)
                    ++geocode_failures;
                record.is_error = true;
                record.result = json { { "error", std::string(to_string(e.code())) }, { "message", e.what() } };
                payload = record.result.dump();
            }
            run.tool_calls.push_back(std::move(record));
            request.messages.push_back(ChatMessage { .role = Role::tool, .content = payload, .tool_call_id = call.call_id });
        }

        if (refused)
        {
            request.messages.push_back(ChatMessage { .role = Role::user, .content = std::string(budget_nudge) });
            request.tools.reset();
            nudged = true;
        }
    }

    if (prediction.coordinate)
        attribute_selected(run.tool_calls, *prediction.coordinate);
    run.latency_s = clock.elapsed_s();
    prediction.score(grant.ground_truth);
    return prediction;
}

std::map<std::string, ToolUsageSummary> trace_statistics(std::span<const Prediction> predictions)
{
    struct Accumulator
    {
        std::vector<std::size_t> geocode, centroid, total;
        std::vector<double> selected_index;
        std::size_t first_call_hits = 0;
        std::size_t with_geocode = 0;
        bool any_calls = false;
    };
    auto by_method = std::map<std::string, Accumulator> {};

    for (auto const& p: predictions)
    {
        auto& acc = by_method[p.method_id];
        auto geo = std::size_t { 0 };
        auto cen = std::size_t { 0 };
        auto first_geocode = std::optional<std::size_t> {};
        auto last_selected = std::optional<std::size_t> {};
        for (auto const& r: p.run.tool_calls)
        {
            if (r.tool_name == "geocode_place")
            {
                ++geo;
                if (!first_geocode)
                    first_geocode = r.turn_index;
            }
            else if (r.tool_name == "compute_centroid")
                ++cen;
            if (r.selected)
                last_selected = r.turn_index;
        }
        acc.geocode.push_back(geo);
        acc.centroid.push_back(cen);
        acc.total.push_back(p.run.tool_calls.size());
        acc.any_calls = acc.any_calls || !p.run.tool_calls.empty();
        if (first_geocode)
        {
            ++acc.with_geocode;
            if (last_selected == first_geocode)
                ++acc.first_call_hits;
        }
        if (last_selected)
            acc.selected_index.push_back(static_cast<double>(*last_selected));
    }

    auto out = std::map<std::string, ToolUsageSummary> {};
    for (auto const& [method, acc]: by_method)
    {
        if (!acc.any_calls)
            continue;
        auto s = ToolUsageSummary {};
        s.method_id = method;
        s.entries = acc.total.size();
        s.geocode = distribution(acc.geocode);
        s.centroid = distribution(acc.centroid);
        s.total = distribution(acc.total);
        auto const geo_sum = std::accumulate(acc.geocode.begin(), acc.geocode.end(), std::size_t { 0 });
        auto const cen_sum = std::accumulate(acc.centroid.begin(), acc.centroid.end(), std::size_t { 0 });
        if (cen_sum > 0)
            s.geocode_centroid_ratio = static_cast<double>(geo_sum) / static_cast<double>(cen_sum);
        if (acc.with_geocode > 0)
            s.first_call_success_rate = static_cast<double>(acc.first_call_hits) / static_cast<double>(acc.with_geocode);
        if (!acc.selected_index.empty())
        {
            s.mean_selected_index = std::accumulate(acc.selected_index.begin(), acc.selected_index.end(), 0.0)
                                    / static_cast<double>(acc.selected_index.size());
            s.median_selected_index = median_of(acc.selected_index);
        }
        out.emplace(method, std::move(s));
    }
    return out;
}

} // namespace grantgeo

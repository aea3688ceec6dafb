// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/model.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace grantgeo
{

std::string_view to_string(ReasoningEffort effort) noexcept
{
    switch (effort)
    {
        case ReasoningEffort::low: return "low";
        case ReasoningEffort::medium: return "medium";
        case ReasoningEffort::high: return "high";
    }
    return "medium";
}

ReasoningEffort parse_reasoning_effort(std::string_view text)
{
    if (text == "low")
        return ReasoningEffort::low;
    if (text == "medium")
        return ReasoningEffort::medium;
    if (text == "high")
        return ReasoningEffort::high;
    throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown reasoning effort '{}'", text));
}

std::string_view to_string(Role role) noexcept
{
    switch (role)
    {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

void ModelConfig::validate() const
{
    if (model_id.empty())
        throw Error(ErrorCode::ConfigInvalid, "model config without model id");
    if (temperature && reasoning_effort)
        throw Error(ErrorCode::ConfigInvalid,
                    fmt::format("model '{}' sets both temperature and reasoning effort", model_id));
    if (temperature && (*temperature < 0.0 || *temperature > 2.0))
        throw Error(ErrorCode::ConfigInvalid, fmt::format("temperature {} outside [0, 2]", *temperature));
}

PriceTable PriceTable::defaults()
{
    auto table = PriceTable {};
    auto add = [&](std::initializer_list<std::string> ids, std::string_view p_in, std::string_view p_out) {
        for (const auto& id: ids)
            table.set(id, ModelPrice { Usd::parse(p_in), Usd::parse(p_out) });
    };
    add({ "gpt-4.1-2025-04-14", "gpt-4.1" }, "2.00", "8.00");
    add({ "gpt-4o-2024-08-06", "gpt-4o" }, "5.00", "15.00");
    add({ "gpt-3.5-turbo" }, "0.50", "1.50");
    add({ "o4-mini-2025-04-16", "o4-mini" }, "1.10", "4.40");
    add({ "o3-2025-04-16", "o3" }, "10.00", "40.00");
    add({ "o3-mini-2025-01-31", "o3-mini" }, "1.10", "4.40");
    return table;
}

void PriceTable::set(std::string model_id, ModelPrice price)
{
    if (price.input < Usd {} || price.output < Usd {})
        throw Error(ErrorCode::ConfigInvalid, fmt::format("negative price for '{}'", model_id));
    _prices.insert_or_assign(std::move(model_id), price);
}

std::optional<ModelPrice> PriceTable::find(std::string_view model_id) const
{
    if (auto it = _prices.find(model_id); it != _prices.end())
        return it->second;
    static const std::regex snapshot(R"(^(.*)-\d{4}-\d{2}-\d{2}$)");
    auto m = std::cmatch {};
    if (std::regex_match(model_id.data(), model_id.data() + model_id.size(), m, snapshot))
        if (auto it = _prices.find(m.str(1)); it != _prices.end())
            return it->second;
    return std::nullopt;
}

ModelPrice PriceTable::at(std::string_view model_id) const
{
    if (auto p = find(model_id))
        return *p;
    throw Error(ErrorCode::ConfigInvalid, fmt::format("no price for model '{}'", model_id));
}

Usd call_cost(const TokenUsage& usage, Usd price_in_per_million, Usd price_out_per_million)
{
    auto const pico = static_cast<__int128>(usage.input_tokens) * price_in_per_million.pico()
                      + static_cast<__int128>(usage.output_tokens) * price_out_per_million.pico();
    // Prices carry at most twelve decimals, so pico / 1e6 can leave a remainder only
    // below 1e-12 USD per token; round it half up.
    auto q = pico / 1'000'000;
    if ((pico % 1'000'000) * 2 >= 1'000'000)
        ++q;
    return Usd::from_pico(static_cast<std::int64_t>(q));
}

Usd call_cost(const TokenUsage& usage, const ModelPrice& price)
{
    return call_cost(usage, price.input, price.output);
}

FixtureBackend::FixtureBackend(std::vector<Turn> turns): _turns(std::move(turns)), _consumed(_turns.size(), false)
{
}

FixtureBackend::Turn FixtureBackend::parse_turn(const nlohmann::json& line, std::size_t index)
{
    if (!line.is_object())
        throw Error(ErrorCode::ConfigInvalid, fmt::format("fixture line {} is not an object", index + 1));
    auto turn = Turn {};
    if (auto it = line.find("match"); it != line.end())
    {
        auto const& m = *it;
        auto str = [&](const char* key) -> std::optional<std::string> {
            if (auto f = m.find(key); f != m.end())
                return f->get<std::string>();
            return std::nullopt;
        };
        turn.method_id = str("method_id");
        turn.row_id = str("row_id");
        turn.model_id = str("model_id");
        turn.contains = str("contains");
        if (auto f = m.find("seed"); f != m.end())
            turn.seed = f->get<std::int64_t>();
    }
    turn.text = line.value("text", std::string {});
    if (auto it = line.find("error"); it != line.end())
        turn.error = it->get<std::string>();
    if (auto it = line.find("tool_calls"); it != line.end())
    {
        auto n = std::size_t { 0 };
        for (const auto& call: *it)
        {
            auto request = ToolCallRequest {};
            request.call_id = call.value("call_id", fmt::format("call_{}_{}", index + 1, n++));
            request.name = call.at("name").get<std::string>();
            if (auto a = call.find("arguments"); a != call.end())
            {
                if (a->is_string())
                {
                    request.raw_arguments = a->get<std::string>();
                    request.arguments = nlohmann::json::parse(request.raw_arguments, nullptr, false);
                    if (request.arguments.is_discarded())
                        request.arguments = nullptr;
                }
                else
                {
                    request.arguments = *a;
                    request.raw_arguments = a->dump();
                }
            }
            else
            {
                request.arguments = nlohmann::json::object();
                request.raw_arguments = "{}";
            }
            turn.tool_calls.push_back(std::move(request));
        }
    }
    if (auto it = line.find("usage"); it != line.end())
    {
        turn.usage.input_tokens = it->value("input_tokens", std::uint64_t { 0 });
        turn.usage.output_tokens = it->value("output_tokens", std::uint64_t { 0 });
    }
    return turn;
}

FixtureBackend FixtureBackend::from_jsonl(std::string_view jsonl)
{
    auto turns = std::vector<Turn> {};
    auto stream = std::istringstream(std::string(jsonl));
    auto line = std::string {};
    while (std::getline(stream, line))
    {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            turns.push_back(parse_turn(nlohmann::json::parse(line), turns.size()));
        }
        catch (const nlohmann::json::exception& e)
        {
            throw Error(ErrorCode::ConfigInvalid, fmt::format("fixture line {}: {}", turns.size() + 1, e.what()));
        }
    }
    return FixtureBackend(std::move(turns));
}

FixtureBackend FixtureBackend::load(const std::filesystem::path& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot open fixture script {}", path.string()));
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return from_jsonl(buffer.str());
}

bool FixtureBackend::matches(const Turn& turn, const ChatRequest& request) const
{
    if (turn.method_id && *turn.method_id != request.method_id)
        return false;
    if (turn.row_id && *turn.row_id != request.row_id)
        return false;
    if (turn.model_id && *turn.model_id != request.model.model_id)
        return false;
    if (turn.seed && request.model.seed != turn.seed)
        return false;
    if (turn.contains)
    {
        auto found = false;
        for (const auto& m: request.messages)
            found = found || m.content.find(*turn.contains) != std::string::npos;
        if (!found)
            return false;
    }
    return true;
}

ChatResponse FixtureBackend::complete(const ChatRequest& request)
{
    _calls.fetch_add(1);
    auto lock = std::lock_guard(_mutex);
    for (std::size_t i = 0; i < _turns.size(); ++i)
    {
        if (_consumed[i] || !matches(_turns[i], request))
            continue;
        _consumed[i] = true;
        auto const& turn = _turns[i];
        if (turn.error)
        {
            if (*turn.error == "Timeout")
                throw Error(ErrorCode::Timeout, fmt::format("scripted timeout (fixture line {})", i + 1));
            throw Error(ErrorCode::BackendUnavailable, fmt::format("scripted failure '{}' (fixture line {})", *turn.error, i + 1));
        }
        auto response = ChatResponse { .text = turn.text, .tool_calls = turn.tool_calls, .usage = turn.usage, .raw = {} };
        auto raw = nlohmann::json { { "text", turn.text } };
        if (!turn.tool_calls.empty())
        {
            auto calls = nlohmann::json::array();
            for (const auto& c: turn.tool_calls)
                calls.push_back({ { "call_id", c.call_id }, { "name", c.name }, { "arguments", c.raw_arguments } });
            raw["tool_calls"] = std::move(calls);
        }
        response.raw = raw.dump();
        return response;
    }
    throw Error(ErrorCode::FixtureExhausted,
                fmt::format("no scripted turn left for method '{}' row '{}' model '{}'", request.method_id,
                            request.row_id, request.model.model_id));
}

std::size_t FixtureBackend::remaining() const
{
    auto lock = std::lock_guard(_mutex);
    return static_cast<std::size_t>(std::count(_consumed.begin(), _consumed.end(), false));
}

} // namespace grantgeo

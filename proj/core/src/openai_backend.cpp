// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/http_endpoint.hpp>
#include <grantgeo/model.hpp>

#include <httplib.h>

#include <fmt/format.h>

#include <cstdlib>

namespace grantgeo
{

nlohmann::json responses_request_body(const ChatRequest& request)
{
    auto body = nlohmann::json::object();
    body["model"] = request.model.model_id;
    if (request.model.temperature)
        body["temperature"] = *request.model.temperature;
    if (request.model.reasoning_effort)
        body["reasoning"] = { { "effort", to_string(*request.model.reasoning_effort) } };
    if (request.model.max_output_tokens)
        body["max_output_tokens"] = *request.model.max_output_tokens;
    if (request.tools && !request.tools->empty())
        body["tools"] = *request.tools;

    auto input = nlohmann::json::array();
    for (const auto& m: request.messages)
    {
        switch (m.role)
        {
            case Role::system:
            case Role::user: input.push_back({ { "role", to_string(m.role) }, { "content", m.content } }); break;
            case Role::assistant:
                if (!m.content.empty())
                    input.push_back({ { "role", "assistant" }, { "content", m.content } });
                for (const auto& call: m.tool_calls)
                    input.push_back({ { "type", "function_call" },
                                      { "call_id", call.call_id },
                                      { "name", call.name },
                                      { "arguments", call.raw_arguments } });
                break;
            case Role::tool:
                input.push_back({ { "type", "function_call_output" }, { "call_id", m.tool_call_id }, { "output", m.content } });
                break;
        }
    }
    body["input"] = std::move(input);
    return body;
}

ChatResponse parse_responses_body(const nlohmann::json& body)
{
    if (auto err = body.find("error"); err != body.end() && !err->is_null())
        throw Error(ErrorCode::BackendUnavailable, err->dump());

    auto response = ChatResponse {};
    response.raw = body.dump();
    for (const auto& item: body.value("output", nlohmann::json::array()))
    {
        auto const type = item.value("type", std::string {});
        if (type == "message")
        {
            for (const auto& part: item.value("content", nlohmann::json::array()))
                if (part.value("type", std::string {}) == "output_text")
                    response.text += part.value("text", std::string {});
        }
        else if (type == "function_call")
        {
            auto call = ToolCallRequest {};
            call.call_id = item.value("call_id", item.value("id", std::string {}));
            call.name = item.value("name", std::string {});
            call.raw_arguments = item.value("arguments", std::string {});
            call.arguments = nlohmann::json::parse(call.raw_arguments, nullptr, false);
            if (call.arguments.is_discarded())
                call.arguments = nullptr;
            response.tool_calls.push_back(std::move(call));
        }
    }
    if (auto usage = body.find("usage"); usage != body.end() && usage->is_object())
    {
        response.usage.input_tokens = usage->value("input_tokens", std::uint64_t { 0 });
        response.usage.output_tokens = usage->value("output_tokens", std::uint64_t { 0 });
    }
    return response;
}

namespace
{

class ResponsesBackend final: public ChatBackend
{
  public:
    explicit ResponsesBackend(LiveBackendConfig config): _config(std::move(config)), _endpoint(split_endpoint(_config.endpoint))
    {
        if (_config.api_key.empty())
            if (auto const* key = std::getenv(std::string(model_api_key_env).c_str()))
                _config.api_key = key;
    }

    ChatResponse complete(const ChatRequest& request) override
    {
        _calls.fetch_add(1);
        if (_config.api_key.empty())
            throw Error(ErrorCode::BackendUnavailable, fmt::format("{} is not set", model_api_key_env));

        auto const payload = responses_request_body(request).dump();
        auto last_error = std::string {};
        for (auto attempt = 0; attempt <= _config.retries; ++attempt)
        {
            auto client = httplib::Client(_endpoint.base);
            auto const whole = static_cast<time_t>(_config.timeout_s);
            auto const micros = static_cast<time_t>((_config.timeout_s - static_cast<double>(whole)) * 1e6);
            client.set_connection_timeout(whole, micros);
            client.set_read_timeout(whole, micros);
            client.set_write_timeout(whole, micros);
            client.set_bearer_token_auth(_config.api_key);

            auto result = client.Post(_endpoint.path, payload, "application/json");
            if (!result)
            {
                auto const err = result.error();
                if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
                    last_error = "timeout";
                else
                    last_error = httplib::to_string(err);
                continue;
            }
            if (result->status == 401 || result->status == 403)
                throw Error(ErrorCode::BackendUnavailable, fmt::format("authentication rejected (HTTP {})", result->status));
            if (result->status == 408 || result->status == 504)
            {
                last_error = "timeout";
                continue;
            }
            if (result->status != 200)
            {
                last_error = fmt::format("HTTP {}: {}", result->status, result->body.substr(0, 200));
                continue;
            }
            auto body = nlohmann::json::parse(result->body, nullptr, false);
            if (body.is_discarded())
                throw Error(ErrorCode::BackendUnavailable, "response body is not JSON");
            return parse_responses_body(body);
        }
        if (last_error == "timeout")
            throw Error(ErrorCode::Timeout, fmt::format("{} timed out", _config.endpoint));
        throw Error(ErrorCode::BackendUnavailable, fmt::format("{}: {}", _config.endpoint, last_error));
    }

    [[nodiscard]] std::uint64_t calls_made() const override { return _calls.load(); }

  private:
    LiveBackendConfig _config;
    HttpEndpoint _endpoint;
    std::atomic<std::uint64_t> _calls { 0 };
};

} // namespace

std::unique_ptr<ChatBackend> make_live_backend(LiveBackendConfig config)
{
    return std::make_unique<ResponsesBackend>(std::move(config));
}

} // namespace grantgeo

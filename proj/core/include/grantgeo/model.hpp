// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/geo.hpp>
#include <grantgeo/money.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grantgeo
{

enum class ReasoningEffort
{
    low,
    medium,
    high,
};

[[nodiscard]] std::string_view to_string(ReasoningEffort effort) noexcept;
[[nodiscard]] ReasoningEffort parse_reasoning_effort(std::string_view text);

struct ModelConfig
{
    std::string model_id;
    std::optional<double> temperature;
    std::optional<ReasoningEffort> reasoning_effort;
    std::optional<std::int64_t> seed;
    std::optional<std::uint32_t> max_output_tokens;

    /// Throws ConfigInvalid when both temperature and reasoning effort are set.
    void validate() const;
};

struct TokenUsage
{
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& other)
    {
        input_tokens += other.input_tokens;
        output_tokens += other.output_tokens;
        return *this;
    }
    [[nodiscard]] std::uint64_t total() const { return input_tokens + output_tokens; }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

/// USD per 1,000,000 tokens.
struct ModelPrice
{
    Usd input;
    Usd output;
};

class PriceTable
{
  public:
    /// Price list in effect for the evaluated OpenAI models, keyed by snapshot id and family alias.
    [[nodiscard]] static PriceTable defaults();

    void set(std::string model_id, ModelPrice price);

    /// Exact id first, then the id with a trailing -YYYY-MM-DD snapshot suffix removed.
    [[nodiscard]] std::optional<ModelPrice> find(std::string_view model_id) const;
    [[nodiscard]] ModelPrice at(std::string_view model_id) const;

    [[nodiscard]] const std::map<std::string, ModelPrice, std::less<>>& entries() const { return _prices; }

  private:
    std::map<std::string, ModelPrice, std::less<>> _prices;
};

/// input/1e6 * p_in + output/1e6 * p_out, exact in picodollars.
[[nodiscard]] Usd call_cost(const TokenUsage& usage, Usd price_in_per_million, Usd price_out_per_million);
[[nodiscard]] Usd call_cost(const TokenUsage& usage, const ModelPrice& price);

enum class Role
{
    system,
    user,
    assistant,
    tool,
};

[[nodiscard]] std::string_view to_string(Role role) noexcept;

struct ToolCallRequest
{
    std::string call_id;
    std::string name;
    nlohmann::json arguments; ///< parsed argument document (null when the raw text was not JSON)
    std::string raw_arguments;
};

struct ChatMessage
{
    Role role = Role::user;
    std::string content;
    std::vector<ToolCallRequest> tool_calls; ///< assistant turns that requested tools
    std::string tool_call_id;                ///< tool-result turns
};

struct ChatRequest
{
    ModelConfig model;
    std::vector<ChatMessage> messages;
    std::optional<nlohmann::json> tools; ///< array of tool schema documents
    std::string method_id;
    std::string row_id;
};

struct ChatResponse
{
    std::string text;
    std::vector<ToolCallRequest> tool_calls;
    TokenUsage usage;
    std::string raw;

    [[nodiscard]] bool has_tool_calls() const { return !tool_calls.empty(); }
};

/// A chat-completion service. Implementations throw Error with BackendUnavailable,
/// FixtureExhausted or Timeout.
class ChatBackend
{
  public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    [[nodiscard]] virtual std::uint64_t calls_made() const = 0;
};

/// Replays scripted turns from JSONL. Each line:
///   {"match": {"method_id", "row_id", "model_id", "seed", "contains"},   // all optional
///    "text": "...", "tool_calls": [{"name", "arguments", "call_id"}],
///    "error": "BackendUnavailable" | "Timeout",
///    "usage": {"input_tokens", "output_tokens"}}
/// A request consumes the first unconsumed line whose predicates all hold.
class FixtureBackend final: public ChatBackend
{
  public:
    struct Turn
    {
        std::optional<std::string> method_id;
        std::optional<std::string> row_id;
        std::optional<std::string> model_id;
        std::optional<std::int64_t> seed;
        std::optional<std::string> contains;
        std::string text;
        std::vector<ToolCallRequest> tool_calls;
        std::optional<std::string> error;
        TokenUsage usage;
    };

    explicit FixtureBackend(std::vector<Turn> turns);

    [[nodiscard]] static FixtureBackend from_jsonl(std::string_view jsonl);
    [[nodiscard]] static FixtureBackend load(const std::filesystem::path& path);
    [[nodiscard]] static Turn parse_turn(const nlohmann::json& line, std::size_t index);

    ChatResponse complete(const ChatRequest& request) override;
    [[nodiscard]] std::uint64_t calls_made() const override { return _calls.load(); }
    [[nodiscard]] std::size_t remaining() const;

  private:
    [[nodiscard]] bool matches(const Turn& turn, const ChatRequest& request) const;

    std::vector<Turn> _turns;
    std::vector<bool> _consumed;
    mutable std::mutex _mutex;
    std::atomic<std::uint64_t> _calls { 0 };
};

struct LiveBackendConfig
{
    std::string endpoint = "https://api.openai.com/v1/responses";
    std::string api_key; ///< defaults to $MODEL_API_KEY
    double timeout_s = 120.0;
    int retries = 1;
};

/// OpenAI Responses API client.
[[nodiscard]] std::unique_ptr<ChatBackend> make_live_backend(LiveBackendConfig config);

/// Serializes a request into a Responses API body; exposed for tests.
[[nodiscard]] nlohmann::json responses_request_body(const ChatRequest& request);
[[nodiscard]] ChatResponse parse_responses_body(const nlohmann::json& body);

inline constexpr std::string_view model_api_key_env = "MODEL_API_KEY";
inline constexpr std::string_view geocoder_api_key_env = "GEOCODER_API_KEY";

struct ToolCallRecord
{
    std::size_t turn_index = 0; ///< 1-based position among executed tool calls
    std::string tool_name;
    nlohmann::json arguments;
    nlohmann::json result; ///< tool output, or {"error": "..."}
    bool is_error = false;
    bool selected = false;
};

/// One request/response exchange with the model.
struct Interaction
{
    std::string request_summary;
    std::string response_summary;
    TokenUsage usage;
    std::optional<std::int64_t> seed;
};

struct RunRecord
{
    std::string method_id;
    std::string row_id;
    std::string model_id;
    TokenUsage usage;
    double latency_s = 0.0;
    Usd cost_usd;
    std::vector<ToolCallRecord> tool_calls;
    std::vector<Interaction> interactions;
    std::string raw_response;
    bool failed = false;
    std::string reason;
};

/// Wall-clock stopwatch used for every latency figure.
class Stopwatch
{
  public:
    Stopwatch(): _start(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double elapsed_s() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - _start).count();
    }

  private:
    std::chrono::steady_clock::time_point _start;
};

} // namespace grantgeo

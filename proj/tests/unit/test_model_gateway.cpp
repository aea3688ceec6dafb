// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/model.hpp>
#include <grantgeo/money.hpp>

#include <catch_amalgamated.hpp>
#include <httplib.h>
#include <oracles.hpp>

#include <thread>

using namespace grantgeo;

namespace
{

ErrorCode code_of(auto&& fn)
{
    try
    {
        fn();
    }
    catch (const Error& e)
    {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Unparseable;
}

// Cost oracle over integers: a price of c cents per million tokens makes each token
// cost c * 1e-8 USD, so the whole call is an integer count of 1e-8 USD.
std::int64_t cost_in_1e8_usd(std::uint64_t in, std::uint64_t out, std::int64_t cents_in, std::int64_t cents_out)
{
    return static_cast<std::int64_t>(in) * cents_in + static_cast<std::int64_t>(out) * cents_out;
}

ChatRequest request_for(std::string method, std::string row, std::string model = "o3-2025-04-16",
                        std::optional<std::int64_t> seed = std::nullopt)
{
    auto r = ChatRequest {};
    r.method_id = std::move(method);
    r.row_id = std::move(row);
    r.model.model_id = std::move(model);
    r.model.seed = seed;
    r.messages.push_back({ Role::user, "WILLIAM WILLIAMS, 400 acs., Sussex Co." , {}, {} });
    return r;
}

} // namespace

TEST_CASE("Usd parses decimal literals exactly and rounds half away from zero", "[money]")
{
    CHECK(Usd::parse("10.00").pico() == 10 * Usd::pico_per_dollar);
    CHECK(Usd::parse("0.0046165").pico() == 4'616'500'000);
    CHECK(Usd::parse("140").to_string(2) == "140.00");
    CHECK(Usd::from_pico(5).to_string(11) == "0.00000000001");
    CHECK(Usd::from_pico(4).to_string(11) == "0.00000000000");
    CHECK(Usd::parse("0.000107363").to_string(5) == "0.00011");
    CHECK(Usd::parse("3.255813953488").to_string(5) == "3.25581");
    CHECK(Usd::parse("140").divided_by(43).pico() == 3'255'813'953'488);
    CHECK(Usd::parse("1").divided_by(8).pico() == 125'000'000'000);
    CHECK_THROWS_AS(Usd::parse("1.2.3"), Error);
    CHECK_THROWS_AS(Usd::parse("abc"), Error);
}

TEST_CASE("Usd truncation toward zero", "[money]")
{
    constexpr auto cut = Rounding::toward_zero;
    CHECK(Usd::parse("0.000107360465").to_string(5, cut) == "0.00010");
    CHECK(Usd::parse("0.107360465").to_string(2, cut) == "0.10");
    CHECK(Usd::parse("3.255813953488").to_string(5, cut) == "3.25581");
    CHECK(Usd::parse("0.99999").to_string(0, cut) == "0");
    CHECK(Usd::from_pico(-19).to_string(11, cut) == "-0.00000000001");
    CHECK(Usd::from_pico(-19).to_string(11) == "-0.00000000002");
    CHECK(Usd::parse("12.5").to_string(12, cut) == Usd::parse("12.5").to_string(12));
}

TEST_CASE("packaged price list", "[model]")
{
    auto const prices = PriceTable::defaults();
    auto check = [&](std::string_view id, std::string_view in, std::string_view out) {
        auto const p = prices.at(id);
        CHECK(p.input == Usd::parse(in));
        CHECK(p.output == Usd::parse(out));
    };
    check("gpt-4.1-2025-04-14", "2.00", "8.00");
    check("gpt-4o-2024-08-06", "5.00", "15.00");
    check("gpt-3.5-turbo", "0.50", "1.50");
    check("o4-mini-2025-04-16", "1.10", "4.40");
    check("o3-2025-04-16", "10.00", "40.00");
    check("o3-mini-2025-01-31", "1.10", "4.40");
    // An unlisted snapshot of a known family falls back to the alias.
    check("gpt-4o-2024-11-20", "5.00", "15.00");
    CHECK_FALSE(prices.find("claude-x"));
    CHECK(code_of([&] { (void)prices.at("claude-x"); }) == ErrorCode::ConfigInvalid);

    auto custom = prices;
    CHECK(code_of([&] { custom.set("m", { Usd::parse("-1"), Usd {} }); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("call_cost", "[model]")
{
    auto const o3 = PriceTable::defaults().at("o3");
    CHECK(call_cost({ 0, 0 }, o3) == Usd {});
    CHECK(call_cost({ 1'000'000, 1'000'000 }, o3).to_string(2) == "50.00");

    auto const gpt35 = PriceTable::defaults().at("gpt-3.5-turbo");
    auto const total = call_cost({ 6773, 820 }, gpt35);
    CHECK(total == Usd::parse("0.0046165"));
    CHECK(total.divided_by(43).to_string(7) == "0.0001074");

    SECTION("matches the integer oracle, linear and monotone")
    {
        auto gen = oracle::Gen(23);
        for (int i = 0; i < 2000; ++i)
        {
            auto const in = static_cast<std::uint64_t>(gen.index(5'000'000));
            auto const out = static_cast<std::uint64_t>(gen.index(5'000'000));
            auto const ci = static_cast<std::int64_t>(gen.index(10'000));
            auto const co = static_cast<std::int64_t>(gen.index(10'000));
            auto const pin = Usd::from_pico(ci * 10'000'000'000);
            auto const pout = Usd::from_pico(co * 10'000'000'000);
            auto const c = call_cost({ in, out }, pin, pout);
            REQUIRE(c.pico() == cost_in_1e8_usd(in, out, ci, co) * 10'000);
            REQUIRE(call_cost({ in, 0 }, pin, pout) + call_cost({ 0, out }, pin, pout) == c);
            REQUIRE(call_cost({ in, out }, pin + Usd::from_pico(1'000'000), pout) >= c);
        }
    }
}

TEST_CASE("ModelConfig rejects both sampling knobs", "[model]")
{
    auto cfg = ModelConfig { "o3", 0.2, ReasoningEffort::high, std::nullopt, std::nullopt };
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigInvalid);
    cfg.temperature.reset();
    CHECK_NOTHROW(cfg.validate());
    CHECK(parse_reasoning_effort("low") == ReasoningEffort::low);
    CHECK(code_of([] { (void)parse_reasoning_effort("max"); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("FixtureBackend replays scripted turns", "[model][fixture]")
{
    auto backend = FixtureBackend::from_jsonl(R"({"match": {"method_id": "T-4", "row_id": "grant_04"}, "text": "37.166303, -77.240091", "usage": {"input_tokens": 7, "output_tokens": 3}}
{"match": {"method_id": "T-4", "row_id": "grant_04"}, "text": "second"}
)");
    auto const first = backend.complete(request_for("T-4", "grant_04"));
    CHECK(first.text == "37.166303, -77.240091");
    CHECK(first.usage == TokenUsage { 7, 3 });
    CHECK(backend.complete(request_for("T-4", "grant_04")).text == "second");
    CHECK(code_of([&] { (void)backend.complete(request_for("T-4", "grant_04")); }) == ErrorCode::FixtureExhausted);
    CHECK(backend.calls_made() == 3);
    CHECK(backend.remaining() == 0);

    SECTION("tool-call turns carry the query verbatim")
    {
        auto b = FixtureBackend::from_jsonl(
            R"({"tool_calls": [{"call_id": "c1", "name": "geocode_place", "arguments": {"query": "Holloway Swamp, Sussex County, Virginia"}}]})");
        auto const r = b.complete(request_for("T-4", "grant_04"));
        REQUIRE(r.has_tool_calls());
        CHECK(r.tool_calls[0].name == "geocode_place");
        CHECK(r.tool_calls[0].arguments.at("query") == "Holloway Swamp, Sussex County, Virginia");
        CHECK(nlohmann::json::parse(r.tool_calls[0].raw_arguments) == r.tool_calls[0].arguments);
    }
    SECTION("predicates on seed, model and message content")
    {
        auto b = FixtureBackend::from_jsonl(R"({"match": {"seed": 2}, "text": "two"}
{"match": {"model_id": "gpt-4o"}, "text": "4o"}
{"match": {"contains": "Sussex"}, "text": "sussex"}
{"match": {"seed": 1}, "text": "one"}
)");
        CHECK(b.complete(request_for("E-1", "r", "o3", 1)).text == "sussex");
        CHECK(b.complete(request_for("E-1", "r", "o3", 1)).text == "one");
        CHECK(b.complete(request_for("E-1", "r", "o3", 2)).text == "two");
        CHECK(b.complete(request_for("M-4", "r", "gpt-4o")).text == "4o");
    }
    SECTION("scripted failures")
    {
        auto b = FixtureBackend::from_jsonl(R"({"error": "Timeout"}
{"error": "BackendUnavailable"}
)");
        CHECK(code_of([&] { (void)b.complete(request_for("M-2", "r")); }) == ErrorCode::Timeout);
        CHECK(code_of([&] { (void)b.complete(request_for("M-2", "r")); }) == ErrorCode::BackendUnavailable);
    }
    SECTION("identical scripts give identical transcripts")
    {
        auto const script = oracle::read_file(oracle::fixtures() / "harness" / "model_script.jsonl");
        auto a = FixtureBackend::from_jsonl(script);
        auto b = FixtureBackend::from_jsonl(script);
        for (auto const* row: { "g01", "g05", "g10" })
            for (std::int64_t seed = 1; seed <= 5; ++seed)
            {
                auto const q = request_for("E-1", row, "o3-2025-04-16", seed);
                auto const ra = a.complete(q);
                auto const rb = b.complete(q);
                REQUIRE(ra.raw == rb.raw);
                REQUIRE(ra.usage == rb.usage);
            }
    }
    SECTION("malformed lines")
    {
        CHECK_THROWS_AS(FixtureBackend::from_jsonl("{not json}\n"), Error);
        CHECK_THROWS_AS(FixtureBackend::from_jsonl("[1, 2]\n"), Error);
    }
}

TEST_CASE("Responses API body round trip", "[model][live]")
{
    auto req = ChatRequest {};
    req.model = { "o3-2025-04-16", std::nullopt, ReasoningEffort::high, std::nullopt, 2048u };
    req.messages.push_back({ Role::system, "sys", {}, {} });
    req.messages.push_back({ Role::user, "grant", {}, {} });
    auto call = ToolCallRequest { "c1", "geocode_place", { { "query", "Sussex" } }, R"({"query":"Sussex"})" };
    req.messages.push_back({ Role::assistant, "", { call }, {} });
    req.messages.push_back({ Role::tool, R"({"lat":1})", {}, "c1" });
    auto const body = responses_request_body(req);
    CHECK(body.at("model") == "o3-2025-04-16");
    CHECK(body.at("reasoning").at("effort") == "high");
    CHECK_FALSE(body.contains("temperature"));
    CHECK(body.at("max_output_tokens") == 2048);
    REQUIRE(body.at("input").size() == 4);
    CHECK(body["input"][2].at("type") == "function_call");
    CHECK(body["input"][2].at("arguments") == R"({"query":"Sussex"})");
    CHECK(body["input"][3].at("type") == "function_call_output");
    CHECK(body["input"][3].at("call_id") == "c1");

    auto const parsed = parse_responses_body(nlohmann::json::parse(R"({
      "output": [
        {"type": "reasoning", "summary": []},
        {"type": "function_call", "call_id": "call_9", "name": "compute_centroid", "arguments": "{\"points\": []}"},
        {"type": "message", "content": [{"type": "output_text", "text": "37.1, -77.2"}]}
      ],
      "usage": {"input_tokens": 120, "output_tokens": 45}
    })"));
    CHECK(parsed.text == "37.1, -77.2");
    REQUIRE(parsed.tool_calls.size() == 1);
    CHECK(parsed.tool_calls[0].call_id == "call_9");
    CHECK(parsed.tool_calls[0].arguments.at("points").empty());
    CHECK(parsed.usage == TokenUsage { 120, 45 });
    CHECK(code_of([] { (void)parse_responses_body(nlohmann::json::parse(R"({"error": {"message": "bad"}})")); })
          == ErrorCode::BackendUnavailable);
}

TEST_CASE("live backend reports a rejected credential as BackendUnavailable", "[model][live]")
{
    auto server = httplib::Server {};
    server.Post("/v1/responses", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
        res.set_content(R"({"error": {"message": "Incorrect API key"}})", "application/json");
    });
    auto const port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    auto thread = std::thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto backend = make_live_backend({ "http://127.0.0.1:" + std::to_string(port) + "/v1/responses", "sk-wrong", 5.0, 0 });
    CHECK(code_of([&] { (void)backend->complete(request_for("M-2", "r")); }) == ErrorCode::BackendUnavailable);

    server.stop();
    thread.join();
}

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/runners.hpp>

#include <catch_amalgamated.hpp>
#include <oracles.hpp>

#include <fmt/format.h>

using namespace grantgeo;
using Catch::Matchers::WithinAbs;

namespace
{

const std::string grant_04_text =
    "WILLIAM WILLIAMS, 400 acs., on 8. side of the main Black Water Swamp; by run of Holloway Sw; 24 Apr. 1703, p. 519. "
    "Trans. of 8 pers: Note: 8 tights paid for to Wm, Byrd, Esqr., Auditor.";

GrantAbstract grant_04()
{
    return GrantAbstract::from_text("grant_04", grant_04_text, Coordinate(37.0, -77.1));
}

std::string turn(std::string_view text, std::uint64_t in, std::uint64_t out, std::optional<int> seed = std::nullopt)
{
    auto line = nlohmann::json { { "text", text }, { "usage", { { "input_tokens", in }, { "output_tokens", out } } } };
    if (seed)
        line["match"] = { { "seed", *seed } };
    return line.dump() + "\n";
}

const PriceTable prices = PriceTable::defaults();

RunContext ctx(std::string id)
{
    return RunContext { std::move(id), &prices };
}

/// Ensemble rule written from its statement: a DBSCAN cluster of at least min_cluster
/// points wins (largest first); otherwise every point is averaged.
std::pair<double, double> expected_vote(const std::vector<Coordinate>& pts, double eps_km, std::size_t min_cluster)
{
    auto const labels = oracle::dbscan(pts, eps_km, min_cluster);
    auto best = -1;
    auto best_size = std::size_t { 0 };
    for (int label = 0; label <= *std::max_element(labels.begin(), labels.end()); ++label)
    {
        auto const size = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
        if (size >= min_cluster && size > best_size)
        {
            best = label;
            best_size = size;
        }
    }
    auto chosen = std::vector<std::pair<double, double>> {};
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (best < 0 || labels[i] == best)
            chosen.emplace_back(pts[i].lat(), pts[i].lon());
    return oracle::centroid(chosen);
}

} // namespace

TEST_CASE("one-shot prompt is the two instruction lines, a blank line, then the abstract", "[runners]")
{
    CHECK(one_shot_prompt
          == "Geolocate this colonial Virginia land grant to precise latitude and longitude coordinates.\n"
             "Respond with ONLY the coordinates in this format: [DD]°[MM]'[SS].[SSSSS]\"N [DDD]°[MM]'[SS].[SSSSS]\"W");
    CHECK(one_shot_message("ABSTRACT") == std::string(one_shot_prompt) + "\n\nABSTRACT");
}

TEST_CASE("one-shot sampling defaults", "[runners]")
{
    CHECK(with_one_shot_defaults({ "gpt-4o-2024-08-06" }).temperature == 0.2);
    CHECK(with_one_shot_defaults({ "gpt-4.1-2025-04-14" }).temperature == 0.2);
    CHECK(with_one_shot_defaults({ "gpt-3.5-turbo" }).temperature == 0.2);
    CHECK_FALSE(with_one_shot_defaults({ "o3-2025-04-16" }).temperature);
    auto explicit_t = ModelConfig { "gpt-4o" };
    explicit_t.temperature = 0.9;
    CHECK(with_one_shot_defaults(explicit_t).temperature == 0.9);
}

TEST_CASE("run_one_shot", "[runners]")
{
    auto const model = ModelConfig { "o3-2025-04-16" };

    SECTION("DMS answer for grant_04")
    {
        auto backend = FixtureBackend::from_jsonl(turn("37°00'07.2\"N 77°07'58.8\"W", 153, 940));
        auto const p = run_one_shot(backend, model, grant_04(), ctx("M-2"));
        REQUIRE(p.coordinate);
        CHECK_FALSE(p.run.failed);
        CHECK_THAT(p.coordinate->lat(), WithinAbs(oracle::dms(37, 0, 7.2, false), 1e-9));
        CHECK_THAT(p.coordinate->lon(), WithinAbs(oracle::dms(77, 7, 58.8, true), 1e-9));
        CHECK(fmt::format("{:.6f}, {:.6f}", p.coordinate->lat(), p.coordinate->lon()) == "37.002000, -77.133000");
        REQUIRE(p.error_km);
        CHECK_THAT(*p.error_km, WithinAbs(oracle::great_circle_km(37.002, -77.133, 37.0, -77.1), 1e-9));
        CHECK(p.run.usage == TokenUsage { 153, 940 });
        CHECK(p.run.cost_usd == call_cost({ 153, 940 }, prices.at("o3")));
        CHECK(p.run.latency_s >= 0.0);
        CHECK(p.run.interactions.size() == 1);
        CHECK(p.run.interactions[0].request_summary.starts_with("Geolocate this colonial Virginia land grant"));
    }
    SECTION("prose answer fails as Unparseable, keeps the usage")
    {
        auto backend = FixtureBackend::from_jsonl(turn("somewhere in Virginia", 150, 6));
        auto const p = run_one_shot(backend, model, grant_04(), ctx("M-2"));
        CHECK_FALSE(p.coordinate);
        CHECK_FALSE(p.error_km);
        CHECK(p.run.failed);
        CHECK(p.run.reason == "Unparseable");
        CHECK(p.run.raw_response == "somewhere in Virginia");
        CHECK(p.run.cost_usd == call_cost({ 150, 6 }, prices.at("o3")));
    }
    SECTION("centre of Virginia in decimal form")
    {
        auto backend = FixtureBackend::from_jsonl(turn("37.4316, -78.6569", 150, 6));
        auto const p = run_one_shot(backend, model, grant_04(), ctx("M-2"));
        REQUIRE(p.coordinate);
        CHECK(p.coordinate->lat() == 37.4316);
        CHECK(p.coordinate->lon() == -78.6569);
    }
    SECTION("backend errors become failed predictions")
    {
        auto backend = FixtureBackend::from_jsonl(R"({"error": "BackendUnavailable"})");
        auto const p = run_one_shot(backend, model, grant_04(), ctx("M-2"));
        CHECK(p.run.failed);
        CHECK(p.run.reason == "BackendUnavailable");
        auto empty = FixtureBackend::from_jsonl("");
        CHECK(run_one_shot(empty, model, grant_04(), ctx("M-2")).run.reason == "FixtureExhausted");
    }
}

TEST_CASE("aggregate_ensemble examples", "[runners][ensemble]")
{
    auto const cfg = EnsembleConfig {};
    auto const p = Coordinate(37.2, -77.3);
    auto const same = aggregate_ensemble(std::vector<Coordinate>(5, p), cfg);
    CHECK_THAT(same.lat(), WithinAbs(p.lat(), 1e-9));
    CHECK_THAT(same.lon(), WithinAbs(p.lon(), 1e-9));

    // Four within 0.1 km, one about 200 km north.
    auto four = std::vector<Coordinate> { { 37.2, -77.3 }, { 37.2003, -77.3 }, { 37.2, -77.3004 }, { 37.2002, -77.3002 },
                                          { 39.0, -77.3 } };
    auto const [elat, elon] = oracle::centroid({ { 37.2, -77.3 }, { 37.2003, -77.3 }, { 37.2, -77.3004 }, { 37.2002, -77.3002 } });
    auto const got = aggregate_ensemble(four, cfg);
    CHECK_THAT(got.lat(), WithinAbs(elat, 1e-9));
    CHECK_THAT(got.lon(), WithinAbs(elon, 1e-9));

    auto spread = std::vector<Coordinate> { { 37.0, -77.0 }, { 37.1, -77.0 }, { 37.2, -77.0 }, { 37.3, -77.0 }, { 37.4, -77.0 } };
    auto const [slat, slon] = oracle::centroid({ { 37.0, -77.0 }, { 37.1, -77.0 }, { 37.2, -77.0 }, { 37.3, -77.0 }, { 37.4, -77.0 } });
    auto const all = aggregate_ensemble(spread, cfg);
    CHECK_THAT(all.lat(), WithinAbs(slat, 1e-9));
    CHECK_THAT(all.lon(), WithinAbs(slon, 1e-9));

    CHECK_THROWS_AS(aggregate_ensemble(std::vector<Coordinate> {}, cfg), Error);
    auto const single = aggregate_ensemble(std::vector<Coordinate> { p }, cfg);
    CHECK(single.lat() == p.lat());
}

TEST_CASE("aggregate_ensemble over every clustering of five points", "[runners][ensemble][property]")
{
    auto const cfg = EnsembleConfig {};
    auto const partitions = oracle::set_partitions(5);
    REQUIRE(partitions.size() == 52);
    auto gen = oracle::Gen(31);
    for (auto const& blocks: partitions)
    {
        // Blocks sit about 60 km apart; members of a block within 100 m of each other.
        auto pts = std::vector<Coordinate> {};
        auto const base = gen.virginia();
        for (auto b: blocks)
        {
            auto const anchor = Coordinate(base.lat() - 0.55 * b, base.lon() - 0.3 * b);
            pts.push_back(gen.near(anchor, 0.05));
        }
        auto const [elat, elon] = expected_vote(pts, cfg.eps_km, cfg.min_cluster);
        auto const got = aggregate_ensemble(pts, cfg);
        REQUIRE_THAT(got.lat(), WithinAbs(elat, 1e-9));
        REQUIRE_THAT(got.lon(), WithinAbs(elon, 1e-9));

        // Permutation invariance over all 120 orders.
        auto order = std::vector<std::size_t> { 0, 1, 2, 3, 4 };
        do
        {
            auto perm = std::vector<Coordinate> {};
            for (auto i: order)
                perm.push_back(pts[i]);
            auto const q = aggregate_ensemble(perm, cfg);
            REQUIRE_THAT(q.lat(), WithinAbs(got.lat(), 1e-9));
            REQUIRE_THAT(q.lon(), WithinAbs(got.lon(), 1e-9));
        } while (std::next_permutation(order.begin(), order.end()));

        // A small common shift moves the vote by the same shift.
        auto shifted = pts;
        for (auto& c: shifted)
            c = Coordinate(c.lat() + 0.001, c.lon() - 0.001);
        auto const s = aggregate_ensemble(shifted, cfg);
        REQUIRE_THAT(s.lat() - got.lat(), WithinAbs(0.001, 1e-6));
        REQUIRE_THAT(s.lon() - got.lon(), WithinAbs(-0.001, 1e-6));
    }
}

TEST_CASE("equal-size qualifying clusters prefer the tighter one", "[runners][ensemble]")
{
    auto cfg = EnsembleConfig { 6, 0.5, 3, { 1, 2, 3, 4, 5, 6 }, false };
    auto const loose = std::vector<Coordinate> { { 37.0, -77.0 }, { 37.003, -77.0 }, { 37.0015, -77.002 } };
    auto const tight = std::vector<Coordinate> { { 38.0, -78.0 }, { 38.0005, -78.0 }, { 38.0, -78.0005 } };
    auto pts = loose;
    pts.insert(pts.end(), tight.begin(), tight.end());
    auto const got = aggregate_ensemble(pts, cfg);
    CHECK(got.lat() > 37.9);
}

TEST_CASE("run_ensemble", "[runners][ensemble]")
{
    auto const model = ModelConfig { "o3-2025-04-16" };
    auto const ens = EnsembleConfig {};

    SECTION("five coincident answers cost five single calls")
    {
        auto script = std::string {};
        for (int s = 1; s <= 5; ++s)
            script += turn("37.1, -77.2", 153, 940, s);
        auto backend = FixtureBackend::from_jsonl(script);
        auto const p = run_ensemble(backend, model, ens, grant_04(), ctx("E-1"));
        REQUIRE(p.coordinate);
        CHECK_THAT(p.coordinate->lat(), WithinAbs(37.1, 1e-9));
        CHECK_THAT(p.coordinate->lon(), WithinAbs(-77.2, 1e-9));
        CHECK(p.run.cost_usd == call_cost({ 153, 940 }, prices.at("o3")) * 5);
        CHECK(p.run.usage == TokenUsage { 765, 4700 });
        CHECK(p.run.cost_usd.to_string(5) == "0.19565");
        CHECK(p.run.interactions.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(p.run.interactions[i].seed == static_cast<std::int64_t>(i + 1));
        CHECK(backend.remaining() == 0);
    }
    SECTION("two failed members, three agreeing")
    {
        auto const script = turn("37.1000, -77.2000", 100, 10, 1) + R"({"match": {"seed": 2}, "error": "Timeout"})" "\n"
                            + turn("37.1010, -77.2000", 100, 10, 3) + turn("no idea", 100, 10, 4)
                            + turn("37.1000, -77.2010", 100, 10, 5);
        auto backend = FixtureBackend::from_jsonl(script);
        auto const p = run_ensemble(backend, model, ens, grant_04(), ctx("E-1"));
        auto const [elat, elon] = oracle::centroid({ { 37.1, -77.2 }, { 37.101, -77.2 }, { 37.1, -77.201 } });
        REQUIRE(p.coordinate);
        CHECK_THAT(p.coordinate->lat(), WithinAbs(elat, 1e-9));
        CHECK_THAT(p.coordinate->lon(), WithinAbs(elon, 1e-9));
        CHECK_FALSE(p.run.failed);
        // The timed-out call reported no usage; the rest are billed.
        CHECK(p.run.usage == TokenUsage { 400, 40 });
    }
    SECTION("every member failing fails the prediction")
    {
        auto script = std::string {};
        for (int s = 1; s <= 5; ++s)
            script += turn("near the river", 100, 10, s);
        auto backend = FixtureBackend::from_jsonl(script);
        auto const p = run_ensemble(backend, model, ens, grant_04(), ctx("E-1"));
        CHECK(p.run.failed);
        CHECK(p.run.reason == "AllCallsFailed");
        CHECK_FALSE(p.coordinate);
    }
    SECTION("concurrent members give the same answer as sequential ones")
    {
        auto script = std::string {};
        auto const answers = std::array<std::string, 5> { "37.1, -77.2", "37.1003, -77.2", "38.5, -79.0", "37.1, -77.2004", "36.9, -76.5" };
        for (int s = 1; s <= 5; ++s)
            script += turn(answers[s - 1], 153, 900 + s, s);
        auto seq_backend = FixtureBackend::from_jsonl(script);
        auto par_backend = FixtureBackend::from_jsonl(script);
        auto par = ens;
        par.concurrent_members = true;
        auto const a = run_ensemble(seq_backend, model, ens, grant_04(), ctx("E-1"));
        auto const b = run_ensemble(par_backend, model, par, grant_04(), ctx("E-1"));
        REQUIRE(a.coordinate);
        REQUIRE(b.coordinate);
        CHECK(a.coordinate->lat() == b.coordinate->lat());
        CHECK(a.coordinate->lon() == b.coordinate->lon());
        CHECK(a.run.raw_response == b.run.raw_response);
        CHECK(a.run.cost_usd == b.run.cost_usd);
    }
    SECTION("config validation")
    {
        auto backend = FixtureBackend::from_jsonl("");
        auto bad = ens;
        bad.min_cluster = 6;
        CHECK_THROWS_AS(run_ensemble(backend, model, bad, grant_04(), ctx("E-1")), Error);
        bad = ens;
        bad.seeds = { 1, 2 };
        CHECK_THROWS_AS(bad.validate(), Error);
        bad = ens;
        bad.eps_km = 0;
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}

TEST_CASE("truncate_for_log", "[runners]")
{
    CHECK(truncate_for_log("short") == "short");
    CHECK(truncate_for_log(std::string(300, 'x'), 10) == "xxxxxxxxxx...");
}

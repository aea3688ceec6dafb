// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/csv.hpp>
#include <grantgeo/error.hpp>
#include <grantgeo/harness.hpp>

#include <catch_amalgamated.hpp>
#include <oracles.hpp>

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace grantgeo;
using json = nlohmann::json;
namespace fs = std::filesystem;

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

void write(const fs::path& p, std::string_view text)
{
    fs::create_directories(p.parent_path());
    auto out = std::ofstream(p, std::ios::binary);
    out << text;
}

const std::array<const char*, 6> county_names { "Henrico", "Surry", "Prince George", "Isle of Wight", "Hanover", "Sussex" };

/// 43 grants, each naming a county, with truth near that county's centroid.
std::vector<GrantAbstract> corpus43()
{
    auto const table = CountyCentroidTable::load(oracle::data_dir() / "va_county_centroids.csv");
    auto gen = oracle::Gen(43);
    auto rows = std::vector<GrantAbstract> {};
    for (int i = 0; i < 43; ++i)
    {
        auto const county = county_names[i % county_names.size()];
        rows.push_back(GrantAbstract::from_text(fmt::format("grant_{:02}", i + 1),
                                                fmt::format("JOHN PATENTEE, {} acs., {} Co., on the branches of Deep Cr.", 100 + 10 * i, county),
                                                gen.near(*table.find(county), 15.0)));
    }
    return rows;
}

/// Scratch directory holding corpus.csv and an empty model script.
fs::path workspace(const std::string& name, const std::vector<GrantAbstract>& rows)
{
    auto const dir = oracle::scratch(name);
    write(dir / "corpus.csv", format_ground_truth(rows));
    write(dir / "script.jsonl", "");
    write(dir / "geocoder.json", "{}");
    return dir;
}

HarnessConfig config_in(const fs::path& dir, std::string_view methods_yaml, std::string_view extra = "", std::string_view corpus_extra = "")
{
    auto const yaml = fmt::format("corpus:\n  ground_truth: corpus.csv\n{}backend:\n  kind: fixture\n  fixture: script.jsonl\n"
                                  "geocoder:\n  kind: fixture\n  fixture: geocoder.json\n{}methods:\n{}",
                                  corpus_extra, extra, methods_yaml);
    return HarnessConfig::parse(yaml, dir);
}

constexpr std::string_view three_methods = R"(  - id: M-2
    pipeline: one_shot
    model: o3-2025-04-16
    reasoning_effort: medium
  - id: T-4
    pipeline: tool_chain
    model: gpt-4.1-2025-04-14
    temperature: 0.2
  - id: H-4
    pipeline: county_centroid
)";

/// One scripted one-shot answer per row, matched on method id and row id.
std::string one_shot_script(const std::vector<GrantAbstract>& rows, const std::string& method_id, std::uint64_t in_tokens,
                            std::uint64_t out_tokens)
{
    auto s = std::string {};
    for (auto const& r: rows)
    {
        auto const t = *r.ground_truth;
        s += json { { "match", { { "method_id", method_id }, { "row_id", r.row_id } } },
                    { "text", fmt::format("{:.6f}, {:.6f}", t.lat() + 0.01, t.lon() - 0.01) },
                    { "usage", { { "input_tokens", in_tokens }, { "output_tokens", out_tokens } } } }
                 .dump()
             + "\n";
    }
    return s;
}

std::vector<json> read_jsonl(const fs::path& p)
{
    auto out = std::vector<json> {};
    auto in = std::ifstream(p);
    for (auto line = std::string {}; std::getline(in, line);)
        if (!line.empty())
            out.push_back(json::parse(line));
    return out;
}

} // namespace

TEST_CASE("config document parsing", "[harness][config]")
{
    auto const dir = oracle::fixtures() / "harness";
    auto const cfg = HarnessConfig::load(dir / "manifest.yaml");
    CHECK(cfg.ground_truth == dir / "corpus.csv");
    CHECK(cfg.backend.kind == BackendKind::fixture);
    CHECK(cfg.backend.fixture == dir / "model_script.jsonl");
    CHECK(cfg.geocoder.kind == GeocoderKind::fixture);
    CHECK(cfg.parallelism == 4);
    CHECK(cfg.seed == 42);
    CHECK(cfg.summary.resamples == 2000);
    REQUIRE(cfg.methods.size() == 3);
    CHECK(cfg.methods[0].method_id == "M-2");
    CHECK(cfg.methods[0].pipeline == Pipeline::one_shot);
    CHECK(cfg.methods[0].model->reasoning_effort == ReasoningEffort::medium);
    CHECK_FALSE(cfg.methods[0].model->temperature);
    CHECK(cfg.methods[1].model->temperature == 0.2);
    CHECK(cfg.methods[1].budget->max_tool_calls == 10);
    CHECK(cfg.methods[2].ensemble->k == 5);
    CHECK(cfg.methods[2].ensemble->eps_km == 0.5);

    auto const b = HarnessConfig::load(dir / "baselines_manifest.yaml");
    REQUIRE(b.evalsets.size() == 1);
    CHECK(b.evalsets[0].sample == 6u);
    CHECK(b.evalsets[0].sample_seed == 7);
    CHECK(b.methods[0].external->total_cost == Usd::parse("140"));
    CHECK(b.methods[2].heuristic->distance_gate_km == 25.0);

    for (auto p: { Pipeline::one_shot, Pipeline::tool_chain, Pipeline::ensemble, Pipeline::county_centroid,
                   Pipeline::heuristic_geoparse, Pipeline::ner_pipeline, Pipeline::ingest_external })
        CHECK(parse_pipeline(to_string(p)) == p);
    CHECK(uses_model(Pipeline::ensemble));
    CHECK_FALSE(uses_model(Pipeline::ner_pipeline));
}

TEST_CASE("config validation errors", "[harness][config]")
{
    auto const dir = workspace("config_errors", corpus43());
    auto bad = [&](std::string_view methods, std::string_view extra = "") {
        return code_of([&] { (void)config_in(dir, methods, extra); });
    };
    CHECK(code_of([] { (void)HarnessConfig::load(oracle::fixtures() / "harness" / "bad_manifest.yaml"); }) == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: one_shot\n    model: o3\n    temperature: 0.2\n    reasoning_effort: low\n")
          == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: teleport\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: county_centroid\n    model: o3\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: county_centroid\n  - id: X\n    pipeline: county_centroid\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: county_centroid\n", "parallelism: 0\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: county_centroid\n", "surprise: 1\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: one_shot\n    model: not-a-priced-model\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: X\n    pipeline: ingest_external\n") == ErrorCode::ConfigInvalid);
    CHECK(bad("  - id: E\n    pipeline: ensemble\n    model: o3\n    ensemble:\n      k: 5\n      min_cluster: 6\n")
          == ErrorCode::ConfigInvalid);
    CHECK(code_of([&] { (void)HarnessConfig::parse("methods: [", dir); }) == ErrorCode::ConfigInvalid);

    SECTION("prices can be overridden")
    {
        auto const cfg = config_in(dir, "  - id: X\n    pipeline: one_shot\n    model: house-model\n",
                                   "prices:\n  house-model:\n    input: \"1.00\"\n    output: \"2.00\"\n");
        CHECK(cfg.prices.at("house-model").output == Usd::parse("2.00"));
    }
}

TEST_CASE("select_rows", "[harness]")
{
    auto const rows = corpus43();
    auto const dir = workspace("select_rows", rows);
    auto cfg = config_in(dir, "  - id: H-4\n    pipeline: county_centroid\n", "",
                         "  split:\n    seed: 42\n    dev_fraction: 0.2\n  evalsets:\n    - name: pick\n      from: test\n      sample: 5\n      seed: 3\n");
    CHECK(select_rows(cfg, rows, "all", std::nullopt).size() == 43);
    CHECK(select_rows(cfg, rows, "all", 5).size() == 5);
    CHECK(select_rows(cfg, rows, "dev", std::nullopt).size() == 8);
    CHECK(select_rows(cfg, rows, "test", std::nullopt).size() == 35);
    auto const pick = select_rows(cfg, rows, "pick", std::nullopt);
    CHECK(pick.size() == 5);
    auto const test_ids = select_rows(cfg, rows, "test", std::nullopt);
    for (auto const& r: pick)
        CHECK(std::any_of(test_ids.begin(), test_ids.end(), [&](auto const& t) { return t.row_id == r.row_id; }));
    CHECK(code_of([&] { (void)select_rows(cfg, rows, "nope", std::nullopt); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("dry run plans every cell without external calls", "[harness][dry-run]")
{
    auto const rows = corpus43();
    auto const dir = workspace("dry_run", rows);
    auto manifest = RunManifest { config_in(dir, three_methods) };
    manifest.dry_run = true;
    auto backend = FixtureBackend::from_jsonl("");
    auto provider = FixtureGeocodingProvider({});
    auto log = std::ostringstream {};
    auto const out = run_evaluation(manifest, RunDependencies { &backend, &provider }, &log);
    CHECK(out.plan.size() == 129);
    CHECK(out.predictions.empty());
    CHECK(backend.calls_made() == 0);
    CHECK(provider.calls_made() == 0);
    CHECK(out.model_calls == 0);
    CHECK_FALSE(fs::exists(out.results_csv));
    CHECK(log.str().find("129 cells") != std::string::npos);
    auto const& t4 = *std::find_if(out.plan.begin(), out.plan.end(), [](auto const& c) { return c.method_id == "T-4"; });
    CHECK(t4.min_model_calls == 1);
    CHECK(t4.max_model_calls == 12);
    auto const& h4 = out.plan.back();
    CHECK(h4.max_model_calls == 0);
}

TEST_CASE("fixture-backed runs", "[harness][run]")
{
    auto const rows = corpus43();
    auto const dir = workspace("fixture_runs", rows);
    write(dir / "script.jsonl", one_shot_script(rows, "M-2", 153, 900));
    auto const methods = std::string_view("  - id: M-2\n    pipeline: one_shot\n    model: o3-2025-04-16\n    reasoning_effort: medium\n"
                                          "  - id: H-4\n    pipeline: county_centroid\n");

    SECTION("two grants give two CSV rows and two call records per method")
    {
        auto manifest = RunManifest { config_in(dir, methods) };
        manifest.method_filter = { "M-2" };
        manifest.max_rows = 2;
        auto const out = run_evaluation(manifest);
        CHECK(out.model_calls == 2);
        auto const table = csv::load_table(out.results_csv);
        REQUIRE(table.records().size() == 2);
        auto const calls = read_jsonl(out.run_dir / "runs" / "M-2" / "calls.jsonl");
        REQUIRE(calls.size() == 2);
        for (std::size_t i = 0; i < 2; ++i)
        {
            auto const& c = calls[i];
            CHECK(c["row_id"] == table.field(i, "row_id"));
            for (auto key: { "method_id", "row_id", "timestamp", "request_summary", "response_summary", "tool_calls", "usage",
                             "latency_s", "cost_usd", "final_coordinate", "failed", "reason" })
                CHECK(c.contains(key));
            // The CSV coordinate is the logged final answer.
            CHECK(fmt::format("{:.6f}", c["final_coordinate"]["lat"].get<double>()) == table.field(i, "pred_lat"));
            CHECK(fmt::format("{:.6f}", c["final_coordinate"]["lon"].get<double>()) == table.field(i, "pred_lon"));
            CHECK(c["cost_usd"] == table.field(i, "cost_usd"));
        }
        auto const run_manifest = json::parse(oracle::read_file(out.run_dir / "run_manifest.json"));
        CHECK(run_manifest["results_csv"] == "results_all.csv");
    }
    SECTION("max_rows limits every method")
    {
        auto manifest = RunManifest { config_in(dir, methods) };
        manifest.max_rows = 5;
        auto const out = run_evaluation(manifest);
        CHECK(out.predictions.size() == 10);
        CHECK(csv::load_table(out.results_csv).records().size() == 10);
    }
    SECTION("replays are byte-identical across runs and worker counts")
    {
        auto a = RunManifest { config_in(dir, methods, "output_dir: out_a\n") };
        auto b = RunManifest { config_in(dir, methods, "output_dir: out_b\nparallelism: 8\n") };
        auto const ra = run_evaluation(a);
        auto const rb = run_evaluation(b);
        auto const bytes = oracle::read_file(ra.results_csv);
        CHECK(bytes == oracle::read_file(rb.results_csv));
        CHECK(std::count(bytes.begin(), bytes.end(), '\n') == 1 + 86);
        CHECK(ra.failed == 0);
    }
    SECTION("failures are recorded rows, not dropped")
    {
        write(dir / "script.jsonl", one_shot_script(std::vector(rows.begin(), rows.begin() + 40), "M-2", 153, 900));
        auto manifest = RunManifest { config_in(dir, methods) };
        auto const out = run_evaluation(manifest);
        CHECK(out.failed == 3);
        auto const table = csv::load_table(out.results_csv);
        CHECK(table.records().size() == 86);
        auto failed = 0;
        for (std::size_t i = 0; i < table.records().size(); ++i)
            if (table.field(i, "failed") == "1")
            {
                ++failed;
                CHECK(table.field(i, "reason") == "FixtureExhausted");
                CHECK(table.field(i, "pred_lat").empty());
            }
        CHECK(failed == 3);
    }
    SECTION("missing data")
    {
        fs::remove(dir / "corpus.csv");
        auto manifest = RunManifest { config_in(dir, methods) };
        CHECK(code_of([&] { (void)run_evaluation(manifest); }) == ErrorCode::DataMissing);
    }
    SECTION("unknown method filter")
    {
        auto manifest = RunManifest { config_in(dir, methods) };
        manifest.method_filter = { "Z-9" };
        CHECK(code_of([&] { (void)run_evaluation(manifest); }) == ErrorCode::ConfigInvalid);
    }
}

TEST_CASE("ingest_external_predictions", "[harness][ingest]")
{
    auto const rows = corpus43();
    auto const dir = oracle::scratch("ingest");
    auto text = std::string("row_id,lat,lon\n");
    for (auto const& r: rows)
        text += fmt::format("{},{:.6f},{:.6f}\n", r.row_id, r.ground_truth->lat() + 0.2, r.ground_truth->lon());
    write(dir / "h1.csv", text);

    auto const ps = ingest_external_predictions(dir / "h1.csv", "H-1", rows, Usd::parse("140"), 502.0);
    REQUIRE(ps.size() == 43);
    auto total = Usd {};
    auto records = std::vector<RunRecord> {};
    auto errors = std::vector<double> {};
    for (auto const& p: ps)
    {
        CHECK(p.run.usage.total() == 0);
        REQUIRE(p.error_km);
        total += p.run.cost_usd;
        records.push_back(p.run);
        errors.push_back(*p.error_km);
    }
    CHECK(total == Usd::parse("140"));
    auto const summary = summarize_method("H-1", errors, records, 0, SummaryOptions { 200 });
    CHECK(summary.cost_per_located.to_string(5) == "3.25581");
    CHECK(summary.cost_per_1k.to_string(2) == "3255.81");
    CHECK(summary.latency.speedup == 1.0);

    write(dir / "empty.csv", "");
    CHECK(ingest_external_predictions(dir / "empty.csv", "H-1", rows, Usd::parse("140"), 502.0).empty());
    write(dir / "header_only.csv", "row_id,lat,lon\n");
    CHECK(ingest_external_predictions(dir / "header_only.csv", "H-1", rows, Usd::parse("140"), 502.0).empty());
    write(dir / "unknown.csv", "row_id,lat,lon\ngrant_99,37.0,-77.0\n");
    CHECK(code_of([&] { (void)ingest_external_predictions(dir / "unknown.csv", "H-1", rows, Usd {}, 502.0); }) == ErrorCode::MalformedRow);
    write(dir / "bad.csv", "row_id,lat,lon\ngrant_01,north,-77.0\n");
    CHECK(code_of([&] { (void)ingest_external_predictions(dir / "bad.csv", "H-1", rows, Usd {}, 502.0); }) == ErrorCode::MalformedRow);
    write(dir / "dup.csv", "row_id,lat,lon\ngrant_01,37,-77\ngrant_01,37,-77\n");
    CHECK(code_of([&] { (void)ingest_external_predictions(dir / "dup.csv", "H-1", rows, Usd {}, 502.0); }) == ErrorCode::MalformedRow);
}

TEST_CASE("run report", "[harness][report]")
{
    auto const dir = oracle::scratch("report");
    auto prediction = [](std::string method, std::string row, double err, Usd cost) {
        auto p = Prediction {};
        p.method_id = std::move(method);
        p.row_id = std::move(row);
        p.coordinate = Coordinate(37.0, -77.0);
        p.error_km = err;
        p.run.cost_usd = cost;
        p.run.latency_s = 2.0;
        return p;
    };

    SECTION("one method with errors 1, 2, 3")
    {
        auto ps = std::vector<Prediction> {};
        for (int i = 1; i <= 3; ++i)
            ps.push_back(prediction("M-2", fmt::format("r{}", i), i, Usd::parse("0.1")));
        write(dir / "results_all.csv", format_results_csv(ps));
        auto const art = generate_report(dir, SummaryOptions { 500 });
        REQUIRE(art.summaries.size() == 1);
        CHECK(art.summaries[0].stats.mean == 2.0);
        CHECK(art.summaries[0].stats.median == 2.0);
        CHECK(art.markdown.find("| M-2 | 3 | 0 | 2.0 [") != std::string::npos);
        CHECK(fs::exists(art.report_md));
        CHECK(oracle::read_file(art.report_md) == art.markdown);
        CHECK(art.tool_usage.empty());
        CHECK(art.markdown.find("Tool usage") == std::string::npos);
    }
    SECTION("gpt-3.5 totals give 0.00010 per located")
    {
        auto const total = call_cost({ 6773, 820 }, PriceTable::defaults().at("gpt-3.5-turbo"));
        REQUIRE(total.to_string(7) == "0.0046165");
        auto const share = total.divided_by(43);
        auto remainder = total.pico() - share.pico() * 43;
        auto ps = std::vector<Prediction> {};
        for (int i = 0; i < 43; ++i)
        {
            auto cost = share;
            if (remainder-- > 0)
                cost += Usd::from_pico(1);
            ps.push_back(prediction("M-6", fmt::format("r{:02}", i), 40.0 + i, cost));
        }
        write(dir / "results_all.csv", format_results_csv(ps));
        auto const art = generate_report(dir, SummaryOptions { 200 });
        CHECK(art.summaries[0].total_cost == total);
        CHECK(art.markdown.find("| M-6 | 0.00461 | 0.00010 | 0.10 |") != std::string::npos);
    }
    SECTION("frontier lists only the dominant method")
    {
        auto ps = std::vector<Prediction> {};
        for (int i = 0; i < 4; ++i)
        {
            ps.push_back(prediction("M-2", fmt::format("r{}", i), 20.0 + i, Usd::parse("0.12746")));
            ps.push_back(prediction("H-1", fmt::format("r{}", i), 70.0 + i, Usd::parse("3.25581")));
        }
        write(dir / "results_all.csv", format_results_csv(ps));
        auto const art = generate_report(dir, SummaryOptions { 200 });
        auto const pareto = csv::load_table(art.pareto_csv);
        REQUIRE(pareto.records().size() == 1);
        CHECK(pareto.field(0, "method_id") == "M-2");
        CHECK(csv::load_table(art.cost_scatter_csv).records().size() == 2);
        CHECK(csv::load_table(art.latency_scatter_csv).records().size() == 2);
    }
    SECTION("report over a real run reads traces and latency from the call log")
    {
        auto const fixtures = oracle::fixtures() / "harness";
        auto cfg = HarnessConfig::load(fixtures / "manifest.yaml");
        cfg.output_dir = dir / "run";
        auto const out = run_evaluation(RunManifest { cfg });
        auto const art = generate_report(out.run_dir, SummaryOptions { 200 });
        CHECK(art.summaries.size() == 3);
        REQUIRE(art.tool_usage.contains("T-4"));
        CHECK(art.tool_usage.at("T-4").geocode.mean == 1.0);
        CHECK(art.markdown.find("## Tool usage") != std::string::npos);
        for (auto const& s: art.summaries)
            CHECK(s.latency.mean_latency_s >= 0.0);
    }
    SECTION("no results")
    {
        CHECK(code_of([&] { (void)generate_report(dir / "nothing"); }) == ErrorCode::NoResults);
        write(dir / "empty" / "results_all.csv", std::string(results_csv_header) + "\n");
        CHECK(code_of([&] { (void)generate_report(dir / "empty"); }) == ErrorCode::NoResults);
    }
}

TEST_CASE("sweeps", "[harness][sweep]")
{
    auto const rows = corpus43();
    auto const dir = workspace("sweep", rows);

    SECTION("a single temperature value reproduces the plain run")
    {
        auto const methods = std::string_view("  - id: M-5\n    pipeline: one_shot\n    model: gpt-4o-2024-08-06\n    temperature: 0.2\n");
        // Match on row only so the cloned id reads the same script.
        auto script = std::string {};
        for (auto const& r: rows)
            script += json { { "match", { { "row_id", r.row_id } } },
                             { "text", fmt::format("{:.6f}, {:.6f}", r.ground_truth->lat() + 0.02, r.ground_truth->lon()) },
                             { "usage", { { "input_tokens", 150 }, { "output_tokens", 30 } } } }
                          .dump()
                      + "\n";
        write(dir / "script.jsonl", script);
        auto plain = RunManifest { config_in(dir, methods, "output_dir: plain\n") };
        auto const base = run_evaluation(plain);
        auto swept = RunManifest { config_in(dir, methods, "output_dir: swept\n") };
        auto const s = sweep(swept, SweepAxis::temperature, { "0.2" });
        REQUIRE(s.rows.size() == 1);
        CHECK(s.rows[0].method_id == "M-5@temperature=0.2");
        CHECK(s.rows[0].base_method_id == "M-5");
        auto sum = 0.0;
        for (auto const& p: base.predictions)
            sum += *p.error_km;
        CHECK(*s.rows[0].mean_error_km == sum / 43.0);
        CHECK(s.rows[0].tokens_per_entry == 180.0);
        for (std::size_t i = 0; i < base.predictions.size(); ++i)
        {
            CHECK(s.run.predictions[i].coordinate->lat() == base.predictions[i].coordinate->lat());
            CHECK(s.run.predictions[i].run.cost_usd == base.predictions[i].run.cost_usd);
        }
        CHECK(fs::exists(s.table_md));
    }
    SECTION("reasoning-effort sweep reports tokens per entry")
    {
        auto const methods = std::string_view("  - id: M-2\n    pipeline: one_shot\n    model: o3-2025-04-16\n    reasoning_effort: medium\n");
        auto script = std::string {};
        for (auto [effort, out_tokens]: { std::pair { "low", 947 }, std::pair { "medium", 3047 }, std::pair { "high", 6847 } })
            script += one_shot_script(rows, fmt::format("M-2@reasoning_effort={}", effort), 153, out_tokens);
        write(dir / "script.jsonl", script);
        auto manifest = RunManifest { config_in(dir, methods) };
        auto const s = sweep(manifest, parse_sweep_axis("effort"), { "low", "medium", "high" });
        REQUIRE(s.rows.size() == 3);
        CHECK(s.rows[0].tokens_per_entry == 1100.0);
        CHECK(s.rows[1].tokens_per_entry == 3200.0);
        CHECK(s.rows[2].tokens_per_entry == 7000.0);
        CHECK(s.run.predictions.size() == 129);
        auto const md = oracle::read_file(s.table_md);
        CHECK(md.find("| M-2 | low |") != std::string::npos);
        CHECK(md.find("| 1100 |") != std::string::npos);
        CHECK(md.find("| 7000 |") != std::string::npos);
    }
    SECTION("axis must fit the model")
    {
        auto const effort_model = std::string_view("  - id: M-2\n    pipeline: one_shot\n    model: o3-2025-04-16\n    reasoning_effort: medium\n");
        auto m = RunManifest { config_in(dir, effort_model) };
        CHECK(code_of([&] { (void)sweep(m, SweepAxis::temperature, { "0.4" }); }) == ErrorCode::AxisInapplicable);
        auto const temp_model = std::string_view("  - id: M-5\n    pipeline: one_shot\n    model: gpt-4o-2024-08-06\n    temperature: 0.2\n");
        auto t = RunManifest { config_in(dir, temp_model) };
        CHECK(code_of([&] { (void)sweep(t, SweepAxis::reasoning_effort, { "low" }); }) == ErrorCode::AxisInapplicable);
        CHECK(code_of([&] { (void)sweep(t, SweepAxis::temperature, { "warm" }); }) == ErrorCode::ConfigInvalid);
        CHECK(code_of([] { (void)parse_sweep_axis("heat"); }) == ErrorCode::ConfigInvalid);
        auto const baseline_only = std::string_view("  - id: H-4\n    pipeline: county_centroid\n");
        auto h = RunManifest { config_in(dir, baseline_only) };
        CHECK(code_of([&] { (void)sweep(h, SweepAxis::temperature, { "0.4" }); }) == ErrorCode::AxisInapplicable);
    }
}

TEST_CASE("redacted methods see the patentee replaced", "[harness]")
{
    auto const rows = corpus43();
    auto const dir = workspace("redact", rows);
    auto script = std::string {};
    for (auto const& r: rows)
        script += json { { "match", { { "row_id", r.row_id }, { "contains", "[NAME]" } } }, { "text", "37.5, -77.5" } }.dump() + "\n";
    write(dir / "script.jsonl", script);
    auto manifest = RunManifest { config_in(dir, "  - id: M-2r\n    pipeline: one_shot\n    model: o3-2025-04-16\n    reasoning_effort: medium\n    redact: true\n") };
    auto const out = run_evaluation(manifest);
    CHECK(out.failed == 0);
}

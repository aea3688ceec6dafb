// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/csv.hpp>
#include <grantgeo/error.hpp>
#include <grantgeo/harness.hpp>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#ifndef GRANTGEO_DEFAULT_DATA_DIR
#define GRANTGEO_DEFAULT_DATA_DIR "share/grantgeo"
#endif

namespace grantgeo
{

namespace
{

std::string utc_timestamp()
{
    auto const now = std::chrono::system_clock::now();
    auto const t = std::chrono::system_clock::to_time_t(now);
    auto tm = std::tm {};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_text(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot open {}", path.string()));
    auto ss = std::ostringstream {};
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    std::filesystem::create_directories(path.parent_path());
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot write {}", path.string()));
    out << text;
}

void require_file(const std::filesystem::path& path, std::string_view what)
{
    if (!std::filesystem::is_regular_file(path))
        throw Error(ErrorCode::DataMissing, fmt::format("{} not found: {}", what, path.string()));
}

/// Directory name for a method id; path separators are replaced.
std::string method_dir_name(std::string_view id)
{
    auto out = std::string(id);
    for (auto& c: out)
        if (c == '/' || c == '\\')
            c = '_';
    return out;
}

std::filesystem::path default_county_table()
{
    if (auto const* env = std::getenv("GRANTGEO_DATA_DIR"))
        return std::filesystem::path(env) / "va_county_centroids.csv";
    auto const source_tree = std::filesystem::path(GRANTGEO_DEFAULT_DATA_DIR) / "va_county_centroids.csv";
    if (std::filesystem::exists(source_tree))
        return source_tree;
    return std::filesystem::path(GRANTGEO_INSTALLED_DATA_DIR) / "va_county_centroids.csv";
}

// Backend loaded from a JSONL fixture. FixtureBackend itself is pinned in memory,
// so the turns are parsed here and handed to the constructor.
std::unique_ptr<ChatBackend> load_fixture_backend(const std::filesystem::path& path)
{
    auto const text = read_text(path);
    auto turns = std::vector<FixtureBackend::Turn> {};
    auto in = std::istringstream(text);
    auto line = std::string {};
    for (std::size_t index = 0; std::getline(in, line);)
    {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw Error(ErrorCode::ConfigInvalid, fmt::format("{}: line {} is not JSON", path.string(), index + 1));
        turns.push_back(FixtureBackend::parse_turn(doc, index++));
    }
    return std::make_unique<FixtureBackend>(std::move(turns));
}

std::size_t max_model_calls(const MethodSpec& m)
{
    switch (m.pipeline)
    {
        case Pipeline::one_shot: return 1;
        case Pipeline::ensemble: return m.ensemble->k;
        // Every tool-bearing turn executes at least one call; one refused turn, then the nudge.
        case Pipeline::tool_chain: return m.budget->max_tool_calls + 2;
        default: return 0;
    }
}

std::size_t min_model_calls(const MethodSpec& m)
{
    return m.pipeline == Pipeline::ensemble ? m.ensemble->k : (uses_model(m.pipeline) ? 1 : 0);
}

Prediction baseline_prediction(const MethodSpec& m, const GrantAbstract& g, const BaselineResult& r, double latency_s)
{
    auto p = Prediction {};
    p.method_id = m.method_id;
    p.row_id = g.row_id;
    p.coordinate = r.coordinate;
    p.provenance = std::string(to_string(r.provenance));
    p.run.method_id = m.method_id;
    p.run.row_id = g.row_id;
    p.run.latency_s = latency_s;
    p.run.raw_response = format_decimal(r.coordinate, 6);
    p.score(g.ground_truth);
    return p;
}

Prediction failed_prediction(const std::string& method_id, const GrantAbstract& g, const std::string& model_id,
                             const Error& e)
{
    auto p = Prediction {};
    p.method_id = method_id;
    p.row_id = g.row_id;
    p.run.method_id = method_id;
    p.run.row_id = g.row_id;
    p.run.model_id = model_id;
    p.run.failed = true;
    p.run.reason = std::string(to_string(e.code()));
    p.run.raw_response = e.what();
    return p;
}

struct BaselineTools
{
    CountyCentroidTable counties;
    AbbreviationTable abbreviations = AbbreviationTable::defaults();
    std::vector<GazetteerEntry> gazetteer;
    std::unique_ptr<EntityResolver> resolver;
    CapitalizedPhraseExtractor extractor { 4 };
};

BaselineTools load_baselines(const BaselineData& data)
{
    auto tools = BaselineTools {};
    auto const county_path = data.county_table.value_or(default_county_table());
    require_file(county_path, "county centroid table");
    tools.counties = CountyCentroidTable::load(county_path);
    if (data.abbreviations)
    {
        require_file(*data.abbreviations, "abbreviation table");
        tools.abbreviations = AbbreviationTable::load(*data.abbreviations);
    }
    if (data.gazetteer)
    {
        require_file(*data.gazetteer, "gazetteer");
        tools.gazetteer = load_gazetteer(*data.gazetteer);
    }
    if (data.resolver_fixture)
    {
        require_file(*data.resolver_fixture, "resolver fixture");
        tools.resolver = std::make_unique<FixtureResolver>(FixtureResolver::load(*data.resolver_fixture));
    }
    else
        tools.resolver = std::make_unique<GazetteerResolver>(tools.gazetteer);
    return tools;
}

std::vector<const MethodSpec*> select_methods(const HarnessConfig& config, const std::vector<std::string>& filter)
{
    auto out = std::vector<const MethodSpec*> {};
    if (filter.empty())
    {
        for (auto const& m: config.methods)
            out.push_back(&m);
        return out;
    }
    auto wanted = std::set<std::string>(filter.begin(), filter.end());
    for (auto const& id: wanted)
        if (std::none_of(config.methods.begin(), config.methods.end(), [&](auto const& m) { return m.method_id == id; }))
            throw Error(ErrorCode::ConfigInvalid, fmt::format("method '{}' is not in the roster", id));
    for (auto const& m: config.methods)
        if (wanted.contains(m.method_id))
            out.push_back(&m);
    return out;
}

std::string fixed6(double v)
{
    return fmt::format("{:.6f}", v);
}

} // namespace

std::vector<GrantAbstract> select_rows(const HarnessConfig& config, std::span<const GrantAbstract> corpus,
                                       std::string_view evalset, std::optional<std::size_t> max_rows)
{
    auto const name = evalset.empty() ? std::string_view(config.default_evalset) : evalset;

    auto base_set = [&](std::string_view from) -> std::optional<EvalSet> {
        if (from == "all")
            return std::nullopt;
        auto [dev, test] = split_corpus(corpus, config.split);
        return from == "dev" ? dev : test;
    };

    auto members = std::optional<EvalSet> {};
    if (name == "all" || name == "dev" || name == "test")
        members = base_set(name);
    else
    {
        auto const it = std::find_if(config.evalsets.begin(), config.evalsets.end(), [&](auto const& e) { return e.name == name; });
        if (it == config.evalsets.end())
            throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown evalset '{}'", name));
        auto base = base_set(it->from);
        if (!base)
        {
            base = EvalSet { "all", {} };
            for (auto const& r: corpus)
                base->members.push_back(r.row_id);
        }
        if (it->sample)
            members = sample_fixed(*base, *it->sample, it->sample_seed);
        else
            members = std::move(base);
    }

    auto rows = std::vector<GrantAbstract> {};
    for (auto const& r: corpus)
    {
        if (members && !members->contains(r.row_id))
            continue;
        if (max_rows && rows.size() >= *max_rows)
            break;
        rows.push_back(r);
    }
    return rows;
}

std::vector<Prediction> ingest_external_predictions(const std::filesystem::path& path, const std::string& method_id,
                                                    std::span<const GrantAbstract> rows, Usd total_cost,
                                                    double latency_s_per_grant)
{
    auto const text = read_text(path);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        return {};
    auto table = csv::Table(csv::parse(text), path);
    auto const n = table.records().size();
    if (n == 0)
        return {};

    auto by_id = std::unordered_map<std::string, const GrantAbstract*> {};
    for (auto const& r: rows)
        by_id.emplace(r.row_id, &r);

    auto coordinates = std::unordered_map<std::string, Coordinate> {};
    for (std::size_t i = 0; i < n; ++i)
    {
        auto const& id = table.field(i, "row_id");
        if (!by_id.contains(id))
            throw Error(ErrorCode::MalformedRow, fmt::format("{}: row {} references unknown row_id '{}'", path.string(), i + 2, id));
        auto lat = 0.0;
        auto lon = 0.0;
        try
        {
            std::size_t used = 0;
            lat = std::stod(table.field(i, "lat"), &used);
            lon = std::stod(table.field(i, "lon"), &used);
        }
        catch (const std::exception&)
        {
            throw Error(ErrorCode::MalformedRow, fmt::format("{}: row {} has a non-numeric coordinate", path.string(), i + 2));
        }
        try
        {
            if (!coordinates.emplace(id, Coordinate(lat, lon)).second)
                throw Error(ErrorCode::MalformedRow, fmt::format("{}: row_id '{}' appears twice", path.string(), id));
        }
        catch (const Error& e)
        {
            if (e.code() == ErrorCode::MalformedRow)
                throw;
            throw Error(ErrorCode::MalformedRow, fmt::format("{}: row {}: {}", path.string(), i + 2, e.what()));
        }
    }

    // Split the ledger total evenly; leftover picodollars go to the first rows so the sum is exact.
    auto const share = total_cost.divided_by(static_cast<std::int64_t>(n));
    auto remainder = total_cost.pico() - share.pico() * static_cast<std::int64_t>(n);

    auto out = std::vector<Prediction> {};
    for (auto const& r: rows)
    {
        auto const it = coordinates.find(r.row_id);
        if (it == coordinates.end())
            continue;
        auto p = Prediction {};
        p.method_id = method_id;
        p.row_id = r.row_id;
        p.coordinate = it->second;
        p.provenance = "external";
        p.run.method_id = method_id;
        p.run.row_id = r.row_id;
        p.run.latency_s = latency_s_per_grant;
        p.run.cost_usd = share;
        if (remainder > 0)
        {
            p.run.cost_usd += Usd::from_pico(1);
            --remainder;
        }
        p.run.raw_response = format_decimal(it->second, 6);
        p.score(r.ground_truth);
        out.push_back(std::move(p));
    }
    return out;
}

std::string format_results_csv(std::span<const Prediction> predictions)
{
    auto out = std::string(results_csv_header) + "\n";
    for (auto const& p: predictions)
    {
        out += csv::format_row({
                   p.method_id,
                   p.row_id,
                   p.coordinate ? fixed6(p.coordinate->lat()) : "",
                   p.coordinate ? fixed6(p.coordinate->lon()) : "",
                   p.error_km ? fixed6(*p.error_km) : "",
                   p.run.failed ? "1" : "0",
                   p.run.reason,
                   std::to_string(p.run.usage.input_tokens),
                   std::to_string(p.run.usage.output_tokens),
                   p.run.cost_usd.to_string(12),
                   p.provenance,
               })
               + "\n";
    }
    return out;
}

nlohmann::json call_record_json(const Prediction& p, std::string_view timestamp)
{
    auto tools = nlohmann::json::array();
    for (auto const& t: p.run.tool_calls)
        tools.push_back({ { "turn_index", t.turn_index },
                          { "tool_name", t.tool_name },
                          { "arguments", t.arguments },
                          { "result", t.result },
                          { "is_error", t.is_error },
                          { "selected", t.selected } });
    auto interactions = nlohmann::json::array();
    for (auto const& i: p.run.interactions)
    {
        auto j = nlohmann::json { { "request_summary", i.request_summary },
                                  { "response_summary", i.response_summary },
                                  { "usage", { { "input_tokens", i.usage.input_tokens }, { "output_tokens", i.usage.output_tokens } } } };
        j["seed"] = i.seed ? nlohmann::json(*i.seed) : nlohmann::json(nullptr);
        interactions.push_back(std::move(j));
    }
    auto record = nlohmann::json {};
    record["method_id"] = p.method_id;
    record["row_id"] = p.row_id;
    record["model_id"] = p.run.model_id;
    record["timestamp"] = timestamp;
    record["request_summary"] = p.run.interactions.empty() ? "" : p.run.interactions.front().request_summary;
    record["response_summary"] = p.run.interactions.empty() ? truncate_for_log(p.run.raw_response)
                                                            : p.run.interactions.back().response_summary;
    record["tool_calls"] = std::move(tools);
    record["usage"] = { { "input_tokens", p.run.usage.input_tokens }, { "output_tokens", p.run.usage.output_tokens } };
    record["latency_s"] = p.run.latency_s;
    record["cost_usd"] = p.run.cost_usd.to_string(12);
    record["final_coordinate"] = p.coordinate ? nlohmann::json { { "lat", p.coordinate->lat() }, { "lon", p.coordinate->lon() } }
                                              : nlohmann::json(nullptr);
    record["error_km"] = p.error_km ? nlohmann::json(*p.error_km) : nlohmann::json(nullptr);
    record["failed"] = p.run.failed;
    record["reason"] = p.run.reason;
    record["provenance"] = p.provenance;
    record["interactions"] = std::move(interactions);
    return record;
}

RunOutcome run_evaluation(const RunManifest& manifest, const RunDependencies& deps, std::ostream* log)
{
    auto const& config = manifest.config;
    config.validate();
    auto const methods = select_methods(config, manifest.method_filter);
    auto const evalset = manifest.evalset.empty() ? config.default_evalset : manifest.evalset;

    require_file(config.ground_truth, "ground truth");
    auto const corpus = load_ground_truth(config.ground_truth);
    auto const rows = select_rows(config, corpus, evalset, manifest.max_rows);

    auto any_model = false;
    auto any_tools = false;
    auto any_baseline = false;
    for (auto const* m: methods)
    {
        any_model = any_model || uses_model(m->pipeline);
        any_tools = any_tools || m->pipeline == Pipeline::tool_chain;
        any_baseline = any_baseline || m->pipeline == Pipeline::county_centroid
                       || m->pipeline == Pipeline::heuristic_geoparse || m->pipeline == Pipeline::ner_pipeline;
        if (m->external)
            require_file(m->external->predictions, fmt::format("predictions for {}", m->method_id));
    }

    auto outcome = RunOutcome {};
    outcome.run_dir = config.output_dir;
    outcome.results_csv = config.output_dir / fmt::format("results_{}.csv", evalset);
    for (auto const* m: methods)
        for (auto const& r: rows)
            outcome.plan.push_back({ m->method_id, r.row_id, m->pipeline, m->model ? m->model->model_id : "",
                                     min_model_calls(*m), max_model_calls(*m) });

    if (manifest.dry_run)
    {
        if (any_baseline)
            (void)load_baselines(config.baselines);
        if (log)
        {
            auto lo = std::size_t { 0 };
            auto hi = std::size_t { 0 };
            for (auto const& c: outcome.plan)
            {
                *log << fmt::format("plan {} {} {} {} calls={}..{}\n", c.method_id, c.row_id, to_string(c.pipeline),
                                    c.model_id.empty() ? "-" : c.model_id, c.min_model_calls, c.max_model_calls);
                lo += c.min_model_calls;
                hi += c.max_model_calls;
            }
            *log << fmt::format("dry run: {} methods x {} grants = {} cells, {}..{} model calls\n", methods.size(),
                                rows.size(), outcome.plan.size(), lo, hi);
        }
        return outcome;
    }

    auto owned_backend = std::unique_ptr<ChatBackend> {};
    auto* backend = deps.backend;
    if (any_model && !backend)
    {
        if (config.backend.kind == BackendKind::fixture)
        {
            if (config.backend.fixture.empty())
                throw Error(ErrorCode::ConfigInvalid, "fixture backend needs a fixture path");
            require_file(config.backend.fixture, "model fixture");
            owned_backend = load_fixture_backend(config.backend.fixture);
        }
        else
        {
            auto live = config.backend.live;
            if (live.api_key.empty())
                if (auto const* key = std::getenv(std::string(model_api_key_env).c_str()))
                    live.api_key = key;
            if (live.api_key.empty())
                throw Error(ErrorCode::ConfigInvalid, fmt::format("live backend needs ${}", model_api_key_env));
            owned_backend = make_live_backend(live);
        }
        backend = owned_backend.get();
    }

    auto owned_provider = std::unique_ptr<GeocodingProvider> {};
    auto* provider = deps.geocoder;
    auto cache = std::unique_ptr<GeocodeCache> {};
    auto geocoder = std::unique_ptr<Geocoder> {};
    if (any_tools)
    {
        if (!provider)
        {
            switch (config.geocoder.kind)
            {
                case GeocoderKind::fixture:
                    require_file(config.geocoder.fixture, "geocoder fixture");
                    owned_provider = FixtureGeocodingProvider::load(config.geocoder.fixture);
                    break;
                case GeocoderKind::live: {
                    auto live = config.geocoder.live;
                    if (live.api_key.empty())
                        if (auto const* key = std::getenv(std::string(geocoder_api_key_env).c_str()))
                            live.api_key = key;
                    if (live.api_key.empty())
                        throw Error(ErrorCode::ConfigInvalid, fmt::format("live geocoder needs ${}", geocoder_api_key_env));
                    owned_provider = make_google_geocoder(live);
                    break;
                }
                case GeocoderKind::offline: owned_provider = std::make_unique<OfflineGeocodingProvider>(); break;
            }
            provider = owned_provider.get();
        }
        cache = config.geocoder.cache ? std::make_unique<GeocodeCache>(*config.geocoder.cache) : std::make_unique<GeocodeCache>();
        geocoder = std::make_unique<Geocoder>(*provider, cache.get(), virginia_box(config.geocoder.bbox_margin_deg));
    }

    auto baselines = std::optional<BaselineTools> {};
    if (any_baseline)
        baselines = load_baselines(config.baselines);

    auto const calls_before = backend ? backend->calls_made() : 0;
    auto const geocodes_before = provider ? provider->calls_made() : 0;

    // Cells run in parallel; each result lands in its own slot so output order is fixed.
    struct Cell
    {
        const MethodSpec* method;
        const GrantAbstract* grant;
        std::size_t slot;
    };
    auto cells = std::vector<Cell> {};
    auto predictions = std::vector<Prediction>(methods.size() * rows.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
    {
        auto const* m = methods[mi];
        if (m->pipeline == Pipeline::ingest_external)
        {
            // Validate against the whole corpus; a sampled evalset keeps only its own rows.
            auto ingested = ingest_external_predictions(m->external->predictions, m->method_id, corpus,
                                                        m->external->total_cost, m->external->latency_s_per_grant);
            auto by_row = std::unordered_map<std::string, Prediction> {};
            for (auto& p: ingested)
                by_row.emplace(p.row_id, std::move(p));
            for (std::size_t ri = 0; ri < rows.size(); ++ri)
            {
                auto const it = by_row.find(rows[ri].row_id);
                predictions[mi * rows.size() + ri] =
                    it != by_row.end()
                        ? std::move(it->second)
                        : failed_prediction(m->method_id, rows[ri], "",
                                            Error(ErrorCode::DataMissing, "no external prediction for this row"));
            }
            continue;
        }
        for (std::size_t ri = 0; ri < rows.size(); ++ri)
            cells.push_back({ m, &rows[ri], mi * rows.size() + ri });
    }

    auto log_mutex = std::mutex {};
    auto run_cell = [&](const Cell& cell) {
        auto const& m = *cell.method;
        auto const& g = *cell.grant;
        auto const context = RunContext { m.method_id, &config.prices };
        auto p = Prediction {};
        try
        {
            auto grant = g;
            if (m.redact)
            {
                grant.text = redact_patentee(g.text);
                grant.word_count = word_count(grant.text);
            }
            auto const clock = Stopwatch {};
            switch (m.pipeline)
            {
                case Pipeline::one_shot: p = run_one_shot(*backend, with_one_shot_defaults(*m.model), grant, context); break;
                case Pipeline::ensemble:
                    p = run_ensemble(*backend, with_one_shot_defaults(*m.model), *m.ensemble, grant, context);
                    break;
                case Pipeline::tool_chain: p = run_tool_chain(*backend, *geocoder, *m.model, grant, *m.budget, context); break;
                case Pipeline::county_centroid:
                    p = baseline_prediction(m, g, predict_county_centroid(g.text, baselines->counties), 0.0);
                    p.run.latency_s = clock.elapsed_s();
                    break;
                case Pipeline::heuristic_geoparse:
                    p = baseline_prediction(m, g,
                                            heuristic_geoparse(g.text, *baselines->resolver, baselines->counties, *m.heuristic,
                                                               baselines->abbreviations),
                                            0.0);
                    p.run.latency_s = clock.elapsed_s();
                    break;
                case Pipeline::ner_pipeline:
                    p = baseline_prediction(m, g,
                                            predict_ner_pipeline(g.text, baselines->extractor, baselines->gazetteer,
                                                                 baselines->counties),
                                            0.0);
                    p.run.latency_s = clock.elapsed_s();
                    break;
                case Pipeline::ingest_external: break;
            }
            p.score(g.ground_truth);
        }
        catch (const Error& e)
        {
            p = failed_prediction(m.method_id, g, m.model ? m.model->model_id : "", e);
        }
        if (log)
        {
            auto const lock = std::lock_guard(log_mutex);
            *log << fmt::format("{} {} {}\n", m.method_id, g.row_id,
                                p.run.failed ? fmt::format("FAILED {}", p.run.reason)
                                             : fmt::format("{} err={}", p.coordinate ? format_decimal(*p.coordinate, 6) : "-",
                                                           p.error_km ? fmt::format("{:.3f}km", *p.error_km) : "-"));
        }
        predictions[cell.slot] = std::move(p);
    };

    auto const workers = std::min<std::size_t>(config.parallelism, std::max<std::size_t>(cells.size(), 1));
    if (workers <= 1)
        for (auto const& c: cells)
            run_cell(c);
    else
    {
        auto next = std::atomic<std::size_t> { 0 };
        auto pool = std::vector<std::jthread> {};
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (auto i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                    run_cell(cells[i]);
            });
    }

    outcome.predictions = std::move(predictions);
    outcome.model_calls = backend ? backend->calls_made() - calls_before : 0;
    outcome.geocoder_calls = provider ? provider->calls_made() - geocodes_before : 0;
    for (auto const& p: outcome.predictions)
        outcome.failed += p.run.failed ? 1 : 0;

    // Artifacts.
    write_text(outcome.results_csv, format_results_csv(outcome.predictions));
    auto const stamp = utc_timestamp();
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
    {
        auto jsonl = std::string {};
        for (std::size_t ri = 0; ri < rows.size(); ++ri)
            jsonl += call_record_json(outcome.predictions[mi * rows.size() + ri], stamp).dump() + "\n";
        write_text(config.output_dir / "runs" / method_dir_name(methods[mi]->method_id) / "calls.jsonl", jsonl);
    }
    auto manifest_doc = nlohmann::json {};
    manifest_doc["evalset"] = evalset;
    manifest_doc["rows"] = rows.size();
    manifest_doc["seed"] = config.seed;
    manifest_doc["parallelism"] = config.parallelism;
    manifest_doc["max_rows"] = manifest.max_rows ? nlohmann::json(*manifest.max_rows) : nlohmann::json(nullptr);
    manifest_doc["results_csv"] = outcome.results_csv.filename().string();
    manifest_doc["model_calls"] = outcome.model_calls;
    manifest_doc["geocoder_calls"] = outcome.geocoder_calls;
    manifest_doc["failed"] = outcome.failed;
    manifest_doc["finished_at"] = stamp;
    auto roster = nlohmann::json::array();
    for (auto const* m: methods)
        roster.push_back({ { "method_id", m->method_id },
                           { "pipeline", to_string(m->pipeline) },
                           { "model", m->model ? nlohmann::json(m->model->model_id) : nlohmann::json(nullptr) },
                           { "calls_dir", (std::filesystem::path("runs") / method_dir_name(m->method_id)).string() } });
    manifest_doc["methods"] = std::move(roster);
    write_text(config.output_dir / "run_manifest.json", manifest_doc.dump(2) + "\n");
    return outcome;
}

SweepAxis parse_sweep_axis(std::string_view text)
{
    if (text == "temperature")
        return SweepAxis::temperature;
    if (text == "effort" || text == "reasoning_effort")
        return SweepAxis::reasoning_effort;
    throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown sweep axis '{}' (temperature or effort)", text));
}

namespace
{

bool reasoning_model(std::string_view model_id)
{
    return model_id.size() >= 2 && model_id[0] == 'o' && std::isdigit(static_cast<unsigned char>(model_id[1]));
}

} // namespace

SweepOutcome sweep(const RunManifest& manifest, SweepAxis axis, const std::vector<std::string>& values,
                   const RunDependencies& deps, std::ostream* log)
{
    if (values.empty())
        throw Error(ErrorCode::ConfigInvalid, "sweep needs at least one value");
    auto const axis_name = axis == SweepAxis::temperature ? "temperature" : "reasoning_effort";

    auto bases = std::vector<const MethodSpec*> {};
    for (auto const* m: select_methods(manifest.config, manifest.method_filter))
    {
        if (!m->model)
        {
            if (!manifest.method_filter.empty())
                throw Error(ErrorCode::AxisInapplicable, fmt::format("method {} has no model to sweep", m->method_id));
            continue;
        }
        if (axis == SweepAxis::temperature && (m->model->reasoning_effort || reasoning_model(m->model->model_id)))
            throw Error(ErrorCode::AxisInapplicable,
                        fmt::format("method {} uses a reasoning-effort model; temperature does not apply", m->method_id));
        if (axis == SweepAxis::reasoning_effort && (m->model->temperature || !reasoning_model(m->model->model_id)))
            throw Error(ErrorCode::AxisInapplicable,
                        fmt::format("method {} uses a temperature model; reasoning effort does not apply", m->method_id));
        bases.push_back(m);
    }
    if (bases.empty())
        throw Error(ErrorCode::AxisInapplicable, "no model-backed method to sweep");

    auto swept = manifest;
    swept.config.methods.clear();
    swept.method_filter.clear();
    auto rows = std::vector<SweepRow> {};
    for (auto const* m: bases)
    {
        for (auto const& v: values)
        {
            auto clone = *m;
            clone.method_id = fmt::format("{}@{}={}", m->method_id, axis_name, v);
            if (axis == SweepAxis::temperature)
            {
                try
                {
                    std::size_t used = 0;
                    clone.model->temperature = std::stod(v, &used);
                    if (used != v.size())
                        throw std::invalid_argument(v);
                }
                catch (const std::exception&)
                {
                    throw Error(ErrorCode::ConfigInvalid, fmt::format("temperature value '{}' is not a number", v));
                }
            }
            else
                clone.model->reasoning_effort = parse_reasoning_effort(v);
            rows.push_back({ m->method_id, clone.method_id, v, std::nullopt, 0.0, 0 });
            swept.config.methods.push_back(std::move(clone));
        }
    }

    auto out = SweepOutcome {};
    out.run = run_evaluation(swept, deps, log);
    if (manifest.dry_run)
    {
        out.rows = std::move(rows);
        return out;
    }

    for (auto& row: rows)
    {
        auto sum = 0.0;
        auto located = std::size_t { 0 };
        auto tokens = std::uint64_t { 0 };
        auto entries = std::size_t { 0 };
        for (auto const& p: out.run.predictions)
        {
            if (p.method_id != row.method_id)
                continue;
            ++entries;
            tokens += p.run.usage.total();
            row.failed += p.run.failed ? 1 : 0;
            if (p.error_km)
            {
                sum += *p.error_km;
                ++located;
            }
        }
        if (located > 0)
            row.mean_error_km = sum / static_cast<double>(located);
        row.tokens_per_entry = entries ? static_cast<double>(tokens) / static_cast<double>(entries) : 0.0;
    }

    auto md = fmt::format("# Sweep over {}\n\n| Method | {} | Mean error (km) | Tokens / entry | Failed |\n|---|---|---:|---:|---:|\n",
                          axis_name, axis == SweepAxis::temperature ? "Temperature" : "Reasoning effort");
    for (auto const& r: rows)
        md += fmt::format("| {} | {} | {} | {:.0f} | {} |\n", r.base_method_id, r.value,
                          r.mean_error_km ? fmt::format("{:.1f}", *r.mean_error_km) : "n/a", r.tokens_per_entry, r.failed);
    out.table_md = out.run.run_dir / fmt::format("sweep_{}.md", axis_name);
    write_text(out.table_md, md);
    out.rows = std::move(rows);
    return out;
}

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/harness.hpp>

#include <yaml-cpp/yaml.h>

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

namespace grantgeo
{

namespace
{

[[noreturn]] void bad(std::string_view where, std::string_view what)
{
    throw Error(ErrorCode::ConfigInvalid, fmt::format("{}: {}", where, what));
}

template <typename T>
T scalar(const YAML::Node& node, std::string_view where)
{
    if (!node.IsDefined() || node.IsNull())
        bad(where, "missing value");
    try
    {
        return node.as<T>();
    }
    catch (const YAML::Exception&)
    {
        bad(where, fmt::format("cannot read '{}'", node.IsScalar() ? node.Scalar() : std::string("<non-scalar>")));
    }
}

template <typename T>
std::optional<T> optional_scalar(const YAML::Node& parent, const char* key, std::string_view where)
{
    auto const node = parent[key];
    if (!node || node.IsNull())
        return std::nullopt;
    return scalar<T>(node, fmt::format("{}.{}", where, key));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    auto path = std::filesystem::path(p);
    return path.is_absolute() ? path : base / path;
}

void check_keys(const YAML::Node& node, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!node.IsMap())
        bad(where, "expected a mapping");
    for (auto const& kv: node)
    {
        auto const key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            bad(where, fmt::format("unknown key '{}'", key));
    }
}

ModelConfig parse_model(const YAML::Node& m, std::string_view where)
{
    auto cfg = ModelConfig {};
    cfg.model_id = scalar<std::string>(m["model"], fmt::format("{}.model", where));
    cfg.temperature = optional_scalar<double>(m, "temperature", where);
    if (auto effort = optional_scalar<std::string>(m, "reasoning_effort", where))
    {
        try
        {
            cfg.reasoning_effort = parse_reasoning_effort(*effort);
        }
        catch (const Error& e)
        {
            bad(where, e.what());
        }
    }
    cfg.seed = optional_scalar<std::int64_t>(m, "seed", where);
    cfg.max_output_tokens = optional_scalar<std::uint32_t>(m, "max_output_tokens", where);
    return cfg;
}

AgentBudget parse_budget(const YAML::Node& b, std::string_view where, AgentBudget base = {})
{
    check_keys(b, where, { "max_tool_calls", "max_geocode_failures" });
    if (auto v = optional_scalar<std::size_t>(b, "max_tool_calls", where))
        base.max_tool_calls = *v;
    if (auto v = optional_scalar<std::size_t>(b, "max_geocode_failures", where))
        base.max_geocode_failures = *v;
    return base;
}

MethodSpec parse_method(const YAML::Node& m, std::size_t index, const std::filesystem::path& base, const AgentBudget& budget)
{
    auto const where = fmt::format("methods[{}]", index);
    check_keys(m, where,
               { "id", "pipeline", "model", "temperature", "reasoning_effort", "seed", "max_output_tokens", "ensemble",
                 "budget", "heuristic", "predictions", "total_cost_usd", "latency_s_per_grant", "redact" });
    auto spec = MethodSpec {};
    spec.method_id = scalar<std::string>(m["id"], where + ".id");
    try
    {
        spec.pipeline = parse_pipeline(scalar<std::string>(m["pipeline"], where + ".pipeline"));
    }
    catch (const Error& e)
    {
        bad(where, e.what());
    }
    spec.redact = optional_scalar<bool>(m, "redact", where).value_or(false);

    if (m["model"])
        spec.model = parse_model(m, where);
    else if (m["temperature"] || m["reasoning_effort"] || m["seed"] || m["max_output_tokens"])
        bad(where, "sampling settings given without a model");

    if (auto e = m["ensemble"])
    {
        check_keys(e, where + ".ensemble", { "k", "eps_km", "min_cluster", "seeds", "concurrent" });
        auto ens = EnsembleConfig {};
        if (auto v = optional_scalar<std::size_t>(e, "k", where))
        {
            ens.k = *v;
            ens.seeds.clear();
            for (std::size_t i = 1; i <= ens.k; ++i)
                ens.seeds.push_back(static_cast<std::int64_t>(i));
        }
        if (auto v = optional_scalar<double>(e, "eps_km", where))
            ens.eps_km = *v;
        if (auto v = optional_scalar<std::size_t>(e, "min_cluster", where))
            ens.min_cluster = *v;
        if (auto s = e["seeds"])
            ens.seeds = scalar<std::vector<std::int64_t>>(s, where + ".ensemble.seeds");
        ens.concurrent_members = optional_scalar<bool>(e, "concurrent", where).value_or(false);
        spec.ensemble = ens;
    }
    else if (spec.pipeline == Pipeline::ensemble)
        spec.ensemble = EnsembleConfig {};

    if (auto b = m["budget"])
        spec.budget = parse_budget(b, where + ".budget", budget);
    else if (spec.pipeline == Pipeline::tool_chain)
        spec.budget = budget;

    if (auto h = m["heuristic"])
    {
        check_keys(h, where + ".heuristic", { "confidence_threshold", "bbox_margin_deg", "distance_gate_km" });
        auto p = HeuristicParams {};
        if (auto v = optional_scalar<double>(h, "confidence_threshold", where))
            p.confidence_threshold = *v;
        if (auto v = optional_scalar<double>(h, "bbox_margin_deg", where))
            p.bbox_margin_deg = *v;
        if (auto v = optional_scalar<double>(h, "distance_gate_km", where))
            p.distance_gate_km = *v;
        spec.heuristic = p;
    }
    else if (spec.pipeline == Pipeline::heuristic_geoparse)
        spec.heuristic = HeuristicParams {};

    if (m["predictions"] || spec.pipeline == Pipeline::ingest_external)
    {
        auto ext = ExternalSource {};
        ext.predictions = resolve(base, scalar<std::string>(m["predictions"], where + ".predictions"));
        if (auto c = optional_scalar<std::string>(m, "total_cost_usd", where))
        {
            try
            {
                ext.total_cost = Usd::parse(*c);
            }
            catch (const Error& e)
            {
                bad(where, e.what());
            }
        }
        if (auto l = optional_scalar<double>(m, "latency_s_per_grant", where))
            ext.latency_s_per_grant = *l;
        spec.external = ext;
    }
    return spec;
}

} // namespace

std::string_view to_string(Pipeline p) noexcept
{
    switch (p)
    {
        case Pipeline::one_shot: return "one_shot";
        case Pipeline::tool_chain: return "tool_chain";
        case Pipeline::ensemble: return "ensemble";
        case Pipeline::county_centroid: return "county_centroid";
        case Pipeline::heuristic_geoparse: return "heuristic_geoparse";
        case Pipeline::ner_pipeline: return "ner_pipeline";
        case Pipeline::ingest_external: return "ingest_external";
    }
    return "one_shot";
}

Pipeline parse_pipeline(std::string_view text)
{
    for (auto p: { Pipeline::one_shot, Pipeline::tool_chain, Pipeline::ensemble, Pipeline::county_centroid,
                   Pipeline::heuristic_geoparse, Pipeline::ner_pipeline, Pipeline::ingest_external })
        if (to_string(p) == text)
            return p;
    throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown pipeline '{}'", text));
}

bool uses_model(Pipeline p) noexcept
{
    return p == Pipeline::one_shot || p == Pipeline::tool_chain || p == Pipeline::ensemble;
}

void MethodSpec::validate() const
{
    auto const where = fmt::format("method {}", method_id.empty() ? "<unnamed>" : method_id);
    if (method_id.empty())
        bad(where, "id is required");
    if (uses_model(pipeline) != model.has_value())
        bad(where, uses_model(pipeline) ? "pipeline needs a model" : "pipeline takes no model");
    if (model)
    {
        try
        {
            model->validate();
        }
        catch (const Error& e)
        {
            bad(where, e.what());
        }
    }
    if ((pipeline == Pipeline::ensemble) != ensemble.has_value())
        bad(where, "ensemble settings belong to the ensemble pipeline only");
    if (ensemble)
        ensemble->validate();
    if ((pipeline == Pipeline::tool_chain) != budget.has_value())
        bad(where, "a tool budget belongs to the tool_chain pipeline only");
    if (budget)
        budget->validate();
    if ((pipeline == Pipeline::heuristic_geoparse) != heuristic.has_value())
        bad(where, "heuristic parameters belong to the heuristic_geoparse pipeline only");
    if (heuristic)
        heuristic->validate();
    if ((pipeline == Pipeline::ingest_external) != external.has_value())
        bad(where, "a predictions file belongs to the ingest_external pipeline only");
    if (redact && !uses_model(pipeline))
        bad(where, "redact applies to model-backed pipelines only");
}

HarnessConfig HarnessConfig::parse(std::string_view yaml_text, const std::filesystem::path& base_dir)
{
    auto root = YAML::Node {};
    try
    {
        root = YAML::Load(std::string(yaml_text));
    }
    catch (const YAML::Exception& e)
    {
        bad("config", e.what());
    }
    if (!root.IsMap())
        bad("config", "top level must be a mapping");
    check_keys(root, "config",
               { "corpus", "prices", "backend", "geocoder", "baselines", "budget", "parallelism", "seed", "output_dir",
                 "bootstrap", "manual_baseline_s_per_grant", "methods" });

    auto cfg = HarnessConfig {};

    auto const corpus = root["corpus"];
    if (!corpus)
        bad("config", "missing 'corpus' section");
    check_keys(corpus, "corpus", { "ground_truth", "split", "evalsets", "default_evalset" });
    cfg.ground_truth = resolve(base_dir, scalar<std::string>(corpus["ground_truth"], "corpus.ground_truth"));
    if (auto s = corpus["split"])
    {
        check_keys(s, "corpus.split", { "seed", "dev_fraction" });
        cfg.split.seed = optional_scalar<std::uint64_t>(s, "seed", "corpus.split").value_or(cfg.split.seed);
        cfg.split.dev_fraction = optional_scalar<double>(s, "dev_fraction", "corpus.split").value_or(cfg.split.dev_fraction);
    }
    if (auto sets = corpus["evalsets"])
    {
        if (!sets.IsSequence())
            bad("corpus.evalsets", "expected a list");
        for (std::size_t i = 0; i < sets.size(); ++i)
        {
            auto const where = fmt::format("corpus.evalsets[{}]", i);
            check_keys(sets[i], where, { "name", "from", "sample", "seed" });
            auto e = EvalSetSpec {};
            e.name = scalar<std::string>(sets[i]["name"], where + ".name");
            e.from = optional_scalar<std::string>(sets[i], "from", where).value_or("all");
            e.sample = optional_scalar<std::size_t>(sets[i], "sample", where);
            e.sample_seed = optional_scalar<std::uint64_t>(sets[i], "seed", where).value_or(42);
            cfg.evalsets.push_back(std::move(e));
        }
    }
    cfg.default_evalset = optional_scalar<std::string>(corpus, "default_evalset", "corpus").value_or("all");

    if (auto prices = root["prices"])
    {
        if (!prices.IsMap())
            bad("prices", "expected a mapping of model id to {input, output}");
        for (auto const& kv: prices)
        {
            auto const id = kv.first.as<std::string>();
            auto const where = fmt::format("prices.{}", id);
            check_keys(kv.second, where, { "input", "output" });
            try
            {
                cfg.prices.set(id, ModelPrice { Usd::parse(scalar<std::string>(kv.second["input"], where + ".input")),
                                                Usd::parse(scalar<std::string>(kv.second["output"], where + ".output")) });
            }
            catch (const Error& e)
            {
                if (e.code() == ErrorCode::ConfigInvalid)
                    throw;
                bad(where, e.what());
            }
        }
    }

    if (auto b = root["backend"])
    {
        check_keys(b, "backend", { "kind", "fixture", "endpoint", "timeout_s", "retries" });
        auto const kind = optional_scalar<std::string>(b, "kind", "backend").value_or("fixture");
        if (kind == "fixture")
            cfg.backend.kind = BackendKind::fixture;
        else if (kind == "live")
            cfg.backend.kind = BackendKind::live;
        else
            bad("backend.kind", fmt::format("expected fixture or live, got '{}'", kind));
        if (auto f = optional_scalar<std::string>(b, "fixture", "backend"))
            cfg.backend.fixture = resolve(base_dir, *f);
        if (auto v = optional_scalar<std::string>(b, "endpoint", "backend"))
            cfg.backend.live.endpoint = *v;
        if (auto v = optional_scalar<double>(b, "timeout_s", "backend"))
            cfg.backend.live.timeout_s = *v;
        if (auto v = optional_scalar<int>(b, "retries", "backend"))
            cfg.backend.live.retries = *v;
    }

    if (auto g = root["geocoder"])
    {
        check_keys(g, "geocoder", { "kind", "fixture", "cache", "endpoint", "requests_per_second", "timeout_s", "bbox_margin_deg" });
        auto const kind = optional_scalar<std::string>(g, "kind", "geocoder").value_or("offline");
        if (kind == "fixture")
            cfg.geocoder.kind = GeocoderKind::fixture;
        else if (kind == "live")
            cfg.geocoder.kind = GeocoderKind::live;
        else if (kind == "offline")
            cfg.geocoder.kind = GeocoderKind::offline;
        else
            bad("geocoder.kind", fmt::format("expected fixture, live or offline, got '{}'", kind));
        if (auto f = optional_scalar<std::string>(g, "fixture", "geocoder"))
            cfg.geocoder.fixture = resolve(base_dir, *f);
        if (auto c = optional_scalar<std::string>(g, "cache", "geocoder"))
            cfg.geocoder.cache = resolve(base_dir, *c);
        if (auto v = optional_scalar<std::string>(g, "endpoint", "geocoder"))
            cfg.geocoder.live.endpoint = *v;
        if (auto v = optional_scalar<double>(g, "requests_per_second", "geocoder"))
            cfg.geocoder.live.requests_per_second = *v;
        if (auto v = optional_scalar<double>(g, "timeout_s", "geocoder"))
            cfg.geocoder.live.timeout_s = *v;
        cfg.geocoder.bbox_margin_deg = optional_scalar<double>(g, "bbox_margin_deg", "geocoder").value_or(0.0);
    }

    if (auto b = root["baselines"])
    {
        check_keys(b, "baselines", { "county_table", "abbreviations", "gazetteer", "resolver_fixture" });
        auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
            if (auto v = optional_scalar<std::string>(b, key, "baselines"))
                return resolve(base_dir, *v);
            return std::nullopt;
        };
        cfg.baselines.county_table = path_of("county_table");
        cfg.baselines.abbreviations = path_of("abbreviations");
        cfg.baselines.gazetteer = path_of("gazetteer");
        cfg.baselines.resolver_fixture = path_of("resolver_fixture");
    }

    if (auto b = root["budget"])
        cfg.budget = parse_budget(b, "budget");
    cfg.parallelism = optional_scalar<std::size_t>(root, "parallelism", "config").value_or(1);
    cfg.seed = optional_scalar<std::uint64_t>(root, "seed", "config").value_or(42);
    if (auto o = optional_scalar<std::string>(root, "output_dir", "config"))
        cfg.output_dir = resolve(base_dir, *o);
    else
        cfg.output_dir = base_dir / "out";

    cfg.summary.seed = cfg.seed;
    if (auto b = root["bootstrap"])
    {
        check_keys(b, "bootstrap", { "resamples", "level" });
        cfg.summary.resamples = optional_scalar<std::size_t>(b, "resamples", "bootstrap").value_or(cfg.summary.resamples);
        cfg.summary.level = optional_scalar<double>(b, "level", "bootstrap").value_or(cfg.summary.level);
    }
    cfg.summary.baseline_s_per_grant =
        optional_scalar<double>(root, "manual_baseline_s_per_grant", "config").value_or(manual_baseline_s_per_grant);

    auto const methods = root["methods"];
    if (!methods || !methods.IsSequence())
        bad("config", "'methods' must be a list");
    for (std::size_t i = 0; i < methods.size(); ++i)
        cfg.methods.push_back(parse_method(methods[i], i, base_dir, cfg.budget));

    cfg.validate();
    return cfg;
}

HarnessConfig HarnessConfig::load(const std::filesystem::path& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw Error(ErrorCode::ConfigInvalid, fmt::format("cannot open config {}", path.string()));
    auto ss = std::ostringstream {};
    ss << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty())
        base = ".";
    return parse(ss.str(), base);
}

void HarnessConfig::validate() const
{
    if (parallelism == 0)
        bad("config", "parallelism must be at least 1");
    if (methods.empty())
        bad("config", "the methods roster is empty");
    budget.validate();
    auto ids = std::set<std::string> {};
    auto needs_geocoder = false;
    for (auto const& m: methods)
    {
        m.validate();
        if (!ids.insert(m.method_id).second)
            bad("config", fmt::format("duplicate method id '{}'", m.method_id));
        if (m.model && !prices.find(m.model->model_id))
            bad("config", fmt::format("method {}: no price for model '{}'", m.method_id, m.model->model_id));
        needs_geocoder = needs_geocoder || m.pipeline == Pipeline::tool_chain;
    }
    auto names = std::set<std::string> { "all", "dev", "test" };
    for (auto const& e: evalsets)
    {
        if (e.from != "all" && e.from != "dev" && e.from != "test")
            bad("corpus.evalsets", fmt::format("evalset {} draws from unknown set '{}'", e.name, e.from));
        if (!names.insert(e.name).second)
            bad("corpus.evalsets", fmt::format("duplicate evalset name '{}'", e.name));
    }
    if (needs_geocoder && geocoder.kind == GeocoderKind::fixture && geocoder.fixture.empty())
        bad("geocoder", "fixture geocoder needs a fixture path");
}

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/agent.hpp>
#include <grantgeo/baselines.hpp>
#include <grantgeo/corpus.hpp>
#include <grantgeo/metrics.hpp>
#include <grantgeo/model.hpp>
#include <grantgeo/runners.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace grantgeo
{

enum class Pipeline
{
    one_shot,
    tool_chain,
    ensemble,
    county_centroid,
    heuristic_geoparse,
    ner_pipeline,
    ingest_external,
};

[[nodiscard]] std::string_view to_string(Pipeline p) noexcept;
[[nodiscard]] Pipeline parse_pipeline(std::string_view text);
[[nodiscard]] bool uses_model(Pipeline p) noexcept;

struct ExternalSource
{
    std::filesystem::path predictions; ///< CSV row_id,lat,lon
    Usd total_cost;
    double latency_s_per_grant = manual_baseline_s_per_grant;
};

struct MethodSpec
{
    std::string method_id;
    Pipeline pipeline = Pipeline::one_shot;
    std::optional<ModelConfig> model;
    std::optional<EnsembleConfig> ensemble;
    std::optional<AgentBudget> budget;
    std::optional<HeuristicParams> heuristic;
    std::optional<ExternalSource> external;
    bool redact = false; ///< name-redacted abstracts (patentee replaced)

    /// Pipeline-specific fields present, the rest absent.
    void validate() const;
};

enum class BackendKind
{
    fixture,
    live,
};

struct BackendSettings
{
    BackendKind kind = BackendKind::fixture;
    std::filesystem::path fixture;
    LiveBackendConfig live;
};

enum class GeocoderKind
{
    fixture,
    live,
    offline,
};

struct GeocoderSettings
{
    GeocoderKind kind = GeocoderKind::offline;
    std::filesystem::path fixture;
    std::optional<std::filesystem::path> cache;
    GoogleGeocoderConfig live;
    double bbox_margin_deg = 0.0;
};

struct BaselineData
{
    std::optional<std::filesystem::path> county_table;
    std::optional<std::filesystem::path> abbreviations;
    std::optional<std::filesystem::path> gazetteer;
    std::optional<std::filesystem::path> resolver_fixture;
};

struct EvalSetSpec
{
    std::string name;
    std::string from = "all"; ///< all | dev | test
    std::optional<std::size_t> sample;
    std::uint64_t sample_seed = 42;
};

struct HarnessConfig
{
    std::filesystem::path ground_truth;
    SplitConfig split;
    std::vector<EvalSetSpec> evalsets;
    std::string default_evalset = "all";
    PriceTable prices = PriceTable::defaults();
    BackendSettings backend;
    GeocoderSettings geocoder;
    BaselineData baselines;
    AgentBudget budget;
    std::size_t parallelism = 1;
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "out";
    SummaryOptions summary;
    std::vector<MethodSpec> methods;

    /// Relative paths in the document resolve against `base_dir`.
    [[nodiscard]] static HarnessConfig parse(std::string_view yaml_text, const std::filesystem::path& base_dir);
    [[nodiscard]] static HarnessConfig load(const std::filesystem::path& path);
    void validate() const;
};

struct RunManifest
{
    HarnessConfig config;
    std::string evalset;
    std::vector<std::string> method_filter; ///< empty means the whole roster
    std::optional<std::size_t> max_rows;
    bool dry_run = false;
};

/// Optional stand-ins for the services the config would otherwise construct.
struct RunDependencies
{
    ChatBackend* backend = nullptr;
    GeocodingProvider* geocoder = nullptr;
};

struct PlannedCell
{
    std::string method_id;
    std::string row_id;
    Pipeline pipeline = Pipeline::one_shot;
    std::string model_id;
    std::size_t min_model_calls = 0;
    std::size_t max_model_calls = 0;
};

struct RunOutcome
{
    std::filesystem::path run_dir;
    std::filesystem::path results_csv;
    std::vector<PlannedCell> plan;
    std::vector<Prediction> predictions; ///< method roster order, then evalset order
    std::size_t failed = 0;
    std::uint64_t model_calls = 0;
    std::uint64_t geocoder_calls = 0;
};

[[nodiscard]] std::vector<GrantAbstract> select_rows(const HarnessConfig& config, std::span<const GrantAbstract> corpus,
                                                     std::string_view evalset, std::optional<std::size_t> max_rows);

[[nodiscard]] RunOutcome run_evaluation(const RunManifest& manifest, const RunDependencies& deps = {},
                                        std::ostream* log = nullptr);

/// Rows of an externally produced prediction file; `rows` lists the grants to score.
[[nodiscard]] std::vector<Prediction> ingest_external_predictions(const std::filesystem::path& path,
                                                                  const std::string& method_id,
                                                                  std::span<const GrantAbstract> rows,
                                                                  Usd total_cost, double latency_s_per_grant);

inline constexpr std::string_view results_csv_header =
    "method_id,row_id,pred_lat,pred_lon,error_km,failed,reason,input_tokens,output_tokens,cost_usd,provenance";

[[nodiscard]] std::string format_results_csv(std::span<const Prediction> predictions);
[[nodiscard]] nlohmann::json call_record_json(const Prediction& p, std::string_view timestamp);

struct ReportArtifacts
{
    std::filesystem::path report_md;
    std::filesystem::path cost_scatter_csv;
    std::filesystem::path latency_scatter_csv;
    std::filesystem::path pareto_csv;
    std::vector<MethodSummary> summaries;
    std::map<std::string, ToolUsageSummary> tool_usage;
    std::string markdown;
};

/// Reads results_*.csv and runs/<method>/calls.jsonl under `run_dir`. Throws NoResults.
[[nodiscard]] ReportArtifacts generate_report(const std::filesystem::path& run_dir, const SummaryOptions& options = {});

enum class SweepAxis
{
    temperature,
    reasoning_effort,
};

[[nodiscard]] SweepAxis parse_sweep_axis(std::string_view text);

struct SweepRow
{
    std::string base_method_id;
    std::string method_id;
    std::string value;
    std::optional<double> mean_error_km;
    double tokens_per_entry = 0.0;
    std::size_t failed = 0;
};

struct SweepOutcome
{
    std::vector<SweepRow> rows;
    std::filesystem::path table_md;
    RunOutcome run;
};

/// Clones each selected model-backed method once per value (ids "<id>@<axis>=<value>")
/// and runs them. Throws AxisInapplicable when a method's model uses the other knob.
[[nodiscard]] SweepOutcome sweep(const RunManifest& manifest, SweepAxis axis, const std::vector<std::string>& values,
                                 const RunDependencies& deps = {}, std::ostream* log = nullptr);

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
// grantgeo: run method rosters over an evaluation set, report on a run, sweep a sampling knob.
#include <grantgeo/error.hpp>
#include <grantgeo/harness.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace
{

using grantgeo::ErrorCode;

enum Exit : int
{
    ok = 0,
    config_error = 1,
    data_error = 2,
    partial_failures = 3,
};

int exit_code_for(ErrorCode code)
{
    switch (code)
    {
        case ErrorCode::ConfigInvalid:
        case ErrorCode::AxisInapplicable:
        case ErrorCode::ArgumentInvalid: return config_error;
        default: return data_error;
    }
}

struct RunOptions
{
    std::string config;
    std::string evalset;
    std::vector<std::string> methods;
    bool dry_run = false;
    std::optional<std::size_t> max_rows;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallelism;
    std::string output_dir;
};

void add_run_options(CLI::App& cmd, RunOptions& o)
{
    cmd.add_option("--config", o.config, "Harness YAML document")->required()->check(CLI::ExistingFile);
    cmd.add_option("--evalset", o.evalset, "Evaluation set name (all, dev, test or a configured sample)");
    cmd.add_option("--method", o.methods, "Restrict to these method ids (repeatable)");
    cmd.add_flag("--dry-run", o.dry_run, "Validate and print the planned call matrix without calling any service");
    cmd.add_option("--max-rows", o.max_rows, "Process only the first N grants of the evaluation set")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Global seed (bootstrap resampling)");
    cmd.add_option("--parallelism", o.parallelism, "Concurrent grants")->check(CLI::PositiveNumber);
    cmd.add_option("--output-dir", o.output_dir, "Run directory (overrides the config)");
}

grantgeo::RunManifest make_manifest(const RunOptions& o)
{
    auto manifest = grantgeo::RunManifest { grantgeo::HarnessConfig::load(o.config) };
    manifest.evalset = o.evalset;
    manifest.method_filter = o.methods;
    manifest.dry_run = o.dry_run;
    manifest.max_rows = o.max_rows;
    if (o.seed)
    {
        manifest.config.seed = *o.seed;
        manifest.config.summary.seed = *o.seed;
    }
    if (o.parallelism)
        manifest.config.parallelism = *o.parallelism;
    if (!o.output_dir.empty())
        manifest.config.output_dir = o.output_dir;
    return manifest;
}

int finish(const grantgeo::RunOutcome& run, bool dry_run)
{
    if (dry_run)
    {
        std::cout << fmt::format("{} cells planned, 0 external calls\n", run.plan.size());
        return ok;
    }
    std::cout << fmt::format("{} predictions, {} failed, {} model calls, {} geocoder calls\nresults: {}\n",
                             run.predictions.size(), run.failed, run.model_calls, run.geocoder_calls,
                             run.results_csv.string());
    return run.failed > 0 ? partial_failures : ok;
}

} // namespace

int main(int argc, char** argv)
{
    auto app = CLI::App { "Geolocation harness for colonial Virginia land-grant abstracts" };
    app.require_subcommand(1);

    auto run_opts = RunOptions {};
    auto* run = app.add_subcommand("run", "Run the method roster over an evaluation set");
    add_run_options(*run, run_opts);

    auto run_dir = std::string {};
    auto resamples = std::size_t { 10'000 };
    auto report_seed = std::uint64_t { 42 };
    auto baseline_s = grantgeo::manual_baseline_s_per_grant;
    auto* report = app.add_subcommand("report", "Summarize a finished run into report.md and plot tables");
    report->add_option("--run-dir", run_dir, "Directory written by `run`")->required();
    report->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
    report->add_option("--seed", report_seed, "Bootstrap seed");
    report->add_option("--baseline-s", baseline_s, "Manual seconds per grant for the speedup column");

    auto sweep_opts = RunOptions {};
    auto axis = std::string {};
    auto values = std::vector<std::string> {};
    auto* sweep = app.add_subcommand("sweep", "Clone model methods once per value of a sampling knob and run them");
    add_run_options(*sweep, sweep_opts);
    sweep->add_option("--axis", axis, "temperature or effort")->required()->check(CLI::IsMember({ "temperature", "effort" }));
    sweep->add_option("--values", values, "Values to try, e.g. 0.0 0.4 0.8 1.2 or low medium high")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        auto const code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try
    {
        if (*run)
        {
            auto const manifest = make_manifest(run_opts);
            auto const outcome = grantgeo::run_evaluation(manifest, {}, &std::cerr);
            return finish(outcome, manifest.dry_run);
        }
        if (*report)
        {
            auto options = grantgeo::SummaryOptions {};
            options.resamples = resamples;
            options.seed = report_seed;
            options.baseline_s_per_grant = baseline_s;
            auto const art = grantgeo::generate_report(run_dir, options);
            std::cout << art.markdown;
            return ok;
        }
        auto const manifest = make_manifest(sweep_opts);
        auto const outcome =
            grantgeo::sweep(manifest, grantgeo::parse_sweep_axis(axis), values, {}, &std::cerr);
        if (!manifest.dry_run)
            std::cout << fmt::format("sweep table: {}\n", outcome.table_md.string());
        return finish(outcome.run, manifest.dry_run);
    }
    catch (const grantgeo::Error& e)
    {
        std::cerr << fmt::format("error [{}]: {}\n", grantgeo::to_string(e.code()), e.what());
        return exit_code_for(e.code());
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return data_error;
    }
}

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/csv.hpp>
#include <grantgeo/error.hpp>
#include <grantgeo/harness.hpp>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace grantgeo
{

namespace
{

std::filesystem::path find_results_csv(const std::filesystem::path& run_dir)
{
    auto const manifest = run_dir / "run_manifest.json";
    if (std::filesystem::is_regular_file(manifest))
    {
        auto in = std::ifstream(manifest);
        auto doc = nlohmann::json::parse(in, nullptr, false);
        if (!doc.is_discarded() && doc.contains("results_csv") && doc["results_csv"].is_string())
        {
            auto p = run_dir / doc["results_csv"].get<std::string>();
            if (std::filesystem::is_regular_file(p))
                return p;
        }
    }
    auto found = std::vector<std::filesystem::path> {};
    if (std::filesystem::is_directory(run_dir))
        for (auto const& e: std::filesystem::directory_iterator(run_dir))
        {
            auto const name = e.path().filename().string();
            if (e.is_regular_file() && name.starts_with("results_") && name.ends_with(".csv"))
                found.push_back(e.path());
        }
    if (found.empty())
        throw Error(ErrorCode::NoResults, fmt::format("no results_<evalset>.csv under {}", run_dir.string()));
    std::sort(found.begin(), found.end());
    return found.front();
}

double number(const std::string& text, const std::string& origin)
{
    try
    {
        return std::stod(text);
    }
    catch (const std::exception&)
    {
        throw Error(ErrorCode::MalformedRow, fmt::format("{}: '{}' is not a number", origin, text));
    }
}

std::uint64_t count(const std::string& text, const std::string& origin)
{
    try
    {
        return std::stoull(text);
    }
    catch (const std::exception&)
    {
        throw Error(ErrorCode::MalformedRow, fmt::format("{}: '{}' is not a count", origin, text));
    }
}

struct TraceInfo
{
    double latency_s = 0.0;
    std::vector<ToolCallRecord> tool_calls;
};

std::unordered_map<std::string, TraceInfo> read_traces(const std::filesystem::path& path)
{
    auto out = std::unordered_map<std::string, TraceInfo> {};
    auto in = std::ifstream(path);
    if (!in)
        return out;
    auto line = std::string {};
    while (std::getline(in, line))
    {
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            continue;
        auto info = TraceInfo {};
        info.latency_s = doc.value("latency_s", 0.0);
        for (auto const& t: doc.value("tool_calls", nlohmann::json::array()))
        {
            auto r = ToolCallRecord {};
            r.turn_index = t.value("turn_index", std::size_t { 0 });
            r.tool_name = t.value("tool_name", "");
            r.arguments = t.value("arguments", nlohmann::json());
            r.result = t.value("result", nlohmann::json());
            r.is_error = t.value("is_error", false);
            r.selected = t.value("selected", false);
            info.tool_calls.push_back(std::move(r));
        }
        out[doc.value("row_id", "")] = std::move(info);
    }
    return out;
}

std::string pct(double fraction)
{
    return fmt::format("{:.1f}", 100.0 * fraction);
}

std::string opt_num(const std::optional<double>& v, int digits)
{
    return v ? fmt::format("{:.{}f}", *v, digits) : "n/a";
}

} // namespace

ReportArtifacts generate_report(const std::filesystem::path& run_dir, const SummaryOptions& options)
{
    auto const results = find_results_csv(run_dir);
    auto const table = csv::load_table(results);
    if (table.records().empty())
        throw Error(ErrorCode::NoResults, fmt::format("{} has no rows", results.string()));

    auto order = std::vector<std::string> {};
    auto by_method = std::map<std::string, std::vector<Prediction>> {};
    auto traces = std::map<std::string, std::unordered_map<std::string, TraceInfo>> {};
    for (std::size_t i = 0; i < table.records().size(); ++i)
    {
        auto const& id = table.field(i, "method_id");
        if (!by_method.contains(id))
        {
            order.push_back(id);
            std::string dir = id;
            for (auto& c: dir)
                if (c == '/' || c == '\\')
                    c = '_';
            traces[id] = read_traces(run_dir / "runs" / dir / "calls.jsonl");
        }
        auto p = Prediction {};
        p.method_id = id;
        p.row_id = table.field(i, "row_id");
        auto const& lat = table.field(i, "pred_lat");
        auto const& lon = table.field(i, "pred_lon");
        if (!lat.empty() && !lon.empty())
            p.coordinate = Coordinate(number(lat, table.origin()), number(lon, table.origin()));
        if (auto const& e = table.field(i, "error_km"); !e.empty())
            p.error_km = number(e, table.origin());
        p.run.method_id = id;
        p.run.row_id = p.row_id;
        p.run.failed = table.field(i, "failed") == "1";
        p.run.reason = table.field(i, "reason");
        p.run.usage.input_tokens = count(table.field(i, "input_tokens"), table.origin());
        p.run.usage.output_tokens = count(table.field(i, "output_tokens"), table.origin());
        p.run.cost_usd = Usd::parse(table.field(i, "cost_usd"));
        p.provenance = table.field(i, "provenance");
        if (auto const it = traces[id].find(p.row_id); it != traces[id].end())
        {
            p.run.latency_s = it->second.latency_s;
            p.run.tool_calls = it->second.tool_calls;
        }
        by_method[id].push_back(std::move(p));
    }

    auto art = ReportArtifacts {};
    auto all = std::vector<Prediction> {};
    for (auto const& id: order)
    {
        auto const& preds = by_method[id];
        auto errors = std::vector<double> {};
        auto records = std::vector<RunRecord> {};
        auto failed = std::size_t { 0 };
        for (auto const& p: preds)
        {
            if (p.error_km)
                errors.push_back(*p.error_km);
            records.push_back(p.run);
            failed += p.run.failed ? 1 : 0;
            all.push_back(p);
        }
        art.summaries.push_back(summarize_method(id, errors, records, failed, options));
    }
    art.tool_usage = trace_statistics(all);

    auto md = std::string {};
    md += fmt::format("# Run report\n\nResults: `{}` ({} rows, {} methods)\n\n", results.filename().string(),
                      table.records().size(), order.size());

    md += fmt::format("## Accuracy\n\n| Method | n | Failed | Mean km [{:.0f}% CI] | Median km | SD km | <=1 km | <=5 km | <=10 km | <=25 km | "
                      "<=50 km | <1 / 1-10 / >10 km (%) |\n|---|---:|---:|---|---:|---:|---:|---:|---:|---:|---:|---|\n",
                      100.0 * options.level);
    for (auto const& s: art.summaries)
    {
        if (s.stats.n == 0)
        {
            md += fmt::format("| {} | 0 | {} | n/a | n/a | n/a | n/a | n/a | n/a | n/a | n/a | n/a |\n", s.method_id, s.failed);
            continue;
        }
        md += fmt::format("| {} | {} | {} | {:.1f} [{:.1f}, {:.1f}] | {:.1f} | {:.1f} | {} | {} | {} | {} | {} | {} / {} / {} |\n",
                          s.method_id, s.stats.n, s.failed, s.stats.mean, s.ci.lo, s.ci.hi, s.stats.median, s.stats.sd,
                          pct(s.stats.bands[0]), pct(s.stats.bands[1]), pct(s.stats.bands[2]), pct(s.stats.bands[3]),
                          pct(s.stats.bands[4]), pct(s.stats.below_1km), pct(s.stats.from_1_to_10km), pct(s.stats.above_10km));
    }

    // Dollar columns are cut, not rounded, at the printed precision.
    constexpr auto cut = Rounding::toward_zero;
    md += "\n## Cost\n\n| Method | Total USD | USD per located | USD per 1k located |\n|---|---:|---:|---:|\n";
    for (auto const& s: art.summaries)
        md += fmt::format("| {} | {} | {} | {} |\n", s.method_id, s.total_cost.to_string(5, cut),
                          s.cost_per_located.to_string(5, cut), s.cost_per_1k.to_string(2, cut));

    md += "\n## Time\n\n| Method | Mean latency s | Hours per located | Hours per 1k | Speedup vs manual |\n|---|---:|---:|---:|---:|\n";
    for (auto const& s: art.summaries)
        md += fmt::format("| {} | {:.3f} | {:.6f} | {:.3f} | {} |\n", s.method_id, s.latency.mean_latency_s,
                          s.latency.hours_per_located, s.latency.hours_per_1k,
                          s.latency.speedup > 0.0 ? fmt::format("{:.0f}x", s.latency.speedup) : "n/a");

    md += "\n## Marginal cost\n\n| Method | USD per 1k | <=10 km hit % | USD per +1 pp hit |\n|---|---:|---:|---:|\n";
    for (auto const& s: art.summaries)
        md += fmt::format("| {} | {} | {} | {} |\n", s.method_id, s.cost_per_1k.to_string(2, cut),
                          s.stats.n ? pct(s.stats.band(10.0)) : "n/a", opt_num(s.marginal_cost_per_hit_pp, 2));

    if (!art.tool_usage.empty())
    {
        md += "\n## Tool usage\n\n| Method | Entries | Geocode calls mean (sd) | Centroid calls mean (sd) | Total mean [min, max] | "
              "Geocode:centroid | First-call success % | Selected index mean / median |\n|---|---:|---|---|---|---:|---:|---|\n";
        for (auto const& [id, u]: art.tool_usage)
            md += fmt::format("| {} | {} | {:.2f} ({:.2f}) | {:.2f} ({:.2f}) | {:.2f} [{}, {}] | {} | {} | {} / {} |\n", id,
                              u.entries, u.geocode.mean, u.geocode.sd, u.centroid.mean, u.centroid.sd, u.total.mean,
                              u.total.min, u.total.max, opt_num(u.geocode_centroid_ratio, 2),
                              u.first_call_success_rate ? pct(*u.first_call_success_rate) : "n/a",
                              opt_num(u.mean_selected_index, 2), opt_num(u.median_selected_index, 1));
    }

    auto cost_csv = std::string("method_id,cost_per_1k_usd,mean_error_km\n");
    auto latency_csv = std::string("method_id,hours_per_1k,mean_error_km\n");
    auto points = std::vector<ParetoPoint> {};
    for (auto const& s: art.summaries)
    {
        if (s.stats.n == 0)
            continue;
        cost_csv += fmt::format("{},{},{:.6f}\n", csv::escape(s.method_id), s.cost_per_1k.to_string(6), s.stats.mean);
        latency_csv += fmt::format("{},{:.6f},{:.6f}\n", csv::escape(s.method_id), s.latency.hours_per_1k, s.stats.mean);
        points.push_back({ s.method_id, s.cost_per_1k.to_double(), s.stats.mean });
    }
    auto pareto_csv = std::string("method_id,cost_per_1k_usd,mean_error_km\n");
    for (auto const& p: pareto_frontier(points))
        pareto_csv += fmt::format("{},{:.6f},{:.6f}\n", csv::escape(p.id), p.cost_per_1k, p.mean_error_km);

    auto write = [](const std::filesystem::path& path, const std::string& text) {
        auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::DataMissing, fmt::format("cannot write {}", path.string()));
        out << text;
    };
    art.report_md = run_dir / "report.md";
    art.cost_scatter_csv = run_dir / "scatter_cost_error.csv";
    art.latency_scatter_csv = run_dir / "scatter_latency_error.csv";
    art.pareto_csv = run_dir / "pareto_frontier.csv";
    write(art.report_md, md);
    write(art.cost_scatter_csv, cost_csv);
    write(art.latency_scatter_csv, latency_csv);
    write(art.pareto_csv, pareto_csv);
    art.markdown = std::move(md);
    return art;
}

} // namespace grantgeo

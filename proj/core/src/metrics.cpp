// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/corpus.hpp>
#include <grantgeo/error.hpp>
#include <grantgeo/metrics.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

namespace grantgeo
{

namespace
{

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

void require_finite_non_negative(std::span<const double> errors)
{
    for (auto e: errors)
        if (!std::isfinite(e) || e < 0.0)
            throw Error(ErrorCode::InvalidCoordinate, fmt::format("error value {} is not a finite non-negative distance", e));
}

} // namespace

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty())
        throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
    p = std::clamp(p, 0.0, 1.0);
    auto const h = p * static_cast<double>(sorted.size() - 1);
    auto const lo = static_cast<std::size_t>(std::floor(h));
    auto const hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double ErrorStats::band(double threshold_km) const
{
    for (std::size_t i = 0; i < accuracy_band_thresholds_km.size(); ++i)
        if (accuracy_band_thresholds_km[i] == threshold_km)
            return bands[i];
    throw Error(ErrorCode::ConfigInvalid, fmt::format("no accuracy band at {} km", threshold_km));
}

ErrorStats summarize_errors(std::span<const double> errors)
{
    if (errors.empty())
        throw Error(ErrorCode::EmptyInput, "no errors to summarize");
    require_finite_non_negative(errors);

    auto sorted = std::vector<double>(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    auto s = ErrorStats {};
    s.n = sorted.size();
    auto const n = static_cast<double>(s.n);
    s.mean = mean_of(sorted);
    if (s.n > 1)
    {
        auto ss = 0.0;
        for (auto e: sorted)
            ss += (e - s.mean) * (e - s.mean);
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.5);
    s.q3 = quantile_sorted(sorted, 0.75);

    for (std::size_t i = 0; i < accuracy_band_thresholds_km.size(); ++i)
    {
        auto const within = std::upper_bound(sorted.begin(), sorted.end(), accuracy_band_thresholds_km[i]) - sorted.begin();
        s.bands[i] = static_cast<double>(within) / n;
    }
    auto const under_1 = std::lower_bound(sorted.begin(), sorted.end(), 1.0) - sorted.begin();
    auto const upto_10 = std::upper_bound(sorted.begin(), sorted.end(), 10.0) - sorted.begin();
    s.below_1km = static_cast<double>(under_1) / n;
    s.from_1_to_10km = static_cast<double>(upto_10 - under_1) / n;
    s.above_10km = static_cast<double>(static_cast<std::ptrdiff_t>(s.n) - upto_10) / n;
    return s;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t resample_seed(std::uint64_t seed, std::uint64_t index) noexcept { return splitmix64(splitmix64(seed) ^ index); }

BootstrapCI bootstrap_ci(std::span<const double> errors, std::size_t resamples, double level, std::uint64_t seed,
                         unsigned workers)
{
    if (errors.empty())
        throw Error(ErrorCode::EmptyInput, "bootstrap of an empty sample");
    if (resamples == 0)
        throw Error(ErrorCode::ConfigInvalid, "bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0))
        throw Error(ErrorCode::ConfigInvalid, fmt::format("confidence level {} outside (0, 1)", level));

    auto const n = errors.size();
    auto means = std::vector<double>(resamples);
    auto run = [&](std::size_t begin, std::size_t end) {
        for (auto r = begin; r < end; ++r)
        {
            auto rng = std::mt19937_64(resample_seed(seed, r));
            auto sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sum += errors[uniform_below(rng, n)];
            means[r] = sum / static_cast<double>(n);
        }
    };

    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(resamples)));
    if (workers == 1)
        run(0, resamples);
    else
    {
        auto threads = std::vector<std::jthread> {};
        auto const chunk = (resamples + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w)
        {
            auto const begin = std::min<std::size_t>(w * chunk, resamples);
            auto const end = std::min<std::size_t>(begin + chunk, resamples);
            threads.emplace_back(run, begin, end);
        }
    }

    std::sort(means.begin(), means.end());
    auto const tail = (1.0 - level) / 2.0;
    return BootstrapCI { level, resamples, seed, quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail) };
}

std::map<std::string, AdjustedMean> drop_top_k_mean(const std::map<std::string, std::vector<double>>& errors_by_method,
                                                    std::size_t k)
{
    using Key = std::tuple<double, std::string, std::size_t>;
    auto pooled = std::vector<Key> {};
    for (auto const& [method, errors]: errors_by_method)
    {
        require_finite_non_negative(errors);
        for (std::size_t i = 0; i < errors.size(); ++i)
            pooled.emplace_back(errors[i], method, i);
    }
    if (k >= pooled.size() && k > 0)
        throw Error(ErrorCode::KTooLarge, fmt::format("cannot drop {} of {} residuals", k, pooled.size()));

    // Largest value first; equal values fall back to method id and position.
    std::sort(pooled.begin(), pooled.end(), [](const Key& a, const Key& b) {
        if (std::get<0>(a) != std::get<0>(b))
            return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });

    auto removed = std::map<std::string, std::vector<bool>> {};
    for (auto const& [method, errors]: errors_by_method)
        removed[method].assign(errors.size(), false);
    for (std::size_t i = 0; i < k; ++i)
        removed[std::get<1>(pooled[i])][std::get<2>(pooled[i])] = true;

    auto out = std::map<std::string, AdjustedMean> {};
    for (auto const& [method, errors]: errors_by_method)
    {
        auto a = AdjustedMean {};
        if (!errors.empty())
            a.original_mean = mean_of(errors);
        auto sum = 0.0;
        auto kept = std::size_t { 0 };
        for (std::size_t i = 0; i < errors.size(); ++i)
        {
            if (removed[method][i])
            {
                ++a.removed;
                continue;
            }
            sum += errors[i];
            ++kept;
        }
        if (kept > 0)
            a.adjusted_mean = sum / static_cast<double>(kept);
        out.emplace(method, a);
    }
    return out;
}

OlsFit fit_ols(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw Error(ErrorCode::ConfigInvalid, fmt::format("x has {} values, y has {}", x.size(), y.size()));
    if (x.size() < 3)
        throw Error(ErrorCode::EmptyInput, "OLS needs at least 3 points");

    auto const n = static_cast<double>(x.size());
    auto const mx = mean_of(x);
    auto const my = mean_of(y);
    auto sxx = 0.0;
    auto sxy = 0.0;
    auto syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0)
        throw Error(ErrorCode::DegenerateX, "x values are all equal");

    auto fit = OlsFit {};
    fit.n = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0)
    {
        fit.pearson_r = sxy / std::sqrt(sxx * syy);
        fit.r_squared = fit.pearson_r * fit.pearson_r;
    }
    auto sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        auto const r = y[i] - (fit.intercept + fit.slope * x[i]);
        sse += r * r;
    }
    fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
    fit.slope_ci_halfwidth = 1.96 * fit.slope_se;
    return fit;
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points)
{
    for (auto const& p: points)
        if (!std::isfinite(p.cost_per_1k) || !std::isfinite(p.mean_error_km))
            throw Error(ErrorCode::ConfigInvalid, fmt::format("point {} has a non-finite coordinate", p.id));

    auto dominated = [&](const ParetoPoint& p) {
        return std::any_of(points.begin(), points.end(), [&](const ParetoPoint& q) {
            return q.cost_per_1k <= p.cost_per_1k && q.mean_error_km <= p.mean_error_km
                   && (q.cost_per_1k < p.cost_per_1k || q.mean_error_km < p.mean_error_km);
        });
    };
    auto out = std::vector<ParetoPoint> {};
    for (auto const& p: points)
        if (!dominated(p))
            out.push_back(p);
    std::sort(out.begin(), out.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        return std::tie(a.cost_per_1k, a.mean_error_km, a.id) < std::tie(b.cost_per_1k, b.mean_error_km, b.id);
    });
    return out;
}

double marginal_cost_per_hit(double cost_per_1k_usd, double hit_rate_pp)
{
    if (!(hit_rate_pp > 0.0))
        throw Error(ErrorCode::ZeroHitRate, "hit rate must be positive");
    return cost_per_1k_usd / hit_rate_pp;
}

double hours_per_1k_from_seconds(double seconds_per_grant) { return seconds_per_grant * 1000.0 / 3600.0; }

double speedup_ratio(double baseline_hours_per_1k, double method_hours_per_1k)
{
    if (!(method_hours_per_1k > 0.0))
        throw Error(ErrorCode::ConfigInvalid, "method latency must be positive for a speedup");
    return baseline_hours_per_1k / method_hours_per_1k;
}

LatencySummary latency_summary(std::span<const double> latencies_s, double baseline_s_per_grant)
{
    if (latencies_s.empty())
        throw Error(ErrorCode::EmptyInput, "no latencies to summarize");
    auto s = LatencySummary {};
    s.n = latencies_s.size();
    s.mean_latency_s = mean_of(latencies_s);
    s.hours_per_located = s.mean_latency_s / 3600.0;
    s.hours_per_1k = hours_per_1k_from_seconds(s.mean_latency_s);
    if (s.hours_per_1k > 0.0)
        s.speedup = speedup_ratio(hours_per_1k_from_seconds(baseline_s_per_grant), s.hours_per_1k);
    return s;
}

LatencySummary latency_summary(std::span<const RunRecord> records, double baseline_s_per_grant)
{
    auto latencies = std::vector<double> {};
    latencies.reserve(records.size());
    for (auto const& r: records)
        latencies.push_back(r.latency_s);
    return latency_summary(latencies, baseline_s_per_grant);
}

MethodSummary summarize_method(std::string method_id, std::span<const double> errors, std::span<const RunRecord> records,
                               std::size_t failed, const SummaryOptions& options)
{
    auto m = MethodSummary {};
    m.method_id = std::move(method_id);
    m.predictions = records.size();
    m.failed = failed;
    if (!errors.empty())
    {
        m.stats = summarize_errors(errors);
        m.ci = bootstrap_ci(errors, options.resamples, options.level, options.seed, options.workers);
    }
    for (auto const& r: records)
        m.total_cost += r.cost_usd;
    auto const located = m.predictions > failed ? m.predictions - failed : 0;
    if (located > 0)
    {
        m.cost_per_located = m.total_cost.divided_by(static_cast<std::int64_t>(located));
        m.cost_per_1k = m.cost_per_located * 1000;
    }
    if (!records.empty())
        m.latency = latency_summary(records, options.baseline_s_per_grant);
    if (m.stats.n > 0 && m.stats.band(10.0) > 0.0)
        m.marginal_cost_per_hit_pp = marginal_cost_per_hit(m.cost_per_1k.to_double(), 100.0 * m.stats.band(10.0));
    return m;
}

} // namespace grantgeo

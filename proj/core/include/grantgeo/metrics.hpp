// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/model.hpp>
#include <grantgeo/money.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grantgeo
{

inline constexpr std::array<double, 5> accuracy_band_thresholds_km { 1.0, 5.0, 10.0, 25.0, 50.0 };

/// Linear interpolation between order statistics of sorted data, p in [0, 1].
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double p);

struct ErrorStats
{
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0; ///< sample (n-1); 0 when n == 1
    double min = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::array<double, accuracy_band_thresholds_km.size()> bands {}; ///< fraction with error <= threshold

    // Coarse triple: under 1 km, 1 to 10 km inclusive, over 10 km.
    double below_1km = 0.0;
    double from_1_to_10km = 0.0;
    double above_10km = 0.0;

    [[nodiscard]] double band(double threshold_km) const;
};

[[nodiscard]] ErrorStats summarize_errors(std::span<const double> errors);

struct BootstrapCI
{
    double level = 0.95;
    std::size_t resamples = 10'000;
    std::uint64_t seed = 0;
    double lo = 0.0;
    double hi = 0.0;
};

/// splitmix64 finalizer; seeds the generator of each resample from (seed, index).
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;
[[nodiscard]] std::uint64_t resample_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Percentile interval of the resampled mean. `workers` only changes speed.
[[nodiscard]] BootstrapCI bootstrap_ci(std::span<const double> errors, std::size_t resamples = 10'000, double level = 0.95,
                                       std::uint64_t seed = 42, unsigned workers = 1);

struct AdjustedMean
{
    double original_mean = 0.0;
    std::optional<double> adjusted_mean; ///< absent when every value of the method was removed
    std::size_t removed = 0;
};

/// Pools every residual, removes the k largest (ties: method id, then position), and
/// recomputes each method's mean.
[[nodiscard]] std::map<std::string, AdjustedMean> drop_top_k_mean(const std::map<std::string, std::vector<double>>& errors_by_method,
                                                                  std::size_t k);

struct OlsFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double pearson_r = 0.0;
    double slope_se = 0.0;
    double slope_ci_halfwidth = 0.0; ///< 1.96 standard errors
    std::size_t n = 0;
};

[[nodiscard]] OlsFit fit_ols(std::span<const double> x, std::span<const double> y);

struct ParetoPoint
{
    std::string id;
    double cost_per_1k = 0.0;
    double mean_error_km = 0.0;
};

/// Non-dominated subset (lower is better on both axes), sorted by cost.
[[nodiscard]] std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

/// USD per percentage point of the <=10 km hit rate.
[[nodiscard]] double marginal_cost_per_hit(double cost_per_1k_usd, double hit_rate_pp);

inline constexpr double manual_baseline_s_per_grant = 502.0;

struct LatencySummary
{
    std::size_t n = 0;
    double mean_latency_s = 0.0;
    double hours_per_located = 0.0;
    double hours_per_1k = 0.0;
    double speedup = 0.0; ///< baseline hours per 1k over this method's
};

[[nodiscard]] double hours_per_1k_from_seconds(double seconds_per_grant);
[[nodiscard]] double speedup_ratio(double baseline_hours_per_1k, double method_hours_per_1k);

[[nodiscard]] LatencySummary latency_summary(std::span<const double> latencies_s,
                                             double baseline_s_per_grant = manual_baseline_s_per_grant);
[[nodiscard]] LatencySummary latency_summary(std::span<const RunRecord> records,
                                             double baseline_s_per_grant = manual_baseline_s_per_grant);

struct MethodSummary
{
    std::string method_id;
    std::size_t predictions = 0;
    std::size_t failed = 0;
    ErrorStats stats;
    BootstrapCI ci;
    Usd total_cost;
    Usd cost_per_located;
    Usd cost_per_1k;
    LatencySummary latency;
    std::optional<double> marginal_cost_per_hit_pp;
};

struct SummaryOptions
{
    std::size_t resamples = 10'000;
    double level = 0.95;
    std::uint64_t seed = 42;
    double baseline_s_per_grant = manual_baseline_s_per_grant;
    unsigned workers = 1;
};

/// Builds a summary from scored errors (located grants only) and the method's run records.
[[nodiscard]] MethodSummary summarize_method(std::string method_id, std::span<const double> errors,
                                             std::span<const RunRecord> records, std::size_t failed,
                                             const SummaryOptions& options = {});

} // namespace grantgeo

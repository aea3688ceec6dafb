// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/agent.hpp>
#include <grantgeo/baselines.hpp>
#include <grantgeo/geo.hpp>
#include <grantgeo/metrics.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace
{

std::vector<grantgeo::Coordinate> virginia_points(std::size_t n, std::uint64_t seed)
{
    auto rng = std::mt19937_64(seed);
    auto lat = std::uniform_real_distribution<double>(36.5, 39.5);
    auto lon = std::uniform_real_distribution<double>(-83.5, -75.3);
    auto out = std::vector<grantgeo::Coordinate> {};
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.emplace_back(lat(rng), lon(rng));
    return out;
}

void BM_Haversine(benchmark::State& state)
{
    auto const pts = virginia_points(1024, 1);
    std::size_t i = 0;
    for (auto _: state)
    {
        benchmark::DoNotOptimize(grantgeo::haversine_km(pts[i % 1024], pts[(i + 1) % 1024]));
        ++i;
    }
}
BENCHMARK(BM_Haversine);

void BM_SphericalCentroid(benchmark::State& state)
{
    auto const pts = virginia_points(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _: state)
        benchmark::DoNotOptimize(grantgeo::spherical_centroid(pts));
}
BENCHMARK(BM_SphericalCentroid)->Arg(2)->Arg(5)->Arg(100);

void BM_Dbscan(benchmark::State& state)
{
    auto const pts = virginia_points(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _: state)
        benchmark::DoNotOptimize(grantgeo::geodesic_dbscan(pts, 25.0, 3));
}
BENCHMARK(BM_Dbscan)->Arg(5)->Arg(50)->Arg(500);

void BM_EnsembleVote(benchmark::State& state)
{
    auto const pts = virginia_points(5, 4);
    auto const cfg = grantgeo::EnsembleConfig {};
    for (auto _: state)
        benchmark::DoNotOptimize(grantgeo::aggregate_ensemble(pts, cfg));
}
BENCHMARK(BM_EnsembleVote);

void BM_Bootstrap43(benchmark::State& state)
{
    auto rng = std::mt19937_64(5);
    auto dist = std::normal_distribution<double>(50.0, 10.0);
    auto errors = std::vector<double>(43);
    for (auto& e: errors)
        e = std::abs(dist(rng));
    auto const workers = static_cast<unsigned>(state.range(0));
    for (auto _: state)
        benchmark::DoNotOptimize(grantgeo::bootstrap_ci(errors, 10'000, 0.95, 42, workers));
}
BENCHMARK(BM_Bootstrap43)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CountyExtraction(benchmark::State& state)
{
    auto const text = std::string(
        "JOHN SMITH, 400 acs. Isle of Wight Co., on the S. side of Blackwater Swamp, adj. land of Thomas Jones; "
        "beg. at a corner white oak on the Cr. side, 12 Oct. 1705, p. 620.");
    for (auto _: state)
        benchmark::DoNotOptimize(grantgeo::extract_county(text));
}
BENCHMARK(BM_CountyExtraction);

void BM_ValidateToolCall(benchmark::State& state)
{
    auto request = grantgeo::ToolCallRequest {};
    request.call_id = "c1";
    request.name = "compute_centroid";
    request.arguments = nlohmann::json::parse(R"({"points": [{"lat": 37.1, "lng": -77.2}, {"lat": 37.2, "lng": -77.3}]})");
    for (auto _: state)
        benchmark::DoNotOptimize(grantgeo::validate_tool_call(request));
}
BENCHMARK(BM_ValidateToolCall);

} // namespace
BENCHMARK_MAIN();

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/geocoder.hpp>
#include <grantgeo/http_endpoint.hpp>
#include <grantgeo/model.hpp>

#include <httplib.h>

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

namespace grantgeo
{

namespace
{

using ordered_json = nlohmann::ordered_json;

bool names_virginia(std::string_view query)
{
    static auto const pattern = std::regex(R"((^|[^A-Za-z])(virginia|va)([^A-Za-z]|$))", std::regex::icase);
    return std::regex_search(query.begin(), query.end(), pattern);
}

GeocodeCandidate candidate_from_json(const nlohmann::json& j)
{
    auto c = GeocodeCandidate {};
    c.lat = j.at("lat").get<double>();
    c.lng = j.at("lng").get<double>();
    c.formatted_address = j.value("formatted_address", std::string {});
    if (auto it = j.find("types"); it != j.end())
        c.types = it->get<std::vector<std::string>>();
    return c;
}

bool has_type(const GeocodeCandidate& c, std::string_view type)
{
    return std::find(c.types.begin(), c.types.end(), type) != c.types.end();
}

class GoogleGeocoder final: public GeocodingProvider
{
  public:
    explicit GoogleGeocoder(GoogleGeocoderConfig config): _config(std::move(config)), _endpoint(split_endpoint(_config.endpoint))
    {
        if (_config.api_key.empty())
            if (auto const* env = std::getenv(std::string(geocoder_api_key_env).c_str()))
                _config.api_key = env;
        if (!(_config.requests_per_second > 0.0))
            throw Error(ErrorCode::ConfigInvalid, "geocoder requests_per_second must be positive");
    }

    std::vector<GeocodeCandidate> lookup(const std::string& query, std::string_view components) override
    {
        if (_config.api_key.empty())
            throw Error(ErrorCode::ProviderError, fmt::format("{} is not set", geocoder_api_key_env));
        throttle();
        ++_calls;

        auto client = httplib::Client(_endpoint.base);
        auto const whole = static_cast<time_t>(_config.timeout_s);
        auto const micros = static_cast<time_t>((_config.timeout_s - static_cast<double>(whole)) * 1e6);
        client.set_connection_timeout(whole, micros);
        client.set_read_timeout(whole, micros);

        auto params = httplib::Params {
            { "address", query },
            { "components", std::string(components) },
            { "key", _config.api_key },
        };
        auto const path = httplib::append_query_params(_endpoint.path, params);
        auto const res = client.Get(path);
        if (!res)
            throw Error(ErrorCode::ProviderError, fmt::format("geocoder transport error: {}", httplib::to_string(res.error())));
        if (res->status != 200)
            throw Error(ErrorCode::ProviderError, fmt::format("geocoder HTTP {}", res->status));

        auto body = nlohmann::json::parse(res->body, nullptr, false);
        if (body.is_discarded())
            throw Error(ErrorCode::ProviderError, "geocoder returned non-JSON body");
        return parse_google_geocode_body(body);
    }

    [[nodiscard]] std::uint64_t calls_made() const override { return _calls.load(); }

  private:
    void throttle()
    {
        auto const interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / _config.requests_per_second));
        auto slot = std::chrono::steady_clock::time_point {};
        {
            auto lock = std::lock_guard(_throttle_mutex);
            auto const now = std::chrono::steady_clock::now();
            slot = std::max(now, _next_slot);
            _next_slot = slot + interval;
        }
        std::this_thread::sleep_until(slot);
    }

    GoogleGeocoderConfig _config;
    HttpEndpoint _endpoint;
    std::mutex _throttle_mutex;
    std::chrono::steady_clock::time_point _next_slot {};
    std::atomic<std::uint64_t> _calls { 0 };
};

} // namespace

std::string_view to_string(GeocodeStrategy s) noexcept
{
    switch (s)
    {
        case GeocodeStrategy::natural_feature: return "natural_feature";
        case GeocodeStrategy::restricted_va: return "restricted_va";
        case GeocodeStrategy::standard_va: return "standard_va";
        case GeocodeStrategy::county_fallback: return "county_fallback";
    }
    return "restricted_va";
}

std::optional<GeocodeStrategy> parse_geocode_strategy(std::string_view text)
{
    for (auto s: { GeocodeStrategy::natural_feature, GeocodeStrategy::restricted_va, GeocodeStrategy::standard_va,
                   GeocodeStrategy::county_fallback })
        if (to_string(s) == text)
            return s;
    return std::nullopt;
}

std::string GeocodeResult::to_payload() const
{
    auto j = ordered_json::object();
    j["lat"] = lat;
    j["lng"] = lng;
    j["formatted_address"] = formatted_address;
    j["strategy"] = to_string(strategy);
    j["query_used"] = query_used;
    return j.dump();
}

GeocodeResult GeocodeResult::from_payload(std::string_view payload)
{
    auto const j = nlohmann::json::parse(payload, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::MalformedRow, "geocode payload is not a JSON object");
    auto r = GeocodeResult {};
    try
    {
        r.lat = j.at("lat").get<double>();
        r.lng = j.at("lng").get<double>();
        r.formatted_address = j.at("formatted_address").get<std::string>();
        r.query_used = j.value("query_used", std::string {});
        auto const strategy = parse_geocode_strategy(j.value("strategy", std::string("restricted_va")));
        if (!strategy)
            throw Error(ErrorCode::MalformedRow, "unknown geocode strategy in payload");
        r.strategy = *strategy;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::MalformedRow, fmt::format("geocode payload: {}", e.what()));
    }
    return r;
}

std::string not_found_payload(std::string_view query_used)
{
    auto j = ordered_json::object();
    j["error"] = "NotFound";
    j["query_used"] = query_used;
    return j.dump();
}

FixtureGeocodingProvider::FixtureGeocodingProvider(std::map<std::string, std::vector<GeocodeCandidate>> table)
    : _table(std::move(table))
{
}

std::unique_ptr<FixtureGeocodingProvider> FixtureGeocodingProvider::from_json(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw Error(ErrorCode::MalformedRow, "geocode fixture must be a JSON object keyed by query");
    auto table = std::map<std::string, std::vector<GeocodeCandidate>> {};
    try
    {
        for (auto const& [query, list]: doc.items())
        {
            auto& out = table[query];
            for (auto const& c: list)
                out.push_back(candidate_from_json(c));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::MalformedRow, fmt::format("geocode fixture: {}", e.what()));
    }
    return std::make_unique<FixtureGeocodingProvider>(std::move(table));
}

std::unique_ptr<FixtureGeocodingProvider> FixtureGeocodingProvider::load(const std::filesystem::path& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot open geocode fixture {}", path.string()));
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::MalformedRow, fmt::format("geocode fixture {} is not valid JSON", path.string()));
    return from_json(doc);
}

std::vector<GeocodeCandidate> FixtureGeocodingProvider::lookup(const std::string& query, std::string_view)
{
    ++_calls;
    if (auto it = _table.find(query); it != _table.end())
        return it->second;
    return {};
}

std::vector<GeocodeCandidate> OfflineGeocodingProvider::lookup(const std::string& query, std::string_view)
{
    ++_calls;
    throw Error(ErrorCode::ProviderError, fmt::format("no geocoding provider for uncached query '{}'", query));
}

std::unique_ptr<GeocodingProvider> make_google_geocoder(GoogleGeocoderConfig config)
{
    return std::make_unique<GoogleGeocoder>(std::move(config));
}

std::vector<GeocodeCandidate> parse_google_geocode_body(const nlohmann::json& body)
{
    auto const status = body.value("status", std::string {});
    if (status == "ZERO_RESULTS")
        return {};
    if (status != "OK")
        throw Error(ErrorCode::ProviderError,
                    fmt::format("geocoder status {}: {}", status.empty() ? "missing" : status,
                                body.value("error_message", std::string {})));
    auto out = std::vector<GeocodeCandidate> {};
    try
    {
        for (auto const& r: body.at("results"))
        {
            auto c = GeocodeCandidate {};
            auto const& loc = r.at("geometry").at("location");
            c.lat = loc.at("lat").get<double>();
            c.lng = loc.at("lng").get<double>();
            c.formatted_address = r.value("formatted_address", std::string {});
            if (auto it = r.find("types"); it != r.end())
                c.types = it->get<std::vector<std::string>>();
            out.push_back(std::move(c));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::ProviderError, fmt::format("geocoder body: {}", e.what()));
    }
    return out;
}

GeocodeCache::GeocodeCache(std::filesystem::path path): _path(std::move(path))
{
    auto in = std::ifstream(*_path);
    if (!in)
        return; // created on first insert
    auto line = std::string {};
    auto number = 0;
    while (std::getline(in, line))
    {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto const j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("query"))
            throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: bad geocode cache line", _path->string(), number));
        auto strategy = std::optional<GeocodeStrategy> {};
        if (auto it = j.find("strategy"); it != j.end() && !it->is_null())
        {
            strategy = parse_geocode_strategy(it->get<std::string>());
            if (!strategy)
                throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: unknown strategy", _path->string(), number));
        }
        auto payload = std::optional<std::string> {};
        if (auto it = j.find("result"); it != j.end() && !it->is_null())
            payload = it->is_string() ? it->get<std::string>() : it->dump();
        // Later lines win, matching append order.
        _entries[key(j.at("query").get<std::string>(), strategy)] = std::move(payload);
    }
}

std::string GeocodeCache::key(std::string_view query, std::optional<GeocodeStrategy> strategy)
{
    return fmt::format("{}\x1f{}", query, strategy ? to_string(*strategy) : std::string_view {});
}

std::optional<std::optional<std::string>> GeocodeCache::find(std::string_view query,
                                                             std::optional<GeocodeStrategy> strategy) const
{
    auto lock = std::shared_lock(_mutex);
    if (auto it = _entries.find(key(query, strategy)); it != _entries.end())
        return it->second;
    return std::nullopt;
}

void GeocodeCache::insert(std::string_view query, std::optional<GeocodeStrategy> strategy,
                          std::optional<std::string> payload)
{
    auto lock = std::unique_lock(_mutex);
    auto const k = key(query, strategy);
    if (_entries.contains(k))
        return;
    if (_path)
    {
        auto line = ordered_json::object();
        line["query"] = query;
        line["strategy"] = strategy ? ordered_json(to_string(*strategy)) : ordered_json(nullptr);
        line["result"] = payload ? ordered_json(*payload) : ordered_json(nullptr);
        if (_path->has_parent_path())
            std::filesystem::create_directories(_path->parent_path());
        auto out = std::ofstream(*_path, std::ios::app);
        if (!out)
            throw Error(ErrorCode::DataMissing, fmt::format("cannot append to geocode cache {}", _path->string()));
        out << line.dump() << '\n';
    }
    _entries.emplace(k, std::move(payload));
}

std::size_t GeocodeCache::size() const
{
    auto lock = std::shared_lock(_mutex);
    return _entries.size();
}

std::string build_geocode_query(std::string_view query, std::optional<GeocodeStrategy> strategy)
{
    switch (strategy.value_or(GeocodeStrategy::restricted_va))
    {
        case GeocodeStrategy::natural_feature:
        case GeocodeStrategy::restricted_va: return std::string(query);
        case GeocodeStrategy::standard_va:
            if (names_virginia(query))
                return std::string(query);
            return fmt::format("{}, Virginia", query);
        case GeocodeStrategy::county_fallback:
        {
            // Connectors keep names like Isle of Wight and King and Queen whole.
            static auto const county = std::regex(R"(([A-Z][A-Za-z'.]*(?:\s+(?:(?:of|and|the)\s+)?[A-Z][A-Za-z'.]*)*)\s+County)");
            auto m = std::match_results<std::string_view::const_iterator> {};
            if (std::regex_search(query.begin(), query.end(), m, county))
                return fmt::format("{} County, Virginia", m[1].str());
            return std::string(query);
        }
    }
    return std::string(query);
}

Geocoder::Geocoder(GeocodingProvider& provider, GeocodeCache* cache, BoundingBox box)
    : _provider(provider), _cache(cache), _box(box)
{
}

GeocodeOutcome Geocoder::geocode(std::string_view query, std::optional<GeocodeStrategy> strategy)
{
    if (query.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw Error(ErrorCode::ArgumentInvalid, "geocode query is empty");

    auto const used = build_geocode_query(query, strategy);
    auto outcome = GeocodeOutcome {};
    if (_cache != nullptr)
        if (auto hit = _cache->find(query, strategy))
        {
            outcome.cache_hit = true;
            if (*hit)
            {
                outcome.payload = **hit;
                outcome.result = GeocodeResult::from_payload(outcome.payload);
            }
            else
                outcome.payload = not_found_payload(used);
            return outcome;
        }

    auto candidates = _provider.lookup(used, virginia_components);
    if (strategy == GeocodeStrategy::natural_feature)
        std::stable_partition(candidates.begin(), candidates.end(),
                              [](const GeocodeCandidate& c) { return has_type(c, "natural_feature"); });

    for (const auto& c: candidates)
    {
        if (!std::isfinite(c.lat) || !std::isfinite(c.lng) || std::abs(c.lat) > 90.0 || std::abs(c.lng) > 180.0)
            continue;
        if (!within_bbox(Coordinate(c.lat, c.lng), _box))
            continue;
        auto r = GeocodeResult {};
        r.lat = c.lat;
        r.lng = c.lng;
        r.formatted_address = c.formatted_address;
        r.strategy = strategy.value_or(GeocodeStrategy::restricted_va);
        r.query_used = used;
        outcome.payload = r.to_payload();
        outcome.result = std::move(r);
        break;
    }
    if (!outcome.result)
        outcome.payload = not_found_payload(used);
    if (_cache != nullptr)
        _cache->insert(query, strategy, outcome.result ? std::optional(outcome.payload) : std::nullopt);
    return outcome;
}

} // namespace grantgeo

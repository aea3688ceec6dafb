// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/geo.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace grantgeo
{

enum class GeocodeStrategy
{
    natural_feature,
    restricted_va,
    standard_va,
    county_fallback,
};

[[nodiscard]] std::string_view to_string(GeocodeStrategy s) noexcept;
[[nodiscard]] std::optional<GeocodeStrategy> parse_geocode_strategy(std::string_view text);

/// Raw provider hit before the Virginia filter.
struct GeocodeCandidate
{
    double lat = 0.0;
    double lng = 0.0;
    std::string formatted_address;
    std::vector<std::string> types;
};

struct GeocodeResult
{
    double lat = 0.0;
    double lng = 0.0;
    std::string formatted_address;
    GeocodeStrategy strategy = GeocodeStrategy::restricted_va;
    std::string query_used;

    /// {lat, lng, formatted_address, strategy, query_used} in that key order.
    [[nodiscard]] std::string to_payload() const;
    [[nodiscard]] static GeocodeResult from_payload(std::string_view payload);
};

/// Administrative-area restriction passed with every lookup.
inline constexpr std::string_view virginia_components = "administrative_area:VA";

class GeocodingProvider
{
  public:
    virtual ~GeocodingProvider() = default;
    /// Throws Error(ProviderError) on transport or quota failures; an empty vector means no match.
    virtual std::vector<GeocodeCandidate> lookup(const std::string& query, std::string_view components) = 0;
    [[nodiscard]] virtual std::uint64_t calls_made() const = 0;
};

/// Canned candidates keyed by the exact query string. JSON document:
///   {"<query>": [{"lat", "lng", "formatted_address", "types"}], ...}
class FixtureGeocodingProvider final: public GeocodingProvider
{
  public:
    explicit FixtureGeocodingProvider(std::map<std::string, std::vector<GeocodeCandidate>> table);

    [[nodiscard]] static std::unique_ptr<FixtureGeocodingProvider> from_json(const nlohmann::json& doc);
    [[nodiscard]] static std::unique_ptr<FixtureGeocodingProvider> load(const std::filesystem::path& path);

    std::vector<GeocodeCandidate> lookup(const std::string& query, std::string_view components) override;
    [[nodiscard]] std::uint64_t calls_made() const override { return _calls.load(); }

  private:
    std::map<std::string, std::vector<GeocodeCandidate>> _table;
    std::atomic<std::uint64_t> _calls { 0 };
};

/// Provider for frozen-cache replay: any cache miss is a ProviderError.
class OfflineGeocodingProvider final: public GeocodingProvider
{
  public:
    std::vector<GeocodeCandidate> lookup(const std::string& query, std::string_view components) override;
    [[nodiscard]] std::uint64_t calls_made() const override { return _calls.load(); }

  private:
    std::atomic<std::uint64_t> _calls { 0 };
};

struct GoogleGeocoderConfig
{
    std::string endpoint = "https://maps.googleapis.com/maps/api/geocode/json";
    std::string api_key; ///< defaults to $GEOCODER_API_KEY
    double requests_per_second = 10.0;
    double timeout_s = 30.0;
};

[[nodiscard]] std::unique_ptr<GeocodingProvider> make_google_geocoder(GoogleGeocoderConfig config);

/// Parses a Geocoding API JSON body; exposed for tests.
[[nodiscard]] std::vector<GeocodeCandidate> parse_google_geocode_body(const nlohmann::json& body);

/// Cache of trimmed results keyed by (query, strategy). Backed by an append-only
/// JSONL file of {query, strategy, result|null}. Readers run concurrently, writes
/// are serialized.
class GeocodeCache
{
  public:
    GeocodeCache() = default;
    explicit GeocodeCache(std::filesystem::path path);

    [[nodiscard]] static std::string key(std::string_view query, std::optional<GeocodeStrategy> strategy);

    /// Outer optional: cache hit. Inner optional: the payload (absent for a cached NotFound).
    [[nodiscard]] std::optional<std::optional<std::string>> find(std::string_view query,
                                                                 std::optional<GeocodeStrategy> strategy) const;
    void insert(std::string_view query, std::optional<GeocodeStrategy> strategy, std::optional<std::string> payload);

    [[nodiscard]] std::size_t size() const;

  private:
    std::optional<std::filesystem::path> _path;
    std::map<std::string, std::optional<std::string>, std::less<>> _entries;
    mutable std::shared_mutex _mutex;
};

struct GeocodeOutcome
{
    std::optional<GeocodeResult> result; ///< absent means NotFound
    std::string payload;                 ///< exact bytes returned to the model
    bool cache_hit = false;
};

/// Query construction for each strategy. Absent strategy behaves as restricted_va.
[[nodiscard]] std::string build_geocode_query(std::string_view query, std::optional<GeocodeStrategy> strategy);

/// Virginia-restricted lookup with caching: cache first, then the provider with the
/// VA component filter; candidates outside `box` are discarded.
class Geocoder
{
  public:
    Geocoder(GeocodingProvider& provider, GeocodeCache* cache = nullptr, BoundingBox box = virginia_box());

    [[nodiscard]] GeocodeOutcome geocode(std::string_view query, std::optional<GeocodeStrategy> strategy);
    [[nodiscard]] const BoundingBox& box() const { return _box; }
    [[nodiscard]] GeocodingProvider& provider() { return _provider; }

  private:
    GeocodingProvider& _provider;
    GeocodeCache* _cache;
    BoundingBox _box;
};

[[nodiscard]] std::string not_found_payload(std::string_view query_used);

} // namespace grantgeo

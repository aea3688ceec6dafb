// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/corpus.hpp>
#include <grantgeo/geo.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grantgeo
{

/// Geographic centre of Virginia, the last-resort answer of every baseline.
[[nodiscard]] Coordinate virginia_center();

enum class Provenance
{
    entity,
    county,
    statewide,
};

[[nodiscard]] std::string_view to_string(Provenance p) noexcept;

struct BaselineResult
{
    Coordinate coordinate;
    Provenance provenance = Provenance::statewide;
    std::string matched;       ///< entity text or county name behind the answer
    bool gate_skipped = false; ///< entity accepted without a county to gate against
};

/// Lowercase, single-spaced, without a trailing "county" / "co." word.
[[nodiscard]] std::string normalize_county_name(std::string_view name);

/// County and independent-city centroids. Cities are keyed "<Name> city".
/// CSV columns: county,lat,lon.
class CountyCentroidTable
{
  public:
    [[nodiscard]] static CountyCentroidTable load(const std::filesystem::path& path);
    [[nodiscard]] static CountyCentroidTable parse(std::string_view csv_text);

    void add(std::string name, Coordinate c);
    [[nodiscard]] std::optional<Coordinate> find(std::string_view name) const;
    /// Canonical spelling of a known name, if any.
    [[nodiscard]] std::optional<std::string> canonical(std::string_view name) const;
    [[nodiscard]] bool contains(std::string_view name) const { return find(name).has_value(); }
    [[nodiscard]] std::size_t size() const { return _entries.size(); }
    [[nodiscard]] std::vector<std::string> names() const;

  private:
    struct Entry
    {
        std::string name;
        Coordinate coordinate;
    };
    std::map<std::string, Entry, std::less<>> _entries; ///< keyed by normalized name
};

struct CountyMention
{
    std::string name;
    bool is_city = false; ///< from "City of <Name>"
    std::size_t offset = 0;
};

/// First county mention in reading order: "<Name> Co.", "<Name> County",
/// "County of <Name>", "City of <Name>". With a table, the longest known name
/// ending at the marker wins; otherwise the capitalized words next to it.
[[nodiscard]] std::optional<CountyMention> find_county_mention(std::string_view text,
                                                               const CountyCentroidTable* known = nullptr);
[[nodiscard]] std::optional<std::string> extract_county(std::string_view text, const CountyCentroidTable* known = nullptr);

/// Centroid of the mentioned county or city, looking the city form up first for "City of".
[[nodiscard]] std::optional<std::pair<std::string, Coordinate>> county_centroid_for(std::string_view text,
                                                                                    const CountyCentroidTable& table);

[[nodiscard]] BaselineResult predict_county_centroid(std::string_view text, const CountyCentroidTable& table);

/// Abbreviation -> expansion, matched on word boundaries with or without the trailing period.
class AbbreviationTable
{
  public:
    [[nodiscard]] static AbbreviationTable defaults();
    [[nodiscard]] static AbbreviationTable load(const std::filesystem::path& path);
    [[nodiscard]] static AbbreviationTable parse(std::string_view csv_text);

    void add(std::string abbrev, std::string expansion);
    [[nodiscard]] std::string expand(std::string_view text) const;
    [[nodiscard]] std::size_t size() const { return _rules.size(); }

  private:
    struct Rule
    {
        std::string stem; ///< abbreviation without its trailing period
        std::string expansion;
    };
    std::vector<Rule> _rules; ///< longest stem first
};

[[nodiscard]] std::string expand_abbreviations(std::string_view text, const AbbreviationTable& table = AbbreviationTable::defaults());

struct ToponymCandidate
{
    std::string name;
    Coordinate coordinate;
    double score = 0.0; ///< resolver confidence in [0, 1]
};

class EntityResolver
{
  public:
    virtual ~EntityResolver() = default;
    [[nodiscard]] virtual std::vector<ToponymCandidate> resolve(std::string_view text) const = 0;
};

class EntityExtractor
{
  public:
    virtual ~EntityExtractor() = default;
    [[nodiscard]] virtual std::vector<std::string> extract(std::string_view text) const = 0;
};

/// Runs of capitalized words ("St." and possessives allowed); all-caps words,
/// which mark patentee names, and leading stopwords are skipped.
class CapitalizedPhraseExtractor final: public EntityExtractor
{
  public:
    explicit CapitalizedPhraseExtractor(std::size_t max_words = 4): _max_words(max_words) {}
    [[nodiscard]] std::vector<std::string> extract(std::string_view text) const override;

  private:
    std::size_t _max_words;
};

struct GazetteerEntry
{
    std::string name;
    Coordinate coordinate;
    std::int64_t population = 0;
    std::string feature_class;
};

/// Lowercase; a leading "St."/"St" becomes "saint"; possessive "'s" and a
/// trailing "parish" / "county" / "co." descriptor are removed.
[[nodiscard]] std::string normalize_toponym(std::string_view name);

/// CSV columns: name,lat,lon,population,feature_class.
[[nodiscard]] std::vector<GazetteerEntry> load_gazetteer(const std::filesystem::path& path);
[[nodiscard]] std::vector<GazetteerEntry> parse_gazetteer(std::string_view csv_text);

/// Resolver over a gazetteer: extracted phrases matched by normalized name,
/// scored 0.9 when the spelling matches exactly and 0.6 otherwise.
class GazetteerResolver final: public EntityResolver
{
  public:
    GazetteerResolver(std::vector<GazetteerEntry> gazetteer, std::shared_ptr<const EntityExtractor> extractor = nullptr);
    [[nodiscard]] std::vector<ToponymCandidate> resolve(std::string_view text) const override;

  private:
    std::vector<GazetteerEntry> _gazetteer;
    std::shared_ptr<const EntityExtractor> _extractor;
};

/// Scripted resolver: every entry whose `contains` string occurs in the text
/// contributes its candidates. JSON: [{"contains", "candidates": [{"name","lat","lon","score"}]}].
class FixtureResolver final: public EntityResolver
{
  public:
    struct Entry
    {
        std::string contains;
        std::vector<ToponymCandidate> candidates;
    };

    explicit FixtureResolver(std::vector<Entry> entries): _entries(std::move(entries)) {}
    [[nodiscard]] static FixtureResolver load(const std::filesystem::path& path);
    [[nodiscard]] static FixtureResolver from_json_text(std::string_view text);

    [[nodiscard]] std::vector<ToponymCandidate> resolve(std::string_view text) const override;

  private:
    std::vector<Entry> _entries;
};

struct HeuristicParams
{
    double confidence_threshold = 0.5;
    double bbox_margin_deg = 0.0;
    double distance_gate_km = 25.0;

    void validate() const;
    friend bool operator==(const HeuristicParams&, const HeuristicParams&) = default;
};

/// Raw, expanded, then expanded text with a county-and-state suffix.
[[nodiscard]] std::vector<std::string> heuristic_variants(std::string_view text, const AbbreviationTable& abbreviations,
                                                          const CountyCentroidTable& table);

[[nodiscard]] BaselineResult heuristic_geoparse(std::string_view text, const EntityResolver& resolver,
                                                const CountyCentroidTable& table, const HeuristicParams& params,
                                                const AbbreviationTable& abbreviations = AbbreviationTable::defaults());

struct HeuristicGrid
{
    std::vector<double> confidence { 0.3, 0.5, 0.7 };
    std::vector<double> margin_deg { 0.0, 0.1, 0.25 };
    std::vector<double> gate_km { 25.0, 35.0, 50.0 };
};

struct TunedHeuristic
{
    HeuristicParams params;
    double mean_error_km = 0.0;
    std::size_t evaluated = 0;
};

/// Exhaustive search minimizing mean error over the gold rows that carry truth.
/// Ties go to the lexicographically smallest (confidence, margin, gate).
[[nodiscard]] TunedHeuristic tune_heuristic_grid(std::span<const GrantAbstract> gold, const EntityResolver& resolver,
                                                 const CountyCentroidTable& table, const HeuristicGrid& grid,
                                                 const AbbreviationTable& abbreviations = AbbreviationTable::defaults());

/// Highest-population Virginia gazetteer match over the extracted entities
/// (ties by name), then county centroid, then the state centre.
[[nodiscard]] BaselineResult predict_ner_pipeline(std::string_view text, const EntityExtractor& extractor,
                                                  std::span<const GazetteerEntry> gazetteer,
                                                  const CountyCentroidTable& table);

} // namespace grantgeo

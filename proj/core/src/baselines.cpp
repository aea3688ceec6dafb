// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/baselines.hpp>
#include <grantgeo/csv.hpp>
#include <grantgeo/error.hpp>

#include <nlohmann/json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace grantgeo
{

namespace
{

bool is_alpha(unsigned char c) { return std::isalpha(c) != 0; }
bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }
bool is_upper(unsigned char c) { return std::isupper(c) != 0; }
bool is_lower(unsigned char c) { return std::islower(c) != 0; }

std::string lower(std::string_view s)
{
    auto out = std::string(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_spaces(std::string_view s)
{
    auto out = std::string {};
    auto pending = false;
    for (unsigned char c: s)
    {
        if (std::isspace(c))
        {
            pending = !out.empty();
            continue;
        }
        if (pending)
            out.push_back(' ');
        pending = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

/// Whitespace-delimited token with its punctuation-trimmed core.
struct Token
{
    std::string raw;
    std::string core;
    std::size_t offset = 0;
    char trailing = '\0'; ///< last punctuation character stripped from the end

    [[nodiscard]] bool breaks_phrase() const { return trailing == ',' || trailing == ';' || trailing == ':' || trailing == ')'; }
};

std::vector<Token> tokenize(std::string_view text)
{
    auto tokens = std::vector<Token> {};
    std::size_t i = 0;
    while (i < text.size())
    {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        auto const start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (start == i)
            break;
        auto t = Token {};
        t.raw = std::string(text.substr(start, i - start));
        t.offset = start;
        auto b = std::size_t { 0 };
        auto e = t.raw.size();
        while (b < e && !is_alnum(static_cast<unsigned char>(t.raw[b])))
            ++b;
        while (e > b && !is_alnum(static_cast<unsigned char>(t.raw[e - 1])))
            --e;
        t.core = t.raw.substr(b, e - b);
        // A separator anywhere in the stripped tail wins over a bare period.
        for (auto k = e; k < t.raw.size(); ++k)
        {
            auto const c = t.raw[k];
            if (c == ',' || c == ';' || c == ':' || c == ')')
            {
                t.trailing = c;
                break;
            }
            if (t.trailing == '\0')
                t.trailing = c;
        }
        tokens.push_back(std::move(t));
    }
    return tokens;
}

bool is_stopword(std::string_view word)
{
    static auto const words = std::set<std::string, std::less<>> { "a",     "acres", "an",   "and",   "at",   "by",   "for",
                                                                   "from",  "in",    "near", "of",    "on",   "the",  "to",
                                                                   "upon",  "with",  "side", "north", "south", "east", "west",
                                                                   "said",  "main",  "run",  "beg",   "note" };
    return words.contains(lower(word));
}

bool capitalized(std::string_view word) { return !word.empty() && is_upper(static_cast<unsigned char>(word.front())); }

bool all_caps(std::string_view word)
{
    auto letters = 0;
    for (unsigned char c: word)
    {
        if (is_lower(c))
            return false;
        letters += is_alpha(c) ? 1 : 0;
    }
    return letters > 1;
}

std::string title_case(std::string_view phrase)
{
    auto out = std::string(phrase);
    auto start = true;
    for (auto& ch: out)
    {
        auto const c = static_cast<unsigned char>(ch);
        if (is_alpha(c))
        {
            ch = static_cast<char>(start ? std::toupper(c) : std::tolower(c));
            start = false;
        }
        else
            start = c == ' ' || c == '-';
    }
    return out;
}

std::string join_cores(const std::vector<Token>& tokens, std::size_t first, std::size_t last)
{
    auto out = std::string {};
    for (auto i = first; i < last; ++i)
    {
        if (!out.empty())
            out.push_back(' ');
        out += tokens[i].core;
    }
    return out;
}

constexpr std::size_t max_name_words = 4;

/// Name directly before the marker at `marker`.
std::optional<std::string> name_before(const std::vector<Token>& tokens, std::size_t marker, const CountyCentroidTable* known)
{
    auto first_allowed = marker;
    while (first_allowed > 0 && marker - first_allowed < max_name_words && !tokens[first_allowed - 1].breaks_phrase()
           && !tokens[first_allowed - 1].core.empty())
        --first_allowed;
    if (first_allowed == marker)
        return std::nullopt;

    if (known != nullptr)
        for (auto start = first_allowed; start < marker; ++start)
            if (auto name = known->canonical(join_cores(tokens, start, marker)); name && !name->ends_with(" city"))
                return name;

    auto start = marker;
    while (start > first_allowed && marker - start < 3 && capitalized(tokens[start - 1].core)
           && !is_stopword(tokens[start - 1].core))
        --start;
    if (start == marker)
        return std::nullopt;
    return title_case(join_cores(tokens, start, marker));
}

/// Name directly after "<marker> of".
std::optional<std::string> name_after(const std::vector<Token>& tokens, std::size_t of_index, bool city,
                                      const CountyCentroidTable* known)
{
    auto const begin = of_index + 1;
    auto end = begin;
    while (end < tokens.size() && end - begin < max_name_words && !tokens[end].core.empty())
    {
        ++end;
        if (tokens[end - 1].breaks_phrase() || tokens[end - 1].trailing == '.')
            break;
    }
    if (end == begin)
        return std::nullopt;

    if (known != nullptr)
        for (auto stop = end; stop > begin; --stop)
        {
            auto const phrase = join_cores(tokens, begin, stop);
            if (city)
                if (auto name = known->canonical(phrase + " city"))
                    return name->substr(0, name->size() - 5);
            if (auto name = known->canonical(phrase); name && !name->ends_with(" city"))
                return name;
        }

    auto stop = begin;
    while (stop < end && stop - begin < 3 && capitalized(tokens[stop].core) && !is_stopword(tokens[stop].core))
        ++stop;
    if (stop == begin)
        return std::nullopt;
    return title_case(join_cores(tokens, begin, stop));
}

double parse_double(std::string_view text, std::string_view what)
{
    auto value = 0.0;
    auto const* end = text.data() + text.size();
    auto const [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc {} || ptr != end)
        throw Error(ErrorCode::MalformedRow, fmt::format("bad {} '{}'", what, text));
    return value;
}

std::string read_text(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot open {}", path.string()));
    auto ss = std::ostringstream {};
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

Coordinate virginia_center() { return Coordinate(37.4316, -78.6569); }

std::string_view to_string(Provenance p) noexcept
{
    switch (p)
    {
        case Provenance::entity: return "entity";
        case Provenance::county: return "county";
        case Provenance::statewide: return "statewide";
    }
    return "statewide";
}

std::string normalize_county_name(std::string_view name)
{
    auto s = lower(collapse_spaces(name));
    for (std::string_view suffix: { " county", " co.", " co" })
        if (s.size() > suffix.size() && s.ends_with(suffix))
        {
            s.resize(s.size() - suffix.size());
            break;
        }
    return s;
}

CountyCentroidTable CountyCentroidTable::parse(std::string_view csv_text)
{
    auto const table = csv::Table(csv::parse(csv_text), "<county table>");
    auto out = CountyCentroidTable {};
    for (std::size_t i = 0; i < table.records().size(); ++i)
    {
        auto const lat = parse_double(table.field(i, "lat"), "lat");
        auto const lon = parse_double(table.field(i, "lon"), "lon");
        out.add(table.field(i, "county"), Coordinate(lat, lon));
    }
    return out;
}

CountyCentroidTable CountyCentroidTable::load(const std::filesystem::path& path) { return parse(read_text(path)); }

void CountyCentroidTable::add(std::string name, Coordinate c)
{
    auto key = normalize_county_name(name);
    if (key.empty())
        throw Error(ErrorCode::MalformedRow, "empty county name");
    _entries.insert_or_assign(std::move(key), Entry { std::move(name), c });
}

std::optional<Coordinate> CountyCentroidTable::find(std::string_view name) const
{
    if (auto it = _entries.find(normalize_county_name(name)); it != _entries.end())
        return it->second.coordinate;
    return std::nullopt;
}

std::optional<std::string> CountyCentroidTable::canonical(std::string_view name) const
{
    if (auto it = _entries.find(normalize_county_name(name)); it != _entries.end())
        return it->second.name;
    return std::nullopt;
}

std::vector<std::string> CountyCentroidTable::names() const
{
    auto out = std::vector<std::string> {};
    for (auto const& [key, entry]: _entries)
        out.push_back(entry.name);
    return out;
}

std::optional<CountyMention> find_county_mention(std::string_view text, const CountyCentroidTable* known)
{
    auto const tokens = tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i)
    {
        auto const word = lower(tokens[i].core);
        auto const followed_by_of = i + 1 < tokens.size() && lower(tokens[i + 1].core) == "of" && !tokens[i].breaks_phrase();
        if ((word == "county" || word == "city") && followed_by_of && capitalized(tokens[i].core))
        {
            if (auto name = name_after(tokens, i + 1, word == "city", known))
                return CountyMention { std::move(*name), word == "city", tokens[i].offset };
        }
        auto const marker = word == "county" || (word == "co" && capitalized(tokens[i].core));
        if (marker && i > 0)
            if (auto name = name_before(tokens, i, known))
                return CountyMention { std::move(*name), false, tokens[i].offset };
    }
    return std::nullopt;
}

std::optional<std::string> extract_county(std::string_view text, const CountyCentroidTable* known)
{
    if (auto m = find_county_mention(text, known))
        return std::move(m->name);
    return std::nullopt;
}

std::optional<std::pair<std::string, Coordinate>> county_centroid_for(std::string_view text, const CountyCentroidTable& table)
{
    auto const mention = find_county_mention(text, &table);
    if (!mention)
        return std::nullopt;
    if (mention->is_city)
        if (auto c = table.find(mention->name + " city"))
            return std::pair { mention->name + " city", *c };
    if (auto c = table.find(mention->name))
        return std::pair { mention->name, *c };
    return std::nullopt;
}

BaselineResult predict_county_centroid(std::string_view text, const CountyCentroidTable& table)
{
    if (auto hit = county_centroid_for(text, table))
        return BaselineResult { hit->second, Provenance::county, hit->first, false };
    return BaselineResult { virginia_center(), Provenance::statewide, {}, false };
}

AbbreviationTable AbbreviationTable::defaults()
{
    auto t = AbbreviationTable {};
    for (auto const& [a, e]: std::array<std::pair<const char*, const char*>, 8> { {
             { "Cr.", "Creek" },
             { "Co.", "County" },
             { "Sw.", "Swamp" },
             { "Riv.", "River" },
             { "Br.", "Branch" },
             { "acs.", "acres" },
             { "Maj.", "Major" },
             { "Capt.", "Captain" },
         } })
        t.add(a, e);
    return t;
}

AbbreviationTable AbbreviationTable::parse(std::string_view csv_text)
{
    auto const table = csv::Table(csv::parse(csv_text), "<abbreviation table>");
    auto out = AbbreviationTable {};
    for (std::size_t i = 0; i < table.records().size(); ++i)
        out.add(table.field(i, "abbrev"), table.field(i, "expansion"));
    return out;
}

AbbreviationTable AbbreviationTable::load(const std::filesystem::path& path) { return parse(read_text(path)); }

void AbbreviationTable::add(std::string abbrev, std::string expansion)
{
    while (!abbrev.empty() && abbrev.back() == '.')
        abbrev.pop_back();
    if (abbrev.empty())
        throw Error(ErrorCode::MalformedRow, "empty abbreviation");
    auto const pos = std::find_if(_rules.begin(), _rules.end(), [&](const Rule& r) { return r.stem == abbrev; });
    if (pos != _rules.end())
    {
        pos->expansion = std::move(expansion);
        return;
    }
    _rules.push_back(Rule { std::move(abbrev), std::move(expansion) });
    std::stable_sort(_rules.begin(), _rules.end(), [](const Rule& a, const Rule& b) { return a.stem.size() > b.stem.size(); });
}

std::string AbbreviationTable::expand(std::string_view text) const
{
    auto out = std::string {};
    out.reserve(text.size() + 16);
    std::size_t i = 0;
    while (i < text.size())
    {
        auto const at_word_start = i == 0 || !is_alnum(static_cast<unsigned char>(text[i - 1]));
        auto matched = false;
        if (at_word_start)
            for (auto const& rule: _rules)
            {
                if (text.substr(i, rule.stem.size()) != rule.stem)
                    continue;
                auto end = i + rule.stem.size();
                if (end < text.size() && text[end] == '.')
                    ++end;
                if (end < text.size() && is_alnum(static_cast<unsigned char>(text[end])))
                    continue;
                out += rule.expansion;
                i = end;
                matched = true;
                break;
            }
        if (!matched)
            out.push_back(text[i++]);
    }
    return out;
}

std::string expand_abbreviations(std::string_view text, const AbbreviationTable& table) { return table.expand(text); }

std::vector<std::string> CapitalizedPhraseExtractor::extract(std::string_view text) const
{
    auto const tokens = tokenize(text);
    auto phrases = std::vector<std::string> {};
    auto current = std::vector<std::string> {};
    auto flush = [&] {
        while (!current.empty() && is_stopword(current.front()))
            current.erase(current.begin());
        while (!current.empty() && is_stopword(current.back()))
            current.pop_back();
        if (!current.empty())
            phrases.push_back(fmt::format("{}", fmt::join(current, " ")));
        current.clear();
    };
    for (auto const& t: tokens)
    {
        auto word = t.core;
        // Keep the abbreviating period of "St." so normalization can see it.
        if (t.raw.size() > word.size() && lower(word) == "st" && t.raw.find('.') != std::string::npos)
            word += '.';
        auto const accept = capitalized(t.core) && !all_caps(t.core) && !is_stopword(t.core);
        auto const joiner = !current.empty() && lower(t.core) == "of";
        if (accept || joiner)
        {
            current.push_back(word);
            if (current.size() >= _max_words)
                flush();
        }
        else
            flush();
        if (t.breaks_phrase() || (t.trailing == '.' && lower(t.core) != "st"))
            flush();
    }
    flush();
    return phrases;
}

std::string normalize_toponym(std::string_view name)
{
    auto s = lower(collapse_spaces(name));
    for (std::string_view possessive: { "'s", "’s" })
        for (auto pos = s.find(possessive); pos != std::string::npos; pos = s.find(possessive, pos))
        {
            auto const end = pos + possessive.size();
            if (end == s.size() || !is_alnum(static_cast<unsigned char>(s[end])))
                s.erase(pos, possessive.size());
            else
                pos = end;
        }
    if (s.starts_with("st. "))
        s = "saint " + s.substr(4);
    else if (s.starts_with("st "))
        s = "saint " + s.substr(3);
    for (std::string_view suffix: { " parish", " county", " co." , " co" })
        if (s.size() > suffix.size() && s.ends_with(suffix))
        {
            s.resize(s.size() - suffix.size());
            break;
        }
    return s;
}

std::vector<GazetteerEntry> parse_gazetteer(std::string_view csv_text)
{
    auto const table = csv::Table(csv::parse(csv_text), "<gazetteer>");
    auto out = std::vector<GazetteerEntry> {};
    for (std::size_t i = 0; i < table.records().size(); ++i)
    {
        auto const lat = parse_double(table.field(i, "lat"), "lat");
        auto const lon = parse_double(table.field(i, "lon"), "lon");
        auto const& pop_text = table.field(i, "population");
        auto population = std::int64_t { 0 };
        if (!pop_text.empty())
        {
            auto const [ptr, ec] = std::from_chars(pop_text.data(), pop_text.data() + pop_text.size(), population);
            if (ec != std::errc {} || ptr != pop_text.data() + pop_text.size() || population < 0)
                throw Error(ErrorCode::MalformedRow, fmt::format("bad population '{}'", pop_text));
        }
        out.push_back(GazetteerEntry { table.field(i, "name"), Coordinate(lat, lon), population,
                                       table.field(i, "feature_class") });
    }
    return out;
}

std::vector<GazetteerEntry> load_gazetteer(const std::filesystem::path& path) { return parse_gazetteer(read_text(path)); }

GazetteerResolver::GazetteerResolver(std::vector<GazetteerEntry> gazetteer, std::shared_ptr<const EntityExtractor> extractor)
    : _gazetteer(std::move(gazetteer)),
      _extractor(extractor ? std::move(extractor) : std::make_shared<CapitalizedPhraseExtractor>())
{
}

std::vector<ToponymCandidate> GazetteerResolver::resolve(std::string_view text) const
{
    auto out = std::vector<ToponymCandidate> {};
    for (auto const& phrase: _extractor->extract(text))
    {
        auto const key = normalize_toponym(phrase);
        for (auto const& g: _gazetteer)
            if (normalize_toponym(g.name) == key)
                out.push_back(ToponymCandidate { g.name, g.coordinate, g.name == phrase ? 0.9 : 0.6 });
    }
    return out;
}

FixtureResolver FixtureResolver::from_json_text(std::string_view text)
{
    auto const doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array())
        throw Error(ErrorCode::MalformedRow, "resolver fixture must be a JSON array");
    auto entries = std::vector<Entry> {};
    try
    {
        for (auto const& e: doc)
        {
            auto entry = Entry { e.at("contains").get<std::string>(), {} };
            for (auto const& c: e.at("candidates"))
                entry.candidates.push_back(ToponymCandidate { c.at("name").get<std::string>(),
                                                              Coordinate(c.at("lat").get<double>(), c.at("lon").get<double>()),
                                                              c.at("score").get<double>() });
            entries.push_back(std::move(entry));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::MalformedRow, fmt::format("resolver fixture: {}", e.what()));
    }
    return FixtureResolver(std::move(entries));
}

FixtureResolver FixtureResolver::load(const std::filesystem::path& path) { return from_json_text(read_text(path)); }

std::vector<ToponymCandidate> FixtureResolver::resolve(std::string_view text) const
{
    auto out = std::vector<ToponymCandidate> {};
    for (auto const& e: _entries)
        if (text.find(e.contains) != std::string_view::npos)
            out.insert(out.end(), e.candidates.begin(), e.candidates.end());
    return out;
}

void HeuristicParams::validate() const
{
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
        throw Error(ErrorCode::ConfigInvalid, fmt::format("confidence_threshold {} outside [0, 1]", confidence_threshold));
    if (!(bbox_margin_deg >= 0.0))
        throw Error(ErrorCode::ConfigInvalid, "bbox_margin_deg must be non-negative");
    if (!(distance_gate_km > 0.0))
        throw Error(ErrorCode::ConfigInvalid, "distance_gate_km must be positive");
}

std::vector<std::string> heuristic_variants(std::string_view text, const AbbreviationTable& abbreviations,
                                            const CountyCentroidTable& table)
{
    auto expanded = abbreviations.expand(text);
    auto suffix = std::string(", Virginia");
    if (auto const county = find_county_mention(expanded, &table))
        suffix = county->is_city ? fmt::format(", {} city, Virginia", county->name)
                                 : fmt::format(", {} County, Virginia", county->name);
    auto variants = std::vector<std::string> { std::string(text) };
    if (expanded != text)
        variants.push_back(expanded);
    variants.push_back(expanded + suffix);
    return variants;
}

BaselineResult heuristic_geoparse(std::string_view text, const EntityResolver& resolver, const CountyCentroidTable& table,
                                  const HeuristicParams& params, const AbbreviationTable& abbreviations)
{
    params.validate();
    auto const expanded = abbreviations.expand(text);
    auto const county = county_centroid_for(expanded, table);

    auto candidates = std::vector<ToponymCandidate> {};
    for (auto const& variant: heuristic_variants(text, abbreviations, table))
    {
        candidates = resolver.resolve(variant);
        if (!candidates.empty())
            break;
    }

    auto const box = virginia_box(params.bbox_margin_deg);
    auto best = std::optional<ToponymCandidate> {};
    for (auto const& c: candidates)
    {
        if (!within_bbox(c.coordinate, box) || c.score < params.confidence_threshold)
            continue;
        if (county && haversine_km(c.coordinate, county->second) > params.distance_gate_km)
            continue;
        if (!best || c.score > best->score)
            best = c;
    }

    if (best)
        return BaselineResult { best->coordinate, Provenance::entity, best->name, !county.has_value() };
    if (county)
        return BaselineResult { county->second, Provenance::county, county->first, false };
    return BaselineResult { virginia_center(), Provenance::statewide, {}, false };
}

TunedHeuristic tune_heuristic_grid(std::span<const GrantAbstract> gold, const EntityResolver& resolver,
                                   const CountyCentroidTable& table, const HeuristicGrid& grid,
                                   const AbbreviationTable& abbreviations)
{
    auto scored = std::vector<const GrantAbstract*> {};
    for (auto const& g: gold)
        if (g.ground_truth)
            scored.push_back(&g);
    if (scored.empty())
        throw Error(ErrorCode::EmptyGold, "grid search needs at least one grant with ground truth");
    if (grid.confidence.empty() || grid.margin_deg.empty() || grid.gate_km.empty())
        throw Error(ErrorCode::ConfigInvalid, "every grid axis needs at least one value");

    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };

    auto best = std::optional<TunedHeuristic> {};
    auto evaluated = std::size_t { 0 };
    for (auto conf: sorted(grid.confidence))
        for (auto margin: sorted(grid.margin_deg))
            for (auto gate: sorted(grid.gate_km))
            {
                auto const params = HeuristicParams { conf, margin, gate };
                auto sum = 0.0;
                for (auto const* g: scored)
                    sum += haversine_km(heuristic_geoparse(g->text, resolver, table, params, abbreviations).coordinate,
                                        *g->ground_truth);
                auto const mean = sum / static_cast<double>(scored.size());
                ++evaluated;
                if (!best || mean < best->mean_error_km)
                    best = TunedHeuristic { params, mean, 0 };
            }
    best->evaluated = evaluated;
    return *best;
}

BaselineResult predict_ner_pipeline(std::string_view text, const EntityExtractor& extractor,
                                    std::span<const GazetteerEntry> gazetteer, const CountyCentroidTable& table)
{
    auto const box = virginia_box();
    const GazetteerEntry* best = nullptr;
    auto best_entity = std::string {};
    for (auto const& entity: extractor.extract(text))
    {
        auto const key = normalize_toponym(entity);
        for (auto const& g: gazetteer)
        {
            if (normalize_toponym(g.name) != key || !within_bbox(g.coordinate, box))
                continue;
            if (best == nullptr || g.population > best->population || (g.population == best->population && g.name < best->name))
            {
                best = &g;
                best_entity = entity;
            }
        }
    }
    if (best != nullptr)
        return BaselineResult { best->coordinate, Provenance::entity, best_entity, false };
    auto county = predict_county_centroid(text, table);
    if (county.provenance == Provenance::statewide)
        county = predict_county_centroid(expand_abbreviations(text), table);
    return county;
}

} // namespace grantgeo

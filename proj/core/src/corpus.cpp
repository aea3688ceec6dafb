// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/corpus.hpp>
#include <grantgeo/csv.hpp>
#include <grantgeo/error.hpp>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <fstream>
#include <set>
#include <sstream>

namespace grantgeo
{

namespace
{

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::optional<double> parse_double(std::string_view s)
{
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    if (s.empty())
        return std::nullopt;
    auto value = 0.0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc {} || ptr != s.data() + s.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

// Patentee-name token: upper-case letters with name punctuation, "&", or an initial.
bool is_caps_token(std::string_view token)
{
    if (token == "&")
        return true;
    auto letters = 0;
    for (std::size_t i = 0; i < token.size(); ++i)
    {
        auto const c = static_cast<unsigned char>(token[i]);
        if (std::isupper(c))
            ++letters;
        else if (c == 'c' && i == 1 && token[0] == 'M')
            continue; // McDONALD
        else if (c == '.' || c == '\'' || c == '-')
            continue;
        else
            return false;
    }
    return letters > 0;
}

bool has_capital_word(std::string_view token)
{
    auto run = 0;
    for (auto c: token)
    {
        run = std::isupper(static_cast<unsigned char>(c)) ? run + 1 : 0;
        if (run >= 2)
            return true;
    }
    return false;
}

} // namespace

GrantAbstract GrantAbstract::from_text(std::string row_id, std::string text, std::optional<Coordinate> truth)
{
    auto row = GrantAbstract {};
    row.row_id = std::move(row_id);
    row.word_count = grantgeo::word_count(text);
    row.fingerprint = grantgeo::fingerprint(text);
    row.text = std::move(text);
    row.ground_truth = truth;
    return row;
}

bool EvalSet::contains(std::string_view row_id) const
{
    return std::find(members.begin(), members.end(), row_id) != members.end();
}

std::vector<GrantAbstract> parse_ground_truth(std::string_view csv_text, std::string_view origin)
{
    auto rows = csv::parse(csv_text);
    if (rows.empty())
        return {};
    auto const table = csv::Table(std::move(rows), std::string(origin));
    for (auto name: { "row_id", "abstract_text", "word_count", "sha256", "truth_lat", "truth_lon" })
        (void) table.column(name);

    auto out = std::vector<GrantAbstract> {};
    auto seen = std::set<std::string> {};
    for (std::size_t i = 0; i < table.records().size(); ++i)
    {
        auto const line = i + 2;
        auto const& id = table.field(i, "row_id");
        if (id.empty())
            throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: empty row_id", origin, line));
        if (!seen.insert(id).second)
            throw Error(ErrorCode::DuplicateId, fmt::format("{}:{}: duplicate row_id '{}'", origin, line, id));

        auto const& lat_text = table.field(i, "truth_lat");
        auto const& lon_text = table.field(i, "truth_lon");
        auto truth = std::optional<Coordinate> {};
        if (!lat_text.empty() || !lon_text.empty())
        {
            auto const lat = parse_double(lat_text);
            auto const lon = parse_double(lon_text);
            if (!lat || !lon)
                throw Error(ErrorCode::MalformedRow,
                            fmt::format("{}:{}: bad truth coordinate '{}', '{}'", origin, line, lat_text, lon_text));
            try
            {
                truth = Coordinate(*lat, *lon);
            }
            catch (const Error& e)
            {
                throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: {}", origin, line, e.what()));
            }
        }

        auto row = GrantAbstract::from_text(id, table.field(i, "abstract_text"), truth);
        auto const& wc = table.field(i, "word_count");
        if (!wc.empty() && wc != std::to_string(row.word_count))
            throw Error(ErrorCode::MalformedRow,
                        fmt::format("{}:{}: word_count {} disagrees with text ({})", origin, line, wc, row.word_count));
        auto const& sha = table.field(i, "sha256");
        if (!sha.empty() && sha != row.fingerprint)
            throw Error(ErrorCode::MalformedRow, fmt::format("{}:{}: sha256 does not match text", origin, line));
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<GrantAbstract> load_ground_truth(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot open {}", path.string()));
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return parse_ground_truth(buffer.str(), path.string());
}

std::string format_ground_truth(std::span<const GrantAbstract> rows)
{
    auto out = std::string(corpus_csv_header) + "\n";
    for (const auto& r: rows)
    {
        auto lat = std::string {};
        auto lon = std::string {};
        if (r.ground_truth)
        {
            lat = fmt::format("{:.8f}", r.ground_truth->lat());
            lon = fmt::format("{:.8f}", r.ground_truth->lon());
        }
        out += csv::format_row({ r.row_id, r.text, std::to_string(r.word_count), r.fingerprint, lat, lon }) + "\n";
    }
    return out;
}

std::string fingerprint(std::string_view text)
{
    auto digest = std::array<unsigned char, EVP_MAX_MD_SIZE> {};
    auto length = 0u;
    auto ctx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1
        || EVP_DigestUpdate(ctx.get(), text.data(), text.size()) != 1
        || EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1)
        throw std::runtime_error("SHA-256 digest failed");

    auto out = std::string {};
    out.reserve(length * 2);
    for (auto i = 0u; i < length; ++i)
        out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound)
{
    if (bound <= 1)
        return 0;
    auto const threshold = (0 - bound) % bound;
    for (;;)
    {
        auto const r = rng();
        if (r >= threshold)
            return r % bound;
    }
}

std::vector<std::string> seeded_shuffle(std::vector<std::string> ids, std::uint64_t seed)
{
    std::sort(ids.begin(), ids.end());
    auto rng = std::mt19937_64(seed);
    for (auto i = ids.size(); i > 1; --i)
    {
        auto const j = uniform_below(rng, i);
        std::swap(ids[i - 1], ids[j]);
    }
    return ids;
}

std::pair<EvalSet, EvalSet> split_corpus(std::span<const GrantAbstract> rows, const SplitConfig& cfg)
{
    if (rows.empty())
        throw Error(ErrorCode::EmptyInput, "cannot split an empty corpus");
    if (!(cfg.dev_fraction > 0.0 && cfg.dev_fraction < 1.0))
        throw Error(ErrorCode::ConfigInvalid, fmt::format("dev_fraction {} outside (0, 1)", cfg.dev_fraction));

    auto ids = std::vector<std::string> {};
    ids.reserve(rows.size());
    for (const auto& r: rows)
        ids.push_back(r.row_id);
    auto shuffled = seeded_shuffle(std::move(ids), cfg.seed);

    auto const dev_size = static_cast<std::size_t>(std::floor(static_cast<double>(shuffled.size()) * cfg.dev_fraction + 1e-9));
    auto dev = EvalSet { .name = "dev", .members = { shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(dev_size) } };
    auto test = EvalSet { .name = "test", .members = { shuffled.begin() + static_cast<std::ptrdiff_t>(dev_size), shuffled.end() } };
    return { std::move(dev), std::move(test) };
}

EvalSet sample_fixed(const EvalSet& set, std::size_t n, std::uint64_t seed)
{
    if (n > set.members.size())
        throw Error(ErrorCode::SampleTooLarge, fmt::format("sample of {} from a set of {}", n, set.members.size()));
    auto shuffled = seeded_shuffle(set.members, seed);
    shuffled.resize(n);
    std::sort(shuffled.begin(), shuffled.end());
    return EvalSet { .name = set.name, .members = std::move(shuffled) };
}

std::string redact_patentee(std::string_view text, std::span<const std::string> extra_names)
{
    auto out = std::string(text);

    auto start = std::size_t { 0 };
    while (start < out.size() && is_space(out[start]))
        ++start;
    auto const comma = out.find(',', start);
    if (comma != std::string::npos && comma > start)
    {
        auto const segment = std::string_view(out).substr(start, comma - start);
        auto all_caps = true;
        auto has_word = false;
        auto pos = std::size_t { 0 };
        while (pos < segment.size())
        {
            while (pos < segment.size() && is_space(segment[pos]))
                ++pos;
            auto end = pos;
            while (end < segment.size() && !is_space(segment[end]))
                ++end;
            if (end == pos)
                break;
            auto const token = segment.substr(pos, end - pos);
            all_caps = all_caps && is_caps_token(token);
            has_word = has_word || has_capital_word(token);
            pos = end;
        }
        if (all_caps && has_word && !is_space(segment.back()))
            out.replace(start, comma - start, redaction_token);
    }

    for (const auto& name: extra_names)
    {
        if (name.empty())
            continue;
        for (auto at = out.find(name); at != std::string::npos; at = out.find(name, at + redaction_token.size()))
            out.replace(at, name.size(), redaction_token);
    }
    return out;
}

std::size_t word_count(std::string_view text)
{
    auto count = std::size_t { 0 };
    auto in_word = false;
    for (auto c: text)
    {
        if (is_space(c))
            in_word = false;
        else if (!in_word)
        {
            in_word = true;
            ++count;
        }
    }
    return count;
}

} // namespace grantgeo

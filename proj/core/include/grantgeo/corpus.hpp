// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <grantgeo/geo.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace grantgeo
{

struct GrantAbstract
{
    std::string row_id;
    std::string text;
    std::size_t word_count = 0;
    std::string fingerprint; ///< lowercase hex SHA-256 of `text`
    std::optional<Coordinate> ground_truth;

    /// Fills word_count and fingerprint from the text.
    [[nodiscard]] static GrantAbstract from_text(std::string row_id, std::string text,
                                                 std::optional<Coordinate> truth = std::nullopt);
};

struct SplitConfig
{
    std::uint64_t seed = 42;
    double dev_fraction = 0.20;
};

struct EvalSet
{
    std::string name;
    std::vector<std::string> members;

    [[nodiscard]] bool contains(std::string_view row_id) const;
};

/// Exact header of the corpus / ground-truth CSV.
inline constexpr std::string_view corpus_csv_header = "row_id,abstract_text,word_count,sha256,truth_lat,truth_lon";

[[nodiscard]] std::vector<GrantAbstract> load_ground_truth(const std::filesystem::path& path);
[[nodiscard]] std::vector<GrantAbstract> parse_ground_truth(std::string_view csv_text, std::string_view origin = "<memory>");
[[nodiscard]] std::string format_ground_truth(std::span<const GrantAbstract> rows);

[[nodiscard]] std::string fingerprint(std::string_view text);

/// Uniform integer in [0, bound) by rejection sampling on mt19937_64 output.
/// Used instead of std::uniform_int_distribution, whose output differs between
/// standard libraries.
[[nodiscard]] std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Sorts `ids`, then Fisher-Yates shuffles them (descending index, j = uniform_below(i + 1))
/// with mt19937_64 seeded by `seed`.
[[nodiscard]] std::vector<std::string> seeded_shuffle(std::vector<std::string> ids, std::uint64_t seed);

/// dev = the first floor(n * dev_fraction) shuffled ids, test = the rest.
[[nodiscard]] std::pair<EvalSet, EvalSet> split_corpus(std::span<const GrantAbstract> rows, const SplitConfig& cfg);

/// Seeded sample without replacement; members come back sorted by row_id.
[[nodiscard]] EvalSet sample_fixed(const EvalSet& set, std::size_t n, std::uint64_t seed);

inline constexpr std::string_view redaction_token = "[NAME]";

/// Replaces the leading all-caps patentee segment (before the first comma) and
/// every occurrence of `extra_names` with [NAME].
[[nodiscard]] std::string redact_patentee(std::string_view text, std::span<const std::string> extra_names = {});

[[nodiscard]] std::size_t word_count(std::string_view text);

} // namespace grantgeo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace grantgeo::csv
{

using Row = std::vector<std::string>;

/// RFC-4180 reader: quoted fields may hold commas, doubled quotes and line breaks.
/// CRLF and LF line endings are both accepted. A UTF-8 BOM is stripped.
[[nodiscard]] std::vector<Row> parse(std::string_view text);

[[nodiscard]] std::vector<Row> read_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a comma, quote, CR or LF.
[[nodiscard]] std::string escape(std::string_view field);

[[nodiscard]] std::string format_row(const Row& row);

/// Header row plus the index of each named column; missing columns raise MalformedRow.
class Table
{
  public:
    Table(std::vector<Row> rows, const std::filesystem::path& origin);

    [[nodiscard]] std::size_t column(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const;
    [[nodiscard]] const Row& header() const { return _header; }
    [[nodiscard]] const std::vector<Row>& records() const { return _records; }
    [[nodiscard]] const std::string& origin() const { return _origin; }

    /// Field of record `index`; short rows raise MalformedRow.
    [[nodiscard]] const std::string& field(std::size_t index, std::string_view name) const;

  private:
    Row _header;
    std::vector<Row> _records;
    std::string _origin;
};

[[nodiscard]] Table load_table(const std::filesystem::path& path);

} // namespace grantgeo::csv

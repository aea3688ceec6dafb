// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/csv.hpp>
#include <grantgeo/error.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace grantgeo::csv
{

std::vector<Row> parse(std::string_view text)
{
    if (text.starts_with("\xEF\xBB\xBF"))
        text.remove_prefix(3);

    auto rows = std::vector<Row> {};
    auto row = Row {};
    auto field = std::string {};
    auto in_quotes = false;
    auto field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        // A lone empty field is a blank line, not a record.
        if (!(row.size() == 1 && row.front().empty()))
            rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i)
    {
        auto const c = text[i];
        if (in_quotes)
        {
            if (c == '"')
            {
                if (i + 1 < text.size() && text[i + 1] == '"')
                {
                    field.push_back('"');
                    ++i;
                }
                else
                    in_quotes = false;
            }
            else
                field.push_back(c);
            continue;
        }

        switch (c)
        {
            case '"':
                if (!field_started && field.empty())
                    in_quotes = true;
                else
                    field.push_back(c);
                field_started = true;
                break;
            case ',': end_field(); break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n')
                    ++i;
                end_row();
                break;
            case '\n': end_row(); break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes)
        throw Error(ErrorCode::MalformedRow, "unterminated quoted field");
    if (field_started || !field.empty() || !row.empty())
        end_row();
    return rows;
}

std::vector<Row> read_file(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::DataMissing, fmt::format("cannot open {}", path.string()));
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string escape(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(field);
    auto out = std::string("\"");
    for (auto c: field)
    {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const Row& row)
{
    auto out = std::string {};
    for (std::size_t i = 0; i < row.size(); ++i)
    {
        if (i > 0)
            out.push_back(',');
        out += escape(row[i]);
    }
    return out;
}

Table::Table(std::vector<Row> rows, const std::filesystem::path& origin): _origin(origin.string())
{
    if (rows.empty())
        throw Error(ErrorCode::MalformedRow, fmt::format("{}: missing header row", _origin));
    _header = std::move(rows.front());
    _records.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
}

bool Table::has_column(std::string_view name) const
{
    return std::find(_header.begin(), _header.end(), name) != _header.end();
}

std::size_t Table::column(std::string_view name) const
{
    auto const it = std::find(_header.begin(), _header.end(), name);
    if (it == _header.end())
        throw Error(ErrorCode::MalformedRow, fmt::format("{}: missing column '{}'", _origin, name));
    return static_cast<std::size_t>(it - _header.begin());
}

const std::string& Table::field(std::size_t index, std::string_view name) const
{
    auto const col = column(name);
    auto const& record = _records.at(index);
    if (col >= record.size())
        throw Error(ErrorCode::MalformedRow, fmt::format("{}: record {} has no '{}' field", _origin, index + 1, name));
    return record[col];
}

Table load_table(const std::filesystem::path& path)
{
    return Table(read_file(path), path);
}

} // namespace grantgeo::csv

// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/geo.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <regex>

namespace grantgeo
{

namespace
{

constexpr double deg_to_rad = std::numbers::pi / 180.0;
constexpr double rad_to_deg = 180.0 / std::numbers::pi;
constexpr int unvisited_label = -2;

// Degree, minute and second glyphs seen in model output and OCR text.
const std::string degree_glyph = "(?:°|º|˚)";
const std::string minute_glyph = "(?:'|’|′|‘)";
const std::string second_glyph = "(?:\"|”|″|“|''|’’|′′)";

std::string dms_component(const char* hemispheres)
{
    return R"((\d{1,3})\s*)" + degree_glyph + R"(\s*(\d{1,2})\s*)" + minute_glyph
           + R"(\s*(\d{1,2}(?:\.\d+)?)\s*)" + second_glyph + R"(\s*([)" + hemispheres + "])";
}

const std::regex& dms_regex()
{
    static const std::regex re(dms_component("NSns") + R"([\s,;]*)" + dms_component("EWew"));
    return re;
}

const std::regex& decimal_regex()
{
    // The leading group stands in for a look-behind: the pair must not continue a longer number.
    static const std::regex re(R"((^|[^\d.\-])(-?\d{1,3}(?:\.\d+)?)\s*,\s*(-?\d{1,3}(?:\.\d+)?)(?![\d.]*\d))");
    return re;
}

double dms_value(const std::string& deg, const std::string& min, const std::string& sec, char hemisphere)
{
    auto const d = std::stod(deg);
    auto const m = std::stod(min);
    auto const s = std::stod(sec);
    if (m >= 60.0 || s >= 60.0)
        throw Error(ErrorCode::Unparseable, fmt::format("minutes/seconds out of range in {}°{}'{}\"", deg, min, sec));
    auto const value = d + m / 60.0 + s / 3600.0;
    auto const upper = static_cast<char>(std::toupper(static_cast<unsigned char>(hemisphere)));
    return (upper == 'S' || upper == 'W') ? -value : value;
}

Coordinate checked(double lat, double lon)
{
    try
    {
        return Coordinate(lat, lon);
    }
    catch (const Error& e)
    {
        throw Error(ErrorCode::Unparseable, e.what());
    }
}

struct UnitVector
{
    double x;
    double y;
    double z;
};

UnitVector to_unit(const Coordinate& c)
{
    auto const lat = c.lat() * deg_to_rad;
    auto const lon = c.lon() * deg_to_rad;
    return { std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat) };
}

} // namespace

Coordinate::Coordinate(double lat, double lon): _lat(lat), _lon(lon)
{
    if (!std::isfinite(lat) || !std::isfinite(lon))
        throw Error(ErrorCode::InvalidCoordinate, "non-finite coordinate");
    if (lat < -90.0 || lat > 90.0)
        throw Error(ErrorCode::InvalidCoordinate, fmt::format("latitude {} outside [-90, 90]", lat));
    if (lon < -180.0 || lon > 180.0)
        throw Error(ErrorCode::InvalidCoordinate, fmt::format("longitude {} outside [-180, 180]", lon));
}

BoundingBox BoundingBox::with_margin(double margin) const
{
    auto box = *this;
    box.margin_deg = margin;
    return box;
}

BoundingBox virginia_box(double margin_deg)
{
    return BoundingBox { .min_lat = 36.54, .max_lat = 39.47, .min_lon = -83.68, .max_lon = -75.24, .margin_deg = margin_deg };
}

int ClusterAssignment::cluster_count() const
{
    auto const it = std::max_element(labels.begin(), labels.end());
    return (it == labels.end() || *it < 0) ? 0 : *it + 1;
}

std::vector<std::size_t> ClusterAssignment::members(int cluster) const
{
    auto out = std::vector<std::size_t> {};
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cluster)
            out.push_back(i);
    return out;
}

Coordinate parse_coordinate_text(std::string_view text)
{
    auto const input = std::string(text);
    auto found = std::vector<Coordinate> {};

    for (auto it = std::sregex_iterator(input.begin(), input.end(), dms_regex()); it != std::sregex_iterator(); ++it)
    {
        auto const& m = *it;
        auto const lat = dms_value(m[1], m[2], m[3], m.str(4)[0]);
        auto const lon = dms_value(m[5], m[6], m[7], m.str(8)[0]);
        found.push_back(checked(lat, lon));
    }
    for (auto it = std::sregex_iterator(input.begin(), input.end(), decimal_regex()); it != std::sregex_iterator(); ++it)
    {
        auto const& m = *it;
        found.push_back(checked(std::stod(m[2]), std::stod(m[3])));
    }

    if (found.empty())
        throw Error(ErrorCode::Unparseable, fmt::format("no coordinate found in '{}'", text));
    if (found.size() > 1)
        throw Error(ErrorCode::Unparseable, fmt::format("{} coordinates found in '{}'", found.size(), text));
    return found.front();
}

std::string format_dms(const Coordinate& c, int frac_digits)
{
    frac_digits = std::clamp(frac_digits, 0, 9);
    auto const scale = static_cast<std::int64_t>(std::llround(std::pow(10.0, frac_digits)));

    auto render = [&](double value, char positive, char negative, bool zero_is_positive) {
        auto const hemisphere = (value > 0.0 || (value == 0.0 && zero_is_positive)) ? positive : negative;
        auto const units = std::llround(std::abs(value) * 3600.0 * static_cast<double>(scale));
        auto const per_degree = 3600 * scale;
        auto const per_minute = 60 * scale;
        auto const deg = units / per_degree;
        auto const min = (units % per_degree) / per_minute;
        auto const sec_units = units % per_minute;
        auto const whole = sec_units / scale;
        if (frac_digits == 0)
            return fmt::format("{}°{}'{}\"{}", deg, min, whole, hemisphere);
        return fmt::format("{}°{}'{}.{:0{}}\"{}", deg, min, whole, sec_units % scale, frac_digits, hemisphere);
    };

    return render(c.lat(), 'N', 'S', true) + " " + render(c.lon(), 'E', 'W', false);
}

std::string format_decimal(const Coordinate& c, int frac_digits)
{
    return fmt::format("{:.{}f}, {:.{}f}", c.lat(), frac_digits, c.lon(), frac_digits);
}

double haversine_km(const Coordinate& a, const Coordinate& b) noexcept
{
    auto const lat1 = a.lat() * deg_to_rad;
    auto const lat2 = b.lat() * deg_to_rad;
    auto const dlat = lat2 - lat1;
    auto const dlon = (b.lon() - a.lon()) * deg_to_rad;
    auto const s1 = std::sin(dlat / 2.0);
    auto const s2 = std::sin(dlon / 2.0);
    auto const h = std::clamp(s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2, 0.0, 1.0);
    return 2.0 * geo_constants::earth_radius_km * std::asin(std::sqrt(h));
}

Coordinate spherical_centroid(std::span<const Coordinate> points)
{
    if (points.size() < 2)
        throw Error(ErrorCode::TooFewPoints, fmt::format("centroid needs at least 2 points, got {}", points.size()));

    auto sum = UnitVector { 0.0, 0.0, 0.0 };
    for (const auto& p: points)
    {
        auto const v = to_unit(p);
        sum.x += v.x;
        sum.y += v.y;
        sum.z += v.z;
    }
    auto const n = static_cast<double>(points.size());
    auto const mean = UnitVector { sum.x / n, sum.y / n, sum.z / n };
    auto const norm = std::sqrt(mean.x * mean.x + mean.y * mean.y + mean.z * mean.z);
    if (norm < 1e-12)
        throw Error(ErrorCode::DegenerateMean, "mean unit vector has vanishing norm");

    auto const lat = std::atan2(mean.z, std::hypot(mean.x, mean.y)) * rad_to_deg;
    auto const lon = std::atan2(mean.y, mean.x) * rad_to_deg;
    return Coordinate(std::clamp(lat, -90.0, 90.0), std::clamp(lon, -180.0, 180.0));
}

ClusterAssignment geodesic_dbscan(std::span<const Coordinate> points, double eps_km, std::size_t min_pts)
{
    auto result = ClusterAssignment { .labels = std::vector<int>(points.size(), unvisited_label), .eps_km = eps_km, .min_pts = min_pts };
    auto& labels = result.labels;

    auto neighbours = [&](std::size_t i) {
        auto out = std::vector<std::size_t> {};
        for (std::size_t j = 0; j < points.size(); ++j)
            if (haversine_km(points[i], points[j]) <= eps_km)
                out.push_back(j);
        return out;
    };

    auto next_cluster = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        if (labels[i] != unvisited_label)
            continue;
        auto seeds = neighbours(i);
        if (seeds.size() < min_pts)
        {
            labels[i] = noise_label;
            continue;
        }

        auto const cluster = next_cluster++;
        labels[i] = cluster;
        auto queue = std::deque<std::size_t>(seeds.begin(), seeds.end());
        while (!queue.empty())
        {
            auto const q = queue.front();
            queue.pop_front();
            if (labels[q] == noise_label)
                labels[q] = cluster;
            if (labels[q] != unvisited_label)
                continue;
            labels[q] = cluster;
            auto reach = neighbours(q);
            if (reach.size() >= min_pts)
                queue.insert(queue.end(), reach.begin(), reach.end());
        }
    }
    return result;
}

bool within_bbox(const Coordinate& c, const BoundingBox& box) noexcept
{
    auto const m = box.margin_deg;
    return c.lat() >= box.min_lat - m && c.lat() <= box.max_lat + m && c.lon() >= box.min_lon - m
           && c.lon() <= box.max_lon + m;
}

} // namespace grantgeo

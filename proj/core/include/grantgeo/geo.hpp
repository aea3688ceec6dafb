// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grantgeo
{

namespace geo_constants
{
/// IUGG mean Earth radius. Every distance in the library goes through this value.
inline constexpr double earth_radius_km = 6371.0088;
} // namespace geo_constants

/// Decimal-degree latitude/longitude. Construction validates finiteness and range.
class Coordinate
{
  public:
    Coordinate(double lat, double lon);

    [[nodiscard]] double lat() const noexcept { return _lat; }
    [[nodiscard]] double lon() const noexcept { return _lon; }

    friend bool operator==(const Coordinate&, const Coordinate&) = default;

  private:
    double _lat;
    double _lon;
};

struct BoundingBox
{
    double min_lat;
    double max_lat;
    double min_lon;
    double max_lon;
    double margin_deg = 0.0;

    [[nodiscard]] BoundingBox with_margin(double margin) const;
};

/// Default statewide filter used by the geocoder and the heuristic baselines.
[[nodiscard]] BoundingBox virginia_box(double margin_deg = 0.0);

inline constexpr int noise_label = -1;

struct ClusterAssignment
{
    std::vector<int> labels; ///< cluster index per point, or noise_label
    double eps_km = 0.0;
    std::size_t min_pts = 0;

    [[nodiscard]] int cluster_count() const;
    [[nodiscard]] std::vector<std::size_t> members(int cluster) const;
};

/// Accepts one coordinate either as DMS (`37°00'07.2"N 77°07'58.8"W`) or as a
/// decimal pair (`37.166303, -77.240091`). Prose is tolerated before and after
/// the coordinate but never inside it. Throws Error(Unparseable).
[[nodiscard]] Coordinate parse_coordinate_text(std::string_view text);

/// Renders `D°M'S.sss"N D°M'S.sss"W` without zero padding. Zero renders as N/W.
[[nodiscard]] std::string format_dms(const Coordinate& c, int frac_digits);

/// `lat, lon` with a fixed number of fractional digits.
[[nodiscard]] std::string format_decimal(const Coordinate& c, int frac_digits);

[[nodiscard]] double haversine_km(const Coordinate& a, const Coordinate& b) noexcept;

/// Mean of unit vectors projected back to latitude/longitude.
/// Throws TooFewPoints for fewer than two inputs and DegenerateMean when the
/// mean vector vanishes.
[[nodiscard]] Coordinate spherical_centroid(std::span<const Coordinate> points);

/// DBSCAN with haversine distance. Points are visited in index order and a
/// border point joins the first cluster that reaches it.
[[nodiscard]] ClusterAssignment geodesic_dbscan(std::span<const Coordinate> points,
                                                double eps_km,
                                                std::size_t min_pts);

[[nodiscard]] bool within_bbox(const Coordinate& c, const BoundingBox& box) noexcept;

} // namespace grantgeo

#include "quadmap/grid.hpp"

#include "quadmap/errors.hpp"

#include <cmath>
#include <cstdio>

namespace quadmap {

namespace {

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

int parse_padded(std::string_view name, std::size_t pos, std::string_view token_name) {
    int value = 0;
    for (std::size_t i = pos; i < pos + 4; ++i) {
        const char c = name[i];
        if (c < '0' || c > '9') {
            throw ParseError("quad name '" + std::string(name) + "': " +
                             std::string(token_name) + " is not a 4-digit number");
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

} // namespace

QuadId parse_quad_id(std::string_view name) {
    // L15-XXXXE-YYYYN
    if (name.size() != 15) {
        throw ParseError("quad name '" + std::string(name) + "': expected 15 characters");
    }
    if (name.substr(0, 4) != "L15-") {
        throw ParseError("quad name '" + std::string(name) + "': missing 'L15-' prefix");
    }
    const int x = parse_padded(name, 4, "column token");
    if (name[8] != 'E') {
        throw ParseError("quad name '" + std::string(name) + "': column token must end in 'E'");
    }
    if (name[9] != '-') {
        throw ParseError("quad name '" + std::string(name) + "': missing separator before row");
    }
    const int y = parse_padded(name, 10, "row token");
    if (name[14] != 'N') {
        throw ParseError("quad name '" + std::string(name) + "': row token must end in 'N'");
    }
    if (x >= kQuadsPerAxis) {
        throw ParseError("quad name '" + std::string(name) + "': column " + std::to_string(x) +
                         " out of range [0, 2048)");
    }
    if (y >= kQuadsPerAxis) {
        throw ParseError("quad name '" + std::string(name) + "': row " + std::to_string(y) +
                         " out of range [0, 2048)");
    }
    return {x, y};
}

std::string format_quad_id(QuadId q) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "L15-%04dE-%04dN", q.x, q.y);
    return buf;
}

GeoBox quad_bounds(QuadId q) {
    // Each edge is a function of its integer index only, so the max_x of
    // quad x and the min_x of quad x+1 are the same double.
    const auto edge_x = [](int i) { return -kMercatorExtentM + i * kQuadSideM; };
    const auto edge_y = [](int i) { return kMercatorExtentM - i * kQuadSideM; };
    return {edge_x(q.x), edge_y(q.y + 1), edge_x(q.x + 1), edge_y(q.y)};
}

GridSpec quad_grid(QuadId q, int size) {
    const GeoBox b = quad_bounds(q);
    return {b.min_x, b.max_y, kQuadSideM / size, size, size};
}

MercatorXY project_forward(double lon_deg, double lat_deg) {
    if (!(std::abs(lat_deg) < kMaxMercatorLatDeg)) {
        throw DomainError("latitude " + std::to_string(lat_deg) +
                          " outside Web Mercator range (|lat| < 85.05113)");
    }
    const double x = kEarthRadiusM * deg_to_rad(lon_deg);
    // asinh(tan(lat)) is the log-tan form, exact at the equator.
    const double y = kEarthRadiusM * std::asinh(std::tan(deg_to_rad(lat_deg)));
    return {x, y};
}

LonLat project_inverse(double x, double y) {
    constexpr double slack = 1.0; // meter of tolerance at the map edge
    if (std::abs(x) > kMercatorExtentM + slack || std::abs(y) > kMercatorExtentM + slack) {
        throw DomainError("mercator coordinate outside the map extent");
    }
    const double lon = rad_to_deg(x / kEarthRadiusM);
    const double lat = rad_to_deg(std::atan(std::sinh(y / kEarthRadiusM)));
    return {lon, lat};
}

QuadId quad_for_point(double lon_deg, double lat_deg) {
    // Wrap the antimeridian so longitude 180 lands in column 0.
    double lon = lon_deg;
    if (lon >= 180.0) {
        lon -= 360.0;
    } else if (lon < -180.0) {
        lon += 360.0;
    }
    const MercatorXY p = project_forward(lon, lat_deg);
    const auto clamp_index = [](double v) {
        const int i = static_cast<int>(std::floor(v));
        return i < 0 ? 0 : (i >= kQuadsPerAxis ? kQuadsPerAxis - 1 : i);
    };
    const int col = clamp_index((p.x + kMercatorExtentM) / kQuadSideM);
    const int row = clamp_index((kMercatorExtentM - p.y) / kQuadSideM);
    return {col, row};
}

} // namespace quadmap

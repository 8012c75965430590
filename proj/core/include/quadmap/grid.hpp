#pragma once

#include <compare>
#include <numbers>
#include <string>
#include <string_view>

namespace quadmap {

// Spherical Web Mercator frame. All derived constants are exact binary
// scalings of kWorldSizeM so that quad edges tile without rounding gaps.
inline constexpr double kEarthRadiusM = 6378137.0;
inline constexpr double kMercatorExtentM = std::numbers::pi * kEarthRadiusM;
inline constexpr double kWorldSizeM = 2.0 * kMercatorExtentM;
inline constexpr double kMaxMercatorLatDeg = 85.05113;

inline constexpr int kQuadPixels = 4096;   // basemap quad edge, pixels
inline constexpr int kQuadsPerAxis = 2048; // global grid is 2048 x 2048 quads
inline constexpr int kPoolFactor = 8;      // basemap pixels per output pixel
inline constexpr int kOutputPixels = kQuadPixels / kPoolFactor;

/// Pixel size at zoom 15 (256 * 2^15 pixels around the equator).
inline constexpr double kZoom15PixelM = kWorldSizeM / 8388608.0; // 2^23
inline constexpr double kQuadSideM = kWorldSizeM / kQuadsPerAxis;

/// Column/row address of one basemap quad. Row 0 sits at the northern map
/// edge (northwest-origin convention).
struct QuadId {
    int x = 0;
    int y = 0;

    auto operator<=>(const QuadId&) const = default;
};

/// Axis-aligned box in Web Mercator meters.
struct GeoBox {
    double min_x = 0;
    double min_y = 0;
    double max_x = 0;
    double max_y = 0;

    bool valid() const { return min_x < max_x && min_y < max_y; }
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }

    /// Positive-area overlap (touching edges do not count).
    bool intersects(const GeoBox& o) const {
        return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
    }

    /// Containment matching the grid's row/col convention: half-open on x
    /// ([min_x, max_x)) and top-inclusive on y ((min_y, max_y]), so a point
    /// on a shared edge belongs to exactly one cell.
    bool contains(double x, double y) const {
        return x >= min_x && x < max_x && y > min_y && y <= max_y;
    }
};

/// Regular north-up grid: origin is the top-left (min_x, max_y) corner,
/// rows run south, columns run east.
struct GridSpec {
    double origin_x = 0;
    double origin_y = 0;
    double pixel_size = 0;
    int width = 0;
    int height = 0;

    bool valid() const { return pixel_size > 0 && width > 0 && height > 0; }

    GeoBox bounds() const {
        return {origin_x, origin_y - height * pixel_size, origin_x + width * pixel_size,
                origin_y};
    }

    double center_x(int col) const { return origin_x + (col + 0.5) * pixel_size; }
    double center_y(int row) const { return origin_y - (row + 0.5) * pixel_size; }

    bool operator==(const GridSpec&) const = default;
};

/// Parse a quad name of the form `L15-XXXXE-YYYYN` (zero-padded decimal).
/// Throws ParseError naming the offending token.
QuadId parse_quad_id(std::string_view name);

/// Format a QuadId back to its canonical name; inverse of parse_quad_id.
std::string format_quad_id(QuadId q);

/// Mercator bounds of a quad. Shared edges of adjacent quads are bit-equal
/// because every edge coordinate is computed from its integer index alone.
GeoBox quad_bounds(QuadId q);

/// Full-resolution (4096 px) grid spec covering a quad; `size` overrides the
/// edge length for reduced-scale fixtures.
GridSpec quad_grid(QuadId q, int size = kQuadPixels);

/// Quad containing the forward-projected point. Longitude 180 wraps to -180.
/// Throws DomainError when |lat| >= kMaxMercatorLatDeg.
QuadId quad_for_point(double lon_deg, double lat_deg);

struct MercatorXY {
    double x = 0;
    double y = 0;
};

struct LonLat {
    double lon = 0;
    double lat = 0;
};

/// Spherical Mercator forward projection (degrees to meters).
MercatorXY project_forward(double lon_deg, double lat_deg);

/// Spherical Mercator inverse projection (meters to degrees).
LonLat project_inverse(double x, double y);

} // namespace quadmap

#pragma once

#include "quadmap/raster.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace quadmap::change {

/// Per-pixel volume-proxy change between two timestamps (later - earlier).
struct GrowthField {
    QuadRaster delta; // single band; nodata where any input was nodata
};

/// delta = d1*h1 - d0*h0 with densities in [0,1] and heights in meters.
GrowthField volume_delta(const QuadRaster& d0, const QuadRaster& h0_m, const QuadRaster& d1,
                         const QuadRaster& h1_m);

struct GrowthMask {
    GridSpec spec;
    std::vector<std::uint8_t> mask; // 1 = selected
    double threshold = 0.0;         // nearest-rank percentile of positive deltas
    long selected = 0;
    bool empty = false; // no strictly positive delta existed
};

/// Pool strictly positive deltas, take the nearest-rank percentile of the
/// sorted sample (rank ceil(q/100 * n)), and select cells with
/// delta >= threshold. Zeros and negatives are never selected.
GrowthMask growth_mask_p95(const GrowthField& field, double percentile = 95.0);

/// Closed ring in Web Mercator meters (first vertex repeated at the end).
using Ring = std::vector<std::array<double, 2>>;

struct ChangePolygon {
    Ring exterior;           // counterclockwise
    std::vector<Ring> holes; // clockwise
    double area_m2 = 0.0;
    long pixel_count = 0;
    double delta_sum = 0.0;
};

/// One polygon per 8-connected component of the mask, traced along pixel
/// edges (no simplification beyond merging collinear runs), holes included.
/// `values` when given is accumulated into delta_sum per component.
std::vector<ChangePolygon> vectorize_8conn(std::span<const std::uint8_t> mask,
                                           const GridSpec& spec,
                                           std::span<const float> values = {});

/// 8-connected labeling; returns one component id per masked pixel, -1
/// elsewhere. Exposed for the partition tests.
std::vector<int> label_components_8conn(std::span<const std::uint8_t> mask, int width,
                                        int height);

/// GeoJSON FeatureCollection (EPSG:3857 coordinates) with properties
/// pixel_count, area_m2 and delta_sum.
std::string to_geojson(std::span<const ChangePolygon> polygons);

} // namespace quadmap::change

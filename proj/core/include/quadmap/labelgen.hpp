#pragma once

#include "quadmap/raster.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace quadmap::labels {

/// Bounding box of one source tile, used to decide which quads it feeds.
struct TileFootprint {
    std::string id;
    GeoBox box;
    std::string source;
};

/// Per-quad training label: band 0 density in [0,1], band 1 normalized
/// height in [0,1], nodata exactly -1.
struct LabelQuad {
    QuadId quad;
    QuadRaster raster;

    std::span<const float> density() const { return raster.band(0); }
    std::span<const float> height_norm() const { return raster.band(1); }
};

using QuadIndex = std::map<QuadId, std::vector<TileFootprint>>;

/// One-to-many map from quads to the tiles whose boxes overlap them with
/// positive area.
QuadIndex build_quad_index(std::span<const QuadId> quads,
                           std::span<const TileFootprint> tiles);

enum class HeightUnits { Meters, Normalized01 };
enum class ResampleKind { Bilinear, Nearest };

struct LabelGenOptions {
    HeightUnits height_units = HeightUnits::Meters;
    ResampleKind resample = ResampleKind::Bilinear; // nearest available for binary sources
    int out_size = kOutputPixels;                   // 512 at production scale
};

/// Source tiles to one label quad: resample to the quad's full-resolution
/// grid, merge-crop to the quad bounds, pool 8x ignoring nodata, then clamp
/// density to [0,1] and map height meters through clip(h, 0, 100)/100.
/// Tiles that don't intersect produce a fully-nodata label, not an error.
LabelQuad make_label_quad(QuadId q, std::span<const QuadRaster> tiles,
                          const LabelGenOptions& options = {});

struct SplitResult {
    std::vector<QuadId> train;
    std::vector<QuadId> val;
    std::vector<QuadId> test;
};

/// Deterministic quad-level split. Fractions must sum to 1 (1e-9 slack);
/// subset sizes follow largest-remainder rounding of fraction * count.
SplitResult split_quads(std::span<const QuadId> quads, std::array<double, 3> fractions,
                        std::uint64_t seed);

inline constexpr float kLabelNodata = -1.0f;
inline constexpr double kHeightClipMeters = 100.0;

} // namespace quadmap::labels

#pragma once

#include "quadmap/raster.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace quadmap::post {

/// Pixel quality classes carried by a usable-data mask. Missing pixels are
/// treated as unclear at full confidence (clarity score 1).
enum class UdmClass : std::uint8_t {
    Clear = 0,
    Cloud = 1,
    Haze = 2,
    Shadow = 3,
    Snow = 4,
    Missing = 5,
};

/// Full-resolution usable-data mask: class codes plus confidence in percent.
struct UdmQuad {
    GridSpec spec;
    std::vector<std::uint8_t> clazz;
    std::vector<float> confidence;
};

/// Pooled per-output-pixel usability score in [1, 4].
struct ClarityRaster {
    GridSpec spec;
    std::vector<float> scores;
};

/// Four chronological quarterly layers (t-3 .. t) for one quad and band,
/// plus the clarity raster of quarter t when a UDM exists.
struct TimeSeriesStack {
    std::vector<QuadRaster> quarters;
    std::optional<ClarityRaster> clarity;
};

struct MaskLayers {
    QuadRaster gsw_transitions; // surface-water transition codes, single band
    QuadRaster dem;             // elevation in meters, single band
};

struct PostprocParams {
    double conf_threshold = 95.0;      // percent; strictly above is high confidence
    double clarity_split = 3.5;        // 2-2 split tie break
    double density_floor = 2.0 / 255.0;
    double min_height_m = 2.4;
    double elevation_cap_m = 5100.0;
};

enum class BandKind { Density, Height };

/// Per-pixel clarity: clear/high 4, clear/low 3, unclear/low 2, unclear/high 1
/// (Missing counts as unclear at confidence 100), pooled 8x by block mean.
ClarityRaster clarity_score_quad(const UdmQuad& udm, double conf_threshold = 95.0);

/// Rolling four-quarter vote. A quarter indicates a building when its value
/// exceeds density_floor (density) or 0 (height). At least three building
/// quarters take the median of those values; at least three non-building
/// quarters give 0; a 2-2 split takes the max when clarity >= clarity_split,
/// 0 when below, and the median of all four when no clarity is available.
/// Even-count medians average the two middle order statistics.
QuadRaster rolling_aggregate(const TimeSeriesStack& stack, BandKind kind,
                             const PostprocParams& params = {});

/// Zero predictions on surface-water transition codes {1,2,4,5,7,8} and above
/// the elevation cap; every other cell is copied bit for bit.
QuadRaster mask_uninhabitable(const QuadRaster& pred, const MaskLayers& masks,
                              const PostprocParams& params = {});

struct AgreementResult {
    QuadRaster density;
    QuadRaster height_m;
};

/// Logical consistency between the two layers, to fixpoint: zero density
/// annihilates height; positive density implies height >= min_height_m,
/// which in turn implies density >= density_floor.
AgreementResult enforce_agreement(const QuadRaster& density, const QuadRaster& height_m,
                                  const PostprocParams& params = {});

} // namespace quadmap::post

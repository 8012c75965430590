#pragma once

#include "quadmap/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace quadmap {

enum class Crs : std::uint32_t {
    WebMercator = 3857,
    Wgs84 = 4326,
};

/// Georeferenced float32 grid with one or more band planes and an explicit
/// nodata sentinel. Data is band-major, row-major within a band.
struct QuadRaster {
    GridSpec spec;
    int bands = 1;
    Crs crs = Crs::WebMercator;
    float nodata = -1.0f;
    std::vector<float> data;

    static QuadRaster filled(const GridSpec& spec, int bands, float value,
                             float nodata = -1.0f, Crs crs = Crs::WebMercator);

    std::size_t plane_size() const {
        return static_cast<std::size_t>(spec.width) * spec.height;
    }

    float& at(int band, int row, int col) {
        return data[band * plane_size() + static_cast<std::size_t>(row) * spec.width + col];
    }
    float at(int band, int row, int col) const {
        return data[band * plane_size() + static_cast<std::size_t>(row) * spec.width + col];
    }

    std::span<float> band(int b) { return {data.data() + b * plane_size(), plane_size()}; }
    std::span<const float> band(int b) const {
        return {data.data() + b * plane_size(), plane_size()};
    }

    bool is_nodata(float v) const { return v == nodata; }
};

/// Block-mean downsampling that ignores nodata cells; a block with no valid
/// cell stays nodata. Width and height must be divisible by `factor`.
/// `nodata` overrides the raster's own sentinel when given.
QuadRaster downsample_average(const QuadRaster& r, int factor,
                              std::optional<float> nodata = std::nullopt);

/// Mosaic `tiles` onto a grid covering `target` at the finest input pixel
/// size. Later tiles win on non-nodata cells; uncovered cells are nodata.
/// Tiles must share CRS, band count and nodata.
QuadRaster merge_crop(std::span<const QuadRaster> tiles, const GeoBox& target);

/// Bilinear resampling between grids in the same CRS. Any nodata neighbor
/// makes the output cell nodata; output cells outside the input extent are
/// nodata; an identical in/out spec reproduces the input bit for bit.
QuadRaster resample_bilinear(const QuadRaster& r, const GridSpec& out);

/// Nearest-neighbor resampling under the same extent rules as bilinear.
QuadRaster resample_nearest(const QuadRaster& r, const GridSpec& out);

/// Format-dispatching read/write: `.tif`/`.tiff` is GeoTIFF, everything else
/// is the TGRD flat binary grid. Both round-trip float32 payloads losslessly.
QuadRaster read_raster(const std::filesystem::path& path);
void write_raster(const QuadRaster& r, const std::filesystem::path& path);

/// TGRD container: magic "TGRD"; little-endian header of width (u32),
/// height (u32), bands (u32), pixel_size (f64), origin_x (f64), origin_y
/// (f64), crs_code (u32), nodata (f32); then band-major raw float32.
QuadRaster read_tgrd(const std::filesystem::path& path);
void write_tgrd(const QuadRaster& r, const std::filesystem::path& path);

/// GeoTIFF container: tiled 256x256, DEFLATE, float32, separate planes,
/// EPSG:3857/4326 geo keys, GDAL-style nodata tag.
QuadRaster read_geotiff(const std::filesystem::path& path);
void write_geotiff(const QuadRaster& r, const std::filesystem::path& path);

namespace detail {
/// Writer with an explicit EPSG code, used to produce unsupported-CRS
/// fixtures in tests.
void write_geotiff_with_code(const QuadRaster& r, const std::filesystem::path& path,
                             std::uint16_t epsg_code);
} // namespace detail

} // namespace quadmap

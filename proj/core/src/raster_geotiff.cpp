#include "quadmap/errors.hpp"
#include "quadmap/raster.hpp"

#include <tiffio.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace quadmap {

namespace {

// GeoTIFF and GDAL tags not known to vanilla libtiff.
constexpr ttag_t kTagModelPixelScale = 33550;
constexpr ttag_t kTagModelTiepoint = 33922;
constexpr ttag_t kTagGeoKeyDirectory = 34735;
constexpr ttag_t kTagGdalNodata = 42113;

// GeoTIFF key ids.
constexpr std::uint16_t kKeyModelType = 1024;
constexpr std::uint16_t kKeyRasterType = 1025;
constexpr std::uint16_t kKeyGeographicType = 2048;
constexpr std::uint16_t kKeyProjectedCsType = 3072;

const TIFFFieldInfo kGeoFieldInfo[] = {
    {kTagModelPixelScale, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelPixelScaleTag")},
    {kTagModelTiepoint, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTiepointTag")},
    {kTagGeoKeyDirectory, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_SHORT, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoKeyDirectoryTag")},
    {kTagGdalNodata, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_ASCII, FIELD_CUSTOM, 1, 0,
     const_cast<char*>("GDAL_NODATA")},
};

TIFFExtendProc g_parent_extender = nullptr;

void geo_tag_extender(TIFF* tif) {
    TIFFMergeFieldInfo(tif, kGeoFieldInfo, sizeof(kGeoFieldInfo) / sizeof(kGeoFieldInfo[0]));
    if (g_parent_extender) {
        g_parent_extender(tif);
    }
}

thread_local std::string t_tiff_error;

void error_handler(const char*, const char* fmt, va_list args) {
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    if (!t_tiff_error.empty()) {
        t_tiff_error += "; ";
    }
    t_tiff_error += buf;
}

void warning_handler(const char*, const char*, va_list) {}

void init_libtiff_once() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        g_parent_extender = TIFFSetTagExtender(geo_tag_extender);
        TIFFSetErrorHandler(error_handler);
        TIFFSetWarningHandler(warning_handler);
    });
}

struct TiffCloser {
    void operator()(TIFF* t) const {
        if (t) {
            TIFFClose(t);
        }
    }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

constexpr std::uint32_t kTileSize = 256;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    std::string msg = "GeoTIFF '" + path.string() + "': " + what;
    if (!t_tiff_error.empty()) {
        msg += " (" + t_tiff_error + ")";
    }
    throw FormatError(msg);
}

} // namespace

namespace detail {

void write_geotiff_with_code(const QuadRaster& r, const std::filesystem::path& path,
                             std::uint16_t epsg_code) {
    init_libtiff_once();
    t_tiff_error.clear();
    if (!r.spec.valid() || r.bands < 1 ||
        r.data.size() != static_cast<std::size_t>(r.bands) * r.plane_size()) {
        throw ArgumentError("raster invariants violated, refusing to write '" + path.string() +
                            "'");
    }
    TiffPtr tif(TIFFOpen(path.string().c_str(), "w"));
    if (!tif) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    TIFF* t = tif.get();
    const auto width = static_cast<std::uint32_t>(r.spec.width);
    const auto height = static_cast<std::uint32_t>(r.spec.height);
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, width);
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, height);
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, 32);
    TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_IEEEFP);
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(r.bands));
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_SEPARATE);
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
    TIFFSetField(t, TIFFTAG_COMPRESSION, COMPRESSION_ADOBE_DEFLATE);
    TIFFSetField(t, TIFFTAG_TILEWIDTH, kTileSize);
    TIFFSetField(t, TIFFTAG_TILELENGTH, kTileSize);
    if (r.bands > 1) {
        std::vector<std::uint16_t> extra(static_cast<std::size_t>(r.bands) - 1,
                                         EXTRASAMPLE_UNSPECIFIED);
        TIFFSetField(t, TIFFTAG_EXTRASAMPLES, static_cast<std::uint16_t>(extra.size()),
                     extra.data());
    }

    const double scale[3] = {r.spec.pixel_size, r.spec.pixel_size, 0.0};
    const double tiepoint[6] = {0.0, 0.0, 0.0, r.spec.origin_x, r.spec.origin_y, 0.0};
    TIFFSetField(t, kTagModelPixelScale, 3, scale);
    TIFFSetField(t, kTagModelTiepoint, 6, tiepoint);

    const bool geographic = epsg_code == 4326;
    const std::uint16_t keys[16] = {
        1, 1, 0, 3, // version, revision, minor, key count
        kKeyModelType, 0, 1, static_cast<std::uint16_t>(geographic ? 2 : 1),
        kKeyRasterType, 0, 1, 1, // PixelIsArea
        geographic ? kKeyGeographicType : kKeyProjectedCsType, 0, 1, epsg_code};
    TIFFSetField(t, kTagGeoKeyDirectory, 16, keys);

    char nodata_text[48];
    std::snprintf(nodata_text, sizeof(nodata_text), "%.9g", static_cast<double>(r.nodata));
    TIFFSetField(t, kTagGdalNodata, nodata_text);

    std::vector<float> tile(static_cast<std::size_t>(kTileSize) * kTileSize, 0.0f);
    for (int b = 0; b < r.bands; ++b) {
        for (std::uint32_t ty = 0; ty < height; ty += kTileSize) {
            for (std::uint32_t tx = 0; tx < width; tx += kTileSize) {
                std::fill(tile.begin(), tile.end(), 0.0f);
                const std::uint32_t rows = std::min(kTileSize, height - ty);
                const std::uint32_t cols = std::min(kTileSize, width - tx);
                for (std::uint32_t dr = 0; dr < rows; ++dr) {
                    const float* src = &r.data[b * r.plane_size() +
                                               static_cast<std::size_t>(ty + dr) * width + tx];
                    std::memcpy(&tile[static_cast<std::size_t>(dr) * kTileSize], src,
                                cols * sizeof(float));
                }
                if (TIFFWriteTile(t, tile.data(), tx, ty, 0, static_cast<std::uint16_t>(b)) < 0) {
                    fail(path, "tile write failed at tile (" + std::to_string(tx) + ", " +
                                   std::to_string(ty) + "), band " + std::to_string(b));
                }
            }
        }
    }
    if (TIFFFlush(t) != 1) {
        fail(path, "flush failed");
    }
}

} // namespace detail

void write_geotiff(const QuadRaster& r, const std::filesystem::path& path) {
    detail::write_geotiff_with_code(r, path, static_cast<std::uint16_t>(r.crs));
}

QuadRaster read_geotiff(const std::filesystem::path& path) {
    init_libtiff_once();
    t_tiff_error.clear();
    TiffPtr tif(TIFFOpen(path.string().c_str(), "r"));
    if (!tif) {
        if (!std::filesystem::exists(path)) {
            throw IoError("cannot open '" + path.string() + "' for reading");
        }
        fail(path, "not a readable TIFF container (byte offset 0)");
    }
    TIFF* t = tif.get();

    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint16_t bands = 1;
    std::uint16_t bits = 0;
    std::uint16_t fmt = SAMPLEFORMAT_UINT;
    std::uint16_t planar = PLANARCONFIG_CONTIG;
    TIFFGetField(t, TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(t, TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLESPERPIXEL, &bands);
    TIFFGetFieldDefaulted(t, TIFFTAG_BITSPERSAMPLE, &bits);
    TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLEFORMAT, &fmt);
    TIFFGetFieldDefaulted(t, TIFFTAG_PLANARCONFIG, &planar);
    if (width == 0 || height == 0) {
        fail(path, "missing image dimensions");
    }
    if (bits != 32 || fmt != SAMPLEFORMAT_IEEEFP) {
        fail(path, "expected float32 samples, got " + std::to_string(bits) + "-bit format " +
                       std::to_string(fmt));
    }
    if (!TIFFIsTiled(t)) {
        fail(path, "expected a tiled layout");
    }
    if (planar != PLANARCONFIG_SEPARATE && bands > 1) {
        fail(path, "expected separate planes for a multi-band file");
    }

    QuadRaster r;
    r.spec.width = static_cast<int>(width);
    r.spec.height = static_cast<int>(height);
    r.bands = bands;

    std::uint16_t count = 0;
    double* doubles = nullptr;
    if (TIFFGetField(t, kTagModelPixelScale, &count, &doubles) != 1 || count < 2) {
        fail(path, "missing ModelPixelScale tag");
    }
    r.spec.pixel_size = doubles[0];
    if (TIFFGetField(t, kTagModelTiepoint, &count, &doubles) != 1 || count < 6) {
        fail(path, "missing ModelTiepoint tag");
    }
    r.spec.origin_x = doubles[3];
    r.spec.origin_y = doubles[4];

    std::uint16_t* keys = nullptr;
    if (TIFFGetField(t, kTagGeoKeyDirectory, &count, &keys) != 1 || count < 4) {
        fail(path, "missing GeoKeyDirectory tag");
    }
    std::uint32_t epsg = 0;
    for (std::uint16_t i = 4; i + 3 < count; i += 4) {
        if ((keys[i] == kKeyProjectedCsType || keys[i] == kKeyGeographicType) &&
            keys[i + 1] == 0) {
            epsg = keys[i + 3];
        }
    }
    if (epsg == 3857) {
        r.crs = Crs::WebMercator;
    } else if (epsg == 4326) {
        r.crs = Crs::Wgs84;
    } else {
        throw FormatError("GeoTIFF '" + path.string() + "': unsupported CRS (EPSG:" +
                          std::to_string(epsg) + "); only EPSG:3857 and EPSG:4326 are handled");
    }

    char* nodata_text = nullptr;
    if (TIFFGetField(t, kTagGdalNodata, &nodata_text) == 1 && nodata_text) {
        r.nodata = std::strtof(nodata_text, nullptr);
    }

    std::uint32_t tile_w = 0;
    std::uint32_t tile_h = 0;
    TIFFGetField(t, TIFFTAG_TILEWIDTH, &tile_w);
    TIFFGetField(t, TIFFTAG_TILELENGTH, &tile_h);
    if (tile_w == 0 || tile_h == 0) {
        fail(path, "missing tile dimensions");
    }

    r.data.resize(static_cast<std::size_t>(bands) * width * height);
    std::vector<float> tile(static_cast<std::size_t>(TIFFTileSize(t)) / sizeof(float));
    for (std::uint16_t b = 0; b < bands; ++b) {
        for (std::uint32_t ty = 0; ty < height; ty += tile_h) {
            for (std::uint32_t tx = 0; tx < width; tx += tile_w) {
                if (TIFFReadTile(t, tile.data(), tx, ty, 0, b) < 0) {
                    fail(path, "tile read failed at tile (" + std::to_string(tx) + ", " +
                                   std::to_string(ty) + "), band " + std::to_string(b));
                }
                const std::uint32_t rows = std::min(tile_h, height - ty);
                const std::uint32_t cols = std::min(tile_w, width - tx);
                for (std::uint32_t dr = 0; dr < rows; ++dr) {
                    float* dst = &r.data[b * r.plane_size() +
                                         static_cast<std::size_t>(ty + dr) * width + tx];
                    std::memcpy(dst, &tile[static_cast<std::size_t>(dr) * tile_w],
                                cols * sizeof(float));
                }
            }
        }
    }
    return r;
}

} // namespace quadmap

#include "quadmap/raster.hpp"

#include "quadmap/errors.hpp"

#include <algorithm>
#include <cmath>

namespace quadmap {

QuadRaster QuadRaster::filled(const GridSpec& spec, int bands, float value, float nodata,
                              Crs crs) {
    if (!spec.valid() || bands < 1) {
        throw ArgumentError("invalid grid spec or band count");
    }
    QuadRaster r;
    r.spec = spec;
    r.bands = bands;
    r.crs = crs;
    r.nodata = nodata;
    r.data.assign(static_cast<std::size_t>(bands) * spec.width * spec.height, value);
    return r;
}

QuadRaster downsample_average(const QuadRaster& r, int factor, std::optional<float> nodata) {
    if (factor < 1) {
        throw ArgumentError("downsample factor must be >= 1");
    }
    if (r.spec.width % factor != 0 || r.spec.height % factor != 0) {
        throw ArgumentError("raster dimensions " + std::to_string(r.spec.width) + "x" +
                            std::to_string(r.spec.height) + " not divisible by factor " +
                            std::to_string(factor));
    }
    const float nd = nodata.value_or(r.nodata);
    GridSpec out_spec{r.spec.origin_x, r.spec.origin_y, r.spec.pixel_size * factor,
                      r.spec.width / factor, r.spec.height / factor};
    QuadRaster out = QuadRaster::filled(out_spec, r.bands, nd, nd, r.crs);
    for (int b = 0; b < r.bands; ++b) {
        for (int orow = 0; orow < out_spec.height; ++orow) {
            for (int ocol = 0; ocol < out_spec.width; ++ocol) {
                double sum = 0.0;
                int count = 0;
                for (int dr = 0; dr < factor; ++dr) {
                    for (int dc = 0; dc < factor; ++dc) {
                        const float v = r.at(b, orow * factor + dr, ocol * factor + dc);
                        if (v != nd) {
                            sum += v;
                            ++count;
                        }
                    }
                }
                if (count > 0) {
                    out.at(b, orow, ocol) = static_cast<float>(sum / count);
                }
            }
        }
    }
    return out;
}

QuadRaster merge_crop(std::span<const QuadRaster> tiles, const GeoBox& target) {
    if (tiles.empty()) {
        throw ArgumentError("merge_crop needs at least one tile");
    }
    if (!target.valid()) {
        throw ArgumentError("merge_crop target box is empty");
    }
    const QuadRaster& first = tiles.front();
    double ps = first.spec.pixel_size;
    for (const QuadRaster& t : tiles) {
        if (t.crs != first.crs || t.bands != first.bands || t.nodata != first.nodata) {
            throw ArgumentError("merge_crop tiles must share CRS, band count and nodata");
        }
        ps = std::min(ps, t.spec.pixel_size);
    }
    const int width = static_cast<int>(std::ceil(target.width() / ps - 1e-9));
    const int height = static_cast<int>(std::ceil(target.height() / ps - 1e-9));
    GridSpec out_spec{target.min_x, target.max_y, ps, width, height};
    QuadRaster out = QuadRaster::filled(out_spec, first.bands, first.nodata, first.nodata,
                                        first.crs);
    for (int row = 0; row < height; ++row) {
        const double cy = out_spec.center_y(row);
        for (int col = 0; col < width; ++col) {
            const double cx = out_spec.center_x(col);
            // Later tiles win per band, so scan back to front and stop at the
            // first tile with a valid sample. Bands resolve independently
            // because density and height nodata masks may differ.
            int bands_pending = first.bands;
            for (auto it = tiles.rbegin(); it != tiles.rend() && bands_pending > 0; ++it) {
                const GridSpec& ts = it->spec;
                if (!ts.bounds().contains(cx, cy)) {
                    continue;
                }
                const int tc = std::min(static_cast<int>((cx - ts.origin_x) / ts.pixel_size),
                                        ts.width - 1);
                const int tr = std::min(static_cast<int>((ts.origin_y - cy) / ts.pixel_size),
                                        ts.height - 1);
                for (int b = 0; b < first.bands; ++b) {
                    if (out.at(b, row, col) != first.nodata) {
                        continue;
                    }
                    const float v = it->at(b, tr, tc);
                    if (v != it->nodata) {
                        out.at(b, row, col) = v;
                        --bands_pending;
                    }
                }
            }
        }
    }
    return out;
}

QuadRaster resample_bilinear(const QuadRaster& r, const GridSpec& out) {
    if (!out.valid()) {
        throw ArgumentError("resample output spec must have positive size and pixel size");
    }
    QuadRaster dst = QuadRaster::filled(out, r.bands, r.nodata, r.nodata, r.crs);
    const GeoBox in_box = r.spec.bounds();
    const int w = r.spec.width;
    const int h = r.spec.height;
    const double ratio = out.pixel_size / r.spec.pixel_size;
    // Fractional input pixel coordinates from index arithmetic, so that an
    // identical in/out spec resolves to exact integers and copies bit-exactly.
    const double u_base = (out.origin_x - r.spec.origin_x) / r.spec.pixel_size;
    const double v_base = (r.spec.origin_y - out.origin_y) / r.spec.pixel_size;
    for (int row = 0; row < out.height; ++row) {
        const double cy = out.center_y(row);
        for (int col = 0; col < out.width; ++col) {
            const double cx = out.center_x(col);
            if (!in_box.contains(cx, cy)) {
                continue;
            }
            double u = u_base + (col + 0.5) * ratio - 0.5;
            double vv = v_base + (row + 0.5) * ratio - 0.5;
            u = std::clamp(u, 0.0, static_cast<double>(w - 1));
            vv = std::clamp(vv, 0.0, static_cast<double>(h - 1));
            const int i0 = std::min(static_cast<int>(u), w > 1 ? w - 2 : 0);
            const int j0 = std::min(static_cast<int>(vv), h > 1 ? h - 2 : 0);
            const int i1 = std::min(i0 + 1, w - 1);
            const int j1 = std::min(j0 + 1, h - 1);
            const double fu = u - i0;
            const double fv = vv - j0;
            // Corners with zero weight do not contribute and cannot
            // contaminate, so exact grid alignment copies bit for bit.
            const double weights[4] = {(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv),
                                       (1.0 - fu) * fv, fu * fv};
            const int rows_[4] = {j0, j0, j1, j1};
            const int cols_[4] = {i0, i1, i0, i1};
            for (int b = 0; b < r.bands; ++b) {
                double value = 0.0;
                bool valid = true;
                for (int corner = 0; corner < 4; ++corner) {
                    if (weights[corner] == 0.0) {
                        continue;
                    }
                    const float a = r.at(b, rows_[corner], cols_[corner]);
                    if (a == r.nodata) {
                        valid = false;
                        break;
                    }
                    value += weights[corner] * a;
                }
                if (valid) {
                    dst.at(b, row, col) = static_cast<float>(value);
                }
            }
        }
    }
    return dst;
}

QuadRaster resample_nearest(const QuadRaster& r, const GridSpec& out) {
    if (!out.valid()) {
        throw ArgumentError("resample output spec must have positive size and pixel size");
    }
    QuadRaster dst = QuadRaster::filled(out, r.bands, r.nodata, r.nodata, r.crs);
    const GeoBox in_box = r.spec.bounds();
    for (int row = 0; row < out.height; ++row) {
        const double cy = out.center_y(row);
        for (int col = 0; col < out.width; ++col) {
            const double cx = out.center_x(col);
            if (!in_box.contains(cx, cy)) {
                continue;
            }
            const int tc = std::min(
                static_cast<int>((cx - r.spec.origin_x) / r.spec.pixel_size), r.spec.width - 1);
            const int tr = std::min(
                static_cast<int>((r.spec.origin_y - cy) / r.spec.pixel_size), r.spec.height - 1);
            for (int b = 0; b < r.bands; ++b) {
                dst.at(b, row, col) = r.at(b, tr, tc);
            }
        }
    }
    return dst;
}

QuadRaster read_raster(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".tif" || ext == ".tiff") {
        return read_geotiff(path);
    }
    return read_tgrd(path);
}

void write_raster(const QuadRaster& r, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".tif" || ext == ".tiff") {
        write_geotiff(r, path);
    } else {
        write_tgrd(r, path);
    }
}

} // namespace quadmap

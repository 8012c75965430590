#include "quadmap/labelgen.hpp"

#include "quadmap/errors.hpp"
#include "quadmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quadmap::labels {

QuadIndex build_quad_index(std::span<const QuadId> quads,
                           std::span<const TileFootprint> tiles) {
    QuadIndex index;
    for (const QuadId& q : quads) {
        const GeoBox qb = quad_bounds(q);
        std::vector<TileFootprint> hits;
        for (const TileFootprint& tile : tiles) {
            if (qb.intersects(tile.box)) {
                hits.push_back(tile);
            }
        }
        index.emplace(q, std::move(hits));
    }
    return index;
}

LabelQuad make_label_quad(QuadId q, std::span<const QuadRaster> tiles,
                          const LabelGenOptions& options) {
    if (options.out_size < 1) {
        throw ArgumentError("label out_size must be positive");
    }
    const int full_size = options.out_size * kPoolFactor;
    const GridSpec full_grid = quad_grid(q, full_size);
    const GeoBox qb = quad_bounds(q);

    LabelQuad label;
    label.quad = q;

    std::vector<QuadRaster> resampled;
    for (const QuadRaster& tile : tiles) {
        if (!tile.spec.bounds().intersects(qb)) {
            continue;
        }
        resampled.push_back(options.resample == ResampleKind::Bilinear
                                ? resample_bilinear(tile, full_grid)
                                : resample_nearest(tile, full_grid));
    }

    QuadRaster pooled;
    if (resampled.empty()) {
        const GridSpec out_spec = quad_grid(q, options.out_size);
        pooled = QuadRaster::filled(out_spec, 2, kLabelNodata, kLabelNodata);
    } else {
        QuadRaster merged = merge_crop(resampled, qb);
        pooled = downsample_average(merged, kPoolFactor);
        if (pooled.bands == 1) {
            // Density-only sources: height stays fully nodata.
            QuadRaster two = QuadRaster::filled(pooled.spec, 2, kLabelNodata, kLabelNodata);
            std::copy(pooled.band(0).begin(), pooled.band(0).end(), two.band(0).begin());
            pooled = std::move(two);
        }
    }

    for (float& v : pooled.band(0)) {
        if (v != kLabelNodata) {
            v = std::clamp(v, 0.0f, 1.0f);
        }
    }
    for (float& v : pooled.band(1)) {
        if (v != kLabelNodata) {
            if (options.height_units == HeightUnits::Meters) {
                v = static_cast<float>(
                    std::clamp(static_cast<double>(v), 0.0, kHeightClipMeters) /
                    kHeightClipMeters);
            } else {
                v = std::clamp(v, 0.0f, 1.0f);
            }
        }
    }
    label.raster = std::move(pooled);
    return label;
}

SplitResult split_quads(std::span<const QuadId> quads, std::array<double, 3> fractions,
                        std::uint64_t seed) {
    const double total = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(total - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 ||
        fractions[2] < 0) {
        throw ArgumentError("split fractions must be non-negative and sum to 1");
    }

    std::vector<QuadId> shuffled(quads.begin(), quads.end());
    Mt64Stream rng(seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(draw_index(rng, static_cast<std::int64_t>(i)));
        std::swap(shuffled[i - 1], shuffled[j]);
    }

    // Largest-remainder rounding of fraction * n.
    const auto n = static_cast<double>(shuffled.size());
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double target = fractions[i] * n;
        sizes[i] = static_cast<std::size_t>(std::floor(target));
        remainders[i] = target - std::floor(target);
        assigned += sizes[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (std::size_t leftover = shuffled.size() - assigned, i = 0; i < leftover; ++i) {
        sizes[order[i % 3]] += 1;
    }

    SplitResult result;
    auto it = shuffled.begin();
    result.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    result.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    result.test.assign(it, shuffled.end());
    return result;
}

} // namespace quadmap::labels

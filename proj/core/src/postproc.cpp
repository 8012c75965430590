#include "quadmap/postproc.hpp"

#include "quadmap/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace quadmap::post {

namespace {

float score_pixel(UdmClass clazz, float confidence, double conf_threshold) {
    const bool clear = clazz == UdmClass::Clear;
    const bool high_conf =
        clazz == UdmClass::Missing || static_cast<double>(confidence) > conf_threshold;
    if (clear) {
        return high_conf ? 4.0f : 3.0f;
    }
    return high_conf ? 1.0f : 2.0f;
}

// Median with the even-count convention (mean of the two middle values).
float median_of(std::array<float, 4>& v, int count) {
    std::sort(v.begin(), v.begin() + count);
    if (count % 2 == 1) {
        return v[count / 2];
    }
    return 0.5f * (v[count / 2 - 1] + v[count / 2]);
}

bool gsw_masks(float code) {
    return code == 1.0f || code == 2.0f || code == 4.0f || code == 5.0f || code == 7.0f ||
           code == 8.0f;
}

} // namespace

ClarityRaster clarity_score_quad(const UdmQuad& udm, double conf_threshold) {
    if (!udm.spec.valid() ||
        udm.clazz.size() != static_cast<std::size_t>(udm.spec.width) * udm.spec.height ||
        udm.confidence.size() != udm.clazz.size()) {
        throw ArgumentError("UDM layers disagree with their grid spec");
    }
    if (udm.spec.width % kPoolFactor != 0 || udm.spec.height % kPoolFactor != 0) {
        throw ArgumentError("UDM dimensions must be divisible by the pooling factor");
    }
    QuadRaster scored = QuadRaster::filled(udm.spec, 1, 0.0f, -1.0f);
    for (std::size_t i = 0; i < udm.clazz.size(); ++i) {
        scored.data[i] =
            score_pixel(static_cast<UdmClass>(udm.clazz[i]), udm.confidence[i], conf_threshold);
    }
    const QuadRaster pooled = downsample_average(scored, kPoolFactor);
    ClarityRaster result;
    result.spec = pooled.spec;
    result.scores.assign(pooled.data.begin(), pooled.data.end());
    return result;
}

QuadRaster rolling_aggregate(const TimeSeriesStack& stack, BandKind kind,
                             const PostprocParams& params) {
    if (stack.quarters.size() != 4) {
        throw ArgumentError("rolling aggregation needs exactly 4 quarterly layers, got " +
                            std::to_string(stack.quarters.size()));
    }
    const QuadRaster& current = stack.quarters.back();
    for (const QuadRaster& q : stack.quarters) {
        if (q.spec != current.spec || q.bands != 1) {
            throw ArgumentError("stack layers must share a single-band grid spec");
        }
    }
    if (stack.clarity && stack.clarity->scores.size() != current.plane_size()) {
        throw ArgumentError("clarity raster does not align with the stack");
    }

    const double floor = kind == BandKind::Density ? params.density_floor : 0.0;
    QuadRaster out = QuadRaster::filled(current.spec, 1, 0.0f, current.nodata, current.crs);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        std::array<float, 4> values{};
        std::array<float, 4> positives{};
        int positive_count = 0;
        for (int q = 0; q < 4; ++q) {
            const float v = stack.quarters[q].data[i];
            values[q] = v;
            if (static_cast<double>(v) > floor) {
                positives[positive_count++] = v;
            }
        }
        float result;
        if (positive_count >= 3) {
            result = median_of(positives, positive_count);
        } else if (positive_count <= 1) {
            result = 0.0f;
        } else if (stack.clarity) {
            if (static_cast<double>(stack.clarity->scores[i]) >= params.clarity_split) {
                result = *std::max_element(values.begin(), values.end());
            } else {
                result = 0.0f;
            }
        } else {
            result = median_of(values, 4);
        }
        out.data[i] = result;
    }
    return out;
}

QuadRaster mask_uninhabitable(const QuadRaster& pred, const MaskLayers& masks,
                              const PostprocParams& params) {
    if (masks.gsw_transitions.plane_size() != pred.plane_size() ||
        masks.dem.plane_size() != pred.plane_size()) {
        throw ArgumentError("mask layers do not align with the prediction grid");
    }
    QuadRaster out = pred;
    for (int b = 0; b < out.bands; ++b) {
        auto plane = out.band(b);
        for (std::size_t i = 0; i < plane.size(); ++i) {
            if (plane[i] == out.nodata) {
                continue;
            }
            if (gsw_masks(masks.gsw_transitions.data[i]) ||
                static_cast<double>(masks.dem.data[i]) > params.elevation_cap_m) {
                plane[i] = 0.0f;
            }
        }
    }
    return out;
}

AgreementResult enforce_agreement(const QuadRaster& density, const QuadRaster& height_m,
                                  const PostprocParams& params) {
    if (density.plane_size() != height_m.plane_size() || density.bands != 1 ||
        height_m.bands != 1) {
        throw ArgumentError("agreement layers must be aligned single-band grids");
    }
    AgreementResult result{density, height_m};
    const auto floor = static_cast<float>(params.density_floor);
    const auto min_h = static_cast<float>(params.min_height_m);
    for (std::size_t i = 0; i < result.density.data.size(); ++i) {
        float& d = result.density.data[i];
        float& h = result.height_m.data[i];
        if (d == density.nodata || h == height_m.nodata) {
            continue;
        }
        // Fixpoint closed form: zero density annihilates height before the
        // minimum-density rule can resurrect it; any surviving density pulls
        // height to the habitable minimum, which in turn pulls density to
        // the floor.
        if (d <= 0.0f) {
            d = 0.0f;
            h = 0.0f;
        } else {
            h = std::max(h, min_h);
            d = std::max(d, floor);
        }
    }
    return result;
}

} // namespace quadmap::post

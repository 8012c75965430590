#pragma once

#include "quadmap/postproc.hpp"
#include "quadmap/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace quadmap::synth {

/// Per-quarter perturbation: pixel noise plus a cloudy fraction. Cloudy
/// output pixels zero the predictions and mark the whole 8x8 UDM block as
/// cloud at high confidence.
struct QuarterNoise {
    double noise_sigma = 0.0;
    double cloud_fraction = 0.0;
};

struct SceneSpec {
    std::uint64_t seed = 0;
    int quad_count = 1;
    int out_size = 64; // output grid edge; production products use 512

    int blob_count_min = 3;
    int blob_count_max = 6;
    double blob_radius_min = 2.0; // in output pixels
    double blob_radius_max = 6.0;
    double density_peak = 0.9;

    /// Additive growth fraction per quarter, applied cumulatively to one
    /// dedicated growth blob per quad (the base settlement stays fixed).
    std::vector<double> growth;

    /// Per-quarter noise; missing entries mean a clean quarter.
    std::vector<QuarterNoise> noise;

    /// Fraction of the grid edge used by the water strip and the
    /// high-elevation block placed in opposite corners.
    double water_fraction = 0.15;
    double high_elevation_fraction = 0.15;
};

/// One quad of one scene, all layers in memory. Truth and predictions are
/// 2-band (density, height_norm); UDM is 2-band (class, confidence) at 8x
/// resolution; gsw/dem are single-band static layers.
struct SceneQuad {
    QuadId quad;
    std::vector<QuadRaster> truth;
    std::vector<QuadRaster> predictions;
    std::vector<QuadRaster> udm;
    QuadRaster gsw;
    QuadRaster dem;
};

struct Scene {
    SceneSpec spec;
    std::vector<std::string> quarters; // chronological tokens
    std::vector<SceneQuad> quads;
};

/// Deterministic synthetic time series: Gaussian settlement blobs thresholded
/// at the density floor, heights tied to density (2.4-30 m over positive
/// cells), monotone growth per the schedule, noisy/cloudy predictions, and
/// water/elevation masks honored by the truth.
Scene synth_scene(const SceneSpec& spec, int quarter_count,
                  const std::string& first_quarter = "2020q1");

/// Generate and write a scene in the layout run_pipeline consumes:
/// predictions/, udm/, gsw/, dem/ and truth/ under `root`.
Scene synth_timeseries(const SceneSpec& spec, int quarter_count,
                       const std::filesystem::path& root,
                       const std::string& first_quarter = "2020q1");

void write_scene(const Scene& scene, const std::filesystem::path& root);

} // namespace quadmap::synth

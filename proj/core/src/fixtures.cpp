#include "quadmap/fixtures.hpp"

#include "quadmap/errors.hpp"
#include "quadmap/orchestrator.hpp"
#include "quadmap/rng.hpp"

#include <algorithm>
#include <cmath>

namespace quadmap::synth {

namespace {

constexpr double kDensityFloor = 2.0 / 255.0;
constexpr double kMinHeightM = 2.4;
constexpr double kMaxHeightM = 30.0;

struct Blob {
    double row = 0;
    double col = 0;
    double sigma = 1.0;
    double amplitude = 0.0;
};

double blob_value(const Blob& b, int row, int col) {
    const double dr = row - b.row;
    const double dc = col - b.col;
    return b.amplitude * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
}

float height_for_density(float d) {
    if (d <= 0.0f) {
        return 0.0f;
    }
    const double h = kMinHeightM + (kMaxHeightM - kMinHeightM) * d;
    return static_cast<float>(h / 100.0); // stored normalized
}

} // namespace

Scene synth_scene(const SceneSpec& spec, int quarter_count,
                  const std::string& first_quarter) {
    if (quarter_count < 4) {
        throw ArgumentError("scenes need at least 4 quarters");
    }
    if (spec.out_size < 16 || spec.quad_count < 1) {
        throw ArgumentError("scene spec needs out_size >= 16 and at least one quad");
    }
    for (double g : spec.growth) {
        if (g < 0.0 || g > 1.0) {
            throw ArgumentError("growth fractions must lie in [0, 1]");
        }
    }
    for (const QuarterNoise& n : spec.noise) {
        if (n.cloud_fraction < 0.0 || n.cloud_fraction > 1.0) {
            throw ArgumentError("cloud fractions must lie in [0, 1]");
        }
    }

    Scene scene;
    scene.spec = spec;
    scene.quarters.resize(static_cast<std::size_t>(quarter_count));
    scene.quarters[0] = first_quarter;
    for (int q = 1; q < quarter_count; ++q) {
        batch::Quarter prev = batch::parse_quarter(scene.quarters[q - 1]);
        if (prev.q == 4) {
            ++prev.year;
            prev.q = 1;
        } else {
            ++prev.q;
        }
        scene.quarters[q] = batch::format_quarter(prev);
    }

    const int size = spec.out_size;
    const int udm_size = size * kPoolFactor;
    const int water_cols = static_cast<int>(size * spec.water_fraction);
    const int high_cells = static_cast<int>(size * spec.high_elevation_fraction);

    for (int qi = 0; qi < spec.quad_count; ++qi) {
        Mt64Stream rng(spec.seed ^ (static_cast<std::uint64_t>(qi) * 0x9E3779B97F4A7C15ull));
        SceneQuad sq;
        sq.quad = {qi % kQuadsPerAxis, (qi / kQuadsPerAxis) % kQuadsPerAxis};
        const GridSpec out_spec = quad_grid(sq.quad, size);
        const GridSpec udm_spec = quad_grid(sq.quad, udm_size);

        const auto masked = [&](int row, int col) {
            return col < water_cols || (row >= size - high_cells && col >= size - high_cells);
        };

        // Static layers: a water strip on the west edge and a high block in
        // the southeast corner.
        sq.gsw = QuadRaster::filled(out_spec, 1, 0.0f, -1.0f);
        sq.dem = QuadRaster::filled(out_spec, 1, 400.0f, -1.0f);
        for (int row = 0; row < size; ++row) {
            for (int col = 0; col < size; ++col) {
                if (col < water_cols) {
                    sq.gsw.at(0, row, col) = 7.0f; // seasonal-to-permanent water
                }
                if (row >= size - high_cells && col >= size - high_cells) {
                    sq.dem.at(0, row, col) = 6000.0f;
                }
            }
        }

        // Base settlement blobs.
        const int blob_count =
            spec.blob_count_min +
            static_cast<int>(draw_index(rng, spec.blob_count_max - spec.blob_count_min + 1));
        std::vector<Blob> base(static_cast<std::size_t>(blob_count));
        for (Blob& b : base) {
            b.row = draw_uniform(rng, 0.0, size);
            b.col = draw_uniform(rng, 0.0, size);
            b.sigma = draw_uniform(rng, spec.blob_radius_min, spec.blob_radius_max);
            b.amplitude = draw_uniform(rng, 0.3 * spec.density_peak, spec.density_peak);
        }

        // One growth blob per quad, kept away from the masked corners so the
        // injected change survives post-processing.
        Blob growth_blob;
        growth_blob.sigma = spec.blob_radius_max;
        growth_blob.amplitude = 0.8 * spec.density_peak;
        for (int attempt = 0; attempt < 32; ++attempt) {
            growth_blob.row = draw_uniform(rng, size * 0.15, size * 0.85);
            growth_blob.col = draw_uniform(rng, size * 0.15, size * 0.85);
            const int r = static_cast<int>(growth_blob.row);
            const int c = static_cast<int>(growth_blob.col);
            if (!masked(r, c) && c >= water_cols + static_cast<int>(3 * growth_blob.sigma)) {
                break;
            }
        }

        std::vector<float> base_density(static_cast<std::size_t>(size) * size, 0.0f);
        for (int row = 0; row < size; ++row) {
            for (int col = 0; col < size; ++col) {
                double v = 0.0;
                for (const Blob& b : base) {
                    v += blob_value(b, row, col);
                }
                base_density[static_cast<std::size_t>(row) * size + col] =
                    static_cast<float>(std::min(v, 1.0));
            }
        }

        // Truth per quarter: base plus the cumulative growth contribution,
        // thresholded at the density floor, masked corners forced to zero.
        double cumulative = 0.0;
        for (int q = 0; q < quarter_count; ++q) {
            if (q < static_cast<int>(spec.growth.size())) {
                cumulative = std::min(1.0, cumulative + spec.growth[q]);
            }
            QuadRaster truth = QuadRaster::filled(out_spec, 2, 0.0f, -1.0f);
            for (int row = 0; row < size; ++row) {
                for (int col = 0; col < size; ++col) {
                    if (masked(row, col)) {
                        continue;
                    }
                    double v = base_density[static_cast<std::size_t>(row) * size + col];
                    v += cumulative * blob_value(growth_blob, row, col);
                    v = std::min(v, 1.0);
                    if (v <= kDensityFloor) {
                        continue;
                    }
                    truth.at(0, row, col) = static_cast<float>(v);
                    truth.at(1, row, col) = height_for_density(static_cast<float>(v));
                }
            }
            sq.truth.push_back(std::move(truth));
        }

        // Predictions and UDMs per quarter. Draw order per quarter: for each
        // output pixel a cloud gate (when cloudy quarters are configured),
        // then density and height noise (when sigma > 0); finally one
        // confidence draw per UDM pixel.
        for (int q = 0; q < quarter_count; ++q) {
            const QuarterNoise noise = q < static_cast<int>(spec.noise.size())
                                           ? spec.noise[static_cast<std::size_t>(q)]
                                           : QuarterNoise{};
            QuadRaster pred = sq.truth[static_cast<std::size_t>(q)];
            std::vector<std::uint8_t> cloudy(static_cast<std::size_t>(size) * size, 0);
            for (int row = 0; row < size; ++row) {
                for (int col = 0; col < size; ++col) {
                    const std::size_t i = static_cast<std::size_t>(row) * size + col;
                    if (noise.cloud_fraction > 0.0 && rng.next01() < noise.cloud_fraction) {
                        cloudy[i] = 1;
                    }
                    if (noise.noise_sigma > 0.0) {
                        float& d = pred.at(0, row, col);
                        float& h = pred.at(1, row, col);
                        d = static_cast<float>(std::clamp(
                            d + noise.noise_sigma * draw_normal(rng), 0.0, 1.0));
                        h = static_cast<float>(std::clamp(
                            h + 0.3 * noise.noise_sigma * draw_normal(rng), 0.0, 1.0));
                    }
                    if (cloudy[i]) {
                        pred.at(0, row, col) = 0.0f;
                        pred.at(1, row, col) = 0.0f;
                    }
                }
            }

            QuadRaster udm = QuadRaster::filled(udm_spec, 2, 0.0f, -1.0f);
            for (int row = 0; row < udm_size; ++row) {
                for (int col = 0; col < udm_size; ++col) {
                    const std::size_t block = static_cast<std::size_t>(row / kPoolFactor) * size +
                                              (col / kPoolFactor);
                    if (cloudy[block]) {
                        udm.at(0, row, col) = static_cast<float>(post::UdmClass::Cloud);
                        udm.at(1, row, col) = static_cast<float>(draw_uniform(rng, 96.0, 100.0));
                    } else {
                        udm.at(0, row, col) = static_cast<float>(post::UdmClass::Clear);
                        udm.at(1, row, col) = static_cast<float>(draw_uniform(rng, 94.0, 100.0));
                    }
                }
            }
            sq.predictions.push_back(std::move(pred));
            sq.udm.push_back(std::move(udm));
        }
        scene.quads.push_back(std::move(sq));
    }
    return scene;
}

void write_scene(const Scene& scene, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    for (const SceneQuad& sq : scene.quads) {
        for (std::size_t q = 0; q < scene.quarters.size(); ++q) {
            const std::string& token = scene.quarters[q];
            for (const char* layer : {"predictions", "udm", "truth"}) {
                fs::create_directories(root / layer / token);
            }
            write_raster(sq.predictions[q],
                         batch::quarter_layer_path(root / "predictions", token, sq.quad));
            write_raster(sq.udm[q], batch::quarter_layer_path(root / "udm", token, sq.quad));
            write_raster(sq.truth[q],
                         batch::quarter_layer_path(root / "truth", token, sq.quad));
        }
        fs::create_directories(root / "gsw");
        fs::create_directories(root / "dem");
        write_raster(sq.gsw, batch::static_layer_path(root / "gsw", sq.quad));
        write_raster(sq.dem, batch::static_layer_path(root / "dem", sq.quad));
    }
}

Scene synth_timeseries(const SceneSpec& spec, int quarter_count,
                       const std::filesystem::path& root, const std::string& first_quarter) {
    Scene scene = synth_scene(spec, quarter_count, first_quarter);
    write_scene(scene, root);
    return scene;
}

} // namespace quadmap::synth

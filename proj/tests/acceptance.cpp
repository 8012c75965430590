// Acceptance suite: every criterion prints one pass/fail line with its
// runtime; the process exit code is the number of failed criteria.

#include "quadmap/changedet.hpp"
#include "quadmap/evalx.hpp"
#include "quadmap/fixtures.hpp"
#include "quadmap/grid.hpp"
#include "quadmap/orchestrator.hpp"
#include "quadmap/postproc.hpp"
#include "quadmap/raster.hpp"
#include "quadmap/rng.hpp"
#include "quadmap/trainmath.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace quadmap;

namespace {

struct CheckFailure {
    std::string message;
};

void expect(bool ok, const std::string& message) {
    if (!ok) {
        throw CheckFailure{message};
    }
}

// ---------------------------------------------------------------- criterion 1

void criterion_rolling_aggregate_oracle() {
    const std::array<float, 5> values = {0.0f, 1.0f / 255.0f, 0.1f, 0.5f, 1.0f};
    const std::array<float, 4> clarities = {1.0f, 3.4f, 3.5f, 4.0f};
    const int total = 5 * 5 * 5 * 5 * 4;

    post::TimeSeriesStack stack;
    for (int q = 0; q < 4; ++q) {
        stack.quarters.push_back(QuadRaster::filled(testsup::unit_spec(50, 50), 1, 0.0f));
    }
    post::ClarityRaster clarity;
    clarity.spec = testsup::unit_spec(50, 50);
    clarity.scores.resize(static_cast<std::size_t>(total));
    std::size_t i = 0;
    for (float a : values) {
        for (float b : values) {
            for (float c : values) {
                for (float d : values) {
                    for (float cl : clarities) {
                        stack.quarters[0].data[i] = a;
                        stack.quarters[1].data[i] = b;
                        stack.quarters[2].data[i] = c;
                        stack.quarters[3].data[i] = d;
                        clarity.scores[i] = cl;
                        ++i;
                    }
                }
            }
        }
    }
    stack.clarity = clarity;

    const QuadRaster out = post::rolling_aggregate(stack, post::BandKind::Density);
    for (std::size_t px = 0; px < static_cast<std::size_t>(total); ++px) {
        const float v[4] = {stack.quarters[0].data[px], stack.quarters[1].data[px],
                            stack.quarters[2].data[px], stack.quarters[3].data[px]};
        const float want = oracle::alg1_pixel(v, clarity.scores[px], true);
        expect(out.data[px] == want,
               "vote mismatch at case " + std::to_string(px) + ": got " +
                   std::to_string(out.data[px]) + ", oracle " + std::to_string(want));
    }
}

// ---------------------------------------------------------------- criterion 2

void criterion_loss_numerics() {
    expect(train::hard_sigmoid(-3.0) == 0.0, "hard_sigmoid(-3) must be 0");
    expect(train::hard_sigmoid(3.0) == 1.0, "hard_sigmoid(3) must be 1");
    expect(train::hard_sigmoid(4.0) == 1.0, "hard_sigmoid(4) must saturate to 1");
    expect(train::hard_sigmoid(0.0) == 0.5, "hard_sigmoid(0) must be 0.5");

    const train::LossParams p{0.7};
    const double quadratic = 0.5 * p.delta * p.delta;
    const double linear = p.delta * (p.delta - 0.5 * p.delta);
    expect(std::abs(quadratic - linear) <= 1e-12, "huber branches disagree at |e| = delta");

    Mt64Stream rng(2024);
    const double h = 1e-5;
    int tested = 0;
    while (tested < 10000) {
        const double x = draw_uniform(rng, -5.0, 5.0);
        const double y = draw_uniform(rng, 0.0, 1.0);
        if (std::abs(x - 3.0) <= 1e-3 || std::abs(x + 3.0) <= 1e-3) {
            continue;
        }
        if (std::abs(std::abs(y - train::hard_sigmoid(x)) - p.delta) <= 1e-3) {
            continue;
        }
        const double analytic = train::loss_grad_logit(y, x, p);
        const double numeric = (train::huber(y, train::hard_sigmoid(x + h), p) -
                                train::huber(y, train::hard_sigmoid(x - h), p)) /
                               (2.0 * h);
        expect(std::abs(analytic - numeric) < 1e-5,
               "gradient mismatch at x=" + std::to_string(x) + ", y=" + std::to_string(y));
        ++tested;
    }
}

// ---------------------------------------------------------------- criterion 3

void criterion_postproc_invariants() {
    Mt64Stream rng(31);
    const post::PostprocParams params;
    for (int fixture = 0; fixture < 100; ++fixture) {
        QuadRaster pred = testsup::random_raster(rng, 64, 64, 1);
        post::MaskLayers masks{QuadRaster::filled(testsup::unit_spec(64, 64), 1, 0.0f),
                               QuadRaster::filled(testsup::unit_spec(64, 64), 1, 0.0f)};
        for (std::size_t i = 0; i < masks.gsw_transitions.data.size(); ++i) {
            masks.gsw_transitions.data[i] = static_cast<float>(draw_index(rng, 11));
            masks.dem.data[i] = static_cast<float>(draw_uniform(rng, 0.0, 6500.0));
        }
        const QuadRaster masked = post::mask_uninhabitable(pred, masks, params);
        for (std::size_t i = 0; i < masked.data.size(); ++i) {
            const float code = masks.gsw_transitions.data[i];
            const bool water = code == 1.0f || code == 2.0f || code == 4.0f || code == 5.0f ||
                               code == 7.0f || code == 8.0f;
            const bool high = masks.dem.data[i] > 5100.0f;
            if (water || high) {
                expect(masked.data[i] == 0.0f, "masked cell must be zero");
            } else {
                expect(masked.data[i] == pred.data[i], "unmasked cell must be untouched");
            }
        }

        QuadRaster density = testsup::random_raster(rng, 64, 64, 1);
        QuadRaster height = testsup::random_raster(rng, 64, 64, 1, 0.0f, 40.0f);
        for (std::size_t i = 0; i < density.data.size(); ++i) {
            if (rng.next01() < 0.3) {
                density.data[i] = 0.0f;
            }
            if (rng.next01() < 0.3) {
                height.data[i] = 0.0f;
            }
        }
        const post::AgreementResult agreed = post::enforce_agreement(density, height, params);
        for (std::size_t i = 0; i < agreed.density.data.size(); ++i) {
            const float d = agreed.density.data[i];
            const float hm = agreed.height_m.data[i];
            expect(!(d > 0.0f) || hm >= 2.4f, "d > 0 requires h >= 2.4");
            expect(!(d == 0.0f) || hm == 0.0f, "d == 0 requires h == 0");
            expect(!(hm > 0.0f) || d >= static_cast<float>(2.0 / 255.0),
                   "h > 0 requires d >= 2/255");
        }
        const post::AgreementResult again =
            post::enforce_agreement(agreed.density, agreed.height_m, params);
        expect(again.density.data == agreed.density.data &&
                   again.height_m.data == agreed.height_m.data,
               "agreement must be idempotent");
    }
}

// ---------------------------------------------------------------- criterion 4

void criterion_metric_oracles() {
    Mt64Stream rng(41);
    for (int fixture = 0; fixture < 50; ++fixture) {
        const QuadRaster pred = testsup::random_raster(rng, 16, 16, 1, 0.0f, 1.0f, 0.05);
        QuadRaster ref = testsup::random_raster(rng, 16, 16, 1, 0.0f, 1.0f, 0.05);
        for (std::size_t i = 0; i < ref.data.size(); ++i) {
            if (rng.next01() < 0.25) {
                ref.data[i] = 0.0f;
            }
        }

        const eval::DetectionReport det = eval::detection_metrics(pred, ref, 0.01, 0.01);
        const oracle::Confusion conf = oracle::confusion_counts(pred, ref, 0.01, 0.01);
        expect(det.tp == conf.tp && det.fp == conf.fp && det.fn == conf.fn &&
                   det.tn == conf.tn,
               "confusion counts diverge from the oracle");

        const eval::RegressionReport reg = eval::regression_metrics(pred, ref);
        const oracle::RegressionRef reg_ref = oracle::regression_reference(pred, ref);
        expect(reg.mae_defined == reg_ref.mae_defined, "MAE definedness diverges");
        if (reg.mae_defined) {
            expect(std::abs(reg.mae_pos - reg_ref.mae_pos) <= 1e-12, "MAE diverges");
        }
        if (!reg_ref.degenerate) {
            expect(std::abs(reg.r2 - reg_ref.r2) <= 1e-12, "R2 diverges");
        }

        const QuadRaster hp = testsup::random_raster(rng, 16, 16, 1, 0.0f, 35.0f);
        const QuadRaster hr = testsup::random_raster(rng, 16, 16, 1, 0.0f, 35.0f);
        expect(std::abs(eval::height_macro_f1(hp, hr).macro_f1 -
                        oracle::macro_f1_reference(hp, hr)) <= 1e-12,
               "macro F1 diverges");

        // Multi-year stack for the temporal metrics.
        std::vector<QuadRaster> years;
        for (int y = 0; y < 4; ++y) {
            QuadRaster year = testsup::random_raster(rng, 16, 16, 1, 0.0f, 0.3f);
            for (std::size_t i = 0; i < year.data.size(); ++i) {
                if (rng.next01() < 0.4) {
                    year.data[i] = 0.0f;
                }
            }
            years.push_back(std::move(year));
        }
        const int k = 3 + static_cast<int>(draw_index(rng, 3));
        const auto signals = eval::window_signals(years, k);
        std::vector<std::vector<double>> raw;
        for (const auto& s : signals) {
            raw.push_back(s.values);
        }
        const auto ref_signals = oracle::window_signal_reference(years, k);
        expect(raw == ref_signals, "window signals diverge from the oracle");
        if (!signals.empty()) {
            const auto auc = eval::monotonicity_auc(signals, {k, 0.01, 100});
            expect(std::abs(auc.value - oracle::monotonicity_auc_reference(raw)) <= 1e-9,
                   "monotonicity AUC diverges");
            const auto stab = eval::stability_summary(signals);
            const auto stab_ref = oracle::stability_reference(raw);
            expect(stab.pairs_used == stab_ref.pairs_used, "pair count diverges");
            if (stab_ref.pairs_used > 0) {
                expect(std::abs(stab.corr_median - stab_ref.corr_median) <= 1e-12,
                       "correlation median diverges");
            }
            expect(std::abs(stab.diff_std - stab_ref.diff_std) <= 1e-12,
                   "difference std diverges");
        }
    }
}

// ---------------------------------------------------------------- criterion 5

void criterion_auc_anchors() {
    const eval::StabilityConfig cfg{3, 0.01, 100};
    const auto wrap = [](std::vector<std::vector<double>> raw) {
        std::vector<eval::WindowSignal> out;
        for (auto& values : raw) {
            eval::WindowSignal s;
            s.k = 1;
            s.values = std::move(values);
            out.push_back(std::move(s));
        }
        return out;
    };

    const auto monotone = wrap({{0.1, 0.2, 0.3, 0.4}, {0.5, 0.5, 0.6, 0.9}});
    expect(std::abs(eval::monotonicity_auc(monotone, cfg).value - 1.0) <= 1e-9,
           "all-monotone signals must score 1");

    const auto alternating = wrap({{0.1, 0.12, 0.1, 0.12}});
    expect(eval::monotonicity_auc(alternating, cfg).value == 0.0,
           "±0.02 alternation must score 0");

    const std::vector<std::vector<double>> half_raw = {{0.1, 0.105, 0.1}};
    const double oracle_value = oracle::monotonicity_auc_reference(half_raw);
    const double got = eval::monotonicity_auc(wrap(half_raw), cfg).value;
    expect(std::abs(got - oracle_value) <= 1e-9, "±0.005 step diverges from the oracle");
    expect(std::abs(got - 0.5) <= 1e-9, "±0.005 step must integrate to 0.5");
}

// ---------------------------------------------------------------- criterion 6

void criterion_temporal_improvement() {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        testsup::TempDir dir("acc6_" + std::to_string(seed));
        synth::SceneSpec spec;
        spec.seed = seed * 1000 + 7;
        spec.out_size = 64;
        spec.blob_count_min = 6;
        spec.blob_count_max = 10;
        spec.blob_radius_min = 6.0;
        spec.blob_radius_max = 12.0;
        spec.water_fraction = 0.1;
        spec.high_elevation_fraction = 0.1;
        // Steady growth: raw and smoothed annual snapshots then carry the
        // same growth step, so the comparison isolates the noise handling.
        spec.growth.assign(16, 0.01);
        spec.noise.assign(16, {0.07, 0.0});
        spec.noise[6].cloud_fraction = 0.08;
        spec.noise[9].cloud_fraction = 0.04;
        const synth::Scene scene = synth::synth_timeseries(spec, 16, dir.path());

        batch::PipelineConfig config;
        config.predictions_dir = dir / "predictions";
        config.udm_dir = dir / "udm";
        config.gsw_dir = dir / "gsw";
        config.dem_dir = dir / "dem";
        config.output_dir = dir / "smoothed";

        batch::Manifest manifest;
        for (std::size_t q = 3; q < scene.quarters.size(); q += 4) {
            manifest.items.push_back({scene.quads[0].quad, scene.quarters[q]});
        }
        const batch::RunSummary summary =
            batch::run_pipeline(batch::shard_manifest(manifest, 1, 0), config);
        expect(summary.failed == 0, "pipeline failures in scene " + std::to_string(seed));

        std::vector<QuadRaster> raw_annual;
        std::vector<QuadRaster> smooth_annual;
        for (std::size_t q = 3; q < scene.quarters.size(); q += 4) {
            raw_annual.push_back(scene.quads[0].predictions[q]);
            smooth_annual.push_back(read_raster(batch::quarter_layer_path(
                config.output_dir, scene.quarters[q], scene.quads[0].quad)));
        }
        for (int k : {3, 7, 10}) {
            const auto raw_signals = eval::window_signals(raw_annual, k);
            const auto smooth_signals = eval::window_signals(smooth_annual, k);
            const eval::StabilityConfig cfg{k, 0.01, 100};
            const double raw_auc = eval::monotonicity_auc(raw_signals, cfg).value;
            const double smooth_auc = eval::monotonicity_auc(smooth_signals, cfg).value;
            expect(smooth_auc >= raw_auc,
                   "AUC regressed for scene " + std::to_string(seed) + ", k=" +
                       std::to_string(k) + " (raw " + std::to_string(raw_auc) + ", smoothed " +
                       std::to_string(smooth_auc) + ")");
            const double raw_std = eval::stability_summary(raw_signals).diff_std;
            const double smooth_std = eval::stability_summary(smooth_signals).diff_std;
            expect(smooth_std <= raw_std,
                   "diff std regressed for scene " + std::to_string(seed) + ", k=" +
                       std::to_string(k) + " (raw " + std::to_string(raw_std) + ", smoothed " +
                       std::to_string(smooth_std) + ")");
        }
    }
}

// ---------------------------------------------------------------- criterion 7

void criterion_orchestration() {
    // Shard partition property for every n <= 1000 and world size <= 17.
    for (int n = 0; n <= 1000; ++n) {
        batch::Manifest m;
        for (int i = 0; i < n; ++i) {
            m.items.push_back({{i % 64, i / 64}, "2023q4"});
        }
        for (int world = 1; world <= 17; ++world) {
            std::size_t total = 0;
            std::size_t min_size = m.items.size() + 1;
            std::size_t max_size = 0;
            std::vector<char> seen(static_cast<std::size_t>(n), 0);
            for (int rank = 0; rank < world; ++rank) {
                const batch::ShardAssignment s = batch::shard_manifest(m, world, rank);
                total += s.items.size();
                min_size = std::min(min_size, s.items.size());
                max_size = std::max(max_size, s.items.size());
                for (const batch::WorkItem& item : s.items) {
                    const int idx = item.quad.x + item.quad.y * 64;
                    expect(!seen[static_cast<std::size_t>(idx)], "shards overlap");
                    seen[static_cast<std::size_t>(idx)] = 1;
                }
            }
            expect(total == m.items.size(), "shards do not cover the manifest");
            if (n > 0) {
                expect(max_size - min_size <= 1, "shard sizes unbalanced");
            }
        }
    }

    // Crash-resume fuzz plus worker-count determinism on one small scene.
    testsup::TempDir dir("acc7");
    synth::SceneSpec spec;
    spec.seed = 4242;
    spec.quad_count = 2;
    spec.out_size = 16;
    spec.noise.assign(8, {0.03, 0.0});
    const synth::Scene scene = synth::synth_timeseries(spec, 8, dir.path());

    batch::PipelineConfig config;
    config.predictions_dir = dir / "predictions";
    config.udm_dir = dir / "udm";
    config.gsw_dir = dir / "gsw";
    config.dem_dir = dir / "dem";

    batch::Manifest manifest;
    for (const auto& sq : scene.quads) {
        for (std::size_t q = 3; q < scene.quarters.size(); ++q) {
            manifest.items.push_back({sq.quad, scene.quarters[q]});
        }
    }

    batch::PipelineConfig ref_cfg = config;
    ref_cfg.output_dir = dir / "out_ref";
    batch::run_pipeline(batch::shard_manifest(manifest, 1, 0), ref_cfg);

    batch::PipelineConfig par_cfg = config;
    par_cfg.output_dir = dir / "out_par";
    par_cfg.workers = 8;
    batch::run_pipeline(batch::shard_manifest(manifest, 1, 0), par_cfg);

    const auto compare_outputs = [&](const std::filesystem::path& other) {
        for (const batch::WorkItem& item : manifest.items) {
            const auto a = batch::quarter_layer_path(dir / "out_ref", item.quarter, item.quad);
            const auto b = batch::quarter_layer_path(other, item.quarter, item.quad);
            if (!std::filesystem::exists(b) || !testsup::same_bytes(a, b)) {
                return false;
            }
        }
        return true;
    };
    expect(compare_outputs(dir / "out_par"), "8-worker output differs from 1-worker output");

    Mt64Stream rng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const auto trial_dir = dir / ("t" + std::to_string(trial));
        batch::PipelineConfig cfg = config;
        cfg.output_dir = trial_dir;

        const auto stop_after = static_cast<std::size_t>(
            draw_index(rng, static_cast<std::int64_t>(manifest.items.size() + 1)));
        {
            batch::WorkerLog log(trial_dir / "run.jsonl");
            batch::ShardAssignment partial = batch::shard_manifest(manifest, 1, 0);
            partial.items.resize(stop_after);
            batch::run_pipeline(partial, cfg, &log);
        }
        const batch::Manifest pending = batch::resume_pending(
            manifest, batch::read_worker_log(trial_dir / "run.jsonl"));
        expect(pending.items.size() == manifest.items.size() - stop_after,
               "resume recovered the wrong pending set");
        {
            batch::WorkerLog log(trial_dir / "run.jsonl");
            batch::ShardAssignment rest;
            rest.items = pending.items;
            batch::run_pipeline(rest, cfg, &log);
        }
        const auto records = batch::read_worker_log(trial_dir / "run.jsonl");
        expect(batch::resume_pending(manifest, records).items.empty(),
               "items left pending after resume");
        long successes = 0;
        for (const auto& r : records) {
            if (r.status == batch::ItemStatus::Success) {
                ++successes;
            }
        }
        expect(successes == static_cast<long>(manifest.items.size()),
               "expected exactly one success per item");
        expect(compare_outputs(trial_dir), "resumed outputs differ from uninterrupted run");
        std::filesystem::remove_all(trial_dir);
    }
}

// ---------------------------------------------------------------- criterion 8

void criterion_change_detection() {
    synth::SceneSpec spec;
    spec.seed = 808;
    spec.out_size = 64;
    spec.blob_count_min = 0;
    spec.blob_count_max = 0; // growth blob only
    spec.growth = {0.0, 0.3, 0.3, 0.3};
    const synth::Scene scene = synth::synth_scene(spec, 8);
    const auto& quad = scene.quads[0];

    const auto split = [](const QuadRaster& truth) {
        QuadRaster density = QuadRaster::filled(truth.spec, 1, 0.0f);
        QuadRaster height_m = QuadRaster::filled(truth.spec, 1, 0.0f);
        for (std::size_t i = 0; i < density.data.size(); ++i) {
            density.data[i] = truth.band(0)[i];
            height_m.data[i] = truth.band(1)[i] * 100.0f;
        }
        return std::pair<QuadRaster, QuadRaster>(std::move(density), std::move(height_m));
    };
    const auto [d0, h0] = split(quad.truth.front());
    const auto [d1, h1] = split(quad.truth.back());

    const change::GrowthField field = change::volume_delta(d0, h0, d1, h1);
    const change::GrowthMask mask = change::growth_mask_p95(field);
    expect(!mask.empty, "growth scene produced no positive deltas");

    // Oracle mask from the sorted nearest-rank threshold.
    const auto threshold = oracle::p95_threshold_reference(field.delta.data, field.delta.nodata);
    expect(threshold.has_value(), "oracle found no positive deltas");
    long oracle_count = 0;
    for (std::size_t i = 0; i < field.delta.data.size(); ++i) {
        const float v = field.delta.data[i];
        const bool in_oracle =
            v != field.delta.nodata && v > 0.0f && static_cast<double>(v) >= *threshold;
        if (in_oracle) {
            ++oracle_count;
        }
        expect(static_cast<bool>(mask.mask[i]) == in_oracle,
               "p95 mask diverges from the sorted oracle at cell " + std::to_string(i));
    }
    expect(oracle_count == mask.selected, "selected count diverges");

    const auto polys = change::vectorize_8conn(mask.mask, mask.spec, field.delta.band(0));
    expect(polys.size() == 1, "expected exactly one change polygon, got " +
                                  std::to_string(polys.size()));
    expect(polys[0].pixel_count == mask.selected, "polygon pixel count diverges");
    const double want_area =
        static_cast<double>(mask.selected) * mask.spec.pixel_size * mask.spec.pixel_size;
    expect(std::abs(polys[0].area_m2 - want_area) <= 1e-6 * want_area,
           "polygon area deviates from pixel_count * pixel_size^2");
}

// ---------------------------------------------------------------- criterion 9

void criterion_raster_grid_exactness() {
    testsup::TempDir dir("acc9");
    Mt64Stream rng(909);

    // 512x512x2 round trips, bit identical.
    QuadRaster big = testsup::random_raster(rng, 512, 512, 2, -2.0f, 2.0f, 0.05);
    big.spec = quad_grid({1023, 1023}, 512);
    write_geotiff(big, dir / "big.tif");
    expect(read_geotiff(dir / "big.tif").data == big.data, "GeoTIFF round trip not lossless");
    write_tgrd(big, dir / "big.tgrd");
    expect(read_tgrd(dir / "big.tgrd").data == big.data, "TGRD round trip not lossless");

    // Quad tiling edge exactness.
    expect(quad_bounds({0, 0}).min_x == -kMercatorExtentM, "west edge must be exact");
    expect(quad_bounds({2047, 0}).max_x == kMercatorExtentM, "east edge must be exact");
    expect(quad_bounds({0, 2047}).min_y == -kMercatorExtentM, "south edge must be exact");
    for (int i = 0; i < 500; ++i) {
        const int x = static_cast<int>(draw_index(rng, kQuadsPerAxis - 1));
        const int y = static_cast<int>(draw_index(rng, kQuadsPerAxis - 1));
        expect(quad_bounds({x, y}).max_x == quad_bounds({x + 1, y}).min_x,
               "adjacent quads must share bit-equal vertical edges");
        expect(quad_bounds({x, y}).min_y == quad_bounds({x, y + 1}).max_y,
               "adjacent quads must share bit-equal horizontal edges");
    }

    // Downsample equals the scalar reference exactly.
    for (int trial = 0; trial < 5; ++trial) {
        const QuadRaster r = testsup::random_raster(rng, 64, 64, 2, 0.0f, 1.0f, 0.2);
        expect(downsample_average(r, 8).data == oracle::downsample_reference(r, 8).data,
               "downsample diverges from the scalar reference");
    }

    // Bilinear matches the scalar reference within 1e-6.
    for (int trial = 0; trial < 5; ++trial) {
        QuadRaster r = testsup::random_raster(rng, 32, 32, 1, 0.0f, 1.0f, 0.05);
        const GridSpec out_spec{draw_uniform(rng, -2.0, 2.0), draw_uniform(rng, 30.0, 34.0),
                                draw_uniform(rng, 0.4, 2.5), 24, 21};
        const QuadRaster out = resample_bilinear(r, out_spec);
        for (int row = 0; row < out_spec.height; ++row) {
            for (int col = 0; col < out_spec.width; ++col) {
                const auto want = oracle::bilinear_reference_at(r, out_spec.center_x(col),
                                                                out_spec.center_y(row));
                const float got = out.at(0, row, col);
                if (!want) {
                    expect(got == r.nodata, "expected nodata outside the input hull");
                } else {
                    expect(std::abs(got - *want) <= 1e-6,
                           "bilinear diverges from the scalar reference");
                }
            }
        }
    }
}

struct Criterion {
    int id;
    const char* label;
    double time_limit_s;
    std::function<void()> run;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "rolling aggregation matches the exhaustive scalar vote", 1.0,
         criterion_rolling_aggregate_oracle},
        {2, "loss numerics and finite-difference gradients", 5.0, criterion_loss_numerics},
        {3, "masking and agreement invariants on random fixtures", 5.0,
         criterion_postproc_invariants},
        {4, "evaluation metrics match scalar oracles", 10.0, criterion_metric_oracles},
        {5, "monotonicity AUC anchors", 1.0, criterion_auc_anchors},
        {6, "post-processing improves temporal stability on seeded scenes", 60.0,
         criterion_temporal_improvement},
        {7, "sharding, crash-resume and worker-count determinism", 120.0,
         criterion_orchestration},
        {8, "growth blob recovered as one polygon above the p95 threshold", 10.0,
         criterion_change_detection},
        {9, "raster and grid exactness", 10.0, criterion_raster_grid_exactness},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.run();
        } catch (const CheckFailure& f) {
            error = f.message;
        } catch (const std::exception& e) {
            error = std::string("unexpected exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (error.empty() && elapsed > c.time_limit_s) {
            std::ostringstream oss;
            oss << "time limit exceeded (" << elapsed << " s > " << c.time_limit_s << " s)";
            error = oss.str();
        }
        if (error.empty()) {
            std::printf("[PASS] criterion %d: %s (%.2f s)\n", c.id, c.label, elapsed);
        } else {
            std::printf("[FAIL] criterion %d: %s (%.2f s) - %s\n", c.id, c.label, elapsed,
                        error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("all %zu criteria passed\n", criteria.size());
    } else {
        std::printf("%d criteria failed\n", failures);
    }
    return failures;
}

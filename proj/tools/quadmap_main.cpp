// quadmap command line: label generation, post-processing, evaluation,
// temporal stability, change detection, sharding and resume over the quad
// file layout ({layer}/{quarter}/{quad}.tif).

#include "quadmap/changedet.hpp"
#include "quadmap/errors.hpp"
#include "quadmap/evalx.hpp"
#include "quadmap/fixtures.hpp"
#include "quadmap/grid.hpp"
#include "quadmap/labelgen.hpp"
#include "quadmap/orchestrator.hpp"
#include "quadmap/raster.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace quadmap;

namespace {

std::vector<fs::path> list_rasters(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const auto ext = entry.path().extension().string();
        if (ext == ".tif" || ext == ".tiff" || ext == ".tgrd") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
}

int cmd_labelgen(const fs::path& tiles_dir, const std::string& quads_arg,
                 const fs::path& out_dir, const std::string& height_units,
                 const std::string& resample, int out_size, const std::string& split_arg,
                 std::uint64_t seed) {
    labels::LabelGenOptions options;
    options.out_size = out_size;
    options.height_units = height_units == "normalized" ? labels::HeightUnits::Normalized01
                                                        : labels::HeightUnits::Meters;
    options.resample = resample == "nearest" ? labels::ResampleKind::Nearest
                                             : labels::ResampleKind::Bilinear;

    std::vector<QuadRaster> tiles;
    std::vector<labels::TileFootprint> footprints;
    for (const fs::path& path : list_rasters(tiles_dir)) {
        QuadRaster tile = read_raster(path);
        footprints.push_back({path.filename().string(), tile.spec.bounds(), "tiles"});
        tiles.push_back(std::move(tile));
    }
    if (tiles.empty()) {
        std::cerr << "no raster tiles found in " << tiles_dir << "\n";
        return 1;
    }

    std::vector<QuadId> quads;
    if (quads_arg == "auto") {
        // Every quad intersecting any tile footprint.
        std::set<std::pair<int, int>> unique;
        for (const auto& f : footprints) {
            const QuadId nw = quad_for_point(project_inverse(f.box.min_x, f.box.max_y).lon,
                                             project_inverse(f.box.min_x, f.box.max_y).lat);
            const QuadId se = quad_for_point(project_inverse(f.box.max_x, f.box.min_y).lon,
                                             project_inverse(f.box.max_x, f.box.min_y).lat);
            for (int x = nw.x; x <= se.x; ++x) {
                for (int y = nw.y; y <= se.y; ++y) {
                    if (quad_bounds({x, y}).intersects(f.box)) {
                        unique.emplace(x, y);
                    }
                }
            }
        }
        for (const auto& [x, y] : unique) {
            quads.push_back({x, y});
        }
    } else {
        std::stringstream ss(quads_arg);
        std::string name;
        while (std::getline(ss, name, ',')) {
            quads.push_back(parse_quad_id(name));
        }
    }

    const labels::QuadIndex index = labels::build_quad_index(quads, footprints);
    fs::create_directories(out_dir);
    long written = 0;
    for (const QuadId& q : quads) {
        std::vector<QuadRaster> hits;
        for (const auto& f : index.at(q)) {
            for (std::size_t i = 0; i < footprints.size(); ++i) {
                if (footprints[i].id == f.id) {
                    hits.push_back(tiles[i]);
                }
            }
        }
        const labels::LabelQuad label = labels::make_label_quad(q, hits, options);
        write_raster(label.raster, out_dir / (format_quad_id(q) + ".tif"));
        ++written;
    }
    std::cout << "wrote " << written << " label quads to " << out_dir << "\n";

    if (!split_arg.empty()) {
        std::array<double, 3> fractions{};
        std::stringstream ss(split_arg);
        std::string token;
        for (double& f : fractions) {
            if (!std::getline(ss, token, ',')) {
                throw ArgumentError("--split expects three comma-separated fractions");
            }
            f = std::stod(token);
        }
        const labels::SplitResult split = labels::split_quads(quads, fractions, seed);
        nlohmann::json j;
        const auto names = [](const std::vector<QuadId>& part) {
            nlohmann::json arr = nlohmann::json::array();
            for (const QuadId& q : part) {
                arr.push_back(format_quad_id(q));
            }
            return arr;
        };
        j["train"] = names(split.train);
        j["val"] = names(split.val);
        j["test"] = names(split.test);
        j["seed"] = seed;
        write_text(out_dir / "splits.json", j.dump(2) + "\n");
        std::cout << "split " << quads.size() << " quads into " << split.train.size() << "/"
                  << split.val.size() << "/" << split.test.size() << "\n";
    }
    return 0;
}

int cmd_postprocess(const fs::path& config_path, const fs::path& manifest_path, int rank,
                    int world_size, int workers, const std::optional<fs::path>& log_path) {
    batch::PipelineConfig config = batch::PipelineConfig::load(config_path);
    if (workers > 0) {
        config.workers = workers;
    }
    const batch::Manifest manifest = batch::load_manifest(manifest_path);
    const batch::ShardAssignment shard = batch::shard_manifest(manifest, world_size, rank);

    std::optional<batch::WorkerLog> log;
    if (log_path) {
        log.emplace(*log_path);
    }
    const batch::RunSummary summary =
        batch::run_pipeline(shard, config, log ? &*log : nullptr);
    std::cout << "rank " << rank << "/" << world_size << ": " << summary.succeeded
              << " succeeded, " << summary.failed << " failed (of " << shard.items.size()
              << " items)\n";
    return summary.failed == 0 ? 0 : 2;
}

int cmd_evaluate(const fs::path& pred_path, const fs::path& ref_path, double pred_thr,
                 double ref_thr, const std::optional<fs::path>& out_json,
                 const std::optional<fs::path>& out_text) {
    const QuadRaster pred = read_raster(pred_path);
    const QuadRaster ref = read_raster(ref_path);

    eval::MetricsReport report;
    const eval::DetectionReport det = eval::detection_metrics(pred, ref, pred_thr, ref_thr);
    if (!det.empty) {
        report.precision = det.precision;
        report.recall = det.recall;
        report.f1 = det.f1;
        report.accuracy = det.accuracy;
    }
    const eval::RegressionReport reg = eval::regression_metrics(pred, ref);
    if (reg.mae_defined) {
        report.mae_pos = reg.mae_pos;
    }
    if (!reg.r2_degenerate) {
        report.r2 = reg.r2;
    }

    if (pred.bands >= 2 && ref.bands >= 2) {
        // Band 1 carries normalized height; compare in meters.
        const auto to_meters = [](const QuadRaster& r) {
            QuadRaster m = QuadRaster::filled(r.spec, 1, r.nodata, r.nodata, r.crs);
            for (std::size_t i = 0; i < m.data.size(); ++i) {
                const float v = r.band(1)[i];
                m.data[i] = v == r.nodata ? r.nodata : v * 100.0f;
            }
            return m;
        };
        report.macro_f1_height =
            eval::height_macro_f1(to_meters(pred), to_meters(ref)).macro_f1;
    }

    const std::string text = eval::to_text(report);
    std::cout << text;
    if (out_json) {
        write_text(*out_json, eval::to_json_text(report) + "\n");
    }
    if (out_text) {
        write_text(*out_text, text);
    }
    return 0;
}

int cmd_stability(const std::vector<fs::path>& inputs, const std::string& k_arg,
                  double tau_max, int tau_steps, const std::optional<fs::path>& out_json) {
    std::vector<QuadRaster> annual;
    for (const fs::path& p : inputs) {
        annual.push_back(read_raster(p));
    }
    std::vector<int> ks;
    std::stringstream ss(k_arg);
    std::string token;
    while (std::getline(ss, token, ',')) {
        ks.push_back(std::stoi(token));
    }

    nlohmann::json all = nlohmann::json::object();
    for (int k : ks) {
        const auto signals = eval::window_signals(annual, k);
        eval::MetricsReport report;
        const auto auc = eval::monotonicity_auc(signals, {k, tau_max, tau_steps});
        if (auc.defined) {
            report.mono_auc = auc.value;
        }
        const auto stab = eval::stability_summary(signals);
        if (stab.defined) {
            report.corr_median = stab.corr_median;
        }
        report.diff_std = stab.diff_std;
        std::cout << "k=" << k << " (" << signals.size() << " windows)\n"
                  << eval::to_text(report);
        all["k" + std::to_string(k)] = nlohmann::json::parse(eval::to_json_text(report));
        all["k" + std::to_string(k)]["windows"] = signals.size();
    }
    if (out_json) {
        write_text(*out_json, all.dump(2) + "\n");
    }
    return 0;
}

int cmd_change(const fs::path& before_path, const fs::path& after_path,
               const fs::path& out_path, double percentile) {
    const QuadRaster before = read_raster(before_path);
    const QuadRaster after = read_raster(after_path);
    if (before.bands < 2 || after.bands < 2) {
        throw ArgumentError("change detection expects 2-band products (density, height_norm)");
    }
    const auto split = [](const QuadRaster& r) {
        QuadRaster density = QuadRaster::filled(r.spec, 1, r.nodata, r.nodata, r.crs);
        QuadRaster height_m = density;
        for (std::size_t i = 0; i < density.data.size(); ++i) {
            density.data[i] = r.band(0)[i];
            const float h = r.band(1)[i];
            height_m.data[i] = h == r.nodata ? r.nodata : h * 100.0f;
        }
        return std::pair<QuadRaster, QuadRaster>(std::move(density), std::move(height_m));
    };
    const auto [d0, h0] = split(before);
    const auto [d1, h1] = split(after);

    const change::GrowthField field = change::volume_delta(d0, h0, d1, h1);
    const change::GrowthMask mask = change::growth_mask_p95(field, percentile);
    if (mask.empty) {
        std::cout << "no positive growth; writing an empty collection\n";
    }
    const auto polys = change::vectorize_8conn(mask.mask, mask.spec, field.delta.band(0));
    write_text(out_path, change::to_geojson(polys) + "\n");
    std::cout << "wrote " << polys.size() << " change polygons (threshold " << mask.threshold
              << ", " << mask.selected << " cells) to " << out_path << "\n";
    return 0;
}

int cmd_shard(const fs::path& manifest_path, int world_size, int rank,
              const std::optional<fs::path>& out_path) {
    const batch::Manifest manifest = batch::load_manifest(manifest_path);
    if (rank >= 0) {
        const batch::ShardAssignment shard = batch::shard_manifest(manifest, world_size, rank);
        batch::Manifest out;
        out.version = manifest.version;
        out.items = shard.items;
        if (out_path) {
            batch::save_manifest(out, *out_path);
        }
        std::cout << "rank " << rank << ": " << shard.items.size() << " of "
                  << manifest.items.size() << " items\n";
    } else {
        for (int r = 0; r < world_size; ++r) {
            std::cout << "rank " << r << ": "
                      << batch::shard_manifest(manifest, world_size, r).items.size()
                      << " items\n";
        }
    }
    return 0;
}

int cmd_resume(const fs::path& manifest_path, const std::vector<fs::path>& log_paths,
               const fs::path& out_path) {
    const batch::Manifest manifest = batch::load_manifest(manifest_path);
    std::vector<batch::LogRecord> records;
    int skipped_total = 0;
    for (const fs::path& p : log_paths) {
        int skipped = 0;
        const auto batch_records = batch::read_worker_log(p, &skipped);
        records.insert(records.end(), batch_records.begin(), batch_records.end());
        skipped_total += skipped;
    }
    if (skipped_total > 0) {
        std::cerr << "warning: skipped " << skipped_total << " unparseable log records\n";
    }
    const batch::Manifest pending = batch::resume_pending(manifest, records);
    batch::save_manifest(pending, out_path);
    std::cout << pending.items.size() << " of " << manifest.items.size()
              << " items still pending -> " << out_path << "\n";
    return 0;
}

int cmd_synth(const fs::path& out_dir, std::uint64_t seed, int quads, int quarters,
              int out_size, double noise_sigma, double cloud_fraction,
              const std::string& first_quarter) {
    synth::SceneSpec spec;
    spec.seed = seed;
    spec.quad_count = quads;
    spec.out_size = out_size;
    spec.growth = {0.0, 0.05, 0.05, 0.0, 0.05};
    spec.noise.assign(static_cast<std::size_t>(quarters), {noise_sigma, 0.0});
    if (cloud_fraction > 0.0 && quarters > 5) {
        spec.noise[static_cast<std::size_t>(quarters / 2)].cloud_fraction = cloud_fraction;
    }
    const synth::Scene scene = synth::synth_timeseries(spec, quarters, out_dir, first_quarter);

    batch::Manifest manifest;
    for (const auto& sq : scene.quads) {
        for (std::size_t q = 3; q < scene.quarters.size(); ++q) {
            manifest.items.push_back({sq.quad, scene.quarters[q]});
        }
    }
    batch::save_manifest(manifest, out_dir / "manifest.json");

    batch::PipelineConfig config;
    config.predictions_dir = out_dir / "predictions";
    config.udm_dir = out_dir / "udm";
    config.gsw_dir = out_dir / "gsw";
    config.dem_dir = out_dir / "dem";
    config.output_dir = out_dir / "smoothed";
    config.save(out_dir / "config.json");

    std::cout << "scene with " << quads << " quad(s), " << quarters << " quarters -> "
              << out_dir << "\nmanifest: " << (out_dir / "manifest.json")
              << "\nconfig:   " << (out_dir / "config.json") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quad-grid building map toolkit"};
    app.require_subcommand(1);

    // labelgen ------------------------------------------------------------
    auto* labelgen = app.add_subcommand("labelgen", "build per-quad training labels");
    fs::path lg_tiles, lg_out;
    std::string lg_quads = "auto";
    std::string lg_units = "meters";
    std::string lg_resample = "bilinear";
    std::string lg_split;
    int lg_out_size = kOutputPixels;
    std::uint64_t lg_seed = 0;
    labelgen->add_option("--tiles", lg_tiles, "directory of source tiles")->required();
    labelgen->add_option("--out", lg_out, "output directory")->required();
    labelgen->add_option("--quads", lg_quads,
                         "comma-separated quad names, or 'auto' to derive from tiles");
    labelgen->add_option("--height-units", lg_units, "meters|normalized");
    labelgen->add_option("--resample", lg_resample, "bilinear|nearest");
    labelgen->add_option("--out-size", lg_out_size, "label grid edge (default 512)");
    labelgen->add_option("--split", lg_split, "train,val,test fractions");
    labelgen->add_option("--seed", lg_seed, "split seed");

    // postprocess ---------------------------------------------------------
    auto* postprocess = app.add_subcommand("postprocess", "run the smoothing pipeline");
    fs::path pp_config, pp_manifest;
    int pp_rank = 0, pp_world = 1, pp_workers = 0;
    std::optional<fs::path> pp_log;
    postprocess->add_option("--config", pp_config, "pipeline config JSON")->required();
    postprocess->add_option("--manifest", pp_manifest, "manifest JSON")->required();
    postprocess->add_option("--rank", pp_rank, "shard rank");
    postprocess->add_option("--world-size", pp_world, "number of shards");
    postprocess->add_option("--workers", pp_workers, "worker threads (overrides config)");
    postprocess->add_option("--log", pp_log, "worker log path (JSONL, appended)");

    // evaluate ------------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "static metrics against a reference");
    fs::path ev_pred, ev_ref;
    double ev_pred_thr = 0.01, ev_ref_thr = 0.01;
    std::optional<fs::path> ev_json, ev_text;
    evaluate->add_option("--pred", ev_pred, "prediction raster")->required();
    evaluate->add_option("--ref", ev_ref, "reference raster")->required();
    evaluate->add_option("--pred-thr", ev_pred_thr, "prediction binarization threshold");
    evaluate->add_option("--ref-thr", ev_ref_thr, "reference binarization threshold");
    evaluate->add_option("--json", ev_json, "write the JSON report here");
    evaluate->add_option("--text", ev_text, "write the text report here");

    // stability -----------------------------------------------------------
    auto* stability = app.add_subcommand("stability", "temporal consistency metrics");
    std::vector<fs::path> st_inputs;
    std::string st_k = "3,7,10";
    double st_tau_max = 0.01;
    int st_tau_steps = 100;
    std::optional<fs::path> st_json;
    stability->add_option("--inputs", st_inputs, "annual rasters, chronological")
        ->required()
        ->expected(-2);
    stability->add_option("--k", st_k, "comma-separated window sizes");
    stability->add_option("--tau-max", st_tau_max, "tolerance sweep upper bound");
    stability->add_option("--tau-steps", st_tau_steps, "tolerance sweep steps");
    stability->add_option("--json", st_json, "write the JSON report here");

    // change --------------------------------------------------------------
    auto* change_cmd = app.add_subcommand("change", "bitemporal growth polygons");
    fs::path ch_before, ch_after, ch_out;
    double ch_percentile = 95.0;
    change_cmd->add_option("--before", ch_before, "earlier 2-band product")->required();
    change_cmd->add_option("--after", ch_after, "later 2-band product")->required();
    change_cmd->add_option("--out", ch_out, "output GeoJSON path")->required();
    change_cmd->add_option("--percentile", ch_percentile, "growth percentile threshold");

    // shard ---------------------------------------------------------------
    auto* shard = app.add_subcommand("shard", "deterministic manifest sharding");
    fs::path sh_manifest;
    int sh_world = 1, sh_rank = -1;
    std::optional<fs::path> sh_out;
    shard->add_option("--manifest", sh_manifest, "manifest JSON")->required();
    shard->add_option("--world-size", sh_world, "number of shards")->required();
    shard->add_option("--rank", sh_rank, "emit this rank's shard (otherwise list sizes)");
    shard->add_option("--out", sh_out, "write the shard manifest here");

    // resume --------------------------------------------------------------
    auto* resume = app.add_subcommand("resume", "pending items from worker logs");
    fs::path rs_manifest, rs_out;
    std::vector<fs::path> rs_logs;
    resume->add_option("--manifest", rs_manifest, "manifest JSON")->required();
    resume->add_option("--logs", rs_logs, "worker logs (JSONL)")->required()->expected(-1);
    resume->add_option("--out", rs_out, "write the pending manifest here")->required();

    // synth ---------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic demo scene");
    fs::path sy_out;
    std::uint64_t sy_seed = 7;
    int sy_quads = 1, sy_quarters = 16, sy_out_size = 64;
    double sy_noise = 0.05, sy_cloud = 0.05;
    std::string sy_first = "2020q1";
    synth_cmd->add_option("--out", sy_out, "scene directory")->required();
    synth_cmd->add_option("--seed", sy_seed, "scene seed");
    synth_cmd->add_option("--quads", sy_quads, "quad count");
    synth_cmd->add_option("--quarters", sy_quarters, "quarter count (>= 4)");
    synth_cmd->add_option("--out-size", sy_out_size, "output grid edge");
    synth_cmd->add_option("--noise", sy_noise, "per-quarter noise sigma");
    synth_cmd->add_option("--clouds", sy_cloud, "cloud fraction for one mid-series quarter");
    synth_cmd->add_option("--first-quarter", sy_first, "first quarter token");

    CLI11_PARSE(app, argc, argv);

    try {
        if (labelgen->parsed()) {
            return cmd_labelgen(lg_tiles, lg_quads, lg_out, lg_units, lg_resample, lg_out_size,
                                lg_split, lg_seed);
        }
        if (postprocess->parsed()) {
            return cmd_postprocess(pp_config, pp_manifest, pp_rank, pp_world, pp_workers,
                                   pp_log);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(ev_pred, ev_ref, ev_pred_thr, ev_ref_thr, ev_json, ev_text);
        }
        if (stability->parsed()) {
            return cmd_stability(st_inputs, st_k, st_tau_max, st_tau_steps, st_json);
        }
        if (change_cmd->parsed()) {
            return cmd_change(ch_before, ch_after, ch_out, ch_percentile);
        }
        if (shard->parsed()) {
            return cmd_shard(sh_manifest, sh_world, sh_rank, sh_out);
        }
        if (resume->parsed()) {
            return cmd_resume(rs_manifest, rs_logs, rs_out);
        }
        if (synth_cmd->parsed()) {
            return cmd_synth(sy_out, sy_seed, sy_quads, sy_quarters, sy_out_size, sy_noise,
                             sy_cloud, sy_first);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

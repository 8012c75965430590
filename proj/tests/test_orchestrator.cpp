#include "quadmap/errors.hpp"
#include "quadmap/fixtures.hpp"
#include "quadmap/orchestrator.hpp"
#include "quadmap/raster.hpp"
#include "quadmap/rng.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace quadmap;
using namespace quadmap::batch;

TEST_SUITE_BEGIN("orchestrator");

namespace {

Manifest demo_manifest(int n, const std::string& quarter = "2023q4") {
    Manifest m;
    for (int i = 0; i < n; ++i) {
        m.items.push_back({{i % 64, i / 64}, quarter});
    }
    return m;
}

/// Scene with 16 quarters written to disk, plus a manifest over the last
/// quarter of each year.
struct PipelineFixture {
    explicit PipelineFixture(const std::filesystem::path& root, std::uint64_t seed = 42) {
        synth::SceneSpec spec;
        spec.seed = seed;
        spec.quad_count = 2;
        spec.out_size = 32;
        spec.growth = {0.0, 0.05, 0.05, 0.0, 0.05, 0.0, 0.05, 0.0};
        spec.noise.assign(16, {0.04, 0.0});
        spec.noise[5].cloud_fraction = 0.05;
        scene = synth::synth_timeseries(spec, 16, root);

        config.predictions_dir = root / "predictions";
        config.udm_dir = root / "udm";
        config.gsw_dir = root / "gsw";
        config.dem_dir = root / "dem";
        config.output_dir = root / "smoothed";

        for (const auto& sq : scene.quads) {
            for (std::size_t q = 3; q < scene.quarters.size(); q += 4) {
                manifest.items.push_back({sq.quad, scene.quarters[q]});
            }
        }
    }

    synth::Scene scene;
    PipelineConfig config;
    Manifest manifest;
};

std::vector<std::filesystem::path> output_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b) {
    const auto fa = output_files(a);
    const auto fb = output_files(b);
    if (fa.size() != fb.size()) {
        return false;
    }
    for (std::size_t i = 0; i < fa.size(); ++i) {
        if (fa[i].lexically_relative(a) != fb[i].lexically_relative(b)) {
            return false;
        }
        if (!testsup::same_bytes(fa[i], fb[i])) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("quarter tokens") {
    CHECK(format_quarter({2023, 4}) == "2023q4");
    CHECK(previous_quarter("2023q4") == "2023q3");
    CHECK(previous_quarter("2023q1") == "2022q4");
    CHECK_THROWS_AS(parse_quarter("2023"), ParseError);
    CHECK_THROWS_AS(parse_quarter("2023q5"), ParseError);
    CHECK_THROWS_AS(parse_quarter("q4"), ParseError);
}

TEST_CASE("manifest io") {
    testsup::TempDir dir("manifest");
    const Manifest m = demo_manifest(17);
    save_manifest(m, dir / "m.json");
    const Manifest back = load_manifest(dir / "m.json");
    CHECK(back.items == m.items);
    CHECK(back.version == m.version);

    SUBCASE("duplicate items rejected") {
        Manifest dup = demo_manifest(3);
        dup.items.push_back(dup.items.front());
        save_manifest(dup, dir / "dup.json");
        CHECK_THROWS_AS(load_manifest(dir / "dup.json"), FormatError);
    }
}

TEST_CASE("sharding") {
    SUBCASE("world of one gets everything") {
        const Manifest m = demo_manifest(10);
        const ShardAssignment s = shard_manifest(m, 1, 0);
        CHECK(s.items == m.items);
    }

    SUBCASE("ten items over three ranks split 4/3/3") {
        const Manifest m = demo_manifest(10);
        CHECK(shard_manifest(m, 3, 0).items.size() == 4);
        CHECK(shard_manifest(m, 3, 1).items.size() == 3);
        CHECK(shard_manifest(m, 3, 2).items.size() == 3);
    }

    SUBCASE("partition property") {
        for (int n : {0, 1, 7, 100, 1000}) {
            const Manifest m = demo_manifest(n);
            for (int world = 1; world <= 17; ++world) {
                std::set<std::pair<int, std::string>> seen;
                std::size_t total = 0;
                std::size_t min_size = m.items.size() + 1;
                std::size_t max_size = 0;
                for (int rank = 0; rank < world; ++rank) {
                    const ShardAssignment s = shard_manifest(m, world, rank);
                    total += s.items.size();
                    min_size = std::min(min_size, s.items.size());
                    max_size = std::max(max_size, s.items.size());
                    for (const WorkItem& item : s.items) {
                        CHECK(seen.emplace(item.quad.x * 4096 + item.quad.y, item.quarter)
                                  .second);
                    }
                }
                CHECK(total == m.items.size());
                CHECK(max_size - min_size <= 1);
            }
        }
    }

    SUBCASE("rank range enforced") {
        const Manifest m = demo_manifest(4);
        CHECK_THROWS_AS(shard_manifest(m, 3, 3), ArgumentError);
        CHECK_THROWS_AS(shard_manifest(m, 0, 0), ArgumentError);
        CHECK_THROWS_AS(shard_manifest(m, 3, -1), ArgumentError);
    }
}

TEST_CASE("worker log and resume") {
    testsup::TempDir dir("log");
    const Manifest m = demo_manifest(5);

    SUBCASE("complete run resumes to an empty manifest") {
        WorkerLog log(dir / "w.jsonl");
        for (const WorkItem& item : m.items) {
            log.append({item, ItemStatus::Allocated, "", ""});
            log.append({item, ItemStatus::Success, "", ""});
        }
        const auto records = read_worker_log(dir / "w.jsonl");
        CHECK(records.size() == 10);
        CHECK(resume_pending(m, records).items.empty());
    }

    SUBCASE("failures and stale allocations are retried") {
        WorkerLog log(dir / "w.jsonl");
        log.append({m.items[0], ItemStatus::Success, "", ""});
        log.append({m.items[1], ItemStatus::Failure, "", "boom"});
        log.append({m.items[2], ItemStatus::Allocated, "", ""});
        const Manifest pending = resume_pending(m, read_worker_log(dir / "w.jsonl"));
        REQUIRE(pending.items.size() == 4);
        CHECK(pending.items[0] == m.items[1]);
        CHECK(pending.items[1] == m.items[2]);
    }

    SUBCASE("mid-record truncation never loses work") {
        WorkerLog log(dir / "w.jsonl");
        log.append({m.items[0], ItemStatus::Success, "", ""});
        log.append({m.items[1], ItemStatus::Success, "", ""});
        auto bytes = testsup::slurp(dir / "w.jsonl");
        // Cut into the middle of the second record.
        bytes.resize(bytes.size() - 12);
        std::ofstream(dir / "cut.jsonl", std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        int skipped = 0;
        const auto records = read_worker_log(dir / "cut.jsonl", &skipped);
        CHECK(skipped == 1);
        const Manifest pending = resume_pending(m, records);
        // Item 1's success was torn away, so it must run again.
        CHECK(pending.items.size() == 4);
    }
}

TEST_CASE("config io mirrors every default") {
    testsup::TempDir dir("config");
    PipelineConfig c;
    c.predictions_dir = "/data/preds";
    c.workers = 8;
    c.save(dir / "c.json");
    const PipelineConfig back = PipelineConfig::load(dir / "c.json");
    CHECK(back.predictions_dir == std::filesystem::path("/data/preds"));
    CHECK(back.conf_threshold == 95.0);
    CHECK(back.clarity_split == 3.5);
    CHECK(back.density_floor == doctest::Approx(2.0 / 255.0).epsilon(1e-15));
    CHECK(back.min_height_m == 2.4);
    CHECK(back.elevation_cap_m == 5100.0);
    CHECK(back.pred_thr == 0.01);
    CHECK(back.tau_max == 0.01);
    CHECK(back.tau_steps == 100);
    CHECK(back.window_sizes == std::vector<int>{3, 7, 10});
    CHECK(back.workers == 8);
}

TEST_CASE("pipeline runs") {
    testsup::TempDir dir("pipeline");
    PipelineFixture fx(dir.path());

    SUBCASE("empty shard summarizes to zero") {
        ShardAssignment empty;
        const RunSummary s = run_pipeline(empty, fx.config);
        CHECK(s.succeeded == 0);
        CHECK(s.failed == 0);
    }

    SUBCASE("single worker and eight workers write identical bytes") {
        PipelineConfig one = fx.config;
        one.output_dir = dir / "out1";
        one.workers = 1;
        const RunSummary s1 = run_pipeline(shard_manifest(fx.manifest, 1, 0), one);
        CHECK(s1.failed == 0);
        CHECK(s1.succeeded == static_cast<long>(fx.manifest.items.size()));

        PipelineConfig eight = fx.config;
        eight.output_dir = dir / "out8";
        eight.workers = 8;
        const RunSummary s8 = run_pipeline(shard_manifest(fx.manifest, 1, 0), eight);
        CHECK(s8.failed == 0);
        CHECK(same_tree(dir / "out1", dir / "out8"));

        // Re-running over already-written outputs rewrites identical bytes.
        const RunSummary again = run_pipeline(shard_manifest(fx.manifest, 1, 0), one);
        CHECK(again.failed == 0);
        CHECK(same_tree(dir / "out1", dir / "out8"));
    }

    SUBCASE("unreadable input fails one item and spares the rest") {
        PipelineConfig cfg = fx.config;
        cfg.output_dir = dir / "out_fault";
        const WorkItem& victim = fx.manifest.items.front();
        const auto victim_path =
            quarter_layer_path(cfg.predictions_dir, victim.quarter, victim.quad);
        const auto backup = testsup::slurp(victim_path);
        std::ofstream(victim_path, std::ios::binary) << "garbage";
        WorkerLog log(dir / "fault.jsonl");
        const RunSummary s = run_pipeline(shard_manifest(fx.manifest, 1, 0), cfg, &log);
        CHECK(s.failed == 1);
        CHECK(s.succeeded == static_cast<long>(fx.manifest.items.size()) - 1);
        int failures = 0;
        for (const LogRecord& r : read_worker_log(dir / "fault.jsonl")) {
            if (r.status == ItemStatus::Failure) {
                ++failures;
                CHECK(r.item == victim);
                CHECK_FALSE(r.error_text.empty());
            }
        }
        CHECK(failures == 1);
        std::ofstream(victim_path, std::ios::binary)
            .write(backup.data(), static_cast<std::streamsize>(backup.size()));
    }

    SUBCASE("missing udm falls back to the no-clarity vote") {
        PipelineConfig cfg = fx.config;
        cfg.output_dir = dir / "out_noudm";
        cfg.udm_dir = dir / "udm_missing"; // no files here
        const RunSummary s = run_pipeline(shard_manifest(fx.manifest, 1, 0), cfg);
        CHECK(s.failed == 0);
        // Spot-check one pixel against the library fallback path.
        const WorkItem item = fx.manifest.items.front();
        const QuadRaster out =
            read_raster(quarter_layer_path(cfg.output_dir, item.quarter, item.quad));
        CHECK(out.bands == 2);
    }

    SUBCASE("crash at a log prefix resumes to identical output") {
        PipelineConfig ref_cfg = fx.config;
        ref_cfg.output_dir = dir / "out_ref";
        run_pipeline(shard_manifest(fx.manifest, 1, 0), ref_cfg);

        Mt64Stream rng(7);
        for (int trial = 0; trial < 5; ++trial) {
            const auto trial_dir = dir / ("trial" + std::to_string(trial));
            PipelineConfig cfg = fx.config;
            cfg.output_dir = trial_dir;

            // First attempt dies after a random number of items.
            const auto stop_after =
                static_cast<std::size_t>(draw_index(rng, static_cast<std::int64_t>(
                                                             fx.manifest.items.size() + 1)));
            WorkerLog log(trial_dir / "run.jsonl");
            ShardAssignment partial = shard_manifest(fx.manifest, 1, 0);
            partial.items.resize(stop_after);
            run_pipeline(partial, cfg, &log);

            // Resume from the surviving log.
            const Manifest pending =
                resume_pending(fx.manifest, read_worker_log(trial_dir / "run.jsonl"));
            CHECK(pending.items.size() == fx.manifest.items.size() - stop_after);
            ShardAssignment rest;
            rest.items = pending.items;
            WorkerLog log2(trial_dir / "run.jsonl");
            run_pipeline(rest, cfg, &log2);

            const Manifest done =
                resume_pending(fx.manifest, read_worker_log(trial_dir / "run.jsonl"));
            CHECK(done.items.empty());
            std::filesystem::remove(trial_dir / "run.jsonl");
            CHECK(same_tree(dir / "out_ref", trial_dir));
        }
    }
}

TEST_SUITE_END();

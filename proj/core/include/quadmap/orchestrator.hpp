#pragma once

#include "quadmap/grid.hpp"
#include "quadmap/postproc.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quadmap::batch {

/// One unit of work: a quad at a quarter ("2023q4" style token).
struct WorkItem {
    QuadId quad;
    std::string quarter;

    bool operator==(const WorkItem&) const = default;
};

struct Manifest {
    std::string version = "1";
    std::vector<WorkItem> items;
};

/// Quarter token helpers. Tokens are `{year}q{1..4}`.
struct Quarter {
    int year = 0;
    int q = 1;
};
Quarter parse_quarter(const std::string& token);
std::string format_quarter(Quarter q);
std::string previous_quarter(const std::string& token);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

struct ShardAssignment {
    int rank = 0;
    int world_size = 1;
    std::vector<WorkItem> items;
};

/// Modular assignment: item i goes to rank i mod world_size. Shards are
/// disjoint, cover the manifest, and differ in size by at most one.
ShardAssignment shard_manifest(const Manifest& m, int world_size, int rank);

enum class ItemStatus { Allocated, Success, Failure };

struct LogRecord {
    WorkItem item;
    ItemStatus status = ItemStatus::Allocated;
    std::string timestamp;
    std::string error_text;
};

/// Append-only newline-delimited JSON log; appends are serialized so one log
/// can be shared by every worker thread of a process.
class WorkerLog {
  public:
    explicit WorkerLog(const std::filesystem::path& path);

    void append(const LogRecord& record);
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

/// Tolerant reader: unparseable lines (including one cut by truncation) are
/// skipped and counted, never fatal.
std::vector<LogRecord> read_worker_log(const std::filesystem::path& path,
                                       int* skipped_records = nullptr);

/// Items with no success record anywhere in `records`; failures and stale
/// allocations run again.
Manifest resume_pending(const Manifest& m, std::span<const LogRecord> records);

/// Pipeline configuration. JSON keys mirror the field names; every threshold
/// default matches the product defaults.
struct PipelineConfig {
    std::filesystem::path predictions_dir;
    std::filesystem::path udm_dir;
    std::filesystem::path gsw_dir;
    std::filesystem::path dem_dir;
    std::filesystem::path output_dir;

    double conf_threshold = 95.0;
    double clarity_split = 3.5;
    double density_floor = 2.0 / 255.0;
    double min_height_m = 2.4;
    double elevation_cap_m = 5100.0;
    double pred_thr = 0.01;
    double tau_max = 0.01;
    int tau_steps = 100;
    std::vector<int> window_sizes{3, 7, 10};
    int workers = 1;

    post::PostprocParams post_params() const;

    static PipelineConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

struct RunSummary {
    long succeeded = 0;
    long failed = 0;
};

/// Run the smoothing pipeline over a shard: for each item, load the four
/// quarterly prediction quads, score clarity when a UDM exists (the median
/// fallback covers quads without one), aggregate density and height, mask
/// uninhabitable cells, enforce agreement, and write the 2-band product to
/// `{output_dir}/{quarter}/{quad}.tif`. Item failures are logged and do not
/// stop the run; outputs do not depend on the worker count.
RunSummary run_pipeline(const ShardAssignment& shard, const PipelineConfig& config,
                        WorkerLog* log = nullptr);

/// Layout helper shared by the pipeline, fixtures and the CLI:
/// `{root}/{quarter}/{quad}.tif` for quarterly layers and `{root}/{quad}.tif`
/// for static ones.
std::filesystem::path quarter_layer_path(const std::filesystem::path& root,
                                         const std::string& quarter, QuadId quad);
std::filesystem::path static_layer_path(const std::filesystem::path& root, QuadId quad);

} // namespace quadmap::batch

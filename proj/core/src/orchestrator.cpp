#include "quadmap/orchestrator.hpp"

#include "quadmap/errors.hpp"
#include "quadmap/raster.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <thread>

namespace quadmap::batch {

using nlohmann::json;

Quarter parse_quarter(const std::string& token) {
    const auto qpos = token.find('q');
    if (qpos == std::string::npos || qpos == 0 || qpos + 1 >= token.size()) {
        throw ParseError("quarter token '" + token + "': expected '{year}q{1..4}'");
    }
    Quarter result;
    try {
        result.year = std::stoi(token.substr(0, qpos));
        result.q = std::stoi(token.substr(qpos + 1));
    } catch (const std::exception&) {
        throw ParseError("quarter token '" + token + "': year or quarter not numeric");
    }
    if (result.q < 1 || result.q > 4) {
        throw ParseError("quarter token '" + token + "': quarter index out of range");
    }
    return result;
}

std::string format_quarter(Quarter q) {
    return std::to_string(q.year) + "q" + std::to_string(q.q);
}

std::string previous_quarter(const std::string& token) {
    Quarter q = parse_quarter(token);
    if (q.q == 1) {
        --q.year;
        q.q = 4;
    } else {
        --q.q;
    }
    return format_quarter(q);
}

namespace {

json item_to_json(const WorkItem& item) {
    return {{"quad", format_quad_id(item.quad)}, {"quarter", item.quarter}};
}

WorkItem item_from_json(const json& j) {
    return {parse_quad_id(j.at("quad").get<std::string>()),
            j.at("quarter").get<std::string>()};
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const char* status_name(ItemStatus s) {
    switch (s) {
    case ItemStatus::Allocated:
        return "allocated";
    case ItemStatus::Success:
        return "success";
    case ItemStatus::Failure:
        return "failure";
    }
    return "allocated";
}

ItemStatus status_from_name(const std::string& name) {
    if (name == "allocated") {
        return ItemStatus::Allocated;
    }
    if (name == "success") {
        return ItemStatus::Success;
    }
    if (name == "failure") {
        return ItemStatus::Failure;
    }
    throw ParseError("unknown log status '" + name + "'");
}

} // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("manifest '" + path.string() + "': " + e.what());
    }
    Manifest m;
    m.version = j.value("version", "1");
    std::set<std::pair<std::string, std::string>> seen;
    for (const json& ij : j.at("items")) {
        WorkItem item = item_from_json(ij);
        if (!seen.emplace(format_quad_id(item.quad), item.quarter).second) {
            throw FormatError("manifest '" + path.string() + "': duplicate item " +
                              format_quad_id(item.quad) + " " + item.quarter);
        }
        m.items.push_back(std::move(item));
    }
    return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    json items = json::array();
    for (const WorkItem& item : m.items) {
        items.push_back(item_to_json(item));
    }
    const json j = {{"version", m.version}, {"items", items}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write manifest '" + path.string() + "'");
    }
    out << j.dump(2) << "\n";
}

ShardAssignment shard_manifest(const Manifest& m, int world_size, int rank) {
    if (world_size < 1 || rank < 0 || rank >= world_size) {
        throw ArgumentError("rank " + std::to_string(rank) + " out of range for world size " +
                            std::to_string(world_size));
    }
    ShardAssignment shard;
    shard.rank = rank;
    shard.world_size = world_size;
    for (std::size_t i = rank; i < m.items.size(); i += world_size) {
        shard.items.push_back(m.items[i]);
    }
    return shard;
}

WorkerLog::WorkerLog(const std::filesystem::path& path) : path_(path) {
    if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw IoError("cannot open worker log '" + path_.string() + "'");
    }
}

void WorkerLog::append(const LogRecord& record) {
    json j = {{"item", item_to_json(record.item)},
              {"status", status_name(record.status)},
              {"timestamp", record.timestamp.empty() ? now_iso8601() : record.timestamp}};
    if (!record.error_text.empty()) {
        j["error_text"] = record.error_text;
    }
    const std::string line = j.dump();
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    out << line << "\n";
    out.flush();
}

std::vector<LogRecord> read_worker_log(const std::filesystem::path& path,
                                       int* skipped_records) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open worker log '" + path.string() + "'");
    }
    std::vector<LogRecord> records;
    int skipped = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            const json j = json::parse(line);
            LogRecord record;
            record.item = item_from_json(j.at("item"));
            record.status = status_from_name(j.at("status").get<std::string>());
            record.timestamp = j.value("timestamp", "");
            record.error_text = j.value("error_text", "");
            records.push_back(std::move(record));
        } catch (const std::exception&) {
            // Torn or corrupt record (e.g. truncation mid-write): skip it and
            // keep the parseable prefix.
            ++skipped;
        }
    }
    if (skipped_records) {
        *skipped_records = skipped;
    }
    return records;
}

Manifest resume_pending(const Manifest& m, std::span<const LogRecord> records) {
    std::set<std::pair<std::string, std::string>> done;
    for (const LogRecord& record : records) {
        if (record.status == ItemStatus::Success) {
            done.emplace(format_quad_id(record.item.quad), record.item.quarter);
        }
    }
    Manifest pending;
    pending.version = m.version;
    for (const WorkItem& item : m.items) {
        if (!done.contains({format_quad_id(item.quad), item.quarter})) {
            pending.items.push_back(item);
        }
    }
    return pending;
}

post::PostprocParams PipelineConfig::post_params() const {
    post::PostprocParams p;
    p.conf_threshold = conf_threshold;
    p.clarity_split = clarity_split;
    p.density_floor = density_floor;
    p.min_height_m = min_height_m;
    p.elevation_cap_m = elevation_cap_m;
    return p;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("config '" + path.string() + "': " + e.what());
    }
    PipelineConfig c;
    c.predictions_dir = j.value("predictions_dir", "");
    c.udm_dir = j.value("udm_dir", "");
    c.gsw_dir = j.value("gsw_dir", "");
    c.dem_dir = j.value("dem_dir", "");
    c.output_dir = j.value("output_dir", "");
    c.conf_threshold = j.value("conf_threshold", c.conf_threshold);
    c.clarity_split = j.value("clarity_split", c.clarity_split);
    c.density_floor = j.value("density_floor", c.density_floor);
    c.min_height_m = j.value("min_height_m", c.min_height_m);
    c.elevation_cap_m = j.value("elevation_cap_m", c.elevation_cap_m);
    c.pred_thr = j.value("pred_thr", c.pred_thr);
    c.tau_max = j.value("tau_max", c.tau_max);
    c.tau_steps = j.value("tau_steps", c.tau_steps);
    if (j.contains("k")) {
        c.window_sizes = j.at("k").get<std::vector<int>>();
    }
    c.workers = j.value("workers", c.workers);
    return c;
}

void PipelineConfig::save(const std::filesystem::path& path) const {
    const json j = {
        {"predictions_dir", predictions_dir.string()},
        {"udm_dir", udm_dir.string()},
        {"gsw_dir", gsw_dir.string()},
        {"dem_dir", dem_dir.string()},
        {"output_dir", output_dir.string()},
        {"conf_threshold", conf_threshold},
        {"clarity_split", clarity_split},
        {"density_floor", density_floor},
        {"min_height_m", min_height_m},
        {"elevation_cap_m", elevation_cap_m},
        {"pred_thr", pred_thr},
        {"tau_max", tau_max},
        {"tau_steps", tau_steps},
        {"k", window_sizes},
        {"workers", workers},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write config '" + path.string() + "'");
    }
    out << j.dump(2) << "\n";
}

std::filesystem::path quarter_layer_path(const std::filesystem::path& root,
                                         const std::string& quarter, QuadId quad) {
    return root / quarter / (format_quad_id(quad) + ".tif");
}

std::filesystem::path static_layer_path(const std::filesystem::path& root, QuadId quad) {
    return root / (format_quad_id(quad) + ".tif");
}

namespace {

/// Read-only cache for layers shared across items (DEM, GSW). Loads happen
/// at most once per path; entries are immutable after insertion.
class LayerCache {
  public:
    std::shared_ptr<const QuadRaster> get(const std::filesystem::path& path) {
        const std::string key = path.string();
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (const auto it = cache_.find(key); it != cache_.end()) {
                return it->second;
            }
        }
        auto loaded = std::make_shared<const QuadRaster>(read_raster(path));
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.try_emplace(key, std::move(loaded)).first->second;
    }

  private:
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const QuadRaster>> cache_;
};

QuadRaster single_band(const QuadRaster& src, int band) {
    QuadRaster out = QuadRaster::filled(src.spec, 1, src.nodata, src.nodata, src.crs);
    std::copy(src.band(band).begin(), src.band(band).end(), out.band(0).begin());
    return out;
}

void process_item(const WorkItem& item, const PipelineConfig& config, LayerCache& cache) {
    const post::PostprocParams params = config.post_params();

    // Quarterly prediction quads t-3 .. t, 2 bands (density, height_norm).
    std::vector<std::string> quarters(4);
    quarters[3] = item.quarter;
    for (int i = 2; i >= 0; --i) {
        quarters[i] = previous_quarter(quarters[i + 1]);
    }
    std::vector<QuadRaster> preds;
    preds.reserve(4);
    for (const std::string& q : quarters) {
        preds.push_back(read_raster(quarter_layer_path(config.predictions_dir, q, item.quad)));
    }

    post::TimeSeriesStack density_stack;
    post::TimeSeriesStack height_stack;
    for (const QuadRaster& p : preds) {
        if (p.bands < 2) {
            throw FormatError("prediction quad " + format_quad_id(item.quad) +
                              " must carry density and height bands");
        }
        density_stack.quarters.push_back(single_band(p, 0));
        height_stack.quarters.push_back(single_band(p, 1));
    }

    // Clarity for the current quarter; quads without a UDM fall back to the
    // no-clarity median branch.
    const auto udm_path = quarter_layer_path(config.udm_dir, item.quarter, item.quad);
    if (std::filesystem::exists(udm_path)) {
        const QuadRaster udm_raster = read_raster(udm_path);
        if (udm_raster.bands < 2) {
            throw FormatError("UDM quad " + format_quad_id(item.quad) +
                              " must carry class and confidence bands");
        }
        post::UdmQuad udm;
        udm.spec = udm_raster.spec;
        udm.clazz.resize(udm_raster.plane_size());
        const auto clazz = udm_raster.band(0);
        for (std::size_t i = 0; i < udm.clazz.size(); ++i) {
            udm.clazz[i] = static_cast<std::uint8_t>(clazz[i]);
        }
        udm.confidence.assign(udm_raster.band(1).begin(), udm_raster.band(1).end());
        density_stack.clarity = post::clarity_score_quad(udm, params.conf_threshold);
        height_stack.clarity = density_stack.clarity;
    }

    QuadRaster density = post::rolling_aggregate(density_stack, post::BandKind::Density, params);
    QuadRaster height_norm =
        post::rolling_aggregate(height_stack, post::BandKind::Height, params);

    post::MaskLayers masks{
        *cache.get(static_layer_path(config.gsw_dir, item.quad)),
        *cache.get(static_layer_path(config.dem_dir, item.quad)),
    };
    density = post::mask_uninhabitable(density, masks, params);
    height_norm = post::mask_uninhabitable(height_norm, masks, params);

    // Agreement runs in meters; the product stores normalized height.
    QuadRaster height_m = height_norm;
    for (float& v : height_m.data) {
        if (v != height_m.nodata) {
            v *= 100.0f;
        }
    }
    const post::AgreementResult agreed = post::enforce_agreement(density, height_m, params);
    QuadRaster out = QuadRaster::filled(agreed.density.spec, 2, -1.0f, -1.0f,
                                        agreed.density.crs);
    std::copy(agreed.density.band(0).begin(), agreed.density.band(0).end(),
              out.band(0).begin());
    const auto hm = agreed.height_m.band(0);
    const auto hn = out.band(1);
    for (std::size_t i = 0; i < hm.size(); ++i) {
        hn[i] = hm[i] == agreed.height_m.nodata ? -1.0f : hm[i] / 100.0f;
    }

    const auto out_path = quarter_layer_path(config.output_dir, item.quarter, item.quad);
    std::filesystem::create_directories(out_path.parent_path());
    write_raster(out, out_path);
}

} // namespace

RunSummary run_pipeline(const ShardAssignment& shard, const PipelineConfig& config,
                        WorkerLog* log) {
    RunSummary summary;
    LayerCache cache;
    std::atomic<std::size_t> next{0};
    std::atomic<long> succeeded{0};
    std::atomic<long> failed{0};

    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= shard.items.size()) {
                return;
            }
            const WorkItem& item = shard.items[i];
            if (log) {
                log->append({item, ItemStatus::Allocated, "", ""});
            }
            try {
                process_item(item, config, cache);
                succeeded.fetch_add(1);
                if (log) {
                    log->append({item, ItemStatus::Success, "", ""});
                }
            } catch (const std::exception& e) {
                failed.fetch_add(1);
                if (log) {
                    log->append({item, ItemStatus::Failure, "", e.what()});
                }
            }
        }
    };

    const int workers = std::max(1, config.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    summary.succeeded = succeeded.load();
    summary.failed = failed.load();
    return summary;
}

} // namespace quadmap::batch

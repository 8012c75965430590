#include "quadmap/changedet.hpp"

#include "quadmap/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace quadmap::change {

GrowthField volume_delta(const QuadRaster& d0, const QuadRaster& h0_m, const QuadRaster& d1,
                         const QuadRaster& h1_m) {
    const std::size_t n = d0.plane_size();
    if (h0_m.plane_size() != n || d1.plane_size() != n || h1_m.plane_size() != n ||
        d0.spec != d1.spec) {
        throw ArgumentError("volume_delta inputs are not aligned");
    }
    GrowthField field;
    field.delta = QuadRaster::filled(d0.spec, 1, d0.nodata, d0.nodata, d0.crs);
    for (std::size_t i = 0; i < n; ++i) {
        const float dd0 = d0.data[i];
        const float hh0 = h0_m.data[i];
        const float dd1 = d1.data[i];
        const float hh1 = h1_m.data[i];
        if (dd0 == d0.nodata || hh0 == h0_m.nodata || dd1 == d1.nodata ||
            hh1 == h1_m.nodata) {
            continue;
        }
        field.delta.data[i] = static_cast<float>(static_cast<double>(dd1) * hh1 -
                                                 static_cast<double>(dd0) * hh0);
    }
    return field;
}

GrowthMask growth_mask_p95(const GrowthField& field, double percentile) {
    if (percentile <= 0.0 || percentile > 100.0) {
        throw ArgumentError("percentile must be in (0, 100]");
    }
    GrowthMask out;
    out.spec = field.delta.spec;
    out.mask.assign(field.delta.plane_size(), 0);

    std::vector<float> positives;
    for (std::size_t i = 0; i < field.delta.data.size(); ++i) {
        const float v = field.delta.data[i];
        if (v != field.delta.nodata && v > 0.0f) {
            positives.push_back(v);
        }
    }
    if (positives.empty()) {
        out.empty = true;
        return out;
    }
    std::sort(positives.begin(), positives.end());
    const auto n = static_cast<double>(positives.size());
    const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    out.threshold = positives[std::max<std::size_t>(rank, 1) - 1];
    for (std::size_t i = 0; i < field.delta.data.size(); ++i) {
        const float v = field.delta.data[i];
        if (v != field.delta.nodata && v > 0.0f &&
            static_cast<double>(v) >= out.threshold) {
            out.mask[i] = 1;
            ++out.selected;
        }
    }
    return out;
}

std::vector<int> label_components_8conn(std::span<const std::uint8_t> mask, int width,
                                        int height) {
    if (mask.size() != static_cast<std::size_t>(width) * height) {
        throw ArgumentError("mask size does not match the grid");
    }
    std::vector<int> labels(mask.size(), -1);
    std::vector<int> parent;
    const auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    const auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    };

    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            const std::size_t i = static_cast<std::size_t>(row) * width + col;
            if (!mask[i]) {
                continue;
            }
            int label = -1;
            // Already-visited 8-neighbors: W, NW, N, NE.
            const int neighbors[4][2] = {{0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
            for (const auto& d : neighbors) {
                const int nr = row + d[0];
                const int nc = col + d[1];
                if (nr < 0 || nc < 0 || nc >= width) {
                    continue;
                }
                const int nl = labels[static_cast<std::size_t>(nr) * width + nc];
                if (nl < 0) {
                    continue;
                }
                if (label < 0) {
                    label = nl;
                } else {
                    unite(label, nl);
                }
            }
            if (label < 0) {
                label = static_cast<int>(parent.size());
                parent.push_back(label);
            }
            labels[i] = label;
        }
    }

    // Flatten to consecutive component ids.
    std::unordered_map<int, int> remap;
    for (int& l : labels) {
        if (l < 0) {
            continue;
        }
        const int root = find(l);
        const auto [it, inserted] = remap.emplace(root, static_cast<int>(remap.size()));
        l = it->second;
    }
    return labels;
}

namespace {

// Directed boundary edges on the corner lattice, interior on the left in map
// orientation: exterior rings come out counterclockwise, holes clockwise.
enum class Dir : std::uint8_t { North, South, East, West };

struct Corner {
    int row = 0;
    int col = 0;

    bool operator==(const Corner&) const = default;
};

Corner step(Corner c, Dir d) {
    switch (d) {
    case Dir::North:
        return {c.row - 1, c.col};
    case Dir::South:
        return {c.row + 1, c.col};
    case Dir::East:
        return {c.row, c.col + 1};
    case Dir::West:
        return {c.row, c.col - 1};
    }
    return c;
}

// Right turn relative to the incoming direction; at self-touching corners of
// an 8-connected component this passes through to the diagonal pixel so the
// whole component stays on one ring.
Dir right_turn(Dir d) {
    switch (d) {
    case Dir::North:
        return Dir::East;
    case Dir::East:
        return Dir::South;
    case Dir::South:
        return Dir::West;
    case Dir::West:
        return Dir::North;
    }
    return d;
}

struct EdgeRef {
    Dir dir;
    bool used = false;
};

double ring_signed_area(const Ring& ring) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        acc += ring[i][0] * ring[i + 1][1] - ring[i + 1][0] * ring[i][1];
    }
    return 0.5 * acc;
}

} // namespace

std::vector<ChangePolygon> vectorize_8conn(std::span<const std::uint8_t> mask,
                                           const GridSpec& spec,
                                           std::span<const float> values) {
    const int width = spec.width;
    const int height = spec.height;
    const std::vector<int> labels = label_components_8conn(mask, width, height);
    const int component_count =
        labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (component_count <= 0) {
        return {};
    }

    std::vector<ChangePolygon> polygons(static_cast<std::size_t>(component_count));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) {
            auto& poly = polygons[static_cast<std::size_t>(labels[i])];
            ++poly.pixel_count;
            if (!values.empty()) {
                poly.delta_sum += values[i];
            }
        }
    }

    // Boundary edges per component, keyed by start corner.
    const auto corner_key = [width](Corner c) {
        return static_cast<std::int64_t>(c.row) * (width + 1) + c.col;
    };
    std::vector<std::unordered_map<std::int64_t, std::vector<EdgeRef>>> edges(
        static_cast<std::size_t>(component_count));
    const auto label_at = [&](int row, int col) {
        if (row < 0 || row >= height || col < 0 || col >= width) {
            return -1;
        }
        return labels[static_cast<std::size_t>(row) * width + col];
    };
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            const int l = label_at(row, col);
            if (l < 0) {
                continue;
            }
            auto& comp_edges = edges[static_cast<std::size_t>(l)];
            if (label_at(row - 1, col) != l) { // north edge, walk west
                comp_edges[corner_key({row, col + 1})].push_back({Dir::West});
            }
            if (label_at(row, col - 1) != l) { // west edge, walk south
                comp_edges[corner_key({row, col})].push_back({Dir::South});
            }
            if (label_at(row + 1, col) != l) { // south edge, walk east
                comp_edges[corner_key({row + 1, col})].push_back({Dir::East});
            }
            if (label_at(row, col + 1) != l) { // east edge, walk north
                comp_edges[corner_key({row + 1, col + 1})].push_back({Dir::North});
            }
        }
    }

    const auto to_map = [&spec](Corner c) -> std::array<double, 2> {
        return {spec.origin_x + c.col * spec.pixel_size,
                spec.origin_y - c.row * spec.pixel_size};
    };

    for (int comp = 0; comp < component_count; ++comp) {
        auto& comp_edges = edges[static_cast<std::size_t>(comp)];
        auto& poly = polygons[static_cast<std::size_t>(comp)];
        std::vector<Ring> rings;
        for (auto& [start_key, start_list] : comp_edges) {
            for (std::size_t start_idx = 0; start_idx < start_list.size(); ++start_idx) {
                if (start_list[start_idx].used) {
                    continue;
                }
                // Walk the deterministic successor chain; the ring closes when
                // the successor would be the edge we started from, which keeps
                // self-touching corners (diagonal pixels) on a single ring.
                EdgeRef* const start_edge = &start_list[start_idx];
                const Corner start{static_cast<int>(start_key / (width + 1)),
                                   static_cast<int>(start_key % (width + 1))};
                Ring ring;
                ring.push_back(to_map(start));
                start_edge->used = true;
                Dir last_dir = start_edge->dir;
                Corner cur = step(start, last_dir);
                while (true) {
                    auto& outgoing = comp_edges.at(corner_key(cur));
                    EdgeRef* chosen = nullptr;
                    if (outgoing.size() == 1) {
                        chosen = &outgoing.front();
                    } else {
                        const Dir preferred = right_turn(last_dir);
                        for (EdgeRef& e : outgoing) {
                            if (e.dir == preferred) {
                                chosen = &e;
                                break;
                            }
                        }
                        if (!chosen) {
                            for (EdgeRef& e : outgoing) {
                                if (!e.used) {
                                    chosen = &e;
                                    break;
                                }
                            }
                        }
                        if (!chosen) {
                            chosen = &outgoing.front();
                        }
                    }
                    if (chosen == start_edge) {
                        break;
                    }
                    chosen->used = true;
                    if (chosen->dir != last_dir) {
                        ring.push_back(to_map(cur));
                        last_dir = chosen->dir;
                    }
                    cur = step(cur, chosen->dir);
                }
                ring.push_back(ring.front());
                rings.push_back(std::move(ring));
            }
        }

        // Exactly one counterclockwise ring per component; the rest are holes.
        double area = 0.0;
        for (Ring& ring : rings) {
            const double signed_area = ring_signed_area(ring);
            area += signed_area;
            if (signed_area >= 0) {
                poly.exterior = std::move(ring);
            } else {
                poly.holes.push_back(std::move(ring));
            }
        }
        poly.area_m2 = area;
    }
    return polygons;
}

std::string to_geojson(std::span<const ChangePolygon> polygons) {
    nlohmann::json features = nlohmann::json::array();
    for (const ChangePolygon& poly : polygons) {
        nlohmann::json coords = nlohmann::json::array();
        const auto ring_to_json = [](const Ring& ring) {
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : ring) {
                pts.push_back({p[0], p[1]});
            }
            return pts;
        };
        coords.push_back(ring_to_json(poly.exterior));
        for (const Ring& hole : poly.holes) {
            coords.push_back(ring_to_json(hole));
        }
        features.push_back({
            {"type", "Feature"},
            {"geometry", {{"type", "Polygon"}, {"coordinates", coords}}},
            {"properties",
             {{"pixel_count", poly.pixel_count},
              {"area_m2", poly.area_m2},
              {"delta_sum", poly.delta_sum}}},
        });
    }
    nlohmann::json root = {
        {"type", "FeatureCollection"},
        {"crs",
         {{"type", "name"}, {"properties", {{"name", "urn:ogc:def:crs:EPSG::3857"}}}}},
        {"features", features},
    };
    return root.dump(2);
}

} // namespace quadmap::change

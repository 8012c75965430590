#include "quadmap/evalx.hpp"

#include "quadmap/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace quadmap::eval {

namespace {

void require_aligned(const QuadRaster& a, const QuadRaster& b) {
    if (a.spec.width != b.spec.width || a.spec.height != b.spec.height) {
        throw ArgumentError("rasters are not aligned (" + std::to_string(a.spec.width) + "x" +
                            std::to_string(a.spec.height) + " vs " +
                            std::to_string(b.spec.width) + "x" + std::to_string(b.spec.height) +
                            ")");
    }
}

double f1_from_counts(long tp, long fp, long fn) {
    const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

} // namespace

DetectionReport detection_metrics(const QuadRaster& pred, const QuadRaster& ref,
                                  double pred_thr, double ref_thr) {
    require_aligned(pred, ref);
    DetectionReport rep;
    const auto p = pred.band(0);
    const auto r = ref.band(0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] == ref.nodata || p[i] == pred.nodata) {
            continue;
        }
        const bool pp = static_cast<double>(p[i]) > pred_thr;
        const bool rr = static_cast<double>(r[i]) > ref_thr;
        if (pp && rr) {
            ++rep.tp;
        } else if (pp) {
            ++rep.fp;
        } else if (rr) {
            ++rep.fn;
        } else {
            ++rep.tn;
        }
    }
    const long total = rep.tp + rep.fp + rep.fn + rep.tn;
    if (total == 0) {
        rep.empty = true;
        return rep;
    }
    rep.precision = rep.tp + rep.fp > 0 ? static_cast<double>(rep.tp) / (rep.tp + rep.fp) : 0.0;
    rep.recall = rep.tp + rep.fn > 0 ? static_cast<double>(rep.tp) / (rep.tp + rep.fn) : 0.0;
    rep.f1 = rep.precision + rep.recall > 0
                 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                 : 0.0;
    rep.accuracy = static_cast<double>(rep.tp + rep.tn) / total;
    return rep;
}

RegressionReport regression_metrics(const QuadRaster& pred, const QuadRaster& ref) {
    require_aligned(pred, ref);
    RegressionReport rep;
    const auto p = pred.band(0);
    const auto r = ref.band(0);

    double ref_sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] == ref.nodata || p[i] == pred.nodata) {
            continue;
        }
        ++rep.n_valid;
        ref_sum += r[i];
    }
    if (rep.n_valid == 0) {
        return rep;
    }
    const double ref_mean = ref_sum / static_cast<double>(rep.n_valid);

    double abs_sum = 0.0;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] == ref.nodata || p[i] == pred.nodata) {
            continue;
        }
        const double diff = static_cast<double>(p[i]) - r[i];
        ss_res += diff * diff;
        ss_tot += (r[i] - ref_mean) * (r[i] - ref_mean);
        if (r[i] > 0.0f) {
            abs_sum += std::abs(diff);
            ++rep.n_positive;
        }
    }
    if (rep.n_positive > 0) {
        rep.mae_pos = abs_sum / static_cast<double>(rep.n_positive);
        rep.mae_defined = true;
    }
    if (ss_tot > 0.0) {
        rep.r2 = 1.0 - ss_res / ss_tot;
    } else {
        rep.r2 = 0.0;
        rep.r2_degenerate = true;
    }
    return rep;
}

MacroF1Report height_macro_f1(const QuadRaster& pred_m, const QuadRaster& ref_m) {
    require_aligned(pred_m, ref_m);
    MacroF1Report rep;
    const auto p = pred_m.band(0);
    const auto r = ref_m.band(0);
    double sum = 0.0;
    for (std::size_t bin = 0; bin < kHeightBins.size(); ++bin) {
        const auto [lo, hi] = kHeightBins[bin];
        long tp = 0;
        long fp = 0;
        long fn = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] == ref_m.nodata || p[i] == pred_m.nodata) {
                continue;
            }
            const bool in_p = p[i] > lo && p[i] <= hi;
            const bool in_r = r[i] > lo && r[i] <= hi;
            if (in_p && in_r) {
                ++tp;
            } else if (in_p) {
                ++fp;
            } else if (in_r) {
                ++fn;
            }
        }
        if (tp + fp + fn == 0) {
            rep.bin_empty[bin] = true;
            rep.bin_f1[bin] = 0.0;
        } else {
            rep.bin_f1[bin] = f1_from_counts(tp, fp, fn);
        }
        sum += rep.bin_f1[bin];
    }
    rep.macro_f1 = sum / static_cast<double>(kHeightBins.size());
    return rep;
}

std::vector<WindowSignal> window_signals(std::span<const QuadRaster> annual, int k,
                                         std::string_view quad_id) {
    if (annual.size() < 2) {
        throw ArgumentError("window signals need at least 2 annual layers");
    }
    if (k < 1) {
        throw ArgumentError("window size must be >= 1");
    }
    const GridSpec& spec = annual.front().spec;
    for (const QuadRaster& a : annual) {
        if (a.spec.width != spec.width || a.spec.height != spec.height) {
            throw ArgumentError("annual layers are not aligned");
        }
    }
    const int rows = spec.height / k;
    const int cols = spec.width / k;
    std::vector<WindowSignal> signals;
    for (int wr = 0; wr < rows; ++wr) {
        for (int wc = 0; wc < cols; ++wc) {
            WindowSignal sig;
            sig.quad = std::string(quad_id);
            sig.row = wr;
            sig.col = wc;
            sig.k = k;
            sig.values.reserve(annual.size());
            bool all_zero = true;
            for (const QuadRaster& year : annual) {
                double sum = 0.0;
                long count = 0;
                for (int dr = 0; dr < k; ++dr) {
                    for (int dc = 0; dc < k; ++dc) {
                        const float v = year.at(0, wr * k + dr, wc * k + dc);
                        if (v != year.nodata) {
                            sum += v;
                            ++count;
                        }
                    }
                }
                const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
                if (mean != 0.0) {
                    all_zero = false;
                }
                sig.values.push_back(mean);
            }
            if (!all_zero) {
                signals.push_back(std::move(sig));
            }
        }
    }
    return signals;
}

AucResult monotonicity_auc(std::span<const WindowSignal> signals, const StabilityConfig& cfg) {
    if (cfg.tau_steps < 2 || cfg.tau_max <= 0) {
        throw ArgumentError("tau sweep needs tau_steps >= 2 and tau_max > 0");
    }
    AucResult result;
    if (signals.empty()) {
        return result;
    }
    for (const WindowSignal& s : signals) {
        if (s.values.size() < 2) {
            throw ArgumentError("every signal needs at least 2 values");
        }
    }

    std::vector<double> fraction(static_cast<std::size_t>(cfg.tau_steps));
    for (int step = 0; step < cfg.tau_steps; ++step) {
        const double tau = cfg.tau_max * step / (cfg.tau_steps - 1);
        long monotone = 0;
        for (const WindowSignal& s : signals) {
            bool non_decreasing = true;
            bool non_increasing = true;
            for (std::size_t t = 1; t < s.values.size(); ++t) {
                const double diff = s.values[t] - s.values[t - 1];
                if (diff < -tau) {
                    non_decreasing = false;
                }
                if (diff > tau) {
                    non_increasing = false;
                }
            }
            if (non_decreasing || non_increasing) {
                ++monotone;
            }
        }
        fraction[step] = static_cast<double>(monotone) / static_cast<double>(signals.size());
    }

    const double dt = cfg.tau_max / (cfg.tau_steps - 1);
    double area = 0.0;
    for (int step = 0; step + 1 < cfg.tau_steps; ++step) {
        area += 0.5 * (fraction[step] + fraction[step + 1]) * dt;
    }
    result.value = area / cfg.tau_max;
    result.defined = true;
    return result;
}

StabilitySummary stability_summary(std::span<const WindowSignal> signals) {
    StabilitySummary rep;
    if (signals.empty()) {
        return rep;
    }
    const std::size_t years = signals.front().values.size();
    if (years < 2) {
        throw ArgumentError("stability needs at least 2 years per signal");
    }
    for (const WindowSignal& s : signals) {
        if (s.values.size() != years) {
            throw ArgumentError("signals differ in year count");
        }
    }

    std::vector<double> pair_corrs;
    for (std::size_t t = 0; t + 1 < years; ++t) {
        double sx = 0.0;
        double sy = 0.0;
        long n = 0;
        for (const WindowSignal& s : signals) {
            if (s.values[t] == 0.0 && s.values[t + 1] == 0.0) {
                continue;
            }
            sx += s.values[t];
            sy += s.values[t + 1];
            ++n;
        }
        if (n < 2) {
            ++rep.pairs_skipped;
            continue;
        }
        const double mx = sx / n;
        const double my = sy / n;
        double sxx = 0.0;
        double syy = 0.0;
        double sxy = 0.0;
        for (const WindowSignal& s : signals) {
            if (s.values[t] == 0.0 && s.values[t + 1] == 0.0) {
                continue;
            }
            const double dx = s.values[t] - mx;
            const double dy = s.values[t + 1] - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        if (sxx <= 0.0 || syy <= 0.0) {
            ++rep.pairs_skipped;
            continue;
        }
        pair_corrs.push_back(sxy / std::sqrt(sxx * syy));
    }

    if (!pair_corrs.empty()) {
        std::sort(pair_corrs.begin(), pair_corrs.end());
        const std::size_t mid = pair_corrs.size() / 2;
        rep.corr_median = pair_corrs.size() % 2 == 1
                              ? pair_corrs[mid]
                              : 0.5 * (pair_corrs[mid - 1] + pair_corrs[mid]);
        rep.pairs_used = static_cast<int>(pair_corrs.size());
        rep.defined = true;
    }

    // Pooled first differences over every signal (population formula).
    double sum = 0.0;
    long count = 0;
    for (const WindowSignal& s : signals) {
        for (std::size_t t = 1; t < years; ++t) {
            sum += s.values[t] - s.values[t - 1];
            ++count;
        }
    }
    if (count > 0) {
        const double mean = sum / count;
        double ss = 0.0;
        for (const WindowSignal& s : signals) {
            for (std::size_t t = 1; t < years; ++t) {
                const double d = s.values[t] - s.values[t - 1] - mean;
                ss += d * d;
            }
        }
        rep.diff_std = std::sqrt(ss / count);
    }
    return rep;
}

namespace {

template <typename Fn>
void for_each_metric(const MetricsReport& r, Fn&& fn) {
    fn("precision", r.precision);
    fn("recall", r.recall);
    fn("f1", r.f1);
    fn("accuracy", r.accuracy);
    fn("mae_pos", r.mae_pos);
    fn("r2", r.r2);
    fn("macro_f1_height", r.macro_f1_height);
    fn("corr_median", r.corr_median);
    fn("mono_auc", r.mono_auc);
    fn("diff_std", r.diff_std);
}

} // namespace

std::string to_text(const MetricsReport& report) {
    std::ostringstream out;
    out.precision(12);
    for_each_metric(report, [&](const char* key, const std::optional<double>& v) {
        if (v) {
            out << key << " " << *v << "\n";
        }
    });
    return out.str();
}

std::string to_json_text(const MetricsReport& report) {
    nlohmann::json j = nlohmann::json::object();
    for_each_metric(report, [&](const char* key, const std::optional<double>& v) {
        if (v) {
            j[key] = *v;
        }
    });
    return j.dump(2);
}

} // namespace quadmap::eval

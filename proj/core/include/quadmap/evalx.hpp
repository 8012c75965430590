#pragma once

#include "quadmap/raster.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadmap::eval {

struct DetectionReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
    bool empty = false; // no valid cells to evaluate
};

/// Confusion metrics after binarizing pred > pred_thr and ref > ref_thr.
/// Cells where either raster is nodata are excluded.
DetectionReport detection_metrics(const QuadRaster& pred, const QuadRaster& ref,
                                  double pred_thr, double ref_thr);

struct RegressionReport {
    double mae_pos = 0.0; // MAE over cells with strictly positive reference
    double r2 = 0.0;      // computed over all valid cells
    long n_valid = 0;
    long n_positive = 0;
    bool mae_defined = false;
    bool r2_degenerate = false; // constant reference
};

RegressionReport regression_metrics(const QuadRaster& pred, const QuadRaster& ref);

struct MacroF1Report {
    double macro_f1 = 0.0;
    std::array<double, 3> bin_f1{};
    std::array<bool, 3> bin_empty{}; // no positives in either raster
};

/// Heights in meters, detected over the half-open bins (1e-4, 3], (3, 10],
/// (10, 30]; the macro score is the unweighted mean of the three bin F1s.
MacroF1Report height_macro_f1(const QuadRaster& pred_m, const QuadRaster& ref_m);

inline constexpr std::array<std::pair<double, double>, 3> kHeightBins{
    {{1e-4, 3.0}, {3.0, 10.0}, {10.0, 30.0}}};

/// One k x k window's annual mean-density series.
struct WindowSignal {
    std::string quad;
    int row = 0;
    int col = 0;
    int k = 0;
    std::vector<double> values;
};

/// Tile each annual layer with non-overlapping k x k windows (ragged edges
/// truncated), average valid cells per window per year, and drop windows
/// that are zero in every year.
std::vector<WindowSignal> window_signals(std::span<const QuadRaster> annual, int k,
                                         std::string_view quad_id = {});

struct StabilityConfig {
    int k = 3;
    double tau_max = 0.01;
    int tau_steps = 100;
};

struct AucResult {
    double value = 0.0;
    bool defined = false;
};

/// Fraction of signals monotone within tau, swept over tau_steps evenly
/// spaced tolerances in [0, tau_max], integrated by the trapezoidal rule and
/// normalized by tau_max.
AucResult monotonicity_auc(std::span<const WindowSignal> signals, const StabilityConfig& cfg);

struct StabilitySummary {
    double corr_median = 0.0; // median over adjacent-year Pearson correlations
    double diff_std = 0.0;    // population std of all pooled year-to-year diffs
    int pairs_used = 0;
    int pairs_skipped = 0;
    bool defined = false;
};

/// Adjacent-year Pearson correlations across windows (a window is excluded
/// from a pair when it is zero in both years of that pair; degenerate pairs
/// are skipped with a flag) plus the pooled first-difference spread.
StabilitySummary stability_summary(std::span<const WindowSignal> signals);

/// Flat report with the fixed external field names; unset metrics are omitted.
struct MetricsReport {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> accuracy;
    std::optional<double> mae_pos;
    std::optional<double> r2;
    std::optional<double> macro_f1_height;
    std::optional<double> corr_median;
    std::optional<double> mono_auc;
    std::optional<double> diff_std;
};

/// `key value` lines, one metric per line, fixed key order.
std::string to_text(const MetricsReport& report);

/// JSON object with the same field names.
std::string to_json_text(const MetricsReport& report);

} // namespace quadmap::eval

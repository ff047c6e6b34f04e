#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sketchflim/types.hpp"

namespace sketchflim {

struct ScalarMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double r_squared = 0.0;
};

/// MAE, RMSE and R^2 = 1 - SS_res / SS_tot.
ScalarMetrics scalar_metrics(std::span<const double> estimates, std::span<const double> truths);

struct BlandAltman {
    double bias = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
};

/// Mean of (estimate - truth) with bias +/- 1.96 sample SD limits.
BlandAltman bland_altman(std::span<const double> estimates, std::span<const double> truths);

/// Row-major 2-D map.
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double at(int r, int c) const { return values[static_cast<std::size_t>(r * cols + c)]; }
};

/// Mean SSIM over all 8x8 windows (stride 1), K1 = 0.01, K2 = 0.03, dynamic
/// range taken from the ground-truth map.
double ssim_map(const Grid& estimate, const Grid& truth);

/// 1 - RMSE / range.
double relative_accuracy(std::span<const double> estimates, std::span<const double> truths, double range);
/// Same, with range = max(truth) - min(truth).
double relative_accuracy(std::span<const double> estimates, std::span<const double> truths);

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    double r_squared = 0.0;
    double bias = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    double ssim = 0.0;
    double relative_accuracy = 0.0;
    std::size_t n = 0;
};

/// Estimates and ground truth for one method under one configuration.
struct RunRecord {
    std::string method;
    int m = 0;
    double peak_counts = 0.0;
    double irf_fwhm = 0.0;
    int n_bins = 0;
    int lut_depth = 0; // 0: floating-point path
    std::vector<DecayParams> estimates;
    std::vector<DecayParams> truths;
    int map_rows = 0; // nonzero when estimates form a spatial map
    int map_cols = 0;
};

struct ReportRow {
    std::string method;
    int m = 0;
    double peak_counts = 0.0;
    double irf_fwhm = 0.0;
    int n_bins = 0;
    int lut_depth = 0;
    std::string parameter;
    MetricReport metrics;
};

/// Metrics for every parameter (tau, or tau1/tau2/alpha1/mean_tau) of every run.
/// SSIM and relative accuracy are filled for map runs and NaN otherwise.
std::vector<ReportRow> assemble_report(std::span<const RunRecord> runs);

MetricReport metric_report(std::span<const double> estimates, std::span<const double> truths);

void write_report_csv(std::ostream& os, std::span<const ReportRow> rows);

/// Parameter columns of a decay: ("tau") or ("tau1", "tau2", "alpha1"), plus "mean_tau".
std::vector<std::string> parameter_names(ModelKind kind);
std::vector<double> parameter_values(const DecayParams& p);

} // namespace sketchflim

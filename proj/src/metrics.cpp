#include "sketchflim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace sketchflim {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void check_pairs(std::span<const double> e, std::span<const double> t) {
    require(!e.empty() && e.size() == t.size(), ErrorKind::invalid_input,
            "metrics need equal, non-empty estimate and truth vectors");
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

ScalarMetrics scalar_metrics(std::span<const double> estimates, std::span<const double> truths) {
    check_pairs(estimates, truths);
    const double n = static_cast<double>(truths.size());
    const double mt = mean_of(truths);
    double abs_sum = 0.0, ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const double d = estimates[i] - truths[i];
        abs_sum += std::abs(d);
        ss_res += d * d;
        ss_tot += (truths[i] - mt) * (truths[i] - mt);
    }
    require(ss_tot > 0.0, ErrorKind::numeric_degenerate, "R^2 is undefined for constant ground truth");
    return ScalarMetrics{abs_sum / n, std::sqrt(ss_res / n), 1.0 - ss_res / ss_tot};
}

BlandAltman bland_altman(std::span<const double> estimates, std::span<const double> truths) {
    require(estimates.size() == truths.size(), ErrorKind::invalid_input, "Bland-Altman needs paired data");
    require(truths.size() >= 2, ErrorKind::insufficient_data, "Bland-Altman needs at least two pairs");
    std::vector<double> d(truths.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = estimates[i] - truths[i];
    const double bias = mean_of(d);
    double ss = 0.0;
    for (double x : d) ss += (x - bias) * (x - bias);
    const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
    return BlandAltman{bias, bias - 1.96 * sd, bias + 1.96 * sd};
}

double ssim_map(const Grid& estimate, const Grid& truth) {
    constexpr int win = 8;
    require(estimate.rows == truth.rows && estimate.cols == truth.cols, ErrorKind::invalid_input,
            "SSIM maps differ in shape");
    require(truth.rows >= win && truth.cols >= win, ErrorKind::invalid_input, "SSIM maps must be at least 8x8");
    require(estimate.values.size() == truth.values.size() &&
                truth.values.size() == static_cast<std::size_t>(truth.rows * truth.cols),
            ErrorKind::invalid_input, "SSIM grid storage does not match its shape");

    const auto [lo, hi] = std::minmax_element(truth.values.begin(), truth.values.end());
    const double range = *hi - *lo;
    require(range > 0.0, ErrorKind::invalid_input, "SSIM needs a non-constant ground-truth map");
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    constexpr double count = win * win;

    double total = 0.0;
    int windows = 0;
    for (int r0 = 0; r0 + win <= truth.rows; ++r0) {
        for (int c0 = 0; c0 + win <= truth.cols; ++c0) {
            double mx = 0.0, my = 0.0;
            for (int r = r0; r < r0 + win; ++r)
                for (int c = c0; c < c0 + win; ++c) {
                    mx += estimate.at(r, c);
                    my += truth.at(r, c);
                }
            mx /= count;
            my /= count;
            double vx = 0.0, vy = 0.0, cxy = 0.0;
            for (int r = r0; r < r0 + win; ++r)
                for (int c = c0; c < c0 + win; ++c) {
                    const double dx = estimate.at(r, c) - mx;
                    const double dy = truth.at(r, c) - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            vx /= count;
            vy /= count;
            cxy /= count;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    }
    return total / windows;
}

double relative_accuracy(std::span<const double> estimates, std::span<const double> truths, double range) {
    check_pairs(estimates, truths);
    require(range > 0.0, ErrorKind::invalid_input, "relative accuracy needs a positive range");
    double ss = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) ss += (estimates[i] - truths[i]) * (estimates[i] - truths[i]);
    return 1.0 - std::sqrt(ss / static_cast<double>(truths.size())) / range;
}

double relative_accuracy(std::span<const double> estimates, std::span<const double> truths) {
    check_pairs(estimates, truths);
    const auto [lo, hi] = std::minmax_element(truths.begin(), truths.end());
    return relative_accuracy(estimates, truths, *hi - *lo);
}

std::vector<std::string> parameter_names(ModelKind kind) {
    if (kind == ModelKind::mono) return {"tau"};
    return {"tau1", "tau2", "alpha1", "mean_tau"};
}

std::vector<double> parameter_values(const DecayParams& p) {
    if (const auto* m = std::get_if<MonoParams>(&p)) return {m->tau};
    const auto& b = std::get<BiParams>(p);
    return {b.tau1, b.tau2, b.alpha1, mean_lifetime(p)};
}

MetricReport metric_report(std::span<const double> estimates, std::span<const double> truths) {
    MetricReport r;
    r.n = truths.size();
    try {
        const auto s = scalar_metrics(estimates, truths);
        r.mae = s.mae;
        r.rmse = s.rmse;
        r.r_squared = s.r_squared;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric_degenerate) throw;
        // Constant truth: R^2 undefined, the error magnitudes still are.
        double a = 0.0, q = 0.0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            a += std::abs(estimates[i] - truths[i]);
            q += (estimates[i] - truths[i]) * (estimates[i] - truths[i]);
        }
        r.mae = a / static_cast<double>(r.n);
        r.rmse = std::sqrt(q / static_cast<double>(r.n));
        r.r_squared = nan;
    }
    if (truths.size() >= 2) {
        const auto ba = bland_altman(estimates, truths);
        r.bias = ba.bias;
        r.loa_low = ba.loa_low;
        r.loa_high = ba.loa_high;
    } else {
        r.bias = estimates[0] - truths[0];
        r.loa_low = r.loa_high = nan;
    }
    r.ssim = nan;
    r.relative_accuracy = nan;
    return r;
}

std::vector<ReportRow> assemble_report(std::span<const RunRecord> runs) {
    require(!runs.empty(), ErrorKind::insufficient_data, "report needs at least one run");
    std::vector<ReportRow> rows;
    for (const auto& run : runs) {
        require(!run.truths.empty() && run.estimates.size() == run.truths.size(), ErrorKind::insufficient_data,
                "run '" + run.method + "' has no paired results");
        const ModelKind kind = kind_of(run.truths.front());
        const auto names = parameter_names(kind);
        std::vector<std::vector<double>> est(names.size()), tru(names.size());
        for (std::size_t i = 0; i < run.truths.size(); ++i) {
            require(kind_of(run.estimates[i]) == kind && kind_of(run.truths[i]) == kind, ErrorKind::invalid_input,
                    "mixed model kinds in one run");
            const auto e = parameter_values(run.estimates[i]);
            const auto t = parameter_values(run.truths[i]);
            for (std::size_t j = 0; j < names.size(); ++j) {
                est[j].push_back(e[j]);
                tru[j].push_back(t[j]);
            }
        }
        const bool is_map = run.map_rows > 0 && run.map_cols > 0 &&
                            static_cast<std::size_t>(run.map_rows * run.map_cols) == run.truths.size();
        for (std::size_t j = 0; j < names.size(); ++j) {
            ReportRow row{run.method, run.m, run.peak_counts, run.irf_fwhm, run.n_bins, run.lut_depth, names[j],
                          metric_report(est[j], tru[j])};
            if (is_map) {
                const auto [lo, hi] = std::minmax_element(tru[j].begin(), tru[j].end());
                if (*hi > *lo) {
                    row.metrics.ssim = ssim_map(Grid{run.map_rows, run.map_cols, est[j]},
                                                Grid{run.map_rows, run.map_cols, tru[j]});
                    row.metrics.relative_accuracy = relative_accuracy(est[j], tru[j]);
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_report_csv(std::ostream& os, std::span<const ReportRow> rows) {
    os << "method,M,A,irf_fwhm,N,D,parameter,mae,rmse,r_squared,bias,loa_low,loa_high,ssim,relative_accuracy,n\n";
    const auto old_precision = os.precision(10);
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        os << r.method << ',' << r.m << ',' << r.peak_counts << ',' << r.irf_fwhm << ',' << r.n_bins << ','
           << r.lut_depth << ',' << r.parameter << ',' << m.mae << ',' << m.rmse << ',' << m.r_squared << ','
           << m.bias << ',' << m.loa_low << ',' << m.loa_high << ',' << m.ssim << ',' << m.relative_accuracy << ','
           << m.n << '\n';
    }
    os.precision(old_precision);
}

} // namespace sketchflim

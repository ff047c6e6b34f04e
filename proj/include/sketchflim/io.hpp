#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sketchflim/estimators.hpp"
#include "sketchflim/experiment.hpp"
#include "sketchflim/sketch.hpp"
#include "sketchflim/types.hpp"

namespace sketchflim::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

// Histogram CSV: `# n_bins=<N> bin_width_ps=<w>` then one row of N counts per pixel.
struct HistogramSet {
    TimeAxis axis;
    std::vector<Histogram> rows;
};

void write_histogram_csv(std::ostream& os, const TimeAxis& axis, std::span<const Histogram> rows);
HistogramSet read_histogram_csv(std::istream& is);

// Timestamp stream: "SKTS", version byte, u64 LE count, count f64 LE values (ns).
constexpr std::uint8_t timestamp_format_version = 1;
void write_timestamps(std::ostream& os, const TimestampStream& stream);
TimestampStream read_timestamps(std::istream& is);

// Knot file: `# M=<M> mode=<fisher|uniform> agg=<average|max>`, then one boundary (ns) per line.
struct KnotFile {
    KnotSet knots;
    KnotMode mode = KnotMode::fisher;
    Aggregation aggregation = Aggregation::average;
};
void write_knot_file(std::ostream& os, const KnotFile& file);
KnotFile read_knot_file(std::istream& is);

// Sketch CSV: `# M=<M> knots=<path> path=<flp|fxp> lut_depth=<D>`, rows of M values plus photon count.
struct SketchHeader {
    int m = 0;
    std::string knot_path;
    SketchPath path = SketchPath::flp;
    int lut_depth = 0;
};
struct SketchSet {
    SketchHeader header;
    std::vector<SketchVector> rows;
};
void write_sketch_csv(std::ostream& os, const SketchHeader& header, std::span<const SketchVector> rows);
SketchSet read_sketch_csv(std::istream& is);

// LUT dump: "SKLU", u32 LE M, u32 LE D, then M*D u16 LE words (basis-major).
void write_lut(std::ostream& os, const FxpLut& lut);
/// The dump carries no window; the caller supplies it.
FxpLut read_lut(std::istream& is, double window);

// Ground truth: pixel_id,tau1,tau2,alpha1,mean_tau. Mono decays store tau in
// tau1 and tau2 with alpha1 = 1.
void write_truth_csv(std::ostream& os, std::span<const DecayParams> params);
std::vector<DecayParams> read_truth_csv(std::istream& is, ModelKind kind);

// Fit results: pixel_id,tau1,tau2,alpha1,mean_tau,amplitude,objective,chi2,iterations,converged.
struct ResultRow {
    std::size_t pixel_id = 0;
    DecayParams params = MonoParams{};
    double amplitude = 0.0;
    double objective = 0.0;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};
void write_results_csv(std::ostream& os, std::span<const FitResult> fits, std::span<const std::size_t> pixel_ids);
std::vector<ResultRow> read_results_csv(std::istream& is, ModelKind kind);

} // namespace sketchflim::io

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sketchflim/decay_model.hpp"
#include "sketchflim/estimators.hpp"
#include "sketchflim/fisher_knots.hpp"
#include "sketchflim/metrics.hpp"
#include "sketchflim/sketch.hpp"

namespace sketchflim {

enum class KnotMode { fisher, uniform };
enum class SketchPath { flp, fxp };
enum class Method { sketch, nlsf, mle };

const char* to_string(KnotMode m);
const char* to_string(SketchPath p);
const char* to_string(Method m);
const char* to_string(Aggregation a);
const char* to_string(FisherScale s);
KnotMode parse_knot_mode(const std::string& s);
SketchPath parse_sketch_path(const std::string& s);
Method parse_method(const std::string& s);
Aggregation parse_aggregation(const std::string& s);
FisherScale parse_fisher_scale(const std::string& s);

/// Forward-model configuration shared by generation, knot design and fitting.
struct Experiment {
    TimeAxis axis = TimeAxis::from_window(256, 10.0);
    IrfSpec irf{};
    ParamRanges ranges{};
    Acquisition acquisition{};
};

struct SketchSettings {
    int m = 4;
    KnotMode knots = KnotMode::fisher;
    Aggregation aggregation = Aggregation::average;
    int n_grid = 500;
    double epsilon = 1e-3;
    FisherScale scale = FisherScale::shape;
    std::uint64_t density_seed = 0x5eed;
    SketchPath path = SketchPath::flp;
    int lut_depth = 256;
    /// FXP only: fit with the projection the LUT actually applies (true) or
    /// with the floating-point basis (false).
    bool lut_model = true;
};

/// Peak count used for Fisher density design: A itself, or the peak implied
/// by the total photon budget for the mid-range decay.
double design_peak_counts(const Experiment& ex);

FisherDensity design_density(const Experiment& ex, const SketchSettings& sk);
KnotSet design_knots(const Experiment& ex, const SketchSettings& sk);

/// Everything needed to turn histograms or timestamps into fits.
class Pipeline {
public:
    Pipeline(Experiment ex, SketchSettings sk);
    Pipeline(Experiment ex, SketchSettings sk, KnotSet knots);

    const Experiment& experiment() const { return ex_; }
    const SketchSettings& settings() const { return sk_; }
    const FitContext& context() const { return ctx_; }
    const SplineBasis& basis() const { return *ctx_.basis; }
    const KnotSet& knots() const { return ctx_.basis->knots(); }
    const FxpLut& lut() const { return lut_; }

    /// Raw sketch of a histogram through the configured path. The FXP path
    /// treats every count as a photon at its bin center.
    SketchVector sketch(const Histogram& h) const;
    SketchVector sketch(const TimestampStream& stream) const;

    FitResult fit(Method method, const Histogram& h) const;
    FitResult fit_sketch(std::span<const double> raw_sketch) const;

    /// Fits every trial; output order follows input order for any thread count.
    /// Numeric failures are kept as unconverged rows at the range midpoint.
    std::vector<FitResult> fit_all(Method method, std::span<const Trial> trials, int threads = 1) const;

private:
    Experiment ex_;
    SketchSettings sk_;
    FitContext ctx_;
    FxpLut lut_;
};

std::vector<DecayParams> truths_of(std::span<const Trial> trials);
std::vector<DecayParams> estimates_of(std::span<const FitResult> fits);

/// MAE of the mean lifetime (tau for mono) over paired estimates.
double mean_tau_mae(std::span<const DecayParams> estimates, std::span<const DecayParams> truths);
double mean_tau_rmse(std::span<const DecayParams> estimates, std::span<const DecayParams> truths);

} // namespace sketchflim

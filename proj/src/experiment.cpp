#include "sketchflim/experiment.hpp"

#include <cmath>
#include <limits>

#include "sketchflim/parallel.hpp"

namespace sketchflim {

const char* to_string(KnotMode m) { return m == KnotMode::fisher ? "fisher" : "uniform"; }
const char* to_string(SketchPath p) { return p == SketchPath::flp ? "flp" : "fxp"; }
const char* to_string(Aggregation a) { return a == Aggregation::average ? "average" : "max"; }

const char* to_string(FisherScale s) { return s == FisherScale::shape ? "shape" : "counts"; }

const char* to_string(Method m) {
    switch (m) {
    case Method::sketch: return "sketch";
    case Method::nlsf: return "nlsf";
    case Method::mle: return "mle";
    }
    return "unknown";
}

KnotMode parse_knot_mode(const std::string& s) {
    if (s == "fisher") return KnotMode::fisher;
    if (s == "uniform") return KnotMode::uniform;
    fail(ErrorKind::config, "unknown knot mode '" + s + "' (expected fisher|uniform)");
}

SketchPath parse_sketch_path(const std::string& s) {
    if (s == "flp") return SketchPath::flp;
    if (s == "fxp") return SketchPath::fxp;
    fail(ErrorKind::config, "unknown sketch path '" + s + "' (expected flp|fxp)");
}

Method parse_method(const std::string& s) {
    if (s == "sketch") return Method::sketch;
    if (s == "nlsf") return Method::nlsf;
    if (s == "mle") return Method::mle;
    fail(ErrorKind::config, "unknown method '" + s + "' (expected sketch|nlsf|mle)");
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "average") return Aggregation::average;
    if (s == "max") return Aggregation::max;
    fail(ErrorKind::config, "unknown aggregation '" + s + "' (expected average|max)");
}

FisherScale parse_fisher_scale(const std::string& s) {
    if (s == "shape") return FisherScale::shape;
    if (s == "counts") return FisherScale::counts;
    fail(ErrorKind::config, "unknown Fisher scale '" + s + "' (expected shape|counts)");
}

double design_peak_counts(const Experiment& ex) {
    if (ex.acquisition.mode == Acquisition::Mode::peak_counts) return ex.acquisition.value;
    const auto irf = build_irf(ex.irf, ex.axis);
    return ex.acquisition.peak_for(model_curve(ex.ranges.midpoint(), irf, ex.axis));
}

FisherDensity design_density(const Experiment& ex, const SketchSettings& sk) {
    const auto irf = build_irf(ex.irf, ex.axis);
    const DensityOptions opt{sk.n_grid, sk.epsilon, sk.aggregation, sk.scale, sk.density_seed};
    return fisher_density(ex.ranges, design_peak_counts(ex), irf, ex.axis, opt);
}

KnotSet design_knots(const Experiment& ex, const SketchSettings& sk) {
    if (sk.knots == KnotMode::uniform) return uniform_knots(ex.axis, sk.m);
    return allocate_knots(fisher_cdf(design_density(ex, sk), ex.axis), ex.axis, sk.m);
}

Pipeline::Pipeline(Experiment ex, SketchSettings sk) : Pipeline(ex, sk, design_knots(ex, sk)) {}

Pipeline::Pipeline(Experiment ex, SketchSettings sk, KnotSet knots)
    : ex_(ex), sk_(sk), ctx_(ex.axis, build_irf(ex.irf, ex.axis), ex.ranges, knots) {
    require(knots.m() == sk_.m || sk_.m == 0, ErrorKind::config, "knot file M does not match the configured M");
    sk_.m = knots.m();
    if (sk_.path == SketchPath::fxp) {
        lut_ = build_fxp_lut(*ctx_.basis, sk_.lut_depth, ex_.axis.window());
        if (sk_.lut_model) ctx_.w = std::make_shared<const SketchMatrix>(lut_sketch_matrix(lut_, ex_.axis));
    }
}

SketchVector Pipeline::sketch(const Histogram& h) const {
    if (sk_.path == SketchPath::flp) return sketch_from_histogram(*ctx_.w, h);
    FxpAccumulator acc(lut_);
    for (int k = 0; k < h.axis.n_bins(); ++k) acc.add(h.axis.center(k), h.counts[static_cast<std::size_t>(k)]);
    return acc.to_sketch();
}

SketchVector Pipeline::sketch(const TimestampStream& stream) const {
    if (sk_.path == SketchPath::flp) return sketch_from_timestamps(*ctx_.basis, stream);
    return fxp_sketch_from_timestamps(lut_, stream);
}

FitResult Pipeline::fit_sketch(std::span<const double> raw_sketch) const {
    return sketchflim::fit_sketch(normalize_sketch(raw_sketch), ctx_);
}

FitResult Pipeline::fit(Method method, const Histogram& h) const {
    switch (method) {
    case Method::sketch: return fit_sketch(sketch(h).values);
    case Method::nlsf: return fit_histogram_nlsf(h, ctx_);
    case Method::mle: return fit_histogram_mle(h, ctx_);
    }
    fail(ErrorKind::invalid_input, "unknown method");
}

std::vector<FitResult> Pipeline::fit_all(Method method, std::span<const Trial> trials, int threads) const {
    std::vector<FitResult> out(trials.size());
    parallel_for(trials.size(), threads, [&](std::size_t i) {
        try {
            out[i] = fit(method, trials[i].histogram);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::config || e.kind() == ErrorKind::io) throw;
            FitResult r;
            r.params = ex_.ranges.midpoint();
            r.objective = std::numeric_limits<double>::quiet_NaN();
            r.chi2 = std::numeric_limits<double>::quiet_NaN();
            r.converged = false;
            out[i] = r;
        }
    });
    return out;
}

std::vector<DecayParams> truths_of(std::span<const Trial> trials) {
    std::vector<DecayParams> out;
    out.reserve(trials.size());
    for (const auto& t : trials) out.push_back(t.params);
    return out;
}

std::vector<DecayParams> estimates_of(std::span<const FitResult> fits) {
    std::vector<DecayParams> out;
    out.reserve(fits.size());
    for (const auto& f : fits) out.push_back(f.params);
    return out;
}

double mean_tau_mae(std::span<const DecayParams> estimates, std::span<const DecayParams> truths) {
    require(!truths.empty() && estimates.size() == truths.size(), ErrorKind::invalid_input, "unpaired results");
    double acc = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) acc += std::abs(mean_lifetime(estimates[i]) - mean_lifetime(truths[i]));
    return acc / static_cast<double>(truths.size());
}

double mean_tau_rmse(std::span<const DecayParams> estimates, std::span<const DecayParams> truths) {
    require(!truths.empty() && estimates.size() == truths.size(), ErrorKind::invalid_input, "unpaired results");
    double acc = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const double d = mean_lifetime(estimates[i]) - mean_lifetime(truths[i]);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(truths.size()));
}

} // namespace sketchflim

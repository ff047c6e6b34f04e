#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sketchflim/decay_model.hpp"
#include "sketchflim/fisher_knots.hpp"
#include "sketchflim/sketch.hpp"
#include "sketchflim/types.hpp"

namespace sketchflim {

/// Immutable, shareable state for fitting one configuration.
struct FitContext {
    TimeAxis axis;
    std::vector<double> irf;
    ParamRanges ranges;
    std::shared_ptr<const SplineBasis> basis;
    std::shared_ptr<const SketchMatrix> w;

    FitContext(TimeAxis axis, std::vector<double> irf, ParamRanges ranges);
    FitContext(TimeAxis axis, std::vector<double> irf, ParamRanges ranges, const KnotSet& knots);

    bool has_sketch() const { return static_cast<bool>(w); }
};

struct FitResult {
    DecayParams params = MonoParams{};
    double objective = 0.0;
    /// Fitted amplitude (histogram fits); 0 for sketch fits.
    double amplitude = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Goodness of fit for histogram fits; NaN otherwise.
    double chi2 = 0.0;
    std::vector<double> objective_trace;
};

/// Unit-L1 model sketch W g(theta).
std::vector<double> model_sketch(const DecayParams& params, const FitContext& ctx);

double sketch_sse(std::span<const double> measured, const DecayParams& params, const FitContext& ctx);

/// 1-D bounded fit: 64-point grid then golden section to 1e-4 ns.
FitResult fit_mono_sketch(std::span<const double> measured, const FitContext& ctx);

/// Box-constrained LM on s_meas - s(theta) from the range midpoint.
FitResult fit_bi_sketch(std::span<const double> measured, const FitContext& ctx);

/// Dispatches on ctx.ranges.kind.
FitResult fit_sketch(std::span<const double> measured, const FitContext& ctx);

/// Closed-form least-squares amplitude y.g / g.g.
double optimal_amplitude_ls(std::span<const double> y, std::span<const double> g);

/// Poisson profile amplitude sum(y) / sum(g).
double optimal_amplitude_poisson(std::span<const double> y, std::span<const double> g);

/// (1/N) sum (y - A g)^2 / max(y, 1).
double chi_squared(std::span<const double> y, std::span<const double> g, double amplitude);

/// Poisson negative log-likelihood sum(mu - y log mu) with mu floored at 1e-12.
double poisson_nll(std::span<const double> y, std::span<const double> mu);

FitResult fit_histogram_nlsf(const Histogram& y, const FitContext& ctx);
FitResult fit_histogram_mle(const Histogram& y, const FitContext& ctx);

/// Swaps components so that tau1 <= tau2 (alpha1 -> 1 - alpha1).
DecayParams canonicalize(const DecayParams& p);

struct CrbResult {
    std::vector<double> per_param_bounds;
    double mean_tau_bound = 0.0;
};

/// Cramer-Rao bounds with the amplitude treated as known.
CrbResult crb(const DecayParams& params, double peak_counts, const FitContext& ctx, double epsilon = 1e-3);

/// Mono lifetime read from an IRF-corrected phasor: tau = s / (omega g).
double phasor_mono_lifetime(const PhasorPoint& p, double window);

} // namespace sketchflim

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchflim/types.hpp"

namespace sketchflim {

enum class Aggregation { average, max };

/// Curve the per-bin information is computed on.
///  shape:  c = P p with p = g / sum(g) and P = A sum(g); derivatives act on p
///          only, so this is the information about the arrival-time
///          distribution given the photon total (what a normalized sketch keeps)
///  counts: c = mu = A g with g normalized to max 1
enum class FisherScale { shape, counts };

struct DensityOptions {
    int n_grid = 500;
    double epsilon = 1e-3;
    Aggregation aggregation = Aggregation::average;
    FisherScale scale = FisherScale::shape;
    std::uint64_t seed = 0x5eed; // bi draws only
};

struct FisherDensity {
    std::vector<double> values;
    Aggregation aggregation = Aggregation::average;
    FisherScale scale = FisherScale::shape;
    int n_grid = 0;
    double epsilon = 1e-3;
};

/// Spline knot boundaries xi_0 < ... < xi_{M+1}; M triangle bases.
struct KnotSet {
    std::vector<double> boundaries;

    int m() const { return static_cast<int>(boundaries.size()) - 2; }
};

void validate(const KnotSet& knots);

/// Finite-difference step used for parameter derivatives throughout.
double fd_step(double value);

/// d mu_k / d theta_j for mu = A g(theta), by central differences.
/// Falls back to a one-sided difference when theta_j -/+ step leaves the
/// valid region (lifetimes > 0, alpha1 in [0, 1]).
std::vector<double> mu_gradient(const DecayParams& params, double peak_counts, std::span<const double> irf,
                                const TimeAxis& axis, int component);

/// d p_k / d theta_j for the unit-sum curve p = g / sum(g), same stepping as mu_gradient.
std::vector<double> shape_gradient(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis,
                                   int component);

/// Unit-sum version of model_curve.
std::vector<double> shape_curve(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis);

/// Per-bin information for one parameter point: sum_j (d c_k/d theta_j)^2 / (c_k + eps).
std::vector<double> fisher_contribution(const DecayParams& params, double peak_counts,
                                        std::span<const double> irf, const TimeAxis& axis, double epsilon,
                                        FisherScale scale = FisherScale::counts);

/// Mono density over a uniform lifetime grid spanning the range (n_grid = 1
/// evaluates the range midpoint only).
FisherDensity fisher_density_mono(const ParamRanges& ranges, double peak_counts, std::span<const double> irf,
                                  const TimeAxis& axis, const DensityOptions& opt = {});

/// Bi density (trace criterion) over n_grid seeded uniform draws from the box.
FisherDensity fisher_density_bi(const ParamRanges& ranges, double peak_counts, std::span<const double> irf,
                                const TimeAxis& axis, const DensityOptions& opt = {});

FisherDensity fisher_density(const ParamRanges& ranges, double peak_counts, std::span<const double> irf,
                             const TimeAxis& axis, const DensityOptions& opt = {});

/// Normalized running sum of the density; the last entry is exactly 1.
std::vector<double> fisher_cdf(const FisherDensity& density, const TimeAxis& axis);

/// Knots at the quantile levels m/(M+1) of `cdf`, inverted by linear
/// interpolation between bin centers. Endpoints are the first and last bin
/// centers; boundaries closer than one bin are pushed apart.
KnotSet allocate_knots(std::span<const double> cdf, const TimeAxis& axis, int m);

KnotSet uniform_knots(const TimeAxis& axis, int m);

} // namespace sketchflim

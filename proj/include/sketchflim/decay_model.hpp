#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchflim/types.hpp"

namespace sketchflim {

/// Gaussian IRF sampled at bin centers and normalized to unit sum.
std::vector<double> build_irf(const IrfSpec& spec, const TimeAxis& axis);

/// IRF-convolved decay at the bin centers, scaled so that its maximum is 1.
///
/// The decay starts at the IRF: g_k = sum_{j<=k} I_j f(t_k - t_j), with
/// f(u) = exp(-u/tau) (or the alpha1-weighted pair) for u >= 0. The sum is the
/// first N bins of the linear convolution and is evaluated by the recurrence
/// c_k = exp(-dt/tau) c_{k-1} + I_k.
std::vector<double> model_curve(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis);

/// Same as model_curve, writing into `out` (size N) without allocating.
void model_curve_into(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis,
                      std::span<double> out);

std::vector<double> expected_counts(double peak_counts, std::span<const double> g);

/// Counter-style seed derivation; independent of iteration order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

Histogram sample_histogram(std::span<const double> mu, const TimeAxis& axis, std::uint64_t seed);

enum class TimestampMode { bin_center, uniform_jitter };

TimestampStream histogram_to_timestamps(const Histogram& h, TimestampMode mode, std::uint64_t seed = 0);

/// Bins a stream onto `axis`; timestamps outside the window land in the edge bins.
Histogram rebin(const TimestampStream& stream, const TimeAxis& axis);

/// How the expected counts are scaled: by peak count A (max mu = A) or by a
/// fixed expected total photon count (sum mu = P).
struct Acquisition {
    enum class Mode { peak_counts, total_photons };
    Mode mode = Mode::peak_counts;
    double value = 500.0;

    static Acquisition peak(double a) { return {Mode::peak_counts, a}; }
    static Acquisition total(double p) { return {Mode::total_photons, p}; }

    std::vector<double> scale(std::span<const double> g) const;
    /// Peak count implied for a curve g (equals value for peak mode).
    double peak_for(std::span<const double> g) const;
};

struct Trial {
    DecayParams params;
    Histogram histogram;
};

std::vector<Trial> generate_trial_set(const ParamRanges& ranges, const Acquisition& acq, const IrfSpec& irf,
                                      const TimeAxis& axis, int n_trials, std::uint64_t seed, int threads = 1);

inline std::vector<Trial> generate_trial_set(const ParamRanges& ranges, double peak_counts, const IrfSpec& irf,
                                             const TimeAxis& axis, int n_trials, std::uint64_t seed) {
    return generate_trial_set(ranges, Acquisition::peak(peak_counts), irf, axis, n_trials, seed);
}

/// Radially varying bi-exponential phantom, row-major.
struct SpatialMap {
    int rows = 0;
    int cols = 0;
    std::vector<Trial> pixels;

    const Trial& at(int r, int c) const { return pixels[static_cast<std::size_t>(r * cols + c)]; }
};

struct MapEndpoints {
    BiParams center{0.3, 2.0, 0.05};
    BiParams edge{2.0, 5.0, 0.95};
};

/// Normalized radial distance of pixel (r, c): distance to the geometric
/// center over the shorter half-extent, clipped at 1.
double map_radius(int rows, int cols, int r, int c);

BiParams map_params(double radius, const MapEndpoints& ends = {});

SpatialMap generate_spatial_map(const TimeAxis& axis, const IrfSpec& irf, const Acquisition& acq, int rows,
                                int cols, std::uint64_t seed, const MapEndpoints& ends = {}, int threads = 1);

} // namespace sketchflim

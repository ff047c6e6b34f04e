#include "sketchflim/decay_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sketchflim/parallel.hpp"

namespace sketchflim {

std::vector<double> build_irf(const IrfSpec& spec, const TimeAxis& axis) {
    require(spec.fwhm > 0.0, ErrorKind::invalid_input, "IRF FWHM must be positive");
    require(spec.peak_time >= 0.0 && spec.peak_time < axis.window(), ErrorKind::invalid_input,
            "IRF peak must lie inside the acquisition window");

    const double sigma = spec.fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const auto n = static_cast<std::size_t>(axis.n_bins());
    std::vector<double> irf(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double z = (axis.center(static_cast<int>(k)) - spec.peak_time) / sigma;
        irf[k] = std::exp(-0.5 * z * z);
        sum += irf[k];
    }
    if (sum <= 0.0 || !std::isfinite(sum)) {
        // Narrower than the bin spacing resolves: collapse onto the nearest bin.
        std::fill(irf.begin(), irf.end(), 0.0);
        irf[static_cast<std::size_t>(axis.bin_of(spec.peak_time))] = 1.0;
        return irf;
    }
    for (auto& v : irf) v /= sum;
    return irf;
}

namespace {

// Adds weight * sum_{j<=k} irf_j r^(k-j) to out.
void accumulate_exponential(std::span<const double> irf, double bin_width, double tau, double weight,
                            std::span<double> out) {
    if (weight == 0.0) return;
    const double r = std::exp(-bin_width / tau);
    double c = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        c = r * c + irf[k];
        out[k] += weight * c;
    }
}

} // namespace

void model_curve_into(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis,
                      std::span<double> out) {
    const auto n = static_cast<std::size_t>(axis.n_bins());
    require(irf.size() == n && out.size() == n, ErrorKind::invalid_input, "IRF length does not match the axis");
    std::fill(out.begin(), out.end(), 0.0);

    if (const auto* m = std::get_if<MonoParams>(&params)) {
        require(m->tau > 0.0, ErrorKind::invalid_input, "lifetime must be positive");
        accumulate_exponential(irf, axis.bin_width(), m->tau, 1.0, out);
    } else {
        const auto& b = std::get<BiParams>(params);
        require(b.tau1 > 0.0 && b.tau2 > 0.0, ErrorKind::invalid_input, "lifetimes must be positive");
        accumulate_exponential(irf, axis.bin_width(), b.tau1, b.alpha1, out);
        accumulate_exponential(irf, axis.bin_width(), b.tau2, 1.0 - b.alpha1, out);
    }

    const double peak = *std::max_element(out.begin(), out.end());
    if (!(peak > 0.0) || !std::isfinite(peak)) fail(ErrorKind::numeric_degenerate, "model curve vanishes");
    for (auto& v : out) v /= peak;
}

std::vector<double> model_curve(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis) {
    std::vector<double> g(static_cast<std::size_t>(axis.n_bins()));
    model_curve_into(params, irf, axis, g);
    return g;
}

std::vector<double> expected_counts(double peak_counts, std::span<const double> g) {
    std::vector<double> mu(g.begin(), g.end());
    for (auto& v : mu) v *= peak_counts;
    return mu;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finalizer over a Weyl step per index.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Histogram sample_histogram(std::span<const double> mu, const TimeAxis& axis, std::uint64_t seed) {
    require(mu.size() == static_cast<std::size_t>(axis.n_bins()), ErrorKind::invalid_input,
            "expected-count vector does not match the axis");
    std::mt19937_64 rng(seed);
    Histogram h(axis);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        require(mu[k] >= 0.0 && std::isfinite(mu[k]), ErrorKind::invalid_input, "expected counts must be >= 0");
        if (mu[k] == 0.0) continue;
        std::poisson_distribution<std::int64_t> poisson(mu[k]);
        h.counts[k] = static_cast<std::uint64_t>(poisson(rng));
    }
    return h;
}

TimestampStream histogram_to_timestamps(const Histogram& h, TimestampMode mode, std::uint64_t seed) {
    TimestampStream s;
    s.times.reserve(h.total());
    const double dt = h.axis.bin_width();
    std::mt19937_64 rng(seed);
    for (int k = 0; k < h.axis.n_bins(); ++k) {
        const double c = h.axis.center(k);
        const auto count = h.counts[static_cast<std::size_t>(k)];
        if (mode == TimestampMode::bin_center) {
            s.times.insert(s.times.end(), count, c);
            continue;
        }
        const double lo = c - 0.5 * dt;
        const double hi = c + 0.5 * dt;
        std::uniform_real_distribution<double> jitter(lo, hi);
        for (std::uint64_t i = 0; i < count; ++i) {
            double t = jitter(rng);
            if (t >= hi) t = std::nextafter(hi, lo);
            s.times.push_back(t);
        }
    }
    return s;
}

Histogram rebin(const TimestampStream& stream, const TimeAxis& axis) {
    Histogram h(axis);
    for (double t : stream.times) ++h.counts[static_cast<std::size_t>(axis.bin_of(t))];
    return h;
}

std::vector<double> Acquisition::scale(std::span<const double> g) const {
    if (mode == Mode::peak_counts) return expected_counts(value, g);
    double sum = 0.0;
    for (double v : g) sum += v;
    require(sum > 0.0, ErrorKind::numeric_degenerate, "model curve has zero area");
    return expected_counts(value / sum, g);
}

double Acquisition::peak_for(std::span<const double> g) const {
    if (mode == Mode::peak_counts) return value;
    double sum = 0.0;
    double peak = 0.0;
    for (double v : g) {
        sum += v;
        peak = std::max(peak, v);
    }
    require(sum > 0.0, ErrorKind::numeric_degenerate, "model curve has zero area");
    return value * peak / sum;
}

namespace {

double uniform_in(std::mt19937_64& rng, const Interval& box) {
    return std::uniform_real_distribution<double>(box.lo, box.hi)(rng);
}

DecayParams sample_params(const ParamRanges& ranges, std::mt19937_64& rng) {
    if (ranges.kind == ModelKind::mono) return MonoParams{uniform_in(rng, ranges.tau)};
    BiParams b;
    b.tau1 = uniform_in(rng, ranges.tau1);
    b.tau2 = uniform_in(rng, ranges.tau2);
    b.alpha1 = uniform_in(rng, ranges.alpha1);
    return b;
}

} // namespace

std::vector<Trial> generate_trial_set(const ParamRanges& ranges, const Acquisition& acq, const IrfSpec& irf_spec,
                                      const TimeAxis& axis, int n_trials, std::uint64_t seed, int threads) {
    validate(ranges);
    require(n_trials >= 0, ErrorKind::invalid_input, "trial count must be non-negative");
    require(acq.value > 0.0, ErrorKind::invalid_input, "photon budget must be positive");
    const auto irf = build_irf(irf_spec, axis);

    std::vector<Trial> trials(static_cast<std::size_t>(n_trials), Trial{MonoParams{}, Histogram(axis)});
    parallel_for(trials.size(), threads, [&](std::size_t i) {
        const std::uint64_t trial_seed = derive_seed(seed, i);
        std::mt19937_64 rng(trial_seed);
        auto params = sample_params(ranges, rng);
        const auto g = model_curve(params, irf, axis);
        const auto mu = acq.scale(g);
        trials[i] = Trial{params, sample_histogram(mu, axis, derive_seed(trial_seed, 0))};
    });
    return trials;
}

double map_radius(int rows, int cols, int r, int c) {
    const double cy = 0.5 * (rows - 1);
    const double cx = 0.5 * (cols - 1);
    const double extent = std::min(cy, cx);
    const double d = std::hypot(r - cy, c - cx) / extent;
    return std::min(1.0, d);
}

BiParams map_params(double radius, const MapEndpoints& ends) {
    const double w = std::clamp(radius, 0.0, 1.0);
    auto lerp = [w](double a, double b) { return w == 1.0 ? b : a + w * (b - a); };
    return BiParams{lerp(ends.center.tau1, ends.edge.tau1), lerp(ends.center.tau2, ends.edge.tau2),
                    lerp(ends.center.alpha1, ends.edge.alpha1)};
}

SpatialMap generate_spatial_map(const TimeAxis& axis, const IrfSpec& irf_spec, const Acquisition& acq, int rows,
                                int cols, std::uint64_t seed, const MapEndpoints& ends, int threads) {
    require(rows >= 8 && cols >= 8, ErrorKind::invalid_input, "spatial map must be at least 8x8");
    require(acq.value > 0.0, ErrorKind::invalid_input, "photon budget must be positive");
    const auto irf = build_irf(irf_spec, axis);

    SpatialMap map;
    map.rows = rows;
    map.cols = cols;
    map.pixels.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                      Trial{MonoParams{}, Histogram(axis)});
    parallel_for(map.pixels.size(), threads, [&](std::size_t i) {
        const int r = static_cast<int>(i) / cols;
        const int c = static_cast<int>(i) % cols;
        const BiParams p = map_params(map_radius(rows, cols, r, c), ends);
        const auto g = model_curve(p, irf, axis);
        map.pixels[i] = Trial{p, sample_histogram(acq.scale(g), axis, derive_seed(seed, i))};
    });
    return map;
}

} // namespace sketchflim

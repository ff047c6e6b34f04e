#include "sketchflim/fisher_knots.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sketchflim/decay_model.hpp"

namespace sketchflim {

void validate(const KnotSet& knots) {
    require(knots.m() >= 2, ErrorKind::invalid_input, "knot set needs at least M = 2 bases");
    for (std::size_t i = 1; i < knots.boundaries.size(); ++i)
        require(knots.boundaries[i] > knots.boundaries[i - 1], ErrorKind::invalid_input,
                "knot boundaries must be strictly increasing");
}

double fd_step(double value) { return std::max(1e-4 * std::abs(value), 1e-6); }

namespace {

bool admissible(ModelKind kind, int component, double value) {
    if (kind == ModelKind::bi && component == 2) return value >= 0.0 && value <= 1.0;
    return value > 0.0;
}

} // namespace

namespace {

// Finite-difference derivative of curve(theta) along one component.
template <typename Curve>
std::vector<double> curve_gradient(const DecayParams& params, int component, Curve curve) {
    const ModelKind kind = kind_of(params);
    require(component >= 0 && component < param_count(kind), ErrorKind::invalid_input,
            "gradient component out of range");
    auto theta = to_vector(params);
    const double x = theta[static_cast<std::size_t>(component)];
    const double h = fd_step(x);
    const bool down_ok = admissible(kind, component, x - h);
    const bool up_ok = admissible(kind, component, x + h);

    auto eval = [&](double v) {
        theta[static_cast<std::size_t>(component)] = v;
        return curve(from_vector(kind, theta));
    };

    std::vector<double> grad;
    if (down_ok && up_ok) {
        const auto up = eval(x + h);
        const auto down = eval(x - h);
        grad.resize(up.size());
        for (std::size_t k = 0; k < up.size(); ++k) grad[k] = (up[k] - down[k]) / (2.0 * h);
    } else {
        require(down_ok || up_ok, ErrorKind::invalid_input, "parameter has no admissible neighbourhood");
        const double other = up_ok ? x + h : x - h;
        const auto shifted = eval(other);
        const auto base = eval(x);
        grad.resize(base.size());
        for (std::size_t k = 0; k < base.size(); ++k) grad[k] = (shifted[k] - base[k]) / (other - x);
    }
    return grad;
}

} // namespace

std::vector<double> mu_gradient(const DecayParams& params, double peak_counts, std::span<const double> irf,
                                const TimeAxis& axis, int component) {
    auto grad = curve_gradient(params, component, [&](const DecayParams& p) { return model_curve(p, irf, axis); });
    for (auto& v : grad) v *= peak_counts;
    return grad;
}

std::vector<double> shape_curve(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis) {
    auto g = model_curve(params, irf, axis);
    double sum = 0.0;
    for (double v : g) sum += v;
    for (auto& v : g) v /= sum;
    return g;
}

std::vector<double> shape_gradient(const DecayParams& params, std::span<const double> irf, const TimeAxis& axis,
                                   int component) {
    return curve_gradient(params, component, [&](const DecayParams& p) { return shape_curve(p, irf, axis); });
}

std::vector<double> fisher_contribution(const DecayParams& params, double peak_counts,
                                        std::span<const double> irf, const TimeAxis& axis, double epsilon,
                                        FisherScale scale) {
    const int np = param_count(kind_of(params));
    std::vector<double> c;
    std::vector<std::vector<double>> grads;
    if (scale == FisherScale::counts) {
        c = expected_counts(peak_counts, model_curve(params, irf, axis));
        for (int j = 0; j < np; ++j) grads.push_back(mu_gradient(params, peak_counts, irf, axis, j));
    } else {
        const auto g = model_curve(params, irf, axis);
        double total = 0.0;
        for (double v : g) total += v;
        const double photons = peak_counts * total;
        c = g;
        for (auto& v : c) v *= peak_counts;
        for (int j = 0; j < np; ++j) {
            auto d = shape_gradient(params, irf, axis, j);
            for (auto& v : d) v *= photons;
            grads.push_back(std::move(d));
        }
    }
    std::vector<double> num(c.size(), 0.0);
    for (const auto& d : grads)
        for (std::size_t k = 0; k < d.size(); ++k) num[k] += d[k] * d[k];
    for (std::size_t k = 0; k < num.size(); ++k) num[k] /= (c[k] + epsilon);
    return num;
}

namespace {

void check_options(double peak_counts, const DensityOptions& opt) {
    require(opt.n_grid >= 1, ErrorKind::invalid_input, "n_grid must be positive");
    require(opt.epsilon > 0.0 && peak_counts > 0.0, ErrorKind::invalid_input, "epsilon and A must be positive");
}

void fold(std::vector<double>& acc, const std::vector<double>& f, Aggregation agg) {
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = agg == Aggregation::average ? acc[k] + f[k]
                                                                                     : std::max(acc[k], f[k]);
}

FisherDensity finish(std::vector<double> acc, const DensityOptions& opt) {
    if (opt.aggregation == Aggregation::average)
        for (auto& v : acc) v /= opt.n_grid;
    return FisherDensity{std::move(acc), opt.aggregation, opt.scale, opt.n_grid, opt.epsilon};
}

} // namespace

FisherDensity fisher_density_mono(const ParamRanges& ranges, double peak_counts, std::span<const double> irf,
                                  const TimeAxis& axis, const DensityOptions& opt) {
    require(ranges.kind == ModelKind::mono, ErrorKind::invalid_input, "mono density needs mono ranges");
    check_options(peak_counts, opt);
    std::vector<double> acc(static_cast<std::size_t>(axis.n_bins()), 0.0);
    for (int s = 0; s < opt.n_grid; ++s) {
        const double tau = opt.n_grid == 1
                               ? ranges.tau.mid()
                               : ranges.tau.lo + ranges.tau.width() * s / static_cast<double>(opt.n_grid - 1);
        fold(acc, fisher_contribution(MonoParams{tau}, peak_counts, irf, axis, opt.epsilon, opt.scale),
             opt.aggregation);
    }
    return finish(std::move(acc), opt);
}

FisherDensity fisher_density_bi(const ParamRanges& ranges, double peak_counts, std::span<const double> irf,
                                const TimeAxis& axis, const DensityOptions& opt) {
    require(ranges.kind == ModelKind::bi, ErrorKind::invalid_input, "bi density needs bi ranges");
    check_options(peak_counts, opt);
    std::mt19937_64 rng(opt.seed);
    auto draw = [&rng](const Interval& box) {
        return box.lo == box.hi ? box.lo : std::uniform_real_distribution<double>(box.lo, box.hi)(rng);
    };
    std::vector<double> acc(static_cast<std::size_t>(axis.n_bins()), 0.0);
    for (int s = 0; s < opt.n_grid; ++s) {
        BiParams p;
        p.tau1 = draw(ranges.tau1);
        p.tau2 = draw(ranges.tau2);
        p.alpha1 = draw(ranges.alpha1);
        fold(acc, fisher_contribution(p, peak_counts, irf, axis, opt.epsilon, opt.scale), opt.aggregation);
    }
    return finish(std::move(acc), opt);
}

FisherDensity fisher_density(const ParamRanges& ranges, double peak_counts, std::span<const double> irf,
                             const TimeAxis& axis, const DensityOptions& opt) {
    if (ranges.kind == ModelKind::mono) return fisher_density_mono(ranges, peak_counts, irf, axis, opt);
    return fisher_density_bi(ranges, peak_counts, irf, axis, opt);
}

std::vector<double> fisher_cdf(const FisherDensity& density, const TimeAxis& axis) {
    const auto& f = density.values;
    require(f.size() == static_cast<std::size_t>(axis.n_bins()), ErrorKind::invalid_input,
            "density length does not match the axis");
    double total = 0.0;
    for (double v : f) {
        require(v >= 0.0 && std::isfinite(v), ErrorKind::invalid_input, "density must be finite and non-negative");
        total += v * axis.bin_width();
    }
    require(total > 0.0, ErrorKind::invalid_input, "Fisher density has zero mass");
    std::vector<double> cdf(f.size());
    double run = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        run += f[k] * axis.bin_width();
        cdf[k] = run / total;
    }
    cdf.back() = 1.0;
    return cdf;
}

KnotSet allocate_knots(std::span<const double> cdf, const TimeAxis& axis, int m) {
    require(m >= 2, ErrorKind::invalid_input, "need M >= 2 sketch channels");
    const auto n = static_cast<std::size_t>(axis.n_bins());
    require(cdf.size() == n, ErrorKind::invalid_input, "CDF length does not match the axis");
    for (std::size_t k = 1; k < n; ++k)
        require(cdf[k] >= cdf[k - 1], ErrorKind::invalid_input, "CDF must be non-decreasing");

    const double dt = axis.bin_width();
    std::vector<double> xi(static_cast<std::size_t>(m) + 2);
    xi.front() = axis.first_center();
    xi.back() = axis.last_center();

    for (int j = 1; j <= m; ++j) {
        const double q = static_cast<double>(j) / (m + 1);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), q);
        const auto k = static_cast<std::size_t>(it - cdf.begin());
        double t;
        if (k == 0) {
            t = axis.center(0);
        } else if (k >= n) {
            t = axis.center(static_cast<int>(n) - 1);
        } else {
            const double lo = cdf[k - 1];
            const double hi = cdf[k];
            const double frac = hi > lo ? (q - lo) / (hi - lo) : 1.0;
            t = axis.center(static_cast<int>(k) - 1) + frac * dt;
        }
        xi[static_cast<std::size_t>(j)] = t;
    }

    // Collision repair: enforce a one-bin minimum gap, forward then backward.
    const std::size_t last = xi.size() - 1;
    for (std::size_t j = 1; j < last; ++j) xi[j] = std::max(xi[j], xi[j - 1] + dt);
    for (std::size_t j = last - 1; j >= 1; --j) xi[j] = std::min(xi[j], xi[j + 1] - dt);
    if (xi[1] < xi[0] + dt * (1.0 - 1e-9))
        fail(ErrorKind::allocation_infeasible,
             "cannot place " + std::to_string(m + 2) + " distinct knots one bin apart on this axis");

    KnotSet knots{std::move(xi)};
    validate(knots);
    return knots;
}

KnotSet uniform_knots(const TimeAxis& axis, int m) {
    require(m >= 2, ErrorKind::invalid_input, "need M >= 2 sketch channels");
    if (m + 1 > axis.n_bins() - 1)
        fail(ErrorKind::allocation_infeasible, "more knot intervals than bins");
    const double a = axis.first_center();
    const double b = axis.last_center();
    std::vector<double> xi(static_cast<std::size_t>(m) + 2);
    for (int j = 0; j <= m + 1; ++j) xi[static_cast<std::size_t>(j)] = a + (b - a) * j / (m + 1);
    xi.back() = b;
    return KnotSet{std::move(xi)};
}

} // namespace sketchflim

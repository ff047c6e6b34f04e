#include "sketchflim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sketchflim/lm_solver.hpp"

namespace sketchflim {

FitContext::FitContext(TimeAxis a, std::vector<double> i, ParamRanges r)
    : axis(a), irf(std::move(i)), ranges(r) {
    validate(ranges);
    require(irf.size() == static_cast<std::size_t>(axis.n_bins()), ErrorKind::invalid_input,
            "IRF length does not match the axis");
}

FitContext::FitContext(TimeAxis a, std::vector<double> i, ParamRanges r, const KnotSet& knots)
    : FitContext(a, std::move(i), r) {
    basis = std::make_shared<const SplineBasis>(knots);
    w = std::make_shared<const SketchMatrix>(*basis, axis);
}

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

using ModelFn = std::function<std::vector<double>(const Eigen::VectorXd&)>;

bool admissible(ModelKind kind, Eigen::Index j, double v) {
    if (kind == ModelKind::bi && j == 2) return v >= 0.0 && v <= 1.0;
    return v > 0.0;
}

DecayParams params_of(ModelKind kind, const Eigen::VectorXd& x) {
    return from_vector(kind, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd vector_of(const DecayParams& p) {
    const auto v = to_vector(p);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Central differences with the fd_step rule, one-sided at the admissible edge.
Eigen::MatrixXd fd_jacobian(ModelKind kind, const Eigen::VectorXd& x, const ModelFn& model,
                            const std::vector<double>& at_x) {
    const auto rows = static_cast<Eigen::Index>(at_x.size());
    Eigen::MatrixXd jac(rows, x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = fd_step(x[j]);
        const bool down = admissible(kind, j, x[j] - h);
        const bool up = admissible(kind, j, x[j] + h);
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        double span = 0.0;
        std::vector<double> fp, fm;
        if (down && up) {
            xp[j] += h;
            xm[j] -= h;
            fp = model(xp);
            fm = model(xm);
            span = 2.0 * h;
        } else if (up) {
            xp[j] += h;
            fp = model(xp);
            fm = at_x;
            span = h;
        } else {
            xm[j] -= h;
            fp = at_x;
            fm = model(xm);
            span = h;
        }
        for (Eigen::Index k = 0; k < rows; ++k)
            jac(k, j) = (fp[static_cast<std::size_t>(k)] - fm[static_cast<std::size_t>(k)]) / span;
    }
    return jac;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

FitResult finish(ModelKind kind, const LmResult& lm, double amplitude, double chi2) {
    FitResult r;
    r.params = canonicalize(params_of(kind, lm.theta));
    r.objective = lm.eval.objective;
    r.amplitude = amplitude;
    r.iterations = lm.iterations;
    r.converged = lm.converged;
    r.chi2 = chi2;
    r.objective_trace = lm.trace;
    return r;
}

std::vector<double> counts_of(const Histogram& y) { return {y.counts.begin(), y.counts.end()}; }

} // namespace

std::vector<double> model_sketch(const DecayParams& params, const FitContext& ctx) {
    require(ctx.has_sketch(), ErrorKind::invalid_input, "fit context has no sketch basis");
    const auto g = model_curve(params, ctx.irf, ctx.axis);
    return normalize_sketch(ctx.w->apply(g));
}

double sketch_sse(std::span<const double> measured, const DecayParams& params, const FitContext& ctx) {
    const auto s = model_sketch(params, ctx);
    require(measured.size() == s.size(), ErrorKind::invalid_input, "sketch dimension mismatch");
    double sse = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = measured[i] - s[i];
        sse += d * d;
    }
    return sse;
}

FitResult fit_mono_sketch(std::span<const double> measured, const FitContext& ctx) {
    require(ctx.ranges.kind == ModelKind::mono, ErrorKind::invalid_input, "mono fit needs mono ranges");
    const Interval box = ctx.ranges.tau;
    auto sse = [&](double tau) { return sketch_sse(measured, MonoParams{tau}, ctx); };

    constexpr int grid = 64;
    std::vector<double> taus(grid), values(grid);
    for (int i = 0; i < grid; ++i) {
        taus[static_cast<std::size_t>(i)] = box.lo + box.width() * i / (grid - 1);
        values[static_cast<std::size_t>(i)] = sse(taus[static_cast<std::size_t>(i)]);
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    if (*hi_it - *lo_it < 1e-15) fail(ErrorKind::non_identifiable, "sketch objective is flat over the lifetime range");
    const auto best = static_cast<std::size_t>(lo_it - values.begin());

    double a = taus[best == 0 ? 0 : best - 1];
    double b = taus[std::min<std::size_t>(best + 1, grid - 1)];
    double best_tau = taus[best];
    double best_val = values[best];

    FitResult r;
    r.objective_trace.push_back(best_val);
    constexpr double inv_phi = 0.6180339887498949;
    constexpr double tolerance = 1e-4;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = sse(c);
    double fd = sse(d);
    int iterations = 0;
    while (b - a > tolerance && iterations < 200) {
        ++iterations;
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse(d);
        }
        for (auto [t, v] : {std::pair{c, fc}, std::pair{d, fd}}) {
            if (v < best_val) {
                best_val = v;
                best_tau = t;
                r.objective_trace.push_back(best_val);
            }
        }
    }
    r.params = MonoParams{best_tau};
    r.objective = best_val;
    r.iterations = iterations;
    r.converged = b - a <= tolerance;
    r.chi2 = nan;
    return r;
}

FitResult fit_bi_sketch(std::span<const double> measured, const FitContext& ctx) {
    require(ctx.ranges.kind == ModelKind::bi, ErrorKind::invalid_input, "bi fit needs bi ranges");
    require(ctx.has_sketch(), ErrorKind::invalid_input, "fit context has no sketch basis");
    require(measured.size() == static_cast<std::size_t>(ctx.w->rows()), ErrorKind::invalid_input,
            "sketch dimension mismatch");
    const ModelKind kind = ModelKind::bi;
    const Eigen::VectorXd data = Eigen::Map<const Eigen::VectorXd>(measured.data(),
                                                                   static_cast<Eigen::Index>(measured.size()));
    ModelFn model = [&](const Eigen::VectorXd& x) { return model_sketch(params_of(kind, x), ctx); };

    LmProblem problem;
    problem.boxes = ctx.ranges.boxes();
    problem.evaluate = [&](const Eigen::VectorXd& x) {
        LmEval e;
        e.residual = data - to_eigen(model(x));
        e.objective = e.residual.squaredNorm();
        return e;
    };
    problem.jacobian = [&](const Eigen::VectorXd& x, const LmEval& e) {
        std::vector<double> at(static_cast<std::size_t>(data.size()));
        for (Eigen::Index i = 0; i < data.size(); ++i) at[static_cast<std::size_t>(i)] = data[i] - e.residual[i];
        return fd_jacobian(kind, x, model, at);
    };
    const auto lm = minimize_box_lm(problem, vector_of(ctx.ranges.midpoint()));
    return finish(kind, lm, 0.0, nan);
}

FitResult fit_sketch(std::span<const double> measured, const FitContext& ctx) {
    return ctx.ranges.kind == ModelKind::mono ? fit_mono_sketch(measured, ctx) : fit_bi_sketch(measured, ctx);
}

double optimal_amplitude_ls(std::span<const double> y, std::span<const double> g) {
    double yg = 0.0, gg = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        yg += y[k] * g[k];
        gg += g[k] * g[k];
    }
    require(gg > 0.0, ErrorKind::numeric_degenerate, "model curve is identically zero");
    return yg / gg;
}

double optimal_amplitude_poisson(std::span<const double> y, std::span<const double> g) {
    double sy = 0.0, sg = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        sy += y[k];
        sg += g[k];
    }
    require(sg > 0.0, ErrorKind::numeric_degenerate, "model curve has zero area");
    return sy / sg;
}

double chi_squared(std::span<const double> y, std::span<const double> g, double amplitude) {
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double d = y[k] - amplitude * g[k];
        acc += d * d / std::max(y[k], 1.0);
    }
    return acc / static_cast<double>(g.size());
}

double poisson_nll(std::span<const double> y, std::span<const double> mu) {
    double acc = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double m = std::max(mu[k], 1e-12);
        acc += m - (y[k] > 0.0 ? y[k] * std::log(m) : 0.0);
    }
    return acc;
}

FitResult fit_histogram_nlsf(const Histogram& y, const FitContext& ctx) {
    require(y.axis == ctx.axis, ErrorKind::invalid_input, "histogram axis differs from the fit context");
    require(y.total() > 0, ErrorKind::invalid_input, "cannot fit an empty histogram");
    const ModelKind kind = ctx.ranges.kind;
    const auto counts = counts_of(y);
    const Eigen::VectorXd data = to_eigen(counts);

    ModelFn model = [&](const Eigen::VectorXd& x) {
        auto g = model_curve(params_of(kind, x), ctx.irf, ctx.axis);
        const double a = optimal_amplitude_ls(counts, g);
        for (auto& v : g) v *= a;
        return g;
    };
    LmProblem problem;
    problem.boxes = ctx.ranges.boxes();
    problem.evaluate = [&](const Eigen::VectorXd& x) {
        LmEval e;
        e.residual = data - to_eigen(model(x));
        e.objective = e.residual.squaredNorm();
        return e;
    };
    problem.jacobian = [&](const Eigen::VectorXd& x, const LmEval& e) {
        std::vector<double> at(counts.size());
        for (std::size_t k = 0; k < at.size(); ++k) at[k] = counts[k] - e.residual[static_cast<Eigen::Index>(k)];
        return fd_jacobian(kind, x, model, at);
    };
    const auto lm = minimize_box_lm(problem, vector_of(ctx.ranges.midpoint()));

    const auto g = model_curve(params_of(kind, lm.theta), ctx.irf, ctx.axis);
    const double amplitude = optimal_amplitude_ls(counts, g);
    return finish(kind, lm, amplitude, chi_squared(counts, g, amplitude));
}

FitResult fit_histogram_mle(const Histogram& y, const FitContext& ctx) {
    require(y.axis == ctx.axis, ErrorKind::invalid_input, "histogram axis differs from the fit context");
    require(y.total() > 0, ErrorKind::invalid_input, "cannot fit an empty histogram");
    const ModelKind kind = ctx.ranges.kind;
    const auto counts = counts_of(y);

    ModelFn mu_of = [&](const Eigen::VectorXd& x) {
        auto g = model_curve(params_of(kind, x), ctx.irf, ctx.axis);
        const double a = optimal_amplitude_poisson(counts, g);
        for (auto& v : g) v = std::max(a * v, 1e-12);
        return g;
    };
    LmProblem problem;
    problem.boxes = ctx.ranges.boxes();
    problem.evaluate = [&](const Eigen::VectorXd& x) {
        const auto mu = mu_of(x);
        LmEval e;
        e.objective = poisson_nll(counts, mu);
        e.residual.resize(static_cast<Eigen::Index>(mu.size()));
        for (std::size_t k = 0; k < mu.size(); ++k)
            e.residual[static_cast<Eigen::Index>(k)] = (counts[k] - mu[k]) / std::sqrt(mu[k]);
        return e;
    };
    problem.jacobian = [&](const Eigen::VectorXd& x, const LmEval&) {
        const auto mu = mu_of(x);
        Eigen::MatrixXd jac = fd_jacobian(kind, x, mu_of, mu);
        for (Eigen::Index k = 0; k < jac.rows(); ++k) jac.row(k) /= std::sqrt(mu[static_cast<std::size_t>(k)]);
        return jac;
    };
    LmOptions options;
    options.objective_tolerance = 1e-8;
    const auto lm = minimize_box_lm(problem, vector_of(ctx.ranges.midpoint()), options);

    const auto g = model_curve(params_of(kind, lm.theta), ctx.irf, ctx.axis);
    const double amplitude = optimal_amplitude_poisson(counts, g);
    return finish(kind, lm, amplitude, chi_squared(counts, g, amplitude));
}

DecayParams canonicalize(const DecayParams& p) {
    if (const auto* b = std::get_if<BiParams>(&p); b && b->tau1 > b->tau2)
        return BiParams{b->tau2, b->tau1, 1.0 - b->alpha1};
    return p;
}

CrbResult crb(const DecayParams& params, double peak_counts, const FitContext& ctx, double epsilon) {
    require(peak_counts > 0.0, ErrorKind::invalid_input, "A must be positive");
    const ModelKind kind = kind_of(params);
    const int np = param_count(kind);
    const auto mu = expected_counts(peak_counts, model_curve(params, ctx.irf, ctx.axis));

    std::vector<std::vector<double>> grads;
    for (int j = 0; j < np; ++j) grads.push_back(mu_gradient(params, peak_counts, ctx.irf, ctx.axis, j));

    Eigen::MatrixXd fim = Eigen::MatrixXd::Zero(np, np);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double w = 1.0 / (mu[k] + epsilon);
        for (int a = 0; a < np; ++a)
            for (int b = 0; b < np; ++b)
                fim(a, b) += w * grads[static_cast<std::size_t>(a)][k] * grads[static_cast<std::size_t>(b)][k];
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fim);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) fail(ErrorKind::singular_information, "Fisher information matrix is singular");
    const Eigen::MatrixXd cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                eig.eigenvectors().transpose();

    CrbResult out;
    for (int j = 0; j < np; ++j) out.per_param_bounds.push_back(std::sqrt(cov(j, j)));
    if (kind == ModelKind::mono) {
        out.mean_tau_bound = out.per_param_bounds[0];
    } else {
        const auto& b = std::get<BiParams>(params);
        const Eigen::Vector3d grad(b.alpha1, 1.0 - b.alpha1, b.tau1 - b.tau2);
        out.mean_tau_bound = std::sqrt(grad.dot(cov * grad));
    }
    return out;
}

double phasor_mono_lifetime(const PhasorPoint& p, double window) {
    if (!(p.g > 1e-9)) fail(ErrorKind::outside_semicircle, "phasor has g <= 0; no mono lifetime");
    const double omega = 2.0 * std::numbers::pi * p.harmonic / window;
    return p.s / (omega * p.g);
}

} // namespace sketchflim

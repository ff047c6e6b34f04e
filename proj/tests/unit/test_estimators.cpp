#include <doctest.h>

#include <cmath>
#include <random>

#include "sketchflim/decay_model.hpp"
#include "sketchflim/estimators.hpp"
#include "sketchflim/lm_solver.hpp"

using namespace sketchflim;

namespace {

const TimeAxis axis = TimeAxis::from_window(256, 10.0);

Histogram rounded(const std::vector<double>& mu) {
    Histogram h(axis);
    for (std::size_t k = 0; k < mu.size(); ++k) h.counts[k] = static_cast<std::uint64_t>(std::llround(mu[k]));
    return h;
}

} // namespace

TEST_CASE("least-squares amplitude is stationary") {
    const std::vector<double> y{3.0, 7.0, 2.0, 9.0}, g{0.5, 1.0, 0.2, 0.8};
    const double a = optimal_amplitude_ls(y, g);
    double grad = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) grad += (y[k] - a * g[k]) * g[k];
    CHECK(std::abs(grad) < 1e-12);
    CHECK(optimal_amplitude_poisson(y, g) == doctest::Approx(21.0 / 2.5));
}

TEST_CASE("chi squared and poisson likelihood by hand") {
    const std::vector<double> y{0.0, 4.0}, g{1.0, 2.0};
    // ((0 - 2)^2 / 1 + (4 - 4)^2 / 4) / 2
    CHECK(chi_squared(y, g, 2.0) == doctest::Approx(2.0));
    const std::vector<double> mu{1.0, 2.0};
    CHECK(poisson_nll(y, mu) == doctest::Approx(3.0 - 4.0 * std::log(2.0)));
}

TEST_CASE("canonical ordering of components") {
    const auto c = std::get<BiParams>(canonicalize(BiParams{4.0, 1.0, 0.3}));
    CHECK(c.tau1 == 1.0);
    CHECK(c.tau2 == 4.0);
    CHECK(c.alpha1 == doctest::Approx(0.7));
}

TEST_CASE("box lm finds an interior minimum and clamps at a bound") {
    // r = target - theta, J = I: minimum of |target - theta|^2 over the box.
    auto problem = [](Eigen::Vector2d target) {
        LmProblem p;
        p.boxes = {{0.0, 1.0}, {0.0, 1.0}};
        p.evaluate = [target](const Eigen::VectorXd& th) {
            LmEval e;
            e.residual = target - th;
            e.objective = e.residual.squaredNorm();
            return e;
        };
        p.jacobian = [](const Eigen::VectorXd&, const LmEval&) { return Eigen::MatrixXd::Identity(2, 2); };
        return p;
    };
    const auto in = minimize_box_lm(problem({0.3, 0.6}), Eigen::Vector2d(0.9, 0.1));
    CHECK(in.converged);
    CHECK(in.theta(0) == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(in.theta(1) == doctest::Approx(0.6).epsilon(1e-6));
    const auto out = minimize_box_lm(problem({1.7, 0.4}), Eigen::Vector2d(0.5, 0.5));
    CHECK(out.theta(0) == doctest::Approx(1.0));
    CHECK(out.theta(1) == doctest::Approx(0.4).epsilon(1e-6));
    for (std::size_t i = 1; i < out.trace.size(); ++i) CHECK(out.trace[i] <= out.trace[i - 1]);
}

TEST_CASE("lm trace is monotone on a curved problem") {
    // Rosenbrock residuals (1 - x, 10 (y - x^2)).
    LmProblem p;
    p.boxes = {{-2.0, 2.0}, {-1.0, 3.0}};
    p.evaluate = [](const Eigen::VectorXd& t) {
        LmEval e;
        e.residual = Eigen::Vector2d(1.0 - t(0), 10.0 * (t(1) - t(0) * t(0)));
        e.objective = e.residual.squaredNorm();
        return e;
    };
    // J = d model / d theta with residual = data - model, so the model is the negated residual.
    p.jacobian = [](const Eigen::VectorXd& t, const LmEval&) {
        Eigen::MatrixXd j(2, 2);
        j << 1.0, 0.0, 20.0 * t(0), -10.0;
        return j;
    };
    const auto r = minimize_box_lm(p, Eigen::Vector2d(-1.2, 1.0));
    CHECK(r.theta(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.theta(1) == doctest::Approx(1.0).epsilon(1e-4));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
}

TEST_CASE("sketch fits recover noiseless sketches") {
    const auto irf = build_irf({}, axis);
    const FitContext mono(axis, irf, ParamRanges::mono({0.2, 8.0}), uniform_knots(axis, 4));
    for (double tau : {0.35, 1.7, 6.2}) {
        const auto s = model_sketch(MonoParams{tau}, mono);
        const auto r = fit_sketch(s, mono);
        CHECK(std::get<MonoParams>(r.params).tau == doctest::Approx(tau).epsilon(1e-3));
        CHECK(sketch_sse(s, MonoParams{tau}, mono) == doctest::Approx(0.0));
    }
    const FitContext bi(axis, irf, ParamRanges::bi({0.2, 2.0}, {2.0, 8.0}, {0.05, 0.95}), uniform_knots(axis, 8));
    const BiParams truth{0.8, 4.5, 0.6};
    const auto r = fit_sketch(model_sketch(truth, bi), bi);
    CHECK(mean_lifetime(r.params) == doctest::Approx(mean_lifetime(truth)).epsilon(1e-3));
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
        CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
}

TEST_CASE("histogram fits recover expectation data") {
    const auto irf = build_irf({}, axis);
    const FitContext ctx(axis, irf, ParamRanges::bi({0.2, 2.0}, {2.0, 8.0}, {0.05, 0.95}));
    const BiParams truth{0.7, 3.5, 0.4};
    // Large amplitude keeps the integer rounding of the expectation negligible.
    const auto h = rounded(expected_counts(1e6, model_curve(truth, irf, axis)));
    for (auto* fit : {&fit_histogram_nlsf, &fit_histogram_mle}) {
        const auto r = fit(h, ctx);
        const auto p = std::get<BiParams>(r.params);
        CHECK(p.tau1 == doctest::Approx(0.7).epsilon(1e-3));
        CHECK(p.tau2 == doctest::Approx(3.5).epsilon(1e-3));
        CHECK(p.alpha1 == doctest::Approx(0.4).epsilon(1e-3));
        CHECK(r.amplitude == doctest::Approx(1e6).epsilon(1e-3));
    }
}

TEST_CASE("crb scales with the inverse square root of amplitude") {
    const auto irf = build_irf({IrfShape::gaussian, 0.15, 1.0}, axis);
    const FitContext ctx(axis, irf, ParamRanges::bi({0.2, 2.0}, {2.0, 8.0}, {0.05, 0.95}));
    const BiParams p{1.0, 4.0, 0.5};
    const auto lo = crb(p, 100.0, ctx);
    const auto hi = crb(p, 400.0, ctx);
    CHECK(hi.mean_tau_bound / lo.mean_tau_bound == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(lo.per_param_bounds.size() == 3);
}

TEST_CASE("mono crb equals the scalar information bound") {
    const auto irf = build_irf({}, axis);
    const FitContext ctx(axis, irf, ParamRanges::mono({0.2, 8.0}));
    const double a = 500.0, tau = 2.0;
    const auto mu = expected_counts(a, model_curve(MonoParams{tau}, irf, axis));
    const auto d = mu_gradient(MonoParams{tau}, a, irf, axis, 0);
    double info = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) info += d[k] * d[k] / (mu[k] + 1e-3);
    const auto r = crb(MonoParams{tau}, a, ctx);
    CHECK(r.mean_tau_bound == doctest::Approx(1.0 / std::sqrt(info)).epsilon(1e-9));
}

TEST_CASE("sketch fit needs a sketch context") {
    const auto irf = build_irf({}, axis);
    const FitContext ctx(axis, irf, ParamRanges::mono({0.2, 8.0}));
    CHECK_FALSE(ctx.has_sketch());
    CHECK_THROWS_AS(fit_sketch(std::vector<double>{0.25, 0.25, 0.25, 0.25}, ctx), Error);
}

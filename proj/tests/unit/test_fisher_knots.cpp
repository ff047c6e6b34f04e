#include <doctest.h>

#include <cmath>

#include "sketchflim/decay_model.hpp"
#include "sketchflim/fisher_knots.hpp"

using namespace sketchflim;

namespace {

// Analytic d/dtau of the max-normalized mono curve. The unnormalized curve is
// c_k = sum_j I_j exp(-u/tau) with derivative sum_j I_j exp(-u/tau) u / tau^2.
std::vector<double> analytic_mono_derivative(double tau, const std::vector<double>& irf, const TimeAxis& axis) {
    const int n = axis.n_bins();
    std::vector<double> c(n, 0.0), dc(n, 0.0);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j <= k; ++j) {
            const double u = axis.center(k) - axis.center(j);
            const double e = irf[j] * std::exp(-u / tau);
            c[k] += e;
            dc[k] += e * u / (tau * tau);
        }
    const int kmax = static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
    std::vector<double> d(n);
    for (int k = 0; k < n; ++k) d[k] = dc[k] / c[kmax] - c[k] * dc[kmax] / (c[kmax] * c[kmax]);
    return d;
}

const TimeAxis axis = TimeAxis::from_window(256, 10.0);

} // namespace

TEST_CASE("mu gradient matches the analytic derivative") {
    const auto irf = build_irf({IrfShape::gaussian, 0.1, 1.0}, axis);
    for (double tau : {0.3, 1.0, 4.0}) {
        const auto d = analytic_mono_derivative(tau, irf, axis);
        const auto fd = mu_gradient(MonoParams{tau}, 500.0, irf, axis, 0);
        double scale = 0.0, err = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            scale = std::max(scale, std::abs(500.0 * d[k]));
            err = std::max(err, std::abs(fd[k] - 500.0 * d[k]));
        }
        CHECK(err / scale < 1e-5);
    }
}

TEST_CASE("gradient falls back to one-sided steps at the boundary") {
    const auto irf = build_irf({}, axis);
    const auto g = mu_gradient(BiParams{0.5, 3.0, 1.0}, 100.0, irf, axis, 2);
    // d mu / d alpha1 = A (g1 - g2) up to the max normalization; both are finite.
    for (double v : g) CHECK(std::isfinite(v));
    CHECK_THROWS_AS(mu_gradient(MonoParams{1.0}, 100.0, irf, axis, 1), Error);
}

TEST_CASE("count-scale contribution equals the direct formula") {
    const auto irf = build_irf({}, axis);
    const double a = 500.0, eps = 1e-3, tau = 2.0;
    const auto d = analytic_mono_derivative(tau, irf, axis);
    const auto g = model_curve(MonoParams{tau}, irf, axis);
    const auto f = fisher_contribution(MonoParams{tau}, a, irf, axis, eps, FisherScale::counts);
    for (int k = 0; k < axis.n_bins(); k += 17) {
        const double ref = std::pow(a * d[k], 2) / (a * g[k] + eps);
        CHECK(f[k] == doctest::Approx(ref).epsilon(1e-4).scale(1e-12));
    }
}

TEST_CASE("epsilon-dominant limit is the squared sensitivity") {
    const auto irf = build_irf({}, axis);
    const double eps = 1e12;
    const auto f = fisher_contribution(MonoParams{1.5}, 10.0, irf, axis, eps, FisherScale::counts);
    const auto grad = mu_gradient(MonoParams{1.5}, 10.0, irf, axis, 0);
    for (int k = 0; k < axis.n_bins(); k += 13)
        CHECK(f[k] * eps == doctest::Approx(grad[k] * grad[k]).epsilon(1e-6).scale(1e-20));
}

TEST_CASE("single grid point density is the midpoint contribution") {
    const auto irf = build_irf({}, axis);
    const auto ranges = ParamRanges::mono({0.2, 8.0});
    DensityOptions opt;
    opt.n_grid = 1;
    opt.scale = FisherScale::counts;
    const auto dens = fisher_density_mono(ranges, 500.0, irf, axis, opt);
    const auto f = fisher_contribution(MonoParams{4.1}, 500.0, irf, axis, opt.epsilon, FisherScale::counts);
    for (int k = 0; k < axis.n_bins(); ++k) CHECK(dens.values[k] == doctest::Approx(f[k]).epsilon(1e-12));
}

TEST_CASE("shape-scale density is amplitude invariant up to epsilon") {
    const auto irf = build_irf({}, axis);
    const auto ranges = ParamRanges::bi({0.2, 2.0}, {2.0, 8.0}, {0.05, 0.95});
    DensityOptions opt;
    opt.n_grid = 50;
    const auto lo = fisher_cdf(fisher_density(ranges, 100.0, irf, axis, opt), axis);
    const auto hi = fisher_cdf(fisher_density(ranges, 1000.0, irf, axis, opt), axis);
    double diff = 0.0;
    for (int k = 0; k < axis.n_bins(); ++k) diff = std::max(diff, std::abs(lo[k] - hi[k]));
    CHECK(diff < 1e-4);
    const auto ka = allocate_knots(lo, axis, 4);
    const auto kb = allocate_knots(hi, axis, 4);
    for (int i = 0; i < 6; ++i) CHECK(ka.boundaries[i] == doctest::Approx(kb.boundaries[i]).epsilon(1e-3));
}

TEST_CASE("max aggregation dominates average") {
    const auto irf = build_irf({}, axis);
    const auto ranges = ParamRanges::mono({0.2, 8.0});
    DensityOptions opt;
    opt.n_grid = 40;
    const auto avg = fisher_density(ranges, 500.0, irf, axis, opt);
    opt.aggregation = Aggregation::max;
    const auto mx = fisher_density(ranges, 500.0, irf, axis, opt);
    for (int k = 0; k < axis.n_bins(); ++k) CHECK(mx.values[k] >= avg.values[k] * (1 - 1e-12));
}

TEST_CASE("bi density draws are seeded") {
    const auto irf = build_irf({}, axis);
    const auto ranges = ParamRanges::bi({0.2, 2.0}, {2.0, 8.0}, {0.05, 0.95});
    DensityOptions opt;
    opt.n_grid = 20;
    const auto a = fisher_density(ranges, 500.0, irf, axis, opt);
    const auto b = fisher_density(ranges, 500.0, irf, axis, opt);
    CHECK(a.values == b.values);
    opt.seed = 99;
    CHECK(fisher_density(ranges, 500.0, irf, axis, opt).values != a.values);
}

TEST_CASE("cdf ends at exactly one") {
    FisherDensity d;
    d.values.assign(256, 0.0);
    d.values[40] = 2.0;
    d.values[200] = 1.0;
    const auto c = fisher_cdf(d, axis);
    CHECK(c.back() == 1.0);
    CHECK(c[40] == doctest::Approx(2.0 / 3.0));
    d.values.assign(256, 0.0);
    CHECK_THROWS_AS(fisher_cdf(d, axis), Error);
}

TEST_CASE("flat density gives uniform-quantile knots") {
    // cdf_k = (k+1)/N; level q is reached at bin k = qN - 1, i.e. t = (qN - 1/2) dt.
    std::vector<double> cdf(256);
    for (int k = 0; k < 256; ++k) cdf[k] = (k + 1) / 256.0;
    const auto knots = allocate_knots(cdf, axis, 3);
    const double dt = axis.bin_width();
    REQUIRE(knots.boundaries.size() == 5);
    CHECK(knots.boundaries[0] == doctest::Approx(axis.first_center()));
    CHECK(knots.boundaries[1] == doctest::Approx(63.5 * dt));
    CHECK(knots.boundaries[2] == doctest::Approx(127.5 * dt));
    CHECK(knots.boundaries[3] == doctest::Approx(191.5 * dt));
    CHECK(knots.boundaries[4] == doctest::Approx(axis.last_center()));
}

TEST_CASE("concentrated density is repaired to a valid knot set") {
    std::vector<double> cdf(256, 0.0);
    for (int k = 100; k < 256; ++k) cdf[k] = 1.0;
    const auto knots = allocate_knots(cdf, axis, 8);
    CHECK_NOTHROW(validate(knots));
    for (std::size_t i = 1; i < knots.boundaries.size(); ++i)
        CHECK(knots.boundaries[i] - knots.boundaries[i - 1] >= axis.bin_width() * (1 - 1e-9));
}

TEST_CASE("uniform knots are evenly spaced") {
    const auto k = uniform_knots(axis, 4);
    const double step = (axis.last_center() - axis.first_center()) / 5;
    for (int i = 0; i < 6; ++i) CHECK(k.boundaries[i] == doctest::Approx(axis.first_center() + i * step));
}

TEST_CASE("infeasible allocations are reported") {
    const auto small = TimeAxis::from_window(8, 1.0);
    try {
        uniform_knots(small, 8);
        FAIL("expected allocation failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::allocation_infeasible);
    }
    CHECK_THROWS_AS(uniform_knots(axis, 1), Error);
    CHECK_THROWS_AS(validate(KnotSet{{0.0, 1.0, 1.0, 2.0}}), Error);
}

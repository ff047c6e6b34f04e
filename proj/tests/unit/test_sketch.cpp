#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "sketchflim/decay_model.hpp"
#include "sketchflim/estimators.hpp"
#include "sketchflim/sketch.hpp"

using namespace sketchflim;

namespace {

// Triangle basis from its definition: rises on [xi_i, xi_{i+1}], falls on [xi_{i+1}, xi_{i+2}].
double hat(const KnotSet& k, int i, double t) {
    const auto& b = k.boundaries;
    t = std::clamp(t, b.front(), b.back());
    if (t >= b[i] && t <= b[i + 1]) return (t - b[i]) / (b[i + 1] - b[i]);
    if (t > b[i + 1] && t <= b[i + 2]) return (b[i + 2] - t) / (b[i + 2] - b[i + 1]);
    return 0.0;
}

const TimeAxis axis = TimeAxis::from_window(256, 10.0);
const KnotSet knots{{0.02, 0.9, 1.4, 3.0, 6.5, 9.98}};

} // namespace

TEST_CASE("basis matches the triangle definition") {
    const SplineBasis basis(knots);
    CHECK(basis.m() == 4);
    for (double t = -0.5; t < 10.5; t += 0.0137) {
        const auto v = basis.eval(t);
        for (int i = 0; i < 4; ++i) CHECK(v[i] == doctest::Approx(hat(knots, i, t)).epsilon(1e-12).scale(1e-15));
    }
    const auto peak = basis.eval(1.4);
    CHECK(peak[1] == doctest::Approx(1.0));
    CHECK(peak[0] == doctest::Approx(0.0));
}

TEST_CASE("basis sums to one between the first and last peak") {
    const SplineBasis basis(knots);
    for (double t = 0.9; t <= 6.5; t += 0.05) {
        const auto v = basis.eval(t);
        double s = 0.0;
        for (double x : v) s += x;
        CHECK(s == doctest::Approx(1.0));
    }
}

TEST_CASE("sketch matrix is the basis sampled at bin centers") {
    const SplineBasis basis(knots);
    const auto w = sketch_matrix(basis, axis);
    CHECK(w.rows() == 4);
    CHECK(w.cols() == 256);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 256; ++k) CHECK(w(i, k) == doctest::Approx(hat(knots, i, axis.center(k))).scale(1e-15));
}

TEST_CASE("timestamp sketch equals the matrix product on bin-center streams") {
    const SplineBasis basis(knots);
    const auto w = sketch_matrix(basis, axis);
    std::mt19937_64 rng(3);
    std::vector<std::uint64_t> counts(256);
    for (auto& c : counts) c = rng() % 20;
    const Histogram h(axis, counts);
    const auto a = sketch_from_timestamps(basis, histogram_to_timestamps(h, TimestampMode::bin_center));
    const auto b = sketch_from_histogram(w, h);
    CHECK(a.photon_count == h.total());
    CHECK(b.photon_count == h.total());
    for (int i = 0; i < 4; ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
}

TEST_CASE("normalization") {
    const auto s = normalize_sketch(std::vector<double>{1.0, 3.0, 0.0, 4.0});
    CHECK(s[1] == doctest::Approx(0.375));
    CHECK_THROWS_AS(normalize_sketch(std::vector<double>{0.0, 0.0}), Error);
}

TEST_CASE("q8.8 conversion rounds and saturates") {
    CHECK(to_q8_8(1.0) == 256);
    CHECK(to_q8_8(0.5) == 128);
    CHECK(to_q8_8(1.0 / 512) == 1);
    CHECK(to_q8_8(0.4 / 256) == 0);
    CHECK(to_q8_8(-1.0) == 0);
    CHECK(to_q8_8(1000.0) == 65535);
}

TEST_CASE("lut cells and entries") {
    const SplineBasis basis(knots);
    const auto lut = build_fxp_lut(basis, 32, 10.0);
    CHECK(lut.table.size() == 4 * 32);
    CHECK(lut.cell_of(0.0) == 0);
    CHECK(lut.cell_of(10.0 / 32 - 1e-9) == 0);
    CHECK(lut.cell_of(10.0 / 32) == 1);
    CHECK(lut.cell_of(-3.0) == 0);
    CHECK(lut.cell_of(50.0) == 31);
    for (int i = 0; i < 4; ++i)
        for (int d = 0; d < 32; ++d)
            CHECK(lut.at(i, d) == static_cast<std::uint16_t>(std::lround(256.0 * hat(knots, i, (d + 0.5) * 10.0 / 32))));
    CHECK(is_standard_lut_depth(128));
    CHECK_FALSE(is_standard_lut_depth(100));
}

TEST_CASE("full-depth lut projection is the rounded basis") {
    const SplineBasis basis(knots);
    const auto lut = build_fxp_lut(basis, 256, 10.0);
    const auto wl = lut_sketch_matrix(lut, axis);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 256; ++k)
            CHECK(wl(i, k) == std::round(256.0 * hat(knots, i, axis.center(k))) / 256.0);
}

TEST_CASE("fixed-point accumulation is order free and batch exact") {
    const SplineBasis basis(knots);
    const auto lut = build_fxp_lut(basis, 64, 10.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    TimestampStream s;
    for (int i = 0; i < 5000; ++i) s.times.push_back(u(rng));
    const auto a = fxp_sketch_from_timestamps(lut, s);
    std::shuffle(s.times.begin(), s.times.end(), rng);
    const auto b = fxp_sketch_from_timestamps(lut, s);
    CHECK(a.values == b.values);

    FxpAccumulator one(lut), batched(lut), left(lut), right(lut);
    for (int i = 0; i < 7; ++i) one.add(3.3);
    batched.add(3.3, 7);
    CHECK(std::equal(one.raw().begin(), one.raw().end(), batched.raw().begin()));
    for (std::size_t i = 0; i < s.size(); ++i) (i % 2 ? left : right).add(s.times[i]);
    left.merge(right);
    CHECK(left.to_sketch().values == a.values);
    CHECK(left.photon_count() == 5000);
}

TEST_CASE("fixed-point sketch equals the lut projection of the histogram") {
    const SplineBasis basis(knots);
    const auto lut = build_fxp_lut(basis, 64, 10.0);
    std::vector<std::uint64_t> counts(256);
    std::mt19937_64 rng(1);
    for (auto& c : counts) c = rng() % 9;
    const Histogram h(axis, counts);
    const auto fx = fxp_sketch_from_timestamps(lut, histogram_to_timestamps(h, TimestampMode::bin_center));
    const auto mx = sketch_from_histogram(lut_sketch_matrix(lut, axis), h);
    for (int i = 0; i < 4; ++i) CHECK(fx.values[i] == doctest::Approx(mx.values[i]).epsilon(1e-12));
}

TEST_CASE("discrete phasor of a geometric decay has a closed form") {
    // sum_k r^k e^{i theta (k + 1/2)} / sum_k r^k = e^{i theta / 2} (1 - r) / (1 - r e^{i theta}).
    const int n = 256;
    const double tau = 2.0, dt = axis.bin_width();
    const double r = std::exp(-dt / tau);
    std::vector<double> w(n);
    for (int k = 0; k < n; ++k) w[k] = std::pow(r, k);
    const auto p = phasor_of_weights(w, axis);
    const double theta = 2.0 * std::numbers::pi / n;
    const std::complex<double> z = std::polar(1.0, theta / 2) * (1.0 - r) / (1.0 - r * std::polar(1.0, theta));
    CHECK(p.g == doctest::Approx(z.real()).epsilon(1e-10));
    CHECK(p.s == doctest::Approx(z.imag()).epsilon(1e-10));
}

TEST_CASE("analytic phasor and its lifetime readout") {
    const double omega = 2.0 * std::numbers::pi / 10.0;
    for (double tau : {0.2, 1.0, 8.0}) {
        const auto p = analytic_mono_phasor(tau, 10.0);
        const double x = omega * tau;
        CHECK(p.g == doctest::Approx(1.0 / (1.0 + x * x)));
        CHECK(p.s == doctest::Approx(x / (1.0 + x * x)));
        CHECK(phasor_mono_lifetime(p, 10.0) == doctest::Approx(tau));
        CHECK(std::abs(semicircle_residual(p)) < 1e-12);
    }
}

TEST_CASE("timestamp and histogram phasors agree bit for bit") {
    std::vector<std::uint64_t> counts(256);
    std::mt19937_64 rng(21);
    for (auto& c : counts) c = rng() % 50;
    const Histogram h(axis, counts);
    auto ts = histogram_to_timestamps(h, TimestampMode::bin_center);
    const auto a = phasor_from_histogram(h);
    const auto b = phasor_from_timestamps(ts, 10.0);
    CHECK(a.g == b.g);
    CHECK(a.s == b.s);
    std::shuffle(ts.times.begin(), ts.times.end(), rng);
    const auto c = phasor_from_timestamps(ts, 10.0);
    CHECK(c.g == b.g);
    CHECK(c.s == b.s);
}

TEST_CASE("single photon lies on the unit circle") {
    const auto p = phasor_from_timestamps(TimestampStream{{2.7}}, 10.0);
    CHECK(p.g * p.g + p.s * p.s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::atan2(p.s, p.g) == doctest::Approx(2.0 * std::numbers::pi * 0.27));
    CHECK_THROWS_AS(phasor_from_timestamps(TimestampStream{}, 10.0), Error);
}

TEST_CASE("irf correction is complex division") {
    const PhasorPoint s{0.3, 0.4, 10, 1}, i{0.8, 0.1, 10, 1};
    const auto q = std::complex<double>(0.3, 0.4) / std::complex<double>(0.8, 0.1);
    const auto c = irf_correct_phasor(s, i);
    CHECK(c.g == doctest::Approx(q.real()));
    CHECK(c.s == doctest::Approx(q.imag()));
    try {
        irf_correct_phasor(s, PhasorPoint{0.0, 0.0, 1, 1});
        FAIL("expected degenerate IRF");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_irf);
    }
}

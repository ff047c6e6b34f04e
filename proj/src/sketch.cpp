#include "sketchflim/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace sketchflim {

SplineBasis::SplineBasis(KnotSet knots) : knots_(std::move(knots)) { validate(knots_); }

void SplineBasis::accumulate_weighted(double t, double weight, std::span<double> acc) const {
    const auto& xi = knots_.boundaries;
    t = std::clamp(t, xi.front(), xi.back());
    // Segment s holds xi_s <= t < xi_{s+1}.
    const auto s = static_cast<int>(std::upper_bound(xi.begin(), xi.end(), t) - xi.begin()) - 1;
    const int m = this->m();
    if (s > m) return; // t == xi_{M+1}
    const double lo = xi[static_cast<std::size_t>(s)];
    const double hi = xi[static_cast<std::size_t>(s) + 1];
    const double len = hi - lo;
    if (s < m) acc[static_cast<std::size_t>(s)] += weight * ((t - lo) / len);
    if (s >= 1) acc[static_cast<std::size_t>(s) - 1] += weight * ((hi - t) / len);
}

void SplineBasis::eval_into(double t, std::span<double> out) const {
    require(out.size() == static_cast<std::size_t>(m()), ErrorKind::invalid_input, "basis output has wrong size");
    std::fill(out.begin(), out.end(), 0.0);
    accumulate(t, out);
}

std::vector<double> SplineBasis::eval(double t) const {
    std::vector<double> out(static_cast<std::size_t>(m()), 0.0);
    accumulate(t, out);
    return out;
}

SketchVector sketch_from_timestamps(const SplineBasis& basis, const TimestampStream& stream) {
    SketchVector s;
    s.values.assign(static_cast<std::size_t>(basis.m()), 0.0);
    for (double t : stream.times) basis.accumulate(t, s.values);
    s.photon_count = stream.size();
    return s;
}

SketchMatrix::SketchMatrix(const SplineBasis& basis, const TimeAxis& axis)
    : m_(basis.m()), n_(axis.n_bins()), w_(static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_), 0.0) {
    std::vector<double> column(static_cast<std::size_t>(m_));
    for (int k = 0; k < n_; ++k) {
        basis.eval_into(axis.center(k), column);
        for (int i = 0; i < m_; ++i) w_[static_cast<std::size_t>(i * n_ + k)] = column[static_cast<std::size_t>(i)];
    }
}

SketchMatrix::SketchMatrix(int rows, int cols, std::vector<double> values)
    : m_(rows), n_(cols), w_(std::move(values)) {
    require(rows >= 1 && cols >= 1 && w_.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
            ErrorKind::invalid_input, "sketch matrix values do not match its shape");
}

void SketchMatrix::apply_into(std::span<const double> x, std::span<double> out) const {
    require(x.size() == static_cast<std::size_t>(n_) && out.size() == static_cast<std::size_t>(m_),
            ErrorKind::invalid_input, "sketch matrix dimension mismatch");
    for (int i = 0; i < m_; ++i) {
        const double* row = w_.data() + static_cast<std::size_t>(i * n_);
        double acc = 0.0;
        for (int k = 0; k < n_; ++k) acc += row[k] * x[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = acc;
    }
}

std::vector<double> SketchMatrix::apply(std::span<const double> x) const {
    std::vector<double> out(static_cast<std::size_t>(m_));
    apply_into(x, out);
    return out;
}

SketchVector sketch_from_histogram(const SketchMatrix& w, const Histogram& h) {
    require(h.counts.size() == static_cast<std::size_t>(w.cols()), ErrorKind::invalid_input,
            "histogram length does not match the sketch matrix");
    std::vector<double> y(h.counts.begin(), h.counts.end());
    return SketchVector{w.apply(y), h.total()};
}

std::vector<double> normalize_sketch(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    require(sum > 0.0 && std::isfinite(sum), ErrorKind::invalid_input, "cannot normalize an empty sketch");
    std::vector<double> out(values.begin(), values.end());
    for (auto& v : out) v /= sum;
    return out;
}

int FxpLut::cell_of(double t) const {
    if (!(t > 0.0)) return 0;
    if (t >= window) return depth - 1;
    const auto d = static_cast<int>(std::floor(t * depth / window));
    return std::min(d, depth - 1);
}

std::uint16_t to_q8_8(double value) {
    const double q = std::round(value * fxp_scale); // half away from zero
    return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
}

bool is_standard_lut_depth(int depth) {
    return depth == 16 || depth == 32 || depth == 64 || depth == 128 || depth == 256;
}

FxpLut build_fxp_lut(const SplineBasis& basis, int depth, double window) {
    require(depth >= 1, ErrorKind::invalid_input, "LUT depth must be positive");
    require(window > 0.0, ErrorKind::invalid_input, "LUT window must be positive");
    FxpLut lut;
    lut.m = basis.m();
    lut.depth = depth;
    lut.window = window;
    lut.table.assign(static_cast<std::size_t>(lut.m) * static_cast<std::size_t>(depth), 0);
    std::vector<double> phi(static_cast<std::size_t>(lut.m));
    for (int d = 0; d < depth; ++d) {
        basis.eval_into((d + 0.5) * window / depth, phi);
        for (int i = 0; i < lut.m; ++i)
            lut.table[static_cast<std::size_t>(i * depth + d)] = to_q8_8(phi[static_cast<std::size_t>(i)]);
    }
    return lut;
}

FxpAccumulator::FxpAccumulator(const FxpLut& lut) : lut_(&lut), acc_(static_cast<std::size_t>(lut.m), 0) {}

void FxpAccumulator::add(double t, std::uint64_t count) {
    if (count == 0) return;
    const int cell = lut_->cell_of(t);
    constexpr auto limit = std::numeric_limits<std::uint64_t>::max();
    for (int i = 0; i < lut_->m; ++i) {
        const std::uint64_t v = lut_->at(i, cell);
        auto& a = acc_[static_cast<std::size_t>(i)];
        if (v != 0 && (count > limit / v || a > limit - v * count))
            fail(ErrorKind::overflow, "fixed-point sketch accumulator overflow");
        a += v * count;
    }
    photons_ += count;
}

void FxpAccumulator::merge(const FxpAccumulator& other) {
    require(other.acc_.size() == acc_.size(), ErrorKind::invalid_input, "accumulator size mismatch");
    constexpr auto limit = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 0; i < acc_.size(); ++i) {
        if (acc_[i] > limit - other.acc_[i]) fail(ErrorKind::overflow, "fixed-point sketch accumulator overflow");
        acc_[i] += other.acc_[i];
    }
    photons_ += other.photons_;
}

SketchVector FxpAccumulator::to_sketch() const {
    SketchVector s;
    s.values.resize(acc_.size());
    for (std::size_t i = 0; i < acc_.size(); ++i) s.values[i] = static_cast<double>(acc_[i]) / fxp_scale;
    s.photon_count = photons_;
    return s;
}

SketchVector fxp_sketch_from_timestamps(const FxpLut& lut, const TimestampStream& stream) {
    FxpAccumulator acc(lut);
    for (double t : stream.times) acc.add(t);
    return acc.to_sketch();
}

SketchMatrix lut_sketch_matrix(const FxpLut& lut, const TimeAxis& axis) {
    const int n = axis.n_bins();
    std::vector<double> w(static_cast<std::size_t>(lut.m) * static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const int cell = lut.cell_of(axis.center(k));
        for (int i = 0; i < lut.m; ++i) w[static_cast<std::size_t>(i * n + k)] = lut.at(i, cell) / fxp_scale;
    }
    return SketchMatrix(lut.m, n, std::move(w));
}

namespace {

__extension__ using i128 = __int128;

constexpr double phasor_unit = 1152921504606846976.0; // 2^60

i128 to_fixed(double v) { return static_cast<i128>(std::llround(v * phasor_unit)); }

PhasorPoint finish_phasor(i128 cos_sum, i128 sin_sum, std::uint64_t photons, int harmonic) {
    const double p = static_cast<double>(photons);
    return PhasorPoint{static_cast<double>(cos_sum) / phasor_unit / p, static_cast<double>(sin_sum) / phasor_unit / p,
                       photons, harmonic};
}

double angular(double window, int harmonic) { return 2.0 * std::numbers::pi * harmonic / window; }

} // namespace

PhasorPoint phasor_from_timestamps(const TimestampStream& stream, double window, int harmonic) {
    require(!stream.empty(), ErrorKind::invalid_input, "phasor of an empty stream");
    require(harmonic >= 1 && window > 0.0, ErrorKind::invalid_input, "phasor needs m >= 1 and T > 0");
    const double w = angular(window, harmonic);
    i128 c = 0;
    i128 s = 0;
    for (double t : stream.times) {
        c += to_fixed(std::cos(w * t));
        s += to_fixed(std::sin(w * t));
    }
    return finish_phasor(c, s, stream.size(), harmonic);
}

PhasorPoint phasor_from_histogram(const Histogram& h, int harmonic) {
    require(harmonic >= 1, ErrorKind::invalid_input, "phasor needs m >= 1");
    const std::uint64_t photons = h.total();
    require(photons > 0, ErrorKind::invalid_input, "phasor of an empty histogram");
    const double w = angular(h.axis.window(), harmonic);
    i128 c = 0;
    i128 s = 0;
    for (int k = 0; k < h.axis.n_bins(); ++k) {
        const auto n = static_cast<i128>(h.counts[static_cast<std::size_t>(k)]);
        if (n == 0) continue;
        const double t = h.axis.center(k);
        c += n * to_fixed(std::cos(w * t));
        s += n * to_fixed(std::sin(w * t));
    }
    return finish_phasor(c, s, photons, harmonic);
}

PhasorPoint irf_correct_phasor(const PhasorPoint& sample, const PhasorPoint& irf) {
    const std::complex<double> zi(irf.g, irf.s);
    if (std::abs(zi) <= 1e-9) fail(ErrorKind::degenerate_irf, "IRF phasor magnitude is too small");
    const auto z = std::complex<double>(sample.g, sample.s) / zi;
    return PhasorPoint{z.real(), z.imag(), sample.photon_count, sample.harmonic};
}

PhasorPoint phasor_of_weights(std::span<const double> weights, const TimeAxis& axis, int harmonic) {
    require(weights.size() == static_cast<std::size_t>(axis.n_bins()), ErrorKind::invalid_input,
            "weight vector does not match the axis");
    const double w = angular(axis.window(), harmonic);
    double c = 0.0, s = 0.0, total = 0.0;
    for (int k = 0; k < axis.n_bins(); ++k) {
        const double v = weights[static_cast<std::size_t>(k)];
        c += v * std::cos(w * axis.center(k));
        s += v * std::sin(w * axis.center(k));
        total += v;
    }
    require(total > 0.0, ErrorKind::invalid_input, "phasor of zero weights");
    return PhasorPoint{c / total, s / total, 0, harmonic};
}

PhasorPoint analytic_mono_phasor(double tau, double window, int harmonic) {
    const double u = angular(window, harmonic) * tau;
    const double d = 1.0 + u * u;
    return PhasorPoint{1.0 / d, u / d, 0, harmonic};
}

double semicircle_residual(const PhasorPoint& p) {
    const double x = p.g - 0.5;
    return x * x + p.s * p.s - 0.25;
}

} // namespace sketchflim

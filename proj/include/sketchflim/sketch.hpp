#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchflim/fisher_knots.hpp"
#include "sketchflim/types.hpp"

namespace sketchflim {

/// Linear B-spline (triangle) basis on a knot set. Basis i rises on
/// [xi_i, xi_{i+1}) and falls on [xi_{i+1}, xi_{i+2}); inputs are clamped to
/// [xi_0, xi_{M+1}].
class SplineBasis {
public:
    explicit SplineBasis(KnotSet knots);

    int m() const { return knots_.m(); }
    const KnotSet& knots() const { return knots_; }

    std::vector<double> eval(double t) const;
    void eval_into(double t, std::span<double> out) const;

    /// Adds the (at most two) nonzero basis values at t into acc.
    void accumulate(double t, std::span<double> acc) const {
        accumulate_weighted(t, 1.0, acc);
    }
    void accumulate_weighted(double t, double weight, std::span<double> acc) const;

private:
    KnotSet knots_;
};

struct SketchVector {
    std::vector<double> values;
    std::uint64_t photon_count = 0;
};

SketchVector sketch_from_timestamps(const SplineBasis& basis, const TimestampStream& stream);

/// Dense M x N projection with W(i, k) = phi_i(t_k).
class SketchMatrix {
public:
    SketchMatrix(const SplineBasis& basis, const TimeAxis& axis);
    /// Row-major M x N values.
    SketchMatrix(int rows, int cols, std::vector<double> values);

    int rows() const { return m_; }
    int cols() const { return n_; }
    double operator()(int i, int k) const { return w_[static_cast<std::size_t>(i * n_ + k)]; }

    std::vector<double> apply(std::span<const double> x) const;
    void apply_into(std::span<const double> x, std::span<double> out) const;

private:
    int m_;
    int n_;
    std::vector<double> w_;
};

inline SketchMatrix sketch_matrix(const SplineBasis& basis, const TimeAxis& axis) { return {basis, axis}; }

SketchVector sketch_from_histogram(const SketchMatrix& w, const Histogram& h);

/// Unit-L1 normalization.
std::vector<double> normalize_sketch(std::span<const double> values);
inline std::vector<double> normalize_sketch(const SketchVector& s) { return normalize_sketch(s.values); }

/// Q8.8 table of basis values sampled at the D cell centers (d + 1/2) T / D.
struct FxpLut {
    int m = 0;
    int depth = 0;
    double window = 0.0;
    std::vector<std::uint16_t> table; // m x depth, basis-major

    std::uint16_t at(int basis, int cell) const { return table[static_cast<std::size_t>(basis * depth + cell)]; }
    /// Cell addressed by a timestamp: floor(t D / T), clamped into [0, D).
    int cell_of(double t) const;
};

constexpr double fxp_scale = 256.0;

std::uint16_t to_q8_8(double value);

FxpLut build_fxp_lut(const SplineBasis& basis, int depth, double window);

bool is_standard_lut_depth(int depth);

/// Integer sketch accumulator mirroring the firmware adders.
class FxpAccumulator {
public:
    explicit FxpAccumulator(const FxpLut& lut);

    void add(double t) { add(t, 1); }
    /// Adds `count` photons at t; identical to calling add(t) count times.
    void add(double t, std::uint64_t count);
    void merge(const FxpAccumulator& other);

    std::span<const std::uint64_t> raw() const { return acc_; }
    std::uint64_t photon_count() const { return photons_; }
    SketchVector to_sketch() const;

private:
    const FxpLut* lut_;
    std::vector<std::uint64_t> acc_;
    std::uint64_t photons_ = 0;
};

SketchVector fxp_sketch_from_timestamps(const FxpLut& lut, const TimestampStream& stream);

/// Projection a LUT applies to photons at the bin centers of `axis`:
/// W(i, k) = table(i, cell_of(t_k)) / 256.
SketchMatrix lut_sketch_matrix(const FxpLut& lut, const TimeAxis& axis);

struct PhasorPoint {
    double g = 0.0;
    double s = 0.0;
    std::uint64_t photon_count = 0;
    int harmonic = 1;
};

/// g = mean cos(2 pi m t / T), s = mean sin(2 pi m t / T).
///
/// Both phasor paths sum per-photon terms in 128-bit fixed point, so the
/// result does not depend on photon order and the histogram path equals the
/// timestamp path on bin-center streams bit for bit.
PhasorPoint phasor_from_timestamps(const TimestampStream& stream, double window, int harmonic = 1);
PhasorPoint phasor_from_histogram(const Histogram& h, int harmonic = 1);

/// Divides the sample phasor by the IRF phasor as complex numbers.
PhasorPoint irf_correct_phasor(const PhasorPoint& sample, const PhasorPoint& irf);

/// Phasor of the IRF itself, computed from its bin weights.
PhasorPoint phasor_of_weights(std::span<const double> weights, const TimeAxis& axis, int harmonic = 1);

/// Continuous-time mono-exponential phasor at angular frequency 2 pi m / T.
PhasorPoint analytic_mono_phasor(double tau, double window, int harmonic = 1);

/// (g - 1/2)^2 + s^2 - 1/4; zero on the universal semicircle.
double semicircle_residual(const PhasorPoint& p);

} // namespace sketchflim

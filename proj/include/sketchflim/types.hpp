#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sketchflim/error.hpp"

namespace sketchflim {

/// Uniform discretization of the TCSPC acquisition window.
///
/// Bins are indexed from 0 here; bin k covers [k*dt, (k+1)*dt) and its center
/// sits at (k + 1/2)*dt. Times are in nanoseconds.
class TimeAxis {
public:
    static constexpr int min_bins = 8;

    TimeAxis(int n_bins, double bin_width);

    /// Axis of `n_bins` bins spanning `window` ns.
    static TimeAxis from_window(int n_bins, double window) { return {n_bins, window / n_bins}; }

    int n_bins() const { return n_bins_; }
    double bin_width() const { return bin_width_; }
    double window() const { return bin_width_ * n_bins_; }
    double center(int k) const { return (k + 0.5) * bin_width_; }
    double first_center() const { return center(0); }
    double last_center() const { return center(n_bins_ - 1); }
    std::vector<double> centers() const;

    /// Bin containing t, clamped to [0, n_bins).
    int bin_of(double t) const;

    friend bool operator==(const TimeAxis&, const TimeAxis&) = default;

private:
    int n_bins_;
    double bin_width_;
};

enum class IrfShape { gaussian };

struct IrfSpec {
    IrfShape shape = IrfShape::gaussian;
    double fwhm = 0.1;      // ns
    double peak_time = 1.0; // ns
};

enum class ModelKind { mono, bi };

struct MonoParams {
    double tau = 1.0;
};

/// Bi-exponential parameters; alpha1 weights the tau1 component.
struct BiParams {
    double tau1 = 1.0;
    double tau2 = 4.0;
    double alpha1 = 0.5;
};

using DecayParams = std::variant<MonoParams, BiParams>;

ModelKind kind_of(const DecayParams& p);
int param_count(ModelKind kind);
std::vector<double> to_vector(const DecayParams& p);
DecayParams from_vector(ModelKind kind, std::span<const double> v);
void validate(const DecayParams& p);

/// Amplitude-weighted mean lifetime; tau for mono decays.
double mean_lifetime(const DecayParams& p);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

/// Prior parameter box. Only the intervals of `kind` are meaningful.
struct ParamRanges {
    ModelKind kind = ModelKind::mono;
    Interval tau{0.2, 8.0};
    Interval tau1{0.2, 2.0};
    Interval tau2{2.0, 8.0};
    Interval alpha1{0.05, 0.95};

    static ParamRanges mono(Interval tau);
    static ParamRanges bi(Interval tau1, Interval tau2, Interval alpha1);

    /// Boxes in parameter-vector order: (tau) or (tau1, tau2, alpha1).
    std::vector<Interval> boxes() const;
    DecayParams midpoint() const;
    bool contains(const DecayParams& p) const;
};

void validate(const ParamRanges& r);

struct Histogram {
    TimeAxis axis;
    std::vector<std::uint64_t> counts;

    explicit Histogram(TimeAxis a) : axis(a), counts(static_cast<std::size_t>(a.n_bins()), 0) {}
    Histogram(TimeAxis a, std::vector<std::uint64_t> c);

    std::uint64_t total() const;
};

/// Photon arrival times in ns, unordered, each within [0, window).
struct TimestampStream {
    std::vector<double> times;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

} // namespace sketchflim

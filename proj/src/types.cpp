#include "sketchflim/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sketchflim {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::config: return "config";
    case ErrorKind::numeric_degenerate: return "numeric-degenerate";
    case ErrorKind::non_identifiable: return "non-identifiable";
    case ErrorKind::singular_information: return "singular-information";
    case ErrorKind::allocation_infeasible: return "allocation-infeasible";
    case ErrorKind::degenerate_irf: return "degenerate-irf";
    case ErrorKind::outside_semicircle: return "outside-semicircle";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

TimeAxis::TimeAxis(int n_bins, double bin_width) : n_bins_(n_bins), bin_width_(bin_width) {
    require(n_bins >= min_bins, ErrorKind::invalid_input,
            "time axis needs at least " + std::to_string(min_bins) + " bins, got " + std::to_string(n_bins));
    require(bin_width > 0.0 && std::isfinite(bin_width), ErrorKind::invalid_input,
            "bin width must be positive");
}

std::vector<double> TimeAxis::centers() const {
    std::vector<double> c(static_cast<std::size_t>(n_bins_));
    for (int k = 0; k < n_bins_; ++k) c[static_cast<std::size_t>(k)] = center(k);
    return c;
}

int TimeAxis::bin_of(double t) const {
    const double idx = std::floor(t / bin_width_);
    if (!(idx >= 0.0)) return 0;
    if (idx >= n_bins_) return n_bins_ - 1;
    return static_cast<int>(idx);
}

ModelKind kind_of(const DecayParams& p) {
    return std::holds_alternative<MonoParams>(p) ? ModelKind::mono : ModelKind::bi;
}

int param_count(ModelKind kind) { return kind == ModelKind::mono ? 1 : 3; }

std::vector<double> to_vector(const DecayParams& p) {
    if (const auto* m = std::get_if<MonoParams>(&p)) return {m->tau};
    const auto& b = std::get<BiParams>(p);
    return {b.tau1, b.tau2, b.alpha1};
}

DecayParams from_vector(ModelKind kind, std::span<const double> v) {
    require(static_cast<int>(v.size()) == param_count(kind), ErrorKind::invalid_input,
            "parameter vector has wrong length");
    if (kind == ModelKind::mono) return MonoParams{v[0]};
    return BiParams{v[0], v[1], v[2]};
}

void validate(const DecayParams& p) {
    if (const auto* m = std::get_if<MonoParams>(&p)) {
        require(m->tau > 0.0, ErrorKind::invalid_input, "lifetime must be positive");
        return;
    }
    const auto& b = std::get<BiParams>(p);
    require(b.tau1 > 0.0 && b.tau2 > 0.0, ErrorKind::invalid_input, "lifetimes must be positive");
    require(b.tau1 < b.tau2, ErrorKind::invalid_input, "bi-exponential requires tau1 < tau2");
    require(b.alpha1 >= 0.0 && b.alpha1 <= 1.0, ErrorKind::invalid_input, "alpha1 must lie in [0, 1]");
}

double mean_lifetime(const DecayParams& p) {
    if (const auto* m = std::get_if<MonoParams>(&p)) return m->tau;
    const auto& b = std::get<BiParams>(p);
    return b.alpha1 * b.tau1 + (1.0 - b.alpha1) * b.tau2;
}

ParamRanges ParamRanges::mono(Interval tau) {
    ParamRanges r;
    r.kind = ModelKind::mono;
    r.tau = tau;
    return r;
}

ParamRanges ParamRanges::bi(Interval tau1, Interval tau2, Interval alpha1) {
    ParamRanges r;
    r.kind = ModelKind::bi;
    r.tau1 = tau1;
    r.tau2 = tau2;
    r.alpha1 = alpha1;
    return r;
}

std::vector<Interval> ParamRanges::boxes() const {
    if (kind == ModelKind::mono) return {tau};
    return {tau1, tau2, alpha1};
}

DecayParams ParamRanges::midpoint() const {
    if (kind == ModelKind::mono) return MonoParams{tau.mid()};
    return BiParams{tau1.mid(), tau2.mid(), alpha1.mid()};
}

bool ParamRanges::contains(const DecayParams& p) const {
    if (kind_of(p) != kind) return false;
    const auto v = to_vector(p);
    const auto b = boxes();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!b[i].contains(v[i])) return false;
    return true;
}

void validate(const ParamRanges& r) {
    for (const auto& box : r.boxes())
        require(box.lo < box.hi, ErrorKind::config, "parameter range must satisfy min < max");
    if (r.kind == ModelKind::mono) {
        require(r.tau.lo > 0.0, ErrorKind::config, "lifetime range must be positive");
        return;
    }
    require(r.tau1.lo > 0.0 && r.tau2.lo > 0.0, ErrorKind::config, "lifetime ranges must be positive");
    require(r.tau1.hi <= r.tau2.lo, ErrorKind::config,
            "tau1 range overlaps tau2 range (tau1_max must not exceed tau2_min)");
    require(r.alpha1.lo >= 0.0 && r.alpha1.hi <= 1.0, ErrorKind::config, "alpha1 range must lie in [0, 1]");
}

Histogram::Histogram(TimeAxis a, std::vector<std::uint64_t> c) : axis(a), counts(std::move(c)) {
    require(counts.size() == static_cast<std::size_t>(axis.n_bins()), ErrorKind::invalid_input,
            "histogram length does not match the time axis");
}

std::uint64_t Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

} // namespace sketchflim

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sketchflim/config.hpp"
#include "sketchflim/experiment.hpp"
#include "sketchflim/io.hpp"

namespace py = pybind11;
using namespace sketchflim;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using CountArray = py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const DoubleArray& a) {
    require(a.ndim() == 1, ErrorKind::invalid_input, "expected a 1-D array");
    return {a.data(), a.data() + a.shape(0)};
}

Histogram to_histogram(const CountArray& counts, const TimeAxis& axis) {
    require(counts.ndim() == 1, ErrorKind::invalid_input, "expected a 1-D count array");
    return Histogram(axis, std::vector<std::uint64_t>(counts.data(), counts.data() + counts.shape(0)));
}

py::array_t<double> from_vec(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<std::uint64_t> counts_of(const Histogram& h) {
    return py::array_t<std::uint64_t>(static_cast<py::ssize_t>(h.counts.size()), h.counts.data());
}

py::dict trials_to_dict(const std::vector<Trial>& trials, const TimeAxis& axis) {
    const auto n = static_cast<py::ssize_t>(trials.size());
    py::array_t<std::uint64_t> counts({n, static_cast<py::ssize_t>(axis.n_bins())});
    auto* dst = counts.mutable_data();
    py::list params;
    for (const auto& t : trials) {
        dst = std::copy(t.histogram.counts.begin(), t.histogram.counts.end(), dst);
        params.append(py::cast(t.params));
    }
    py::dict d;
    d["counts"] = counts;
    d["params"] = params;
    return d;
}

} // namespace

PYBIND11_MODULE(_sketchflim, m) {
    m.doc() = "Fisher-knot spline sketching for TCSPC fluorescence lifetime estimation";

    static py::exception<Error> error(m, "SketchflimError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    py::class_<TimeAxis>(m, "TimeAxis")
        .def(py::init<int, double>(), py::arg("n_bins"), py::arg("bin_width"))
        .def_static("from_window", &TimeAxis::from_window, py::arg("n_bins"), py::arg("window"))
        .def_property_readonly("n_bins", &TimeAxis::n_bins)
        .def_property_readonly("bin_width", &TimeAxis::bin_width)
        .def_property_readonly("window", &TimeAxis::window)
        .def("centers", [](const TimeAxis& a) { return from_vec(a.centers()); });

    py::class_<IrfSpec>(m, "IrfSpec")
        .def(py::init([](double fwhm, double peak_time) { return IrfSpec{IrfShape::gaussian, fwhm, peak_time}; }),
             py::arg("fwhm") = 0.1, py::arg("peak_time") = 1.0)
        .def_readwrite("fwhm", &IrfSpec::fwhm)
        .def_readwrite("peak_time", &IrfSpec::peak_time);

    py::class_<MonoParams>(m, "MonoParams")
        .def(py::init([](double tau) { return MonoParams{tau}; }), py::arg("tau"))
        .def_readwrite("tau", &MonoParams::tau)
        .def("__repr__", [](const MonoParams& p) { return "MonoParams(tau=" + io::format_double(p.tau) + ")"; });

    py::class_<BiParams>(m, "BiParams")
        .def(py::init([](double t1, double t2, double a1) { return BiParams{t1, t2, a1}; }), py::arg("tau1"),
             py::arg("tau2"), py::arg("alpha1"))
        .def_readwrite("tau1", &BiParams::tau1)
        .def_readwrite("tau2", &BiParams::tau2)
        .def_readwrite("alpha1", &BiParams::alpha1)
        .def("__repr__", [](const BiParams& p) {
            return "BiParams(tau1=" + io::format_double(p.tau1) + ", tau2=" + io::format_double(p.tau2) +
                   ", alpha1=" + io::format_double(p.alpha1) + ")";
        });

    py::class_<ParamRanges>(m, "ParamRanges")
        .def_static("mono", [](double lo, double hi) { return ParamRanges::mono({lo, hi}); }, py::arg("tau_min") = 0.2,
                    py::arg("tau_max") = 8.0)
        .def_static(
            "bi",
            [](std::pair<double, double> t1, std::pair<double, double> t2, std::pair<double, double> a1) {
                return ParamRanges::bi({t1.first, t1.second}, {t2.first, t2.second}, {a1.first, a1.second});
            },
            py::arg("tau1") = std::pair{0.2, 2.0}, py::arg("tau2") = std::pair{2.0, 8.0},
            py::arg("alpha1") = std::pair{0.05, 0.95})
        .def_property_readonly("is_bi", [](const ParamRanges& r) { return r.kind == ModelKind::bi; });

    m.def("mean_lifetime", &mean_lifetime, py::arg("params"));

    // Forward model
    m.def("build_irf", [](const IrfSpec& s, const TimeAxis& a) { return from_vec(build_irf(s, a)); }, py::arg("irf"),
          py::arg("axis"));
    m.def(
        "model_curve",
        [](const DecayParams& p, const DoubleArray& irf, const TimeAxis& a) {
            return from_vec(model_curve(p, to_vec(irf), a));
        },
        py::arg("params"), py::arg("irf"), py::arg("axis"));
    m.def(
        "sample_histogram",
        [](const DoubleArray& mu, const TimeAxis& a, std::uint64_t seed) {
            return counts_of(sample_histogram(to_vec(mu), a, seed));
        },
        py::arg("mu"), py::arg("axis"), py::arg("seed"));
    m.def(
        "generate_trials",
        [](const ParamRanges& r, double peak_counts, const IrfSpec& irf, const TimeAxis& a, int n, std::uint64_t seed,
           int threads) {
            return trials_to_dict(generate_trial_set(r, Acquisition::peak(peak_counts), irf, a, n, seed, threads), a);
        },
        py::arg("ranges"), py::arg("peak_counts"), py::arg("irf"), py::arg("axis"), py::arg("n_trials"),
        py::arg("seed"), py::arg("threads") = 1);
    m.def(
        "histogram_to_timestamps",
        [](const CountArray& counts, const TimeAxis& a, bool jitter, std::uint64_t seed) {
            const auto s = histogram_to_timestamps(to_histogram(counts, a),
                                                   jitter ? TimestampMode::uniform_jitter : TimestampMode::bin_center,
                                                   seed);
            return from_vec(s.times);
        },
        py::arg("counts"), py::arg("axis"), py::arg("jitter") = false, py::arg("seed") = 0);

    // Knots
    m.def(
        "fisher_knots",
        [](const ParamRanges& r, double peak_counts, const IrfSpec& irf, const TimeAxis& a, int m_, bool use_max,
           int n_grid, double epsilon, bool count_scale) {
            const DensityOptions opt{n_grid, epsilon, use_max ? Aggregation::max : Aggregation::average,
                                     count_scale ? FisherScale::counts : FisherScale::shape, 0x5eed};
            const auto d = fisher_density(r, peak_counts, build_irf(irf, a), a, opt);
            return from_vec(allocate_knots(fisher_cdf(d, a), a, m_).boundaries);
        },
        py::arg("ranges"), py::arg("peak_counts"), py::arg("irf"), py::arg("axis"), py::arg("m"),
        py::arg("use_max") = false, py::arg("n_grid") = 500, py::arg("epsilon") = 1e-3,
        py::arg("count_scale") = false);
    m.def(
        "uniform_knots", [](const TimeAxis& a, int m_) { return from_vec(uniform_knots(a, m_).boundaries); },
        py::arg("axis"), py::arg("m"));

    // Sketching
    m.def(
        "sketch_timestamps",
        [](const DoubleArray& knots, const DoubleArray& times) {
            const SplineBasis basis(KnotSet{to_vec(knots)});
            return from_vec(sketch_from_timestamps(basis, TimestampStream{to_vec(times)}).values);
        },
        py::arg("knots"), py::arg("times"));
    m.def(
        "sketch_histogram",
        [](const DoubleArray& knots, const CountArray& counts, const TimeAxis& a) {
            const SplineBasis basis(KnotSet{to_vec(knots)});
            return from_vec(sketch_from_histogram(SketchMatrix(basis, a), to_histogram(counts, a)).values);
        },
        py::arg("knots"), py::arg("counts"), py::arg("axis"));
    m.def(
        "fxp_sketch_timestamps",
        [](const DoubleArray& knots, const DoubleArray& times, int depth, double window) {
            const SplineBasis basis(KnotSet{to_vec(knots)});
            const auto lut = build_fxp_lut(basis, depth, window);
            return from_vec(fxp_sketch_from_timestamps(lut, TimestampStream{to_vec(times)}).values);
        },
        py::arg("knots"), py::arg("times"), py::arg("depth"), py::arg("window"));
    m.def(
        "phasor",
        [](const DoubleArray& times, double window, int harmonic) {
            const auto p = phasor_from_timestamps(TimestampStream{to_vec(times)}, window, harmonic);
            return std::pair{p.g, p.s};
        },
        py::arg("times"), py::arg("window"), py::arg("harmonic") = 1);

    // Estimation
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("objective", &FitResult::objective)
        .def_readonly("amplitude", &FitResult::amplitude)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("chi2", &FitResult::chi2)
        .def_property_readonly("mean_tau", [](const FitResult& r) { return mean_lifetime(r.params); });

    m.def(
        "fit",
        [](const CountArray& counts, const ParamRanges& r, const IrfSpec& irf, const TimeAxis& a,
           const std::string& method, const std::optional<DoubleArray>& knots) {
            const auto h = to_histogram(counts, a);
            const Method meth = parse_method(method);
            require(meth != Method::sketch || knots.has_value(), ErrorKind::invalid_input, "sketch fits need knots");
            const auto knot_v = knots ? to_vec(*knots) : std::vector<double>{};
            py::gil_scoped_release release;
            const auto irf_v = build_irf(irf, a);
            if (meth == Method::sketch) {
                const FitContext ctx(a, irf_v, r, KnotSet{knot_v});
                return fit_sketch(normalize_sketch(sketch_from_histogram(*ctx.w, h)), ctx);
            }
            const FitContext ctx(a, irf_v, r);
            return meth == Method::nlsf ? fit_histogram_nlsf(h, ctx) : fit_histogram_mle(h, ctx);
        },
        py::arg("counts"), py::arg("ranges"), py::arg("irf"), py::arg("axis"), py::arg("method") = "mle",
        py::arg("knots") = py::none());
    m.def(
        "crb_mean_tau",
        [](const DecayParams& p, double peak_counts, const ParamRanges& r, const IrfSpec& irf, const TimeAxis& a) {
            const FitContext ctx(a, build_irf(irf, a), r);
            return crb(p, peak_counts, ctx).mean_tau_bound;
        },
        py::arg("params"), py::arg("peak_counts"), py::arg("ranges"), py::arg("irf"), py::arg("axis"));

    // Metrics
    m.def(
        "scalar_metrics",
        [](const DoubleArray& est, const DoubleArray& truth) {
            const auto s = scalar_metrics(to_vec(est), to_vec(truth));
            py::dict d;
            d["mae"] = s.mae;
            d["rmse"] = s.rmse;
            d["r_squared"] = s.r_squared;
            return d;
        },
        py::arg("estimates"), py::arg("truths"));
    m.def(
        "ssim",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& est,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& truth) {
            require(est.ndim() == 2 && truth.ndim() == 2, ErrorKind::invalid_input, "ssim expects 2-D arrays");
            const int r = static_cast<int>(est.shape(0));
            const int c = static_cast<int>(est.shape(1));
            return ssim_map(Grid{r, c, {est.data(), est.data() + est.size()}},
                            Grid{static_cast<int>(truth.shape(0)), static_cast<int>(truth.shape(1)),
                                 {truth.data(), truth.data() + truth.size()}});
        },
        py::arg("estimate"), py::arg("truth"));

    m.def(
        "parse_config",
        [](const std::string& text) {
            std::istringstream is(text);
            std::ostringstream os;
            write_config(os, parse_config(is));
            return os.str();
        },
        py::arg("text"), "Parses an INI config and returns its normalized form.");
}

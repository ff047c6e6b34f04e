// sketchflim command-line front end.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sketchflim/config.hpp"
#include "sketchflim/experiment.hpp"
#include "sketchflim/io.hpp"
#include "sketchflim/parallel.hpp"

namespace fs = std::filesystem;
using namespace sketchflim;

namespace {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_data = 3, exit_numeric = 4 };

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::invalid_input:
    case ErrorKind::io:
    case ErrorKind::insufficient_data:
    case ErrorKind::overflow: return exit_data;
    case ErrorKind::numeric_degenerate:
    case ErrorKind::non_identifiable:
    case ErrorKind::singular_information:
    case ErrorKind::allocation_infeasible:
    case ErrorKind::degenerate_irf:
    case ErrorKind::outside_semicircle: return exit_numeric;
    }
    return exit_data;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = default_threads();
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Experiment INI file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Override [seed] value");
    cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "Output directory (overrides [output] dir)");
}

ExperimentConfig load(const Common& c) {
    auto cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.out_dir = c.out;
    return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg) {
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec && fs::is_directory(dir), ErrorKind::io, "cannot create output directory '" + cfg.out_dir + "'");
    return dir;
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    require(static_cast<bool>(os), ErrorKind::io, "cannot write '" + p.string() + "'");
    return os;
}

std::ifstream open_in(const std::string& p, bool binary = false) {
    std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
    require(static_cast<bool>(is), ErrorKind::io, "cannot read '" + p + "'");
    return is;
}

struct Dataset {
    std::vector<Trial> trials;
    int rows = 0; // nonzero for spatial maps
    int cols = 0;
};

Dataset generate(const ExperimentConfig& cfg, int threads) {
    const auto& ex = cfg.experiment;
    Dataset ds;
    if (cfg.dataset.kind == DatasetKind::map) {
        require(ex.ranges.kind == ModelKind::bi, ErrorKind::config, "spatial maps are bi-exponential; set model = bi");
        auto map = generate_spatial_map(ex.axis, ex.irf, ex.acquisition, cfg.dataset.map_rows, cfg.dataset.map_cols,
                                        cfg.seed, {}, threads);
        ds.rows = map.rows;
        ds.cols = map.cols;
        ds.trials = std::move(map.pixels);
    } else {
        ds.trials = generate_trial_set(ex.ranges, ex.acquisition, ex.irf, ex.axis, cfg.dataset.n_trials, cfg.seed,
                                       threads);
    }
    return ds;
}

Pipeline make_pipeline(const ExperimentConfig& cfg, const std::string& knot_path) {
    if (knot_path.empty()) return Pipeline(cfg.experiment, cfg.sketch);
    auto in = open_in(knot_path);
    const auto file = io::read_knot_file(in);
    require(file.knots.m() == cfg.sketch.m, ErrorKind::config,
            "knot file has M = " + std::to_string(file.knots.m()) + " but the config asks for M = " +
                std::to_string(cfg.sketch.m));
    return Pipeline(cfg.experiment, cfg.sketch, file.knots);
}

std::vector<Histogram> read_histograms(const std::string& path, const TimeAxis& axis) {
    auto in = open_in(path);
    auto set = io::read_histogram_csv(in);
    require(set.axis.n_bins() == axis.n_bins() && std::abs(set.axis.bin_width() - axis.bin_width()) < 1e-9,
            ErrorKind::invalid_input, "histogram axis in '" + path + "' does not match the config axis");
    return std::move(set.rows);
}

std::vector<std::size_t> iota_ids(std::size_t n) {
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    return ids;
}

FitResult failed_fit(const ExperimentConfig& cfg) {
    FitResult r;
    r.params = cfg.experiment.ranges.midpoint();
    r.objective = std::numeric_limits<double>::quiet_NaN();
    r.chi2 = std::numeric_limits<double>::quiet_NaN();
    return r;
}

// --- gen -------------------------------------------------------------------

int cmd_gen(const Common& c) {
    const auto cfg = load(c);
    const auto dir = output_dir(cfg);
    const auto ds = generate(cfg, c.threads);

    std::vector<Histogram> hists;
    std::vector<DecayParams> truths;
    hists.reserve(ds.trials.size());
    for (const auto& t : ds.trials) {
        hists.push_back(t.histogram);
        truths.push_back(t.params);
    }
    {
        auto os = open_out(dir / "histograms.csv");
        io::write_histogram_csv(os, cfg.experiment.axis, hists);
    }
    {
        auto os = open_out(dir / "truth.csv");
        io::write_truth_csv(os, truths);
    }
    if (cfg.dataset.write_timestamps) {
        const auto ts_dir = dir / "timestamps";
        fs::create_directories(ts_dir);
        for (std::size_t i = 0; i < hists.size(); ++i) {
            const auto stream = histogram_to_timestamps(hists[i], cfg.dataset.timestamp_mode,
                                                        derive_seed(cfg.seed ^ 0x7473ULL, i));
            char name[32];
            std::snprintf(name, sizeof name, "pixel_%06zu.skts", i);
            auto os = open_out(ts_dir / name, true);
            io::write_timestamps(os, stream);
        }
    }
    std::cout << "wrote " << hists.size() << " histograms to " << dir.string() << '\n';
    return exit_ok;
}

// --- knots -----------------------------------------------------------------

int cmd_knots(const Common& c) {
    const auto cfg = load(c);
    const auto dir = output_dir(cfg);
    const auto knots = design_knots(cfg.experiment, cfg.sketch);
    auto os = open_out(dir / "knots.txt");
    io::write_knot_file(os, io::KnotFile{knots, cfg.sketch.knots, cfg.sketch.aggregation});
    std::cout << "knots:";
    for (double xi : knots.boundaries) std::cout << ' ' << io::format_double(xi);
    std::cout << '\n';
    return exit_ok;
}

// --- sketch ----------------------------------------------------------------

int cmd_sketch(const Common& c, const std::string& knot_path, const std::string& histograms,
               const std::vector<std::string>& timestamps) {
    const auto cfg = load(c);
    require(!knot_path.empty(), ErrorKind::config, "sketch needs --knots (produce one with `sketchflim knots`)");
    require(fs::exists(knot_path), ErrorKind::io, "knot file '" + knot_path + "' does not exist");
    require(histograms.empty() != timestamps.empty(), ErrorKind::config,
            "give exactly one of --histograms or --timestamps");
    const auto dir = output_dir(cfg);
    const auto pipeline = make_pipeline(cfg, knot_path);

    std::vector<SketchVector> rows;
    if (!histograms.empty()) {
        const auto hists = read_histograms(histograms, cfg.experiment.axis);
        rows.resize(hists.size());
        parallel_for(hists.size(), c.threads, [&](std::size_t i) { rows[i] = pipeline.sketch(hists[i]); });
    } else {
        rows.resize(timestamps.size());
        parallel_for(timestamps.size(), c.threads, [&](std::size_t i) {
            auto in = open_in(timestamps[i], true);
            rows[i] = pipeline.sketch(io::read_timestamps(in));
        });
    }
    const io::SketchHeader header{cfg.sketch.m, knot_path, cfg.sketch.path,
                                  cfg.sketch.path == SketchPath::fxp ? cfg.sketch.lut_depth : 0};
    auto os = open_out(dir / "sketches.csv");
    io::write_sketch_csv(os, header, rows);
    if (cfg.sketch.path == SketchPath::fxp) {
        auto lut_os = open_out(dir / "lut.bin", true);
        io::write_lut(lut_os, pipeline.lut());
    }
    std::cout << "wrote " << rows.size() << " sketches\n";
    return exit_ok;
}

// --- fit -------------------------------------------------------------------

int cmd_fit(const Common& c, const std::string& knot_path, const std::string& histograms,
            const std::string& sketches, const std::vector<std::string>& method_override) {
    auto cfg = load(c);
    if (!method_override.empty()) {
        cfg.methods.clear();
        for (const auto& m : method_override) cfg.methods.push_back(parse_method(m));
    }
    const auto dir = output_dir(cfg);
    const auto pipeline = make_pipeline(cfg, knot_path);

    std::vector<Histogram> hists;
    if (!histograms.empty()) hists = read_histograms(histograms, cfg.experiment.axis);
    std::optional<io::SketchSet> sketch_set;
    if (!sketches.empty()) {
        auto in = open_in(sketches);
        sketch_set = io::read_sketch_csv(in);
        require(sketch_set->header.m == pipeline.settings().m, ErrorKind::config,
                "sketch file M does not match the configured M");
    }

    for (const Method method : cfg.methods) {
        std::vector<FitResult> fits;
        if (method == Method::sketch && sketch_set) {
            const auto& rows = sketch_set->rows;
            fits.resize(rows.size());
            parallel_for(rows.size(), c.threads, [&](std::size_t i) {
                try {
                    fits[i] = pipeline.fit_sketch(rows[i].values);
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::config) throw;
                    fits[i] = failed_fit(cfg);
                }
            });
        } else {
            require(!histograms.empty(), ErrorKind::config,
                    std::string("method ") + to_string(method) + " needs --histograms");
            fits.resize(hists.size());
            parallel_for(hists.size(), c.threads, [&](std::size_t i) {
                try {
                    fits[i] = pipeline.fit(method, hists[i]);
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::config) throw;
                    fits[i] = failed_fit(cfg);
                }
            });
        }
        const auto ids = iota_ids(fits.size());
        auto os = open_out(dir / (std::string("results_") + to_string(method) + ".csv"));
        io::write_results_csv(os, fits, ids);
        std::size_t unconverged = 0;
        for (const auto& f : fits) unconverged += f.converged ? 0 : 1;
        std::cout << to_string(method) << ": " << fits.size() << " fits, " << unconverged << " unconverged\n";
    }
    return exit_ok;
}

// --- eval ------------------------------------------------------------------

std::string label_of(const std::string& path) {
    std::string stem = fs::path(path).stem().string();
    const std::string prefix = "results_";
    if (stem.rfind(prefix, 0) == 0) stem = stem.substr(prefix.size());
    return stem;
}

int cmd_eval(const Common& c, const std::vector<std::string>& results, const std::string& truth_path) {
    const auto cfg = load(c);
    const auto dir = output_dir(cfg);
    const ModelKind kind = cfg.experiment.ranges.kind;
    auto tin = open_in(truth_path);
    const auto truths = io::read_truth_csv(tin, kind);
    const bool is_map = cfg.dataset.kind == DatasetKind::map;

    std::vector<RunRecord> runs;
    for (const auto& path : results) {
        auto in = open_in(path);
        const auto rows = io::read_results_csv(in, kind);
        require(rows.size() == truths.size(), ErrorKind::invalid_input,
                "'" + path + "' has " + std::to_string(rows.size()) + " rows but the truth file has " +
                    std::to_string(truths.size()));
        RunRecord run;
        run.method = label_of(path);
        run.m = cfg.sketch.m;
        run.peak_counts = design_peak_counts(cfg.experiment);
        run.irf_fwhm = cfg.experiment.irf.fwhm;
        run.n_bins = cfg.experiment.axis.n_bins();
        run.lut_depth = cfg.sketch.path == SketchPath::fxp ? cfg.sketch.lut_depth : 0;
        run.truths = truths;
        run.estimates.resize(rows.size());
        for (const auto& r : rows) {
            require(r.pixel_id < rows.size(), ErrorKind::invalid_input, "pixel id out of range in '" + path + "'");
            run.estimates[r.pixel_id] = r.params;
        }
        if (is_map) {
            run.map_rows = cfg.dataset.map_rows;
            run.map_cols = cfg.dataset.map_cols;
            require(static_cast<std::size_t>(run.map_rows * run.map_cols) == rows.size(), ErrorKind::invalid_input,
                    "row count does not match the configured map size");
        }
        runs.push_back(std::move(run));
    }
    const auto report = assemble_report(runs);
    auto os = open_out(dir / "report.csv");
    write_report_csv(os, report);
    write_report_csv(std::cout, report);
    return exit_ok;
}

// --- phasor ----------------------------------------------------------------

int cmd_phasor(const Common& c, const std::string& histograms, const std::vector<std::string>& timestamps,
               int harmonic) {
    const auto cfg = load(c);
    require(histograms.empty() != timestamps.empty(), ErrorKind::config,
            "give exactly one of --histograms or --timestamps");
    const auto dir = output_dir(cfg);
    const auto& axis = cfg.experiment.axis;
    const auto irf_point = phasor_of_weights(build_irf(cfg.experiment.irf, axis), axis, harmonic);

    std::vector<std::optional<PhasorPoint>> points;
    if (!histograms.empty()) {
        const auto hists = read_histograms(histograms, axis);
        points.resize(hists.size());
        parallel_for(hists.size(), c.threads, [&](std::size_t i) {
            if (hists[i].total() > 0) points[i] = phasor_from_histogram(hists[i], harmonic);
        });
    } else {
        points.resize(timestamps.size());
        parallel_for(timestamps.size(), c.threads, [&](std::size_t i) {
            auto in = open_in(timestamps[i], true);
            const auto stream = io::read_timestamps(in);
            if (!stream.empty()) points[i] = phasor_from_timestamps(stream, axis.window(), harmonic);
        });
    }

    auto os = open_out(dir / "phasor.csv");
    os << "pixel_id,photons,g,s,g_corrected,s_corrected,tau_phase\n";
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i]) {
            ++skipped;
            continue;
        }
        const auto& p = *points[i];
        const auto q = irf_correct_phasor(p, irf_point);
        const double tau = q.g > 0.0 ? phasor_mono_lifetime(q, axis.window())
                                     : std::numeric_limits<double>::quiet_NaN();
        os << i << ',' << p.photon_count << ',' << io::format_double(p.g) << ',' << io::format_double(p.s) << ','
           << io::format_double(q.g) << ',' << io::format_double(q.s) << ',' << io::format_double(tau) << '\n';
    }
    if (skipped > 0) std::cerr << "warning: skipped " << skipped << " empty pixel(s)\n";
    std::cout << "wrote " << points.size() - skipped << " phasor points\n";
    return exit_ok;
}

// --- lut-bench -------------------------------------------------------------

int cmd_lut_bench(const Common& c) {
    const auto cfg = load(c);
    const auto dir = output_dir(cfg);
    const auto ds = generate(cfg, c.threads);
    require(!ds.trials.empty(), ErrorKind::insufficient_data, "lut-bench needs a non-empty dataset");
    const auto knots = design_knots(cfg.experiment, cfg.sketch);
    const auto truths = truths_of(ds.trials);

    auto os = open_out(dir / "lut_bench.csv");
    os << "path,D,mean_tau_mae,mean_tau_rmse,ssim,relative_accuracy\n";
    auto run = [&](SketchPath path, int depth) {
        auto sk = cfg.sketch;
        sk.path = path;
        sk.lut_depth = depth;
        const Pipeline pipeline(cfg.experiment, sk, knots);
        const auto fits = pipeline.fit_all(Method::sketch, ds.trials, c.threads);
        const auto est = estimates_of(fits);
        std::vector<double> e(est.size()), t(est.size());
        for (std::size_t i = 0; i < est.size(); ++i) {
            e[i] = mean_lifetime(est[i]);
            t[i] = mean_lifetime(truths[i]);
        }
        double ssim = std::numeric_limits<double>::quiet_NaN();
        if (ds.rows > 0) ssim = ssim_map(Grid{ds.rows, ds.cols, e}, Grid{ds.rows, ds.cols, t});
        os << to_string(path) << ',' << (path == SketchPath::fxp ? depth : 0) << ','
           << io::format_double(mean_tau_mae(est, truths)) << ',' << io::format_double(mean_tau_rmse(est, truths))
           << ',' << io::format_double(ssim) << ',' << io::format_double(relative_accuracy(e, t)) << '\n';
    };
    run(SketchPath::flp, 0);
    for (int d : cfg.bench_depths) run(SketchPath::fxp, d);
    os.close();
    std::ifstream back(dir / "lut_bench.csv");
    std::cout << back.rdbuf();
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher-knot spline sketching for TCSPC lifetime imaging"};
    app.require_subcommand(1);

    Common gen_c, knots_c, sketch_c, fit_c, eval_c, phasor_c, bench_c;
    std::string sketch_knots, sketch_hist, fit_knots, fit_hist, fit_sketches, eval_truth, phasor_hist;
    std::vector<std::string> sketch_ts, fit_methods, eval_results, phasor_ts;
    int harmonic = 1;

    auto* gen = app.add_subcommand("gen", "Generate synthetic histograms and ground truth");
    add_common(gen, gen_c);

    auto* knots = app.add_subcommand("knots", "Allocate Fisher or uniform knots");
    add_common(knots, knots_c);

    auto* sketch = app.add_subcommand("sketch", "Project histograms or timestamp streams onto the spline basis");
    add_common(sketch, sketch_c);
    sketch->add_option("--knots", sketch_knots, "Knot file");
    sketch->add_option("--histograms", sketch_hist, "Histogram CSV");
    sketch->add_option("--timestamps", sketch_ts, "Timestamp stream files, one per pixel");

    auto* fit = app.add_subcommand("fit", "Estimate lifetimes per pixel");
    add_common(fit, fit_c);
    fit->add_option("--knots", fit_knots, "Knot file (default: allocate from the config)");
    fit->add_option("--histograms", fit_hist, "Histogram CSV");
    fit->add_option("--sketches", fit_sketches, "Sketch CSV (used by the sketch method)");
    fit->add_option("--method", fit_methods, "Override [fit] methods (sketch, nlsf, mle)");

    auto* eval = app.add_subcommand("eval", "Score fit results against ground truth");
    add_common(eval, eval_c);
    eval->add_option("--results", eval_results, "Results CSV files (label taken from results_<label>.csv)")
        ->required();
    eval->add_option("--truth", eval_truth, "Ground-truth CSV")->required();

    auto* phasor = app.add_subcommand("phasor", "Raw and IRF-corrected phasor per pixel");
    add_common(phasor, phasor_c);
    phasor->add_option("--histograms", phasor_hist, "Histogram CSV");
    phasor->add_option("--timestamps", phasor_ts, "Timestamp stream files, one per pixel");
    phasor->add_option("--harmonic", harmonic, "Harmonic m")->check(CLI::PositiveNumber);

    auto* bench = app.add_subcommand("lut-bench", "Downstream accuracy against fixed-point LUT depth");
    add_common(bench, bench_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (*gen) return cmd_gen(gen_c);
        if (*knots) return cmd_knots(knots_c);
        if (*sketch) return cmd_sketch(sketch_c, sketch_knots, sketch_hist, sketch_ts);
        if (*fit) return cmd_fit(fit_c, fit_knots, fit_hist, fit_sketches, fit_methods);
        if (*eval) return cmd_eval(eval_c, eval_results, eval_truth);
        if (*phasor) return cmd_phasor(phasor_c, phasor_hist, phasor_ts, harmonic);
        if (*bench) return cmd_lut_bench(bench_c);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}

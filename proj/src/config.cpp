#include "sketchflim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sketchflim/io.hpp"

namespace sketchflim {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"axis", {"n_bins", "window_ns", "bin_width_ps"}},
        {"irf", {"shape", "fwhm_ns", "peak_ns"}},
        {"ranges",
         {"model", "tau_min", "tau_max", "tau1_min", "tau1_max", "tau2_min", "tau2_max", "alpha1_min", "alpha1_max"}},
        {"acquisition", {"peak_counts", "total_photons"}},
        {"dataset", {"kind", "n_trials", "map_rows", "map_cols", "timestamps", "timestamp_mode"}},
        {"sketch", {"m", "knots", "aggregation", "fisher_scale", "n_grid", "epsilon", "density_seed"}},
        {"fxp", {"enabled", "lut_depth", "decoder", "bench_depths"}},
        {"fit", {"methods"}},
        {"seed", {"value"}},
        {"output", {"dir"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    bool has(const std::string& section, const std::string& key) const {
        return tree_.get_child_optional(pt::ptree::path_type(section + "/" + key, '/')).has_value();
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
        return v ? *v : fallback;
    }

    double real(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        try {
            return io::parse_double(text(section, key, ""));
        } catch (const Error&) {
            fail(ErrorKind::config, "[" + section + "] " + key + " is not a number");
        }
    }

    long long integer(const std::string& section, const std::string& key, long long fallback) const {
        if (!has(section, key)) return fallback;
        const std::string s = text(section, key, "");
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used, 0);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        fail(ErrorKind::config, "[" + section + "] " + key + " is not an integer");
    }

    std::uint64_t unsigned_integer(const std::string& section, const std::string& key, std::uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        const std::string s = text(section, key, "");
        try {
            std::size_t used = 0;
            if (!s.empty() && s[0] != '-') {
                const auto v = std::stoull(s, &used, 0);
                if (used == s.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail(ErrorKind::config, "[" + section + "] " + key + " is not an unsigned integer");
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string s = text(section, key, "");
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        fail(ErrorKind::config, "[" + section + "] " + key + " is not a boolean");
    }

private:
    const pt::ptree& tree_;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

void check_keys(const pt::ptree& tree) {
    const auto& keys = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = keys.find(section);
        require(it != keys.end(), ErrorKind::config, "unknown config section [" + section + "]");
        require(!body.empty() || body.data().empty(), ErrorKind::config, "stray top-level key '" + section + "'");
        for (const auto& [key, value] : body)
            require(it->second.count(key) == 1, ErrorKind::config,
                    "unknown key '" + key + "' in section [" + section + "]");
    }
}

const char* to_string(TimestampMode m) { return m == TimestampMode::bin_center ? "bin_center" : "uniform_jitter"; }

} // namespace

ExperimentConfig parse_config(std::istream& is) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::config, std::string("malformed config: ") + e.what());
    }
    check_keys(tree);
    const Reader r(tree);
    ExperimentConfig cfg;
    auto& ex = cfg.experiment;

    const auto n_bins = static_cast<int>(r.integer("axis", "n_bins", 256));
    require(n_bins >= TimeAxis::min_bins, ErrorKind::config, "[axis] n_bins must be at least 8");
    require(!(r.has("axis", "window_ns") && r.has("axis", "bin_width_ps")), ErrorKind::config,
            "[axis] set window_ns or bin_width_ps, not both");
    const double window = r.has("axis", "bin_width_ps") ? r.real("axis", "bin_width_ps", 0.0) * n_bins / 1000.0
                                                        : r.real("axis", "window_ns", 10.0);
    require(window > 0.0, ErrorKind::config, "[axis] window must be positive");
    ex.axis = TimeAxis::from_window(n_bins, window);

    require(r.text("irf", "shape", "gaussian") == "gaussian", ErrorKind::config, "[irf] shape must be gaussian");
    ex.irf.fwhm = r.real("irf", "fwhm_ns", ex.irf.fwhm);
    ex.irf.peak_time = r.real("irf", "peak_ns", ex.irf.peak_time);
    require(ex.irf.fwhm > 0.0, ErrorKind::config, "[irf] fwhm_ns must be positive");

    const std::string model = r.text("ranges", "model", "mono");
    if (model == "mono") {
        ex.ranges.kind = ModelKind::mono;
    } else if (model == "bi") {
        ex.ranges.kind = ModelKind::bi;
    } else {
        fail(ErrorKind::config, "[ranges] model must be mono or bi");
    }
    auto& rg = ex.ranges;
    rg.tau = {r.real("ranges", "tau_min", rg.tau.lo), r.real("ranges", "tau_max", rg.tau.hi)};
    rg.tau1 = {r.real("ranges", "tau1_min", rg.tau1.lo), r.real("ranges", "tau1_max", rg.tau1.hi)};
    rg.tau2 = {r.real("ranges", "tau2_min", rg.tau2.lo), r.real("ranges", "tau2_max", rg.tau2.hi)};
    rg.alpha1 = {r.real("ranges", "alpha1_min", rg.alpha1.lo), r.real("ranges", "alpha1_max", rg.alpha1.hi)};
    validate(rg);

    const bool has_peak = r.has("acquisition", "peak_counts");
    const bool has_total = r.has("acquisition", "total_photons");
    require(!(has_peak && has_total), ErrorKind::config, "[acquisition] set peak_counts or total_photons, not both");
    ex.acquisition = has_total ? Acquisition::total(r.real("acquisition", "total_photons", 0.0))
                               : Acquisition::peak(r.real("acquisition", "peak_counts", 500.0));
    require(ex.acquisition.value > 0.0, ErrorKind::config, "[acquisition] photon level must be positive");

    auto& ds = cfg.dataset;
    const std::string kind = r.text("dataset", "kind", "trials");
    if (kind == "trials") {
        ds.kind = DatasetKind::trials;
    } else if (kind == "map") {
        ds.kind = DatasetKind::map;
    } else {
        fail(ErrorKind::config, "[dataset] kind must be trials or map");
    }
    ds.n_trials = static_cast<int>(r.integer("dataset", "n_trials", ds.n_trials));
    ds.map_rows = static_cast<int>(r.integer("dataset", "map_rows", ds.map_rows));
    ds.map_cols = static_cast<int>(r.integer("dataset", "map_cols", ds.map_cols));
    require(ds.n_trials >= 0, ErrorKind::config, "[dataset] n_trials must be non-negative");
    require(ds.map_rows >= 8 && ds.map_cols >= 8, ErrorKind::config, "[dataset] map sides must be at least 8");
    ds.write_timestamps = r.boolean("dataset", "timestamps", ds.write_timestamps);
    const std::string ts_mode = r.text("dataset", "timestamp_mode", "bin_center");
    if (ts_mode == "bin_center") {
        ds.timestamp_mode = TimestampMode::bin_center;
    } else if (ts_mode == "uniform_jitter") {
        ds.timestamp_mode = TimestampMode::uniform_jitter;
    } else {
        fail(ErrorKind::config, "[dataset] timestamp_mode must be bin_center or uniform_jitter");
    }

    auto& sk = cfg.sketch;
    sk.m = static_cast<int>(r.integer("sketch", "m", sk.m));
    require(sk.m >= 2, ErrorKind::config, "[sketch] m must be at least 2");
    sk.knots = parse_knot_mode(r.text("sketch", "knots", to_string(sk.knots)));
    sk.aggregation = parse_aggregation(r.text("sketch", "aggregation", to_string(sk.aggregation)));
    sk.scale = parse_fisher_scale(r.text("sketch", "fisher_scale", to_string(sk.scale)));
    sk.n_grid = static_cast<int>(r.integer("sketch", "n_grid", sk.n_grid));
    require(sk.n_grid >= 1, ErrorKind::config, "[sketch] n_grid must be positive");
    sk.epsilon = r.real("sketch", "epsilon", sk.epsilon);
    require(sk.epsilon > 0.0, ErrorKind::config, "[sketch] epsilon must be positive");
    sk.density_seed = r.unsigned_integer("sketch", "density_seed", sk.density_seed);

    sk.path = r.boolean("fxp", "enabled", false) ? SketchPath::fxp : SketchPath::flp;
    sk.lut_depth = static_cast<int>(r.integer("fxp", "lut_depth", sk.lut_depth));
    require(sk.lut_depth >= 1, ErrorKind::config, "[fxp] lut_depth must be positive");
    const std::string decoder = r.text("fxp", "decoder", "lut");
    require(decoder == "lut" || decoder == "basis", ErrorKind::config, "[fxp] decoder must be lut or basis");
    sk.lut_model = decoder == "lut";
    if (r.has("fxp", "bench_depths")) {
        cfg.bench_depths.clear();
        for (const auto& d : split_list(r.text("fxp", "bench_depths", ""))) {
            int v = 0;
            try {
                v = std::stoi(d);
            } catch (const std::exception&) {
                fail(ErrorKind::config, "[fxp] bench_depths must list integers");
            }
            require(v >= 1, ErrorKind::config, "[fxp] bench_depths must be positive");
            cfg.bench_depths.push_back(v);
        }
        require(!cfg.bench_depths.empty(), ErrorKind::config, "[fxp] bench_depths is empty");
    }

    if (r.has("fit", "methods")) {
        cfg.methods.clear();
        for (const auto& m : split_list(r.text("fit", "methods", ""))) cfg.methods.push_back(parse_method(m));
        require(!cfg.methods.empty(), ErrorKind::config, "[fit] methods is empty");
    }

    cfg.seed = r.unsigned_integer("seed", "value", cfg.seed);
    cfg.out_dir = r.text("output", "dir", cfg.out_dir);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::config, "cannot open config '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream& os, const ExperimentConfig& cfg) {
    const auto& ex = cfg.experiment;
    const auto& rg = ex.ranges;
    const auto f = [](double v) { return io::format_double(v); };
    os << "[axis]\nn_bins = " << ex.axis.n_bins() << "\nwindow_ns = " << f(ex.axis.window()) << "\n\n";
    os << "[irf]\nshape = gaussian\nfwhm_ns = " << f(ex.irf.fwhm) << "\npeak_ns = " << f(ex.irf.peak_time) << "\n\n";
    os << "[ranges]\nmodel = " << (rg.kind == ModelKind::mono ? "mono" : "bi") << '\n';
    if (rg.kind == ModelKind::mono) {
        os << "tau_min = " << f(rg.tau.lo) << "\ntau_max = " << f(rg.tau.hi) << "\n\n";
    } else {
        os << "tau1_min = " << f(rg.tau1.lo) << "\ntau1_max = " << f(rg.tau1.hi) << "\ntau2_min = " << f(rg.tau2.lo)
           << "\ntau2_max = " << f(rg.tau2.hi) << "\nalpha1_min = " << f(rg.alpha1.lo)
           << "\nalpha1_max = " << f(rg.alpha1.hi) << "\n\n";
    }
    os << "[acquisition]\n"
       << (ex.acquisition.mode == Acquisition::Mode::peak_counts ? "peak_counts = " : "total_photons = ")
       << f(ex.acquisition.value) << "\n\n";
    const auto& ds = cfg.dataset;
    os << "[dataset]\nkind = " << (ds.kind == DatasetKind::trials ? "trials" : "map") << "\nn_trials = " << ds.n_trials
       << "\nmap_rows = " << ds.map_rows << "\nmap_cols = " << ds.map_cols
       << "\ntimestamps = " << (ds.write_timestamps ? "true" : "false")
       << "\ntimestamp_mode = " << to_string(ds.timestamp_mode) << "\n\n";
    const auto& sk = cfg.sketch;
    os << "[sketch]\nm = " << sk.m << "\nknots = " << to_string(sk.knots) << "\naggregation = "
       << to_string(sk.aggregation) << "\nfisher_scale = " << to_string(sk.scale) << "\nn_grid = " << sk.n_grid << "\nepsilon = " << f(sk.epsilon)
       << "\ndensity_seed = " << sk.density_seed << "\n\n";
    os << "[fxp]\nenabled = " << (sk.path == SketchPath::fxp ? "true" : "false") << "\nlut_depth = " << sk.lut_depth << "\ndecoder = " << (sk.lut_model ? "lut" : "basis")
       << "\nbench_depths = ";
    for (std::size_t i = 0; i < cfg.bench_depths.size(); ++i) os << (i ? "," : "") << cfg.bench_depths[i];
    os << "\n\n[fit]\nmethods = ";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) os << (i ? "," : "") << to_string(cfg.methods[i]);
    os << "\n\n[seed]\nvalue = " << cfg.seed << "\n\n[output]\ndir = " << cfg.out_dir << '\n';
}

} // namespace sketchflim

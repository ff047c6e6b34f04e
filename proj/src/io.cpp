#include "sketchflim/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace sketchflim::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto res = std::from_chars(first, last, v);
    require(res.ec == std::errc{} && res.ptr == last, ErrorKind::invalid_input, "not a number: '" + s + "'");
    return v;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

// Parses `# key=value key=value` into a map.
std::map<std::string, std::string> parse_header(const std::string& line, const std::string& what) {
    require(line.rfind('#', 0) == 0, ErrorKind::invalid_input, what + ": missing '#' header line");
    std::map<std::string, std::string> kv;
    std::istringstream ss(line.substr(1));
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        require(eq != std::string::npos, ErrorKind::invalid_input, what + ": malformed header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

const std::string& header_value(const std::map<std::string, std::string>& kv, const std::string& key,
                                const std::string& what) {
    const auto it = kv.find(key);
    require(it != kv.end(), ErrorKind::invalid_input, what + ": header lacks '" + key + "'");
    return it->second;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto t = strip(s);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    require(res.ec == std::errc{} && res.ptr == t.data() + t.size(), ErrorKind::invalid_input,
            "not an integer: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto t = strip(s);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    require(res.ec == std::errc{} && res.ptr == t.data() + t.size(), ErrorKind::invalid_input,
            "not a non-negative integer: '" + s + "'");
    return v;
}

bool read_data_line(std::istream& is, std::string& line) {
    while (std::getline(is, line)) {
        line = strip(line);
        if (!line.empty()) return true;
    }
    return false;
}

template <typename T>
void put_le(std::ostream& os, T v) {
    std::array<char, sizeof(T)> b{};
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), static_cast<std::streamsize>(b.size()));
}

template <typename T>
T get_le(std::istream& is, const char* what) {
    std::array<unsigned char, sizeof(T)> b{};
    is.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(b.size()));
    require(static_cast<std::size_t>(is.gcount()) == sizeof(T), ErrorKind::invalid_input,
            std::string(what) + ": truncated file");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
    return v;
}

void expect_magic(std::istream& is, const char* magic, const char* what) {
    std::array<char, 4> m{};
    is.read(m.data(), 4);
    require(is.gcount() == 4 && std::equal(m.begin(), m.end(), magic), ErrorKind::invalid_input,
            std::string(what) + ": bad magic bytes");
}

std::array<double, 3> bi_columns(const DecayParams& p) {
    if (const auto* m = std::get_if<MonoParams>(&p)) return {m->tau, m->tau, 1.0};
    const auto& b = std::get<BiParams>(p);
    return {b.tau1, b.tau2, b.alpha1};
}

DecayParams params_from_columns(ModelKind kind, double tau1, double tau2, double alpha1) {
    if (kind == ModelKind::mono) return MonoParams{tau1};
    return BiParams{tau1, tau2, alpha1};
}

} // namespace

void write_histogram_csv(std::ostream& os, const TimeAxis& axis, std::span<const Histogram> rows) {
    os << "# n_bins=" << axis.n_bins() << " bin_width_ps=" << format_double(axis.bin_width() * 1000.0) << '\n';
    for (const auto& h : rows) {
        require(h.axis == axis, ErrorKind::invalid_input, "histogram rows must share one axis");
        for (std::size_t k = 0; k < h.counts.size(); ++k) os << (k ? "," : "") << h.counts[k];
        os << '\n';
    }
}

HistogramSet read_histogram_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input, "histogram CSV: empty file");
    const auto kv = parse_header(strip(line), "histogram CSV");
    const int n = parse_int(header_value(kv, "n_bins", "histogram CSV"));
    const double width_ps = parse_double(header_value(kv, "bin_width_ps", "histogram CSV"));
    HistogramSet set{TimeAxis(n, width_ps / 1000.0), {}};
    while (read_data_line(is, line)) {
        const auto cells = split(line, ',');
        require(static_cast<int>(cells.size()) == n, ErrorKind::invalid_input,
                "histogram CSV: row " + std::to_string(set.rows.size()) + " has " + std::to_string(cells.size()) +
                    " columns, expected " + std::to_string(n));
        std::vector<std::uint64_t> counts(cells.size());
        for (std::size_t k = 0; k < cells.size(); ++k) counts[k] = parse_u64(cells[k]);
        set.rows.emplace_back(set.axis, std::move(counts));
    }
    return set;
}

void write_timestamps(std::ostream& os, const TimestampStream& stream) {
    os.write("SKTS", 4);
    os.put(static_cast<char>(timestamp_format_version));
    put_le<std::uint64_t>(os, stream.size());
    for (double t : stream.times) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(t));
}

TimestampStream read_timestamps(std::istream& is) {
    expect_magic(is, "SKTS", "timestamp stream");
    const int version = is.get();
    require(version == timestamp_format_version, ErrorKind::invalid_input,
            "timestamp stream: unsupported version " + std::to_string(version));
    const auto count = get_le<std::uint64_t>(is, "timestamp stream");
    TimestampStream s;
    s.times.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    for (std::uint64_t i = 0; i < count; ++i)
        s.times.push_back(std::bit_cast<double>(get_le<std::uint64_t>(is, "timestamp stream")));
    return s;
}

void write_knot_file(std::ostream& os, const KnotFile& file) {
    os << "# M=" << file.knots.m() << " mode=" << to_string(file.mode) << " agg=" << to_string(file.aggregation)
       << '\n';
    for (double xi : file.knots.boundaries) os << format_double(xi) << '\n';
}

KnotFile read_knot_file(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input, "knot file: empty file");
    const auto kv = parse_header(strip(line), "knot file");
    KnotFile file;
    const int m = parse_int(header_value(kv, "M", "knot file"));
    file.mode = parse_knot_mode(header_value(kv, "mode", "knot file"));
    file.aggregation = parse_aggregation(header_value(kv, "agg", "knot file"));
    while (read_data_line(is, line)) file.knots.boundaries.push_back(parse_double(line));
    require(file.knots.m() == m, ErrorKind::invalid_input, "knot file: header M disagrees with boundary count");
    validate(file.knots);
    return file;
}

void write_sketch_csv(std::ostream& os, const SketchHeader& header, std::span<const SketchVector> rows) {
    os << "# M=" << header.m << " knots=" << header.knot_path << " path=" << to_string(header.path)
       << " lut_depth=" << header.lut_depth << '\n';
    for (const auto& s : rows) {
        require(static_cast<int>(s.values.size()) == header.m, ErrorKind::invalid_input, "sketch width differs from M");
        for (double v : s.values) os << format_double(v) << ',';
        os << s.photon_count << '\n';
    }
}

SketchSet read_sketch_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input, "sketch CSV: empty file");
    const auto kv = parse_header(strip(line), "sketch CSV");
    SketchSet set;
    set.header.m = parse_int(header_value(kv, "M", "sketch CSV"));
    set.header.knot_path = header_value(kv, "knots", "sketch CSV");
    set.header.path = parse_sketch_path(header_value(kv, "path", "sketch CSV"));
    set.header.lut_depth = parse_int(header_value(kv, "lut_depth", "sketch CSV"));
    while (read_data_line(is, line)) {
        const auto cells = split(line, ',');
        require(static_cast<int>(cells.size()) == set.header.m + 1, ErrorKind::invalid_input,
                "sketch CSV: wrong column count");
        SketchVector s;
        for (int i = 0; i < set.header.m; ++i) s.values.push_back(parse_double(cells[static_cast<std::size_t>(i)]));
        s.photon_count = parse_u64(cells.back());
        set.rows.push_back(std::move(s));
    }
    return set;
}

void write_lut(std::ostream& os, const FxpLut& lut) {
    os.write("SKLU", 4);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(lut.m));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(lut.depth));
    for (auto v : lut.table) put_le<std::uint16_t>(os, v);
}

FxpLut read_lut(std::istream& is, double window) {
    expect_magic(is, "SKLU", "LUT dump");
    FxpLut lut;
    lut.m = static_cast<int>(get_le<std::uint32_t>(is, "LUT dump"));
    lut.depth = static_cast<int>(get_le<std::uint32_t>(is, "LUT dump"));
    require(lut.m >= 1 && lut.depth >= 1, ErrorKind::invalid_input, "LUT dump: empty table");
    lut.window = window;
    lut.table.resize(static_cast<std::size_t>(lut.m) * static_cast<std::size_t>(lut.depth));
    for (auto& v : lut.table) v = get_le<std::uint16_t>(is, "LUT dump");
    return lut;
}

void write_truth_csv(std::ostream& os, std::span<const DecayParams> params) {
    os << "pixel_id,tau1,tau2,alpha1,mean_tau\n";
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto c = bi_columns(params[i]);
        os << i << ',' << format_double(c[0]) << ',' << format_double(c[1]) << ',' << format_double(c[2]) << ','
           << format_double(mean_lifetime(params[i])) << '\n';
    }
}

std::vector<DecayParams> read_truth_csv(std::istream& is, ModelKind kind) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input, "truth CSV: empty file");
    std::vector<DecayParams> out;
    while (read_data_line(is, line)) {
        const auto c = split(line, ',');
        require(c.size() == 5, ErrorKind::invalid_input, "truth CSV: expected 5 columns");
        out.push_back(params_from_columns(kind, parse_double(c[1]), parse_double(c[2]), parse_double(c[3])));
    }
    return out;
}

void write_results_csv(std::ostream& os, std::span<const FitResult> fits, std::span<const std::size_t> pixel_ids) {
    require(fits.size() == pixel_ids.size(), ErrorKind::invalid_input, "one pixel id per fit required");
    os << "pixel_id,tau1,tau2,alpha1,mean_tau,amplitude,objective,chi2,iterations,converged\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& f = fits[i];
        const auto c = bi_columns(f.params);
        os << pixel_ids[i] << ',' << format_double(c[0]) << ',' << format_double(c[1]) << ',' << format_double(c[2])
           << ',' << format_double(mean_lifetime(f.params)) << ',' << format_double(f.amplitude) << ','
           << format_double(f.objective) << ',' << format_double(f.chi2) << ',' << f.iterations << ','
           << (f.converged ? 1 : 0) << '\n';
    }
}

std::vector<ResultRow> read_results_csv(std::istream& is, ModelKind kind) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input, "results CSV: empty file");
    std::vector<ResultRow> out;
    while (read_data_line(is, line)) {
        const auto c = split(line, ',');
        require(c.size() == 10, ErrorKind::invalid_input, "results CSV: expected 10 columns");
        ResultRow r;
        r.pixel_id = static_cast<std::size_t>(parse_u64(c[0]));
        r.params = params_from_columns(kind, parse_double(c[1]), parse_double(c[2]), parse_double(c[3]));
        r.amplitude = parse_double(c[5]);
        r.objective = parse_double(c[6]);
        r.chi2 = parse_double(c[7]);
        r.iterations = parse_int(c[8]);
        r.converged = parse_int(c[9]) != 0;
        out.push_back(r);
    }
    return out;
}

} // namespace sketchflim::io

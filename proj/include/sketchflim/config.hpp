#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sketchflim/experiment.hpp"

namespace sketchflim {

enum class DatasetKind { trials, map };

struct DatasetSettings {
    DatasetKind kind = DatasetKind::trials;
    int n_trials = 2000;
    int map_rows = 33;
    int map_cols = 33;
    bool write_timestamps = false;
    TimestampMode timestamp_mode = TimestampMode::bin_center;
};

/// Parsed experiment file. Sections: [axis] [irf] [ranges] [acquisition]
/// [dataset] [sketch] [fxp] [fit] [seed] [output]; every section and key is
/// optional and unknown keys are rejected.
struct ExperimentConfig {
    Experiment experiment{};
    SketchSettings sketch{};
    DatasetSettings dataset{};
    std::vector<Method> methods{Method::sketch};
    std::vector<int> bench_depths{16, 32, 64, 128, 256};
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

/// Writes a config that parse_config reads back to the same settings.
void write_config(std::ostream& os, const ExperimentConfig& cfg);

} // namespace sketchflim

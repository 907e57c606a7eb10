#pragma once

#include <filesystem>
#include <string>

#include "sdlab/diagnostics.hpp"

namespace sdlab {

struct SamplerSpec {
    std::string name;  // unique within a config; used in file names and seeding
    TimestepSampler sampler;
};

struct Theta0Spec {
    enum class Kind { origin, grey_grid, explicit_vector, jittered } kind = Kind::origin;
    int dim = 0;          // origin
    int H = 0, W = 0;     // grey_grid
    Vec values;           // explicit / jittered base
    double amplitude = 0.0;  // jittered

    // Jitter is drawn from a stream derived independently of the run stream.
    Vec realize(std::uint64_t jitter_seed) const;
};

struct ExperimentConfig {
    ScheduleKind schedule_kind = ScheduleKind::ddpm_linear;
    int T = 0;
    GaussianMixture mixture;
    std::vector<SamplerSpec> samplers;
    SdsConfig sds;  // sds.seed is the master seed of the sweep
    std::vector<std::uint64_t> seeds;
    Theta0Spec theta0;
    std::string output_dir;
    double tau = 0.2;
    std::string canonical_json;  // dump used for hashing and reproduction
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);

struct RunResult {
    int completed = 0;
    int divergent = 0;
    std::filesystem::path output_dir;
};

RunResult run_experiment(const ExperimentConfig& config, int workers = 1);

void export_schedule(ScheduleKind kind, int T, double m, double s, int N,
                     const std::filesystem::path& out_dir);

// Rebuild the diversity/convergence reports of a finished run directory from
// its trajectory CSVs and saved config.
void report_run_dir(const std::filesystem::path& run_dir);

// CSV numeric formatting: shortest round-trip decimal representation.
std::string format_double(double v);

std::uint64_t config_hash(const std::string& canonical_json);

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);
std::vector<TrajectoryRecord> read_trajectory_csvs(const std::filesystem::path& dir,
                                                   const std::string& sampler_name);

void write_spectrum_files(const SpectrumReport& rep, const std::filesystem::path& out_prefix);

}  // namespace sdlab

#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "sdlab/experiment.hpp"

namespace {

std::vector<std::vector<double>> read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid: " + path);
    std::vector<std::vector<double>> grid;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        grid.push_back(std::move(row));
    }
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-distillation schedule laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    int workers = 1;
    std::int64_t seed_override = -1;
    bool dry_run = false;
    auto* run = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
    run->add_option("config", config_path, "Experiment config JSON")->required();
    run->add_option("--workers", workers, "Parallel run workers");
    run->add_option("--seed-override", seed_override, "Override the master seed");
    run->add_flag("--dry-run", dry_run, "Validate the config without running");

    int T = 1000, N = 10000;
    double m = 500.0, s = 125.0;
    std::string kind = "ddpm_linear", out_path = "schedule_export";
    auto* exp = app.add_subcommand("export-schedule", "Export W(t) tables and the t(i) trajectory");
    exp->add_option("--T", T, "Max timestep");
    exp->add_option("--m", m, "Gaussian center of W_p");
    exp->add_option("--s", s, "Gaussian width of W_p");
    exp->add_option("--N", N, "Total iterations for the t(i) trajectory");
    exp->add_option("--kind", kind, "Schedule kind: ddpm_linear or cosine");
    exp->add_option("--out", out_path, "Output directory")->required();

    std::string grid_path, spec_out = "grid";
    auto* spec = app.add_subcommand("spectrum", "Radially averaged power spectrum of a grid CSV");
    spec->add_option("grid", grid_path, "CSV grid of real values")->required();
    spec->add_option("--out", spec_out, "Output file prefix");

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "Rebuild reports for a finished run directory");
    rep->add_option("run_dir", report_dir, "Run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = sdlab::load_config(config_path);
            if (seed_override >= 0) cfg.sds.seed = static_cast<std::uint64_t>(seed_override);
            if (dry_run) {
                std::printf("config ok: %zu samplers x %zu seeds, N=%d\n", cfg.samplers.size(),
                            cfg.seeds.size(), cfg.sds.N);
                return 0;
            }
            auto rr = sdlab::run_experiment(cfg, workers);
            std::printf("completed %d runs (%d divergent) -> %s\n", rr.completed, rr.divergent,
                        rr.output_dir.string().c_str());
        } else if (*exp) {
            sdlab::ScheduleKind k;
            if (kind == "ddpm_linear")
                k = sdlab::ScheduleKind::ddpm_linear;
            else if (kind == "cosine")
                k = sdlab::ScheduleKind::cosine;
            else
                throw std::invalid_argument("--kind must be ddpm_linear or cosine");
            sdlab::export_schedule(k, T, m, s, N, out_path);
            std::printf("wrote %s/weights.csv and %s/schedule.csv\n", out_path.c_str(),
                        out_path.c_str());
        } else if (*spec) {
            auto grid = read_grid_csv(grid_path);
            auto report = sdlab::radial_power_spectrum(grid);
            sdlab::write_spectrum_files(report, spec_out);
            std::printf("low-frequency fraction: %.6f (%d bins)\n",
                        report.low_frequency_fraction, report.bins);
        } else if (*rep) {
            sdlab::report_run_dir(report_dir);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

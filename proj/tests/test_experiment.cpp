#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdlab/experiment.hpp"

using namespace sdlab;
namespace fs = std::filesystem;

namespace {

std::string minimal_config(const std::string& output_dir) {
    return R"({
      "schedule": {"kind": "cosine", "T": 1000},
      "mixture": "bimodal-far",
      "samplers": [
        {"type": "uniform_random", "name": "uniform"},
        {"type": "tp", "m": 500, "s": 125}
      ],
      "sds": {"lr": 0.01, "N": 50, "w_rule": "sqrt_inv_snr", "seed": 7},
      "seeds": [1, 2, 3],
      "theta0": {"type": "origin", "dim": 2},
      "tau": 0.2,
      "output_dir": ")" +
           output_dir + R"("
    })";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("sdlab_test_" + name);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("minimal config parses with expected defaults") {
    auto cfg = parse_config(minimal_config("/tmp/x"));
    CHECK(cfg.schedule_kind == ScheduleKind::cosine);
    CHECK(cfg.T == 1000);
    CHECK(cfg.mixture.components() == 2);
    REQUIRE(cfg.samplers.size() == 2);
    CHECK(cfg.samplers[0].name == "uniform");
    CHECK(cfg.samplers[1].name == "tp");  // defaults to the type name
    CHECK(std::holds_alternative<TpSampler>(cfg.samplers[1].sampler));
    CHECK(cfg.sds.w_rule == WRule::sqrt_inv_snr);
    CHECK(cfg.sds.grad_samples == 1);  // default
    CHECK(cfg.sds.seed == 7);
    CHECK(cfg.tau == 0.2);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("config validation errors carry a named cause") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            parse_config(text);
            FAIL("expected a config error mentioning '" << needle << "'");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    std::string base = minimal_config("/tmp/x");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "tp", "m": 500, "s": 0}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x"})",
        "s must be positive");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "uniform_random"}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1, 1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x"})",
        "seeds must be distinct");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "uniform_random"}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x",
            "extra_key": true})",
        "unknown key 'extra_key'");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x"})",
        "samplers must be a non-empty list");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "uniform_random"}, {"type": "uniform_random"}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x"})",
        "duplicate sampler name");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "uniform_random"}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 3}, "output_dir": "/tmp/x"})",
        "theta0 dimension");
    expect_error(
        R"({"schedule": {"kind": "quadratic", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "uniform_random"}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x"})",
        "schedule.kind");
    expect_error(
        R"({"schedule": {"kind": "cosine", "T": 1000}, "mixture": "bimodal-far",
            "samplers": [{"type": "warp_drive"}],
            "sds": {"lr": 0.01, "N": 10}, "seeds": [1],
            "theta0": {"type": "origin", "dim": 2}, "output_dir": "/tmp/x"})",
        "unknown sampler type");
}

TEST_CASE("theta0 realization") {
    Theta0Spec origin;
    origin.kind = Theta0Spec::Kind::origin;
    origin.dim = 3;
    CHECK(origin.realize(0) == Vec{0.0, 0.0, 0.0});

    Theta0Spec grid;
    grid.kind = Theta0Spec::Kind::grey_grid;
    grid.H = 4;
    grid.W = 5;
    Vec g = grid.realize(0);
    CHECK(g.size() == 20);
    for (double v : g) CHECK(v == 0.5);

    Theta0Spec jit;
    jit.kind = Theta0Spec::Kind::jittered;
    jit.values = {1.0, -1.0};
    jit.amplitude = 0.25;
    Vec a = jit.realize(11), b = jit.realize(11), c = jit.realize(12);
    CHECK(a == b);       // same jitter seed, same start
    CHECK(a != c);       // different seed perturbs
    for (int k = 0; k < 2; ++k) CHECK(std::abs(a[k] - jit.values[k]) <= 0.25);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1e-17, 3.141592653589793, 1e300}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("trajectory CSV round-trips") {
    auto dir = fresh_dir("csv");
    fs::create_directories(dir);
    TrajectoryRecord rec;
    rec.sampler_name = "tp";
    rec.seed = 42;
    for (int i = 1; i <= 5; ++i) {
        TrajectoryRow row;
        row.i = i;
        row.t = 1000 - i;
        row.grad_norm = 0.1 * i;
        row.x0_loss = 1.0 / i;
        row.dist_to_modes = {4.0 - i * 0.5, 4.0 + i * 0.5};
        rec.rows.push_back(row);
    }
    rec.final_theta = {0.0, 0.0};
    write_trajectory_csv(dir / "trajectory_tp_42.csv", rec);
    auto back = read_trajectory_csvs(dir, "tp");
    REQUIRE(back.size() == 1);
    CHECK(back[0].seed == 42);
    REQUIRE(back[0].rows.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(back[0].rows[i].i == rec.rows[i].i);
        CHECK(back[0].rows[i].t == rec.rows[i].t);
        CHECK(back[0].rows[i].grad_norm == rec.rows[i].grad_norm);
        CHECK(back[0].rows[i].x0_loss == rec.rows[i].x0_loss);
        CHECK(back[0].rows[i].dist_to_modes == rec.rows[i].dist_to_modes);
    }
    fs::remove_all(dir);
}

TEST_CASE("export_schedule writes well-formed tables") {
    auto dir = fresh_dir("export");
    export_schedule(ScheduleKind::ddpm_linear, 1000, 500.0, 125.0, 100, dir);
    std::string weights = slurp(dir / "weights.csv");
    std::string schedule = slurp(dir / "schedule.csv");
    CHECK(std::count(weights.begin(), weights.end(), '\n') == 1001);  // header + T rows
    CHECK(std::count(schedule.begin(), schedule.end(), '\n') == 101);
    CHECK(weights.rfind("t,W_d,W_p,W,cum,W_d_norm,W_p_norm,W_norm\n", 0) == 0);
    CHECK(schedule.rfind("i,t\n", 0) == 0);
    // Normalized columns span [0, 1]: W_d_norm is 0 at t=1 and 1 at t=T.
    std::stringstream ss(weights);
    std::string line;
    std::getline(ss, line);
    std::getline(ss, line);
    CHECK(line.find(",0,") != std::string::npos);
    // Last schedule row reaches t = 1.
    auto tail = schedule.rfind("100,");
    CHECK(schedule.substr(tail) == "100,1\n");
    fs::remove_all(dir);
}

TEST_CASE("export_schedule with N = 1 emits the single starting step") {
    auto dir = fresh_dir("export1");
    export_schedule(ScheduleKind::ddpm_linear, 100, 50.0, 12.0, 1, dir);
    std::string schedule = slurp(dir / "schedule.csv");
    CHECK(std::count(schedule.begin(), schedule.end(), '\n') == 2);
    fs::remove_all(dir);
}

TEST_CASE("run_experiment produces the full artifact set and is reproducible") {
    auto dir_a = fresh_dir("run_a");
    auto dir_b = fresh_dir("run_b");
    auto cfg_a = parse_config(minimal_config(dir_a.string()));
    auto cfg_b = parse_config(minimal_config(dir_b.string()));

    auto res = run_experiment(cfg_a, 2);
    CHECK(res.completed == 6);
    CHECK(res.divergent == 0);
    for (const char* f :
         {"config.json", "manifest.json", "uniform_diversity.json", "uniform_convergence.json",
          "tp_diversity.json", "tp_convergence.json", "tp_weights.csv"})
        CHECK(fs::exists(dir_a / f));
    for (const char* name : {"uniform", "tp"})
        for (int seed : {1, 2, 3})
            CHECK(fs::exists(dir_a /
                             ("trajectory_" + std::string(name) + "_" + std::to_string(seed) +
                              ".csv")));

    std::string manifest = slurp(dir_a / "manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("wall_clock_seconds") != std::string::npos);
    CHECK(manifest.find("completed_runs") != std::string::npos);

    // A second run of the same config is byte-identical on every trajectory,
    // regardless of worker count.
    run_experiment(cfg_b, 1);
    for (const char* name : {"uniform", "tp"})
        for (int seed : {1, 2, 3}) {
            std::string f =
                "trajectory_" + std::string(name) + "_" + std::to_string(seed) + ".csv";
            CHECK(slurp(dir_a / f) == slurp(dir_b / f));
        }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("report_run_dir rebuilds reports from the CSVs alone") {
    auto dir = fresh_dir("report");
    auto cfg = parse_config(minimal_config(dir.string()));
    run_experiment(cfg, 2);
    std::string before = slurp(dir / "tp_diversity.json");
    fs::remove(dir / "tp_diversity.json");
    fs::remove(dir / "tp_convergence.json");
    report_run_dir(dir);
    CHECK(slurp(dir / "tp_diversity.json") == before);
    fs::remove_all(dir);
}

TEST_CASE("config_hash is stable and collision-sensitive") {
    std::string a = minimal_config("/tmp/x");
    CHECK(config_hash(a) == config_hash(a));
    CHECK(config_hash(a) != config_hash(a + " "));
}

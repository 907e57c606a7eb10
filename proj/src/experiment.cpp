#include "sdlab/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sdlab {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + ctx);
}

template <typename T>
T get_or(const json& obj, const char* key, T def) {
    if (obj.contains(key)) return obj.at(key).get<T>();
    return def;
}

GaussianMixture parse_mixture(const json& j) {
    if (j.is_string()) return mixture_preset(j.get<std::string>());
    reject_unknown_keys(j, {"weights", "means", "variances"}, "mixture");
    GaussianMixture m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.means = j.at("means").get<std::vector<Vec>>();
    m.variances = j.at("variances").get<std::vector<double>>();
    m.validate();
    return m;
}

SamplerSpec parse_sampler(const json& j, const NoiseSchedule& schedule) {
    std::string type = j.at("type").get<std::string>();
    SamplerSpec spec;
    spec.name = get_or<std::string>(j, "name", type);
    int T = schedule.T;
    if (type == "uniform_random") {
        reject_unknown_keys(j, {"type", "name", "t_min", "t_max"}, "sampler " + type);
        spec.sampler = UniformRandomSampler{get_or(j, "t_min", 1), get_or(j, "t_max", T)};
    } else if (type == "tp") {
        reject_unknown_keys(j, {"type", "name", "m", "s"}, "sampler " + type);
        spec.sampler = TpSampler{
            build_prior_weight(schedule, j.at("m").get<double>(), j.at("s").get<double>())};
    } else if (type == "linear") {
        reject_unknown_keys(j, {"type", "name"}, "sampler " + type);
        spec.sampler = LinearSampler{T};
    } else if (type == "truncated_linear") {
        reject_unknown_keys(j, {"type", "name", "floor"}, "sampler " + type);
        int floor_t = j.at("floor").get<int>();
        if (floor_t < 1 || floor_t > T)
            throw std::invalid_argument("config: truncated_linear floor out of range");
        spec.sampler = TruncatedLinearSampler{T, floor_t};
    } else if (type == "wp_only") {
        reject_unknown_keys(j, {"type", "name", "m", "s"}, "sampler " + type);
        spec.sampler = WpOnlySampler{build_prior_weight_wp_only(
            schedule, j.at("m").get<double>(), j.at("s").get<double>())};
    } else if (type == "wd_only") {
        reject_unknown_keys(j, {"type", "name"}, "sampler " + type);
        spec.sampler = WdOnlySampler{build_prior_weight_wd_only(schedule)};
    } else if (type == "constant") {
        reject_unknown_keys(j, {"type", "name", "t"}, "sampler " + type);
        int t = j.at("t").get<int>();
        if (t < 1 || t > T) throw std::invalid_argument("config: constant t out of range");
        spec.sampler = ConstantSampler{t};
    } else if (type == "power_annealed") {
        reject_unknown_keys(j, {"type", "name", "t_max", "t_min", "p"}, "sampler " + type);
        auto s = PowerAnnealedSampler{get_or(j, "t_max", std::min(980, T)),
                                      get_or(j, "t_min", std::min(20, T)), get_or(j, "p", 0.5)};
        if (s.t_min > s.t_max || s.t_min < 1 || s.t_max > T || s.p <= 0.0)
            throw std::invalid_argument("config: power_annealed parameters malformed");
        spec.sampler = s;
    } else if (type == "two_stage") {
        reject_unknown_keys(j, {"type", "name", "boundary_fraction", "stage1", "stage2"},
                            "sampler " + type);
        TwoStageSampler s;
        s.boundary_fraction = get_or(j, "boundary_fraction", 0.5);
        auto s1 = get_or<std::vector<int>>(j, "stage1", {std::min(20, T), std::min(980, T)});
        auto s2 = get_or<std::vector<int>>(j, "stage2", {std::min(20, T), std::min(500, T)});
        if (s1.size() != 2 || s2.size() != 2)
            throw std::invalid_argument("config: two_stage ranges must be [min, max]");
        s.stage1_min = s1[0];
        s.stage1_max = s1[1];
        s.stage2_min = s2[0];
        s.stage2_max = s2[1];
        if (s.boundary_fraction <= 0.0 || s.boundary_fraction >= 1.0 || s.stage1_min < 1 ||
            s.stage2_min < 1 || s.stage1_min > s.stage1_max || s.stage2_min > s.stage2_max ||
            s.stage1_max > T || s.stage2_max > T)
            throw std::invalid_argument("config: two_stage parameters malformed");
        spec.sampler = s;
    } else {
        throw std::invalid_argument("config: unknown sampler type '" + type + "'");
    }
    return spec;
}

Theta0Spec parse_theta0(const json& j) {
    Theta0Spec spec;
    std::string type = j.at("type").get<std::string>();
    if (type == "origin") {
        reject_unknown_keys(j, {"type", "dim"}, "theta0");
        spec.kind = Theta0Spec::Kind::origin;
        spec.dim = j.at("dim").get<int>();
        if (spec.dim < 1) throw std::invalid_argument("config: theta0 dim must be positive");
    } else if (type == "grey_grid") {
        reject_unknown_keys(j, {"type", "H", "W"}, "theta0");
        spec.kind = Theta0Spec::Kind::grey_grid;
        spec.H = j.at("H").get<int>();
        spec.W = j.at("W").get<int>();
        if (spec.H < 1 || spec.W < 1)
            throw std::invalid_argument("config: theta0 grid must be positive");
    } else if (type == "explicit") {
        reject_unknown_keys(j, {"type", "values"}, "theta0");
        spec.kind = Theta0Spec::Kind::explicit_vector;
        spec.values = j.at("values").get<Vec>();
    } else if (type == "jittered") {
        reject_unknown_keys(j, {"type", "base", "amplitude"}, "theta0");
        spec.kind = Theta0Spec::Kind::jittered;
        spec.values = j.at("base").get<Vec>();
        spec.amplitude = j.at("amplitude").get<double>();
        if (spec.amplitude < 0.0)
            throw std::invalid_argument("config: jitter amplitude must be non-negative");
    } else {
        throw std::invalid_argument("config: unknown theta0 type '" + type + "'");
    }
    return spec;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

void write_weight_table(const std::filesystem::path& path, const PriorWeight& pw,
                        bool normalized_columns) {
    auto out = open_out(path);
    out << "t,W_d,W_p,W,cum";
    if (normalized_columns) out << ",W_d_norm,W_p_norm,W_norm";
    out << "\n";
    auto minmax = [](const std::vector<double>& v) {
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return std::pair<double, double>(*lo, *hi);
    };
    auto [dlo, dhi] = minmax(pw.W_d);
    auto [plo, phi] = minmax(pw.W_p);
    auto [wlo, whi] = minmax(pw.W);
    auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
    for (int t = 1; t <= pw.T; ++t) {
        out << t << ',' << format_double(pw.W_d[t - 1]) << ',' << format_double(pw.W_p[t - 1])
            << ',' << format_double(pw.W[t - 1]) << ',' << format_double(pw.cum[t - 1]);
        if (normalized_columns)
            out << ',' << format_double(norm(pw.W_d[t - 1], dlo, dhi)) << ','
                << format_double(norm(pw.W_p[t - 1], plo, phi)) << ','
                << format_double(norm(pw.W[t - 1], wlo, whi));
        out << "\n";
    }
}

json diversity_json(const std::string& sampler, const DiversityReport& rep) {
    return json{{"sampler", sampler},
                {"n_seeds", rep.n_seeds},
                {"mode_counts", rep.mode_counts},
                {"unconverged", rep.unconverged},
                {"entropy", rep.entropy}};
}

json convergence_json(const std::string& sampler, const ConvergenceReport& rep) {
    return json{{"sampler", sampler},   {"n_runs", rep.n_runs}, {"censored", rep.censored},
                {"median", rep.median}, {"q1", rep.q1},         {"q3", rep.q3},
                {"first_passage", rep.first_passage}};
}

const PriorWeight* sampler_prior(const TimestepSampler& s) {
    if (auto* tp = std::get_if<TpSampler>(&s)) return &tp->prior;
    if (auto* wp = std::get_if<WpOnlySampler>(&s)) return &wp->prior;
    if (auto* wd = std::get_if<WdOnlySampler>(&s)) return &wd->prior;
    return nullptr;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t config_hash(const std::string& canonical_json) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : canonical_json) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

Vec Theta0Spec::realize(std::uint64_t jitter_seed) const {
    switch (kind) {
        case Kind::origin:
            return Vec(dim, 0.0);
        case Kind::grey_grid:
            return Vec(static_cast<std::size_t>(H) * W, 0.5);
        case Kind::explicit_vector:
            return values;
        case Kind::jittered: {
            Rng rng(jitter_seed);
            std::uniform_real_distribution<double> u(-amplitude, amplitude);
            Vec out = values;
            for (auto& x : out) x += u(rng);
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j = json::parse(json_text);
    reject_unknown_keys(
        j, {"schedule", "mixture", "samplers", "sds", "seeds", "theta0", "output_dir", "tau"},
        "top level");
    ExperimentConfig cfg;

    const json& sj = j.at("schedule");
    reject_unknown_keys(sj, {"kind", "T"}, "schedule");
    std::string kind = sj.at("kind").get<std::string>();
    if (kind == "ddpm_linear")
        cfg.schedule_kind = ScheduleKind::ddpm_linear;
    else if (kind == "cosine")
        cfg.schedule_kind = ScheduleKind::cosine;
    else
        throw std::invalid_argument("config: schedule.kind must be ddpm_linear or cosine");
    cfg.T = sj.at("T").get<int>();
    if (cfg.T < 2) throw std::invalid_argument("config: schedule.T must be >= 2");
    NoiseSchedule schedule = build_schedule(cfg.schedule_kind, cfg.T);

    cfg.mixture = parse_mixture(j.at("mixture"));

    if (!j.at("samplers").is_array() || j.at("samplers").empty())
        throw std::invalid_argument("config: samplers must be a non-empty list");
    std::set<std::string> names;
    for (const auto& js : j.at("samplers")) {
        SamplerSpec spec = parse_sampler(js, schedule);
        if (!names.insert(spec.name).second)
            throw std::invalid_argument("config: duplicate sampler name '" + spec.name + "'");
        cfg.samplers.push_back(std::move(spec));
    }

    const json& dj = j.at("sds");
    reject_unknown_keys(dj, {"lr", "N", "w_rule", "grad_samples", "seed"}, "sds");
    cfg.sds.lr = dj.at("lr").get<double>();
    cfg.sds.N = dj.at("N").get<int>();
    std::string wr = get_or<std::string>(dj, "w_rule", "one");
    if (wr == "one")
        cfg.sds.w_rule = WRule::one;
    else if (wr == "sqrt_inv_snr")
        cfg.sds.w_rule = WRule::sqrt_inv_snr;
    else
        throw std::invalid_argument("config: sds.w_rule must be one or sqrt_inv_snr");
    cfg.sds.grad_samples = get_or(dj, "grad_samples", 1);
    cfg.sds.seed = get_or<std::uint64_t>(dj, "seed", 0);
    cfg.sds.validate();

    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
        throw std::invalid_argument("config: seeds must be distinct");

    cfg.theta0 = parse_theta0(j.at("theta0"));
    if (static_cast<int>(cfg.theta0.realize(0).size()) != cfg.mixture.dim())
        throw std::invalid_argument("config: theta0 dimension does not match the mixture");

    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.tau = get_or(j, "tau", 0.2);
    if (cfg.tau <= 0.0) throw std::invalid_argument("config: tau must be positive");

    cfg.canonical_json = j.dump(2);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec) {
    auto out = open_out(path);
    int K = rec.rows.empty() ? 0 : static_cast<int>(rec.rows[0].dist_to_modes.size());
    out << "run_id,seed,sampler,i,t,grad_norm,x0_loss";
    for (int k = 1; k <= K; ++k) out << ",dist_mode_" << k;
    out << "\n";
    std::string run_id = rec.sampler_name + "_" + std::to_string(rec.seed);
    for (const auto& row : rec.rows) {
        out << run_id << ',' << rec.seed << ',' << rec.sampler_name << ',' << row.i << ','
            << row.t << ',' << format_double(row.grad_norm) << ',' << format_double(row.x0_loss);
        for (double d : row.dist_to_modes) out << ',' << format_double(d);
        out << "\n";
    }
}

std::vector<TrajectoryRecord> read_trajectory_csvs(const std::filesystem::path& dir,
                                                   const std::string& sampler_name) {
    std::vector<std::filesystem::path> files;
    std::string prefix = "trajectory_" + sampler_name + "_";
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<TrajectoryRecord> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw std::runtime_error("cannot open trajectory: " + f.string());
        std::string line;
        std::getline(in, line);  // header
        TrajectoryRecord rec;
        rec.sampler_name = sampler_name;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string field;
            TrajectoryRow row;
            std::getline(ss, field, ',');  // run_id
            std::getline(ss, field, ',');
            rec.seed = std::stoull(field);
            std::getline(ss, field, ',');  // sampler
            std::getline(ss, field, ',');
            row.i = std::stoi(field);
            std::getline(ss, field, ',');
            row.t = std::stoi(field);
            std::getline(ss, field, ',');
            row.grad_norm = std::stod(field);
            std::getline(ss, field, ',');
            row.x0_loss = std::stod(field);
            while (std::getline(ss, field, ',')) row.dist_to_modes.push_back(std::stod(field));
            rec.rows.push_back(std::move(row));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

RunResult run_experiment(const ExperimentConfig& config, int workers) {
    auto start = std::chrono::steady_clock::now();
    std::filesystem::path out_dir = config.output_dir;
    if (const char* env = std::getenv("SDLAB_OUTPUT_DIR")) out_dir = env;
    std::filesystem::create_directories(out_dir);

    open_out(out_dir / "config.json") << config.canonical_json << "\n";

    NoiseSchedule schedule = build_schedule(config.schedule_kind, config.T);
    OracleDenoiser denoiser(config.mixture, schedule);

    struct Job {
        const SamplerSpec* sampler;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& s : config.samplers)
        for (auto seed : config.seeds) jobs.push_back({&s, seed});

    std::vector<TrajectoryRecord> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    std::vector<std::string> files;
    auto worker = [&] {
        for (;;) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) return;
            const Job& job = jobs[idx];
            SdsConfig run_cfg = config.sds;
            run_cfg.seed = derive_seed(config.sds.seed, job.sampler->name, job.seed);
            Vec theta0 = config.theta0.realize(
                derive_seed(config.sds.seed, job.sampler->name + "/theta0", job.seed));
            TrajectoryRecord rec = optimize(schedule, denoiser, config.mixture,
                                            job.sampler->sampler, theta0, run_cfg,
                                            job.sampler->name);
            rec.seed = job.seed;  // report the sweep seed, not the derived stream seed
            std::string fname =
                "trajectory_" + job.sampler->name + "_" + std::to_string(job.seed) + ".csv";
            write_trajectory_csv(out_dir / fname, rec);
            {
                std::lock_guard<std::mutex> lock(io_mutex);
                files.push_back(fname);
            }
            results[idx] = std::move(rec);
        }
    };
    workers = std::max(1, workers);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    RunResult rr;
    rr.output_dir = out_dir;
    json divergent = json::array();
    for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
        if (results[idx].diverged()) {
            rr.divergent++;
            divergent.push_back(json{{"sampler", jobs[idx].sampler->name},
                                     {"seed", jobs[idx].seed},
                                     {"iteration", results[idx].divergence->iteration},
                                     {"t", results[idx].divergence->t}});
        } else {
            rr.completed++;
        }
    }

    // Per-sampler reports and schedule tables.
    std::size_t pos = 0;
    for (const auto& s : config.samplers) {
        std::vector<TrajectoryRecord> group(results.begin() + pos,
                                            results.begin() + pos + config.seeds.size());
        pos += config.seeds.size();
        auto div = mode_coverage(group, config.mixture, config.tau);
        auto conv = convergence_stats(group, config.mixture, config.tau);
        std::string dn = s.name + "_diversity.json";
        std::string cn = s.name + "_convergence.json";
        open_out(out_dir / dn) << diversity_json(s.name, div).dump(2) << "\n";
        open_out(out_dir / cn) << convergence_json(s.name, conv).dump(2) << "\n";
        files.push_back(dn);
        files.push_back(cn);
        if (const PriorWeight* pw = sampler_prior(s.sampler)) {
            std::string wn = s.name + "_weights.csv";
            write_weight_table(out_dir / wn, *pw, false);
            files.push_back(wn);
        }
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::sort(files.begin(), files.end());
    json manifest{{"config_hash", config_hash(config.canonical_json)},
                  {"artifact_version", "0.1.0"},
                  {"wall_clock_seconds", wall},
                  {"files", files},
                  {"completed_runs", rr.completed},
                  {"divergent_runs", divergent}};
    open_out(out_dir / "manifest.json") << manifest.dump(2) << "\n";
    return rr;
}

void export_schedule(ScheduleKind kind, int T, double m, double s, int N,
                     const std::filesystem::path& out_dir) {
    if (N < 1) throw std::invalid_argument("export_schedule: N must be >= 1");
    std::filesystem::create_directories(out_dir);
    NoiseSchedule schedule = build_schedule(kind, T);
    PriorWeight pw = build_prior_weight(schedule, m, s);
    write_weight_table(out_dir / "weights.csv", pw, true);
    auto out = open_out(out_dir / "schedule.csv");
    out << "i,t\n";
    for (int i = 1; i <= N; ++i) out << i << ',' << schedule_timestep(pw, i, N) << "\n";
}

void report_run_dir(const std::filesystem::path& run_dir) {
    ExperimentConfig cfg = load_config(run_dir / "config.json");
    for (const auto& s : cfg.samplers) {
        auto group = read_trajectory_csvs(run_dir, s.name);
        if (group.empty()) throw std::runtime_error("no trajectories for sampler " + s.name);
        auto div = mode_coverage(group, cfg.mixture, cfg.tau);
        auto conv = convergence_stats(group, cfg.mixture, cfg.tau);
        open_out(run_dir / (s.name + "_diversity.json"))
            << diversity_json(s.name, div).dump(2) << "\n";
        open_out(run_dir / (s.name + "_convergence.json"))
            << convergence_json(s.name, conv).dump(2) << "\n";
        std::printf("%s: %d/%d converged, entropy %.4f, median first-passage %.1f (censored %d)\n",
                    s.name.c_str(), div.n_seeds - div.unconverged, div.n_seeds, div.entropy,
                    conv.median, conv.censored);
    }
}

void write_spectrum_files(const SpectrumReport& rep, const std::filesystem::path& out_prefix) {
    auto csv = open_out(out_prefix.string() + "_spectrum.csv");
    csv << "bin,power\n";
    for (int b = 0; b < rep.bins; ++b)
        csv << b << ',' << format_double(rep.radial_power[b]) << "\n";
    json j{{"bins", rep.bins},
           {"radial_power", rep.radial_power},
           {"low_frequency_fraction", rep.low_frequency_fraction},
           {"total_power", rep.total_power}};
    open_out(out_prefix.string() + "_spectrum.json") << j.dump(2) << "\n";
}

}  // namespace sdlab

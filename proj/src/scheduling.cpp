#include "sdlab/scheduling.hpp"

#include <algorithm>
#include <cmath>

namespace sdlab {

namespace {

// Shared table builder: the unnormalized weight is exp(log_wd + log_wp),
// computed max-shifted so sharp (m, s) configurations stay positive.
PriorWeight build_tables(const NoiseSchedule& schedule, double m, double s, bool use_wd,
                         bool use_wp) {
    PriorWeight pw;
    pw.m = m;
    pw.s = s;
    pw.T = schedule.T;
    int T = schedule.T;
    pw.W_d.resize(T);
    pw.W_p.resize(T);
    pw.W.resize(T);
    pw.cum.resize(T);
    std::vector<double> logw(T);
    for (int t = 1; t <= T; ++t) {
        double ab = schedule.alpha_bar(t);
        pw.W_d[t - 1] = std::sqrt((1.0 - ab) / ab);
        double z = (t - m) / s;
        pw.W_p[t - 1] = std::exp(-0.5 * z * z);
        double lw = 0.0;
        if (use_wd) lw += 0.5 * (std::log1p(-ab) - std::log(ab));
        if (use_wp) lw += -0.5 * z * z;
        logw[t - 1] = lw;
    }
    double mx = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        pw.W[t] = std::exp(logw[t] - mx);
        total += pw.W[t];
    }
    for (int t = 0; t < T; ++t) pw.W[t] /= total;
    double suffix = 0.0;
    for (int t = T - 1; t >= 0; --t) {
        suffix += pw.W[t];
        pw.cum[t] = suffix;
    }
    return pw;
}

int linear_descent(int T, int i, int N) {
    if (N == 1) return T;
    return static_cast<int>(std::lround(T - (i - 1) * double(T - 1) / double(N - 1)));
}

void check_iter(int i, int N) {
    if (N < 1 || i < 1 || i > N) throw std::invalid_argument("iteration index out of range");
}

}  // namespace

PriorWeight build_prior_weight(const NoiseSchedule& schedule, double m, double s) {
    if (s <= 0.0) throw std::invalid_argument("build_prior_weight: s must be positive");
    return build_tables(schedule, m, s, true, true);
}

PriorWeight build_prior_weight_wp_only(const NoiseSchedule& schedule, double m, double s) {
    if (s <= 0.0) throw std::invalid_argument("build_prior_weight: s must be positive");
    return build_tables(schedule, m, s, false, true);
}

PriorWeight build_prior_weight_wd_only(const NoiseSchedule& schedule) {
    return build_tables(schedule, schedule.T / 2.0, 1.0, true, false);
}

PriorWeight build_prior_weight_flat(const NoiseSchedule& schedule) {
    return build_tables(schedule, schedule.T / 2.0, 1.0, false, false);
}

int schedule_timestep(const PriorWeight& prior, int i, int N) {
    check_iter(i, N);
    double target = double(i) / double(N);
    const auto& cum = prior.cum;
    int T = prior.T;
    // cum is strictly decreasing; find the first index with cum[idx] <= target.
    auto it = std::partition_point(cum.begin(), cum.end(),
                                   [target](double c) { return c > target; });
    int j = static_cast<int>(it - cum.begin());
    if (j >= T) return T;    // target below the smallest suffix mass
    if (j == 0) return 1;
    // Two bracketing candidates: t' = j (cum[j-1] > target) and t' = j + 1
    // (cum[j] <= target). Ties go to the larger t', i.e. j + 1.
    double d_hi = cum[j - 1] - target;
    double d_lo = target - cum[j];
    return (d_lo <= d_hi) ? j + 1 : j;
}

int sample_timestep(const TimestepSampler& sampler, int i, int N, Rng& rng) {
    check_iter(i, N);
    return std::visit(
        [&](const auto& s) -> int {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, UniformRandomSampler>) {
                if (s.t_min > s.t_max || s.t_min < 1)
                    throw std::invalid_argument("uniform_random: malformed range");
                return std::uniform_int_distribution<int>(s.t_min, s.t_max)(rng);
            } else if constexpr (std::is_same_v<S, TpSampler>) {
                return schedule_timestep(s.prior, i, N);
            } else if constexpr (std::is_same_v<S, LinearSampler>) {
                return linear_descent(s.T, i, N);
            } else if constexpr (std::is_same_v<S, TruncatedLinearSampler>) {
                if (s.floor_t > s.T || s.floor_t < 1)
                    throw std::invalid_argument("truncated_linear: malformed floor");
                return std::max(linear_descent(s.T, i, N), s.floor_t);
            } else if constexpr (std::is_same_v<S, WpOnlySampler>) {
                return schedule_timestep(s.prior, i, N);
            } else if constexpr (std::is_same_v<S, WdOnlySampler>) {
                return schedule_timestep(s.prior, i, N);
            } else if constexpr (std::is_same_v<S, ConstantSampler>) {
                return s.t_fixed;
            } else if constexpr (std::is_same_v<S, PowerAnnealedSampler>) {
                if (s.t_min > s.t_max || s.t_min < 1 || s.p <= 0.0)
                    throw std::invalid_argument("power_annealed: malformed parameters");
                double t = s.t_max - (s.t_max - s.t_min) * std::pow(double(i) / N, s.p);
                return std::clamp(static_cast<int>(std::lround(t)), s.t_min, s.t_max);
            } else {
                static_assert(std::is_same_v<S, TwoStageSampler>);
                if (s.stage1_min > s.stage1_max || s.stage2_min > s.stage2_max ||
                    s.stage1_min < 1 || s.stage2_min < 1)
                    throw std::invalid_argument("two_stage: malformed range");
                bool first = double(i) / N <= s.boundary_fraction;
                int lo = first ? s.stage1_min : s.stage2_min;
                int hi = first ? s.stage1_max : s.stage2_max;
                return std::uniform_int_distribution<int>(lo, hi)(rng);
            }
        },
        sampler);
}

bool sampler_is_deterministic(const TimestepSampler& sampler) {
    return !std::holds_alternative<UniformRandomSampler>(sampler) &&
           !std::holds_alternative<TwoStageSampler>(sampler);
}

}  // namespace sdlab

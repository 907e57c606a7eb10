#pragma once

#include <optional>
#include <string>
#include <variant>

#include "sdlab/diffusion.hpp"

namespace sdlab {

// Normalized prior weight W(t) = W_d(t) * W_p(t) / Z over t in {1..T}, with
// W_d = sqrt((1 - alpha_bar) / alpha_bar) and W_p a Gaussian bump at m of
// width s. cum[t'-1] = sum_{t >= t'} W(t) is the suffix-mass table used by
// the non-increasing timestep schedule.
struct PriorWeight {
    double m = 0.0;
    double s = 0.0;
    int T = 0;
    std::vector<double> W_d;
    std::vector<double> W_p;
    std::vector<double> W;    // normalized, sums to 1
    std::vector<double> cum;  // strictly decreasing, cum[0] == 1
};

PriorWeight build_prior_weight(const NoiseSchedule& schedule, double m, double s);

// Ablation builders: the omitted factor is replaced by 1 before normalizing.
PriorWeight build_prior_weight_wp_only(const NoiseSchedule& schedule, double m, double s);
PriorWeight build_prior_weight_wd_only(const NoiseSchedule& schedule);
// Flat W(t) = 1/T; induces the linear descent through the same argmin rule.
PriorWeight build_prior_weight_flat(const NoiseSchedule& schedule);

// t(i) = argmin_{t'} |cum[t'] - i/N|, ties broken toward the larger t'.
int schedule_timestep(const PriorWeight& prior, int i, int N);

// Timestep samplers. All variants map (i, N, rng) to t in {1..T}; the
// deterministic ones ignore the rng.
struct UniformRandomSampler {
    int t_min, t_max;
};
struct TpSampler {
    PriorWeight prior;
};
struct LinearSampler {
    int T;
};
struct TruncatedLinearSampler {
    int T;
    int floor_t;
};
struct WpOnlySampler {
    PriorWeight prior;  // built with W_d replaced by 1
};
struct WdOnlySampler {
    PriorWeight prior;  // built with W_p replaced by 1
};
struct ConstantSampler {
    int t_fixed;
};
struct PowerAnnealedSampler {
    int t_max, t_min;
    double p;
};
struct TwoStageSampler {
    double boundary_fraction;
    int stage1_min, stage1_max;
    int stage2_min, stage2_max;
};

using TimestepSampler =
    std::variant<UniformRandomSampler, TpSampler, LinearSampler, TruncatedLinearSampler,
                 WpOnlySampler, WdOnlySampler, ConstantSampler, PowerAnnealedSampler,
                 TwoStageSampler>;

int sample_timestep(const TimestepSampler& sampler, int i, int N, Rng& rng);

bool sampler_is_deterministic(const TimestepSampler& sampler);

}  // namespace sdlab

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "sdlab/oracle.hpp"
#include "sdlab/scheduling.hpp"

namespace sdlab {

enum class WRule { one, sqrt_inv_snr };

struct SdsConfig {
    WRule w_rule = WRule::one;
    double lr = 0.0;
    int N = 0;
    int grad_samples = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (lr <= 0.0) throw std::invalid_argument("sds: lr must be positive");
        if (N < 1) throw std::invalid_argument("sds: N must be >= 1");
        if (grad_samples < 1) throw std::invalid_argument("sds: grad_samples must be >= 1");
    }
};

struct DivergenceError : std::runtime_error {
    int iteration;
    int t;
    double grad_norm;
    DivergenceError(int i, int t_, double norm)
        : std::runtime_error("sds gradient diverged at i=" + std::to_string(i) +
                             ", t=" + std::to_string(t_)),
          iteration(i),
          t(t_),
          grad_norm(norm) {}
};

struct TrajectoryRow {
    int i = 0;
    int t = 0;
    double grad_norm = 0.0;
    std::optional<double> grad_variance_est;  // present when grad_samples >= 2
    double x0_loss = 0.0;
    std::vector<double> dist_to_modes;  // Euclidean distance to each mixture mean
};

struct TrajectoryRecord {
    std::string sampler_name;
    std::uint64_t seed = 0;
    std::vector<TrajectoryRow> rows;
    Vec final_theta;
    // Set when the run aborted on a non-finite parameter state.
    std::optional<DivergenceError> divergence;
    bool diverged() const { return divergence.has_value(); }
};

double w_factor(WRule rule, const NoiseSchedule& schedule, int t);

// Monte-Carlo SDS gradient at fixed theta: averages w(t) * (eps_pred - eps)
// over config.grad_samples fresh noisings. The generator is the identity, so
// dx/dtheta drops out.
Vec sds_gradient(const NoiseSchedule& schedule, const Denoiser& denoiser, const Vec& theta, int t,
                 const SdsConfig& config, Rng& rng);

// x0-form loss: 0.5 * ||theta - stop_grad(x0_hat)||^2 with w'(t) = 1.
double sds_loss_x0(const NoiseSchedule& schedule, const Denoiser& denoiser, const Vec& theta,
                   int t, Rng& rng);

// Plain gradient-descent distillation loop. A divergent run returns the
// trajectory accumulated up to the failure point instead of throwing.
TrajectoryRecord optimize(const NoiseSchedule& schedule, const Denoiser& denoiser,
                          const GaussianMixture& mixture, const TimestepSampler& sampler,
                          const Vec& theta0, const SdsConfig& config,
                          const std::string& sampler_name = "");

// Per-timestep Monte-Carlo trace variance (mean of per-dim variances) of the
// w=1 SDS gradient at fixed theta.
std::vector<double> gradient_variance_sweep(const NoiseSchedule& schedule,
                                            const Denoiser& denoiser, const Vec& theta,
                                            const std::vector<int>& t_list, int samples,
                                            Rng& rng);

}  // namespace sdlab

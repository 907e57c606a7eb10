#include "sdlab/sds.hpp"

#include <cmath>

namespace sdlab {

namespace {

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double norm2(const Vec& v) {
    double q = 0.0;
    for (double x : v) q += x * x;
    return std::sqrt(q);
}

struct StepResult {
    Vec grad;
    double x0_loss = 0.0;
    std::optional<double> grad_variance_est;
};

StepResult sds_step(const NoiseSchedule& schedule, const Denoiser& denoiser, const Vec& theta,
                    int t, const SdsConfig& config, Rng& rng, int iteration) {
    schedule.check(t);
    double w = w_factor(config.w_rule, schedule, t);
    std::size_t d = theta.size();
    StepResult out;
    out.grad.assign(d, 0.0);
    Vec sumsq(d, 0.0);
    for (int s = 0; s < config.grad_samples; ++s) {
        NoisedSample ns = noise_sample(schedule, theta, t, rng);
        Vec pred = denoiser.predict_eps(ns.x_t, t);
        for (std::size_t k = 0; k < d; ++k) {
            double g = w * (pred[k] - ns.eps[k]);
            out.grad[k] += g;
            sumsq[k] += g * g;
        }
        if (s == 0) {
            Vec x0 = estimate_x0(schedule, ns.x_t, pred, t);
            double q = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double r = theta[k] - x0[k];
                q += r * r;
            }
            out.x0_loss = 0.5 * q;
        }
    }
    for (std::size_t k = 0; k < d; ++k) out.grad[k] /= config.grad_samples;
    if (config.grad_samples >= 2) {
        double var = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double mean = out.grad[k];
            var += (sumsq[k] - config.grad_samples * mean * mean) / (config.grad_samples - 1);
        }
        out.grad_variance_est = var / double(d);
    }
    if (!all_finite(out.grad))
        throw DivergenceError(iteration, t, norm2(out.grad));
    return out;
}

}  // namespace

double w_factor(WRule rule, const NoiseSchedule& schedule, int t) {
    if (rule == WRule::one) return 1.0;
    double ab = schedule.alpha_bar(t);
    return std::sqrt((1.0 - ab) / ab);
}

Vec sds_gradient(const NoiseSchedule& schedule, const Denoiser& denoiser, const Vec& theta, int t,
                 const SdsConfig& config, Rng& rng) {
    return sds_step(schedule, denoiser, theta, t, config, rng, 0).grad;
}

double sds_loss_x0(const NoiseSchedule& schedule, const Denoiser& denoiser, const Vec& theta,
                   int t, Rng& rng) {
    NoisedSample ns = noise_sample(schedule, theta, t, rng);
    Vec pred = denoiser.predict_eps(ns.x_t, t);
    Vec x0 = estimate_x0(schedule, ns.x_t, pred, t);
    double q = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        double r = theta[k] - x0[k];
        q += r * r;
    }
    return 0.5 * q;
}

TrajectoryRecord optimize(const NoiseSchedule& schedule, const Denoiser& denoiser,
                          const GaussianMixture& mixture, const TimestepSampler& sampler,
                          const Vec& theta0, const SdsConfig& config,
                          const std::string& sampler_name) {
    config.validate();
    if (!all_finite(theta0)) throw std::invalid_argument("optimize: theta0 must be finite");

    TrajectoryRecord rec;
    rec.sampler_name = sampler_name;
    rec.seed = config.seed;
    rec.rows.reserve(config.N);
    Rng rng(config.seed);
    Vec theta = theta0;
    for (int i = 1; i <= config.N; ++i) {
        int t = sample_timestep(sampler, i, config.N, rng);
        StepResult step;
        try {
            step = sds_step(schedule, denoiser, theta, t, config, rng, i);
        } catch (const DivergenceError& e) {
            rec.divergence = e;
            break;
        }
        for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= config.lr * step.grad[k];
        TrajectoryRow row;
        row.i = i;
        row.t = t;
        row.grad_norm = norm2(step.grad);
        row.grad_variance_est = step.grad_variance_est;
        row.x0_loss = step.x0_loss;
        row.dist_to_modes.resize(mixture.components());
        for (int k = 0; k < mixture.components(); ++k) {
            double q = 0.0;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                double r = theta[j] - mixture.means[k][j];
                q += r * r;
            }
            row.dist_to_modes[k] = std::sqrt(q);
        }
        rec.rows.push_back(std::move(row));
        if (!all_finite(theta)) {
            rec.divergence = DivergenceError(i, t, rec.rows.back().grad_norm);
            break;
        }
    }
    rec.final_theta = theta;
    return rec;
}

std::vector<double> gradient_variance_sweep(const NoiseSchedule& schedule,
                                            const Denoiser& denoiser, const Vec& theta,
                                            const std::vector<int>& t_list, int samples,
                                            Rng& rng) {
    if (samples < 2) throw std::invalid_argument("gradient_variance_sweep: samples must be >= 2");
    std::size_t d = theta.size();
    std::vector<double> out;
    out.reserve(t_list.size());
    for (int t : t_list) {
        Vec sum(d, 0.0), sumsq(d, 0.0);
        for (int s = 0; s < samples; ++s) {
            NoisedSample ns = noise_sample(schedule, theta, t, rng);
            Vec pred = denoiser.predict_eps(ns.x_t, t);
            for (std::size_t k = 0; k < d; ++k) {
                double g = pred[k] - ns.eps[k];
                sum[k] += g;
                sumsq[k] += g * g;
            }
        }
        double var = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double mean = sum[k] / samples;
            var += (sumsq[k] - samples * mean * mean) / (samples - 1);
        }
        out.push_back(var / double(d));
    }
    return out;
}

}  // namespace sdlab

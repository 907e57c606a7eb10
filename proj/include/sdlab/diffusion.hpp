#pragma once

#include <stdexcept>
#include <vector>

#include "sdlab/rng.hpp"

namespace sdlab {

using Vec = std::vector<double>;

enum class ScheduleKind { ddpm_linear, cosine };

// Discrete-time noising schedule, 1-based t in {1..T}. alpha_bar(0) == 1 is
// implicit and never stored.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // betas[t-1] = beta_t
    std::vector<double> alphas;      // 1 - beta_t
    std::vector<double> alpha_bars;  // prod_{s<=t} alpha_s

    double beta(int t) const { return betas[check(t) - 1]; }
    double alpha(int t) const { return alphas[check(t) - 1]; }
    double alpha_bar(int t) const { return alpha_bars[check(t) - 1]; }
    double snr(int t) const {
        double ab = alpha_bar(t);
        return ab / (1.0 - ab);
    }

    int check(int t) const {
        if (t < 1 || t > T) throw std::invalid_argument("timestep out of range");
        return t;
    }
};

struct NoisedSample {
    Vec x_t;
    Vec eps;
    int t = 0;
};

// eps-prediction interface. Implementations must be deterministic in
// (x_t, t, condition); the condition is an opaque token the caller threads
// through (the mixture oracle uses it to select a mixture).
class Denoiser {
  public:
    virtual ~Denoiser() = default;
    virtual Vec predict_eps(const Vec& x_t, int t, int condition = 0) const = 0;
};

enum class SigmaRule { sqrt_one_minus_alpha, zero };

NoiseSchedule build_schedule(ScheduleKind kind, int T);

NoisedSample noise_sample(const NoiseSchedule& schedule, const Vec& x, int t, Rng& rng);

// Deterministic variant for tests and reuse: the caller supplies eps.
NoisedSample noise_sample_with(const NoiseSchedule& schedule, const Vec& x, const Vec& eps,
                               int t);

Vec estimate_x0(const NoiseSchedule& schedule, const Vec& x_t, const Vec& eps_pred, int t);

// One reverse step x_t -> x_{t-1}. sigma is forced to 0 at t=1 so the final
// step is deterministic.
Vec ddpm_step(const NoiseSchedule& schedule, const Vec& x_t, int t, const Denoiser& denoiser,
              SigmaRule sigma_rule, Rng& rng, int condition = 0);

// Full ancestral chain from x_T down to x_0.
Vec ancestral_sample(const NoiseSchedule& schedule, int dim, const Denoiser& denoiser,
                     SigmaRule sigma_rule, Rng& rng, int condition = 0);

}  // namespace sdlab

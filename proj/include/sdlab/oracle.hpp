#pragma once

#include <string>

#include "sdlab/diffusion.hpp"

namespace sdlab {

// Isotropic Gaussian mixture: component k is N(means[k], variances[k] * I).
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<double> variances;

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
    void validate() const;

    double nearest_mode_distance(const Vec& x, int* which = nullptr) const;
};

// Built-in test mixtures: "bimodal-far" and "quad".
GaussianMixture mixture_preset(const std::string& name);

// Log-density of the noised mixture at timestep t. Gaussians are closed under
// the forward noising: component k becomes
// N(sqrt(alpha_bar) * mu_k, (alpha_bar * sigma_k^2 + 1 - alpha_bar) * I).
double log_density(const GaussianMixture& mixture, const NoiseSchedule& schedule, const Vec& x_t,
                   int t);

// Bayes-optimal noise prediction: -sqrt(1 - alpha_bar) * grad log p_t(x_t),
// from responsibility-weighted per-component scores.
Vec oracle_eps(const GaussianMixture& mixture, const NoiseSchedule& schedule, const Vec& x_t,
               int t);

// Denoiser adapter around the analytic mixture score.
class OracleDenoiser : public Denoiser {
  public:
    OracleDenoiser(GaussianMixture mixture, const NoiseSchedule& schedule)
        : mixture_(std::move(mixture)), schedule_(&schedule) {
        mixture_.validate();
    }
    Vec predict_eps(const Vec& x_t, int t, int condition = 0) const override {
        (void)condition;
        return oracle_eps(mixture_, *schedule_, x_t, t);
    }
    const GaussianMixture& mixture() const { return mixture_; }

  private:
    GaussianMixture mixture_;
    const NoiseSchedule* schedule_;
};

}  // namespace sdlab

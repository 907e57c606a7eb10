#include "sdlab/diffusion.hpp"

#include <cmath>

namespace sdlab {

NoiseSchedule build_schedule(ScheduleKind kind, int T) {
    if (T < 2) throw std::invalid_argument("build_schedule: T must be >= 2");
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(T);
    if (kind == ScheduleKind::ddpm_linear) {
        const double beta_start = 1e-4;
        const double beta_end = 2e-2;
        for (int t = 1; t <= T; ++t)
            s.betas[t - 1] = beta_start + (beta_end - beta_start) * (t - 1) / double(T - 1);
    } else {
        // Squared-cosine alpha_bar curve, betas clipped to <= 0.999. The
        // tables are rebuilt from the clipped betas so the cumulative-product
        // identity holds exactly.
        const double off = 0.008;
        auto f = [&](double t) {
            double v = std::cos((t / T + off) / (1.0 + off) * M_PI / 2.0);
            return v * v;
        };
        double f0 = f(0.0);
        for (int t = 1; t <= T; ++t) {
            double beta = 1.0 - (f(double(t)) / f0) / (f(double(t - 1)) / f0);
            s.betas[t - 1] = std::min(beta, 0.999);
        }
    }
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        s.alphas[t - 1] = 1.0 - s.betas[t - 1];
        prod *= s.alphas[t - 1];
        s.alpha_bars[t - 1] = prod;
    }
    return s;
}

NoisedSample noise_sample_with(const NoiseSchedule& schedule, const Vec& x, const Vec& eps,
                               int t) {
    schedule.check(t);
    if (x.size() != eps.size()) throw std::invalid_argument("noise_sample: size mismatch");
    double sab = std::sqrt(schedule.alpha_bar(t));
    double somab = std::sqrt(1.0 - schedule.alpha_bar(t));
    NoisedSample out;
    out.t = t;
    out.eps = eps;
    out.x_t.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out.x_t[k] = sab * x[k] + somab * eps[k];
    return out;
}

NoisedSample noise_sample(const NoiseSchedule& schedule, const Vec& x, int t, Rng& rng) {
    return noise_sample_with(schedule, x, draw_normal_vec(rng, x.size()), t);
}

Vec estimate_x0(const NoiseSchedule& schedule, const Vec& x_t, const Vec& eps_pred, int t) {
    schedule.check(t);
    if (x_t.size() != eps_pred.size()) throw std::invalid_argument("estimate_x0: size mismatch");
    double sab = std::sqrt(schedule.alpha_bar(t));
    double somab = std::sqrt(1.0 - schedule.alpha_bar(t));
    Vec x0(x_t.size());
    for (std::size_t k = 0; k < x_t.size(); ++k) x0[k] = (x_t[k] - somab * eps_pred[k]) / sab;
    return x0;
}

Vec ddpm_step(const NoiseSchedule& schedule, const Vec& x_t, int t, const Denoiser& denoiser,
              SigmaRule sigma_rule, Rng& rng, int condition) {
    schedule.check(t);
    Vec eps_pred = denoiser.predict_eps(x_t, t, condition);
    double a = schedule.alpha(t);
    double ab = schedule.alpha_bar(t);
    double coef = (1.0 - a) / std::sqrt(1.0 - ab);
    double sigma = 0.0;
    if (t > 1 && sigma_rule == SigmaRule::sqrt_one_minus_alpha) sigma = std::sqrt(1.0 - a);
    Vec out(x_t.size());
    for (std::size_t k = 0; k < x_t.size(); ++k) {
        out[k] = (x_t[k] - coef * eps_pred[k]) / std::sqrt(a);
        if (sigma > 0.0) out[k] += sigma * draw_normal(rng);
    }
    return out;
}

Vec ancestral_sample(const NoiseSchedule& schedule, int dim, const Denoiser& denoiser,
                     SigmaRule sigma_rule, Rng& rng, int condition) {
    Vec x = draw_normal_vec(rng, dim);
    for (int t = schedule.T; t >= 1; --t)
        x = ddpm_step(schedule, x, t, denoiser, sigma_rule, rng, condition);
    return x;
}

}  // namespace sdlab

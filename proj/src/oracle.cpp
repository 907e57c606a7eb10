#include "sdlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Per-component log responsibilities (unnormalized joint log-densities) of
// the noised mixture. Returns the max-shifted log-sum-exp in *lse.
std::vector<double> component_logp(const GaussianMixture& m, const NoiseSchedule& s,
                                   const Vec& x_t, int t, double* lse) {
    s.check(t);
    if (static_cast<int>(x_t.size()) != m.dim())
        throw std::invalid_argument("oracle: dimension mismatch");
    double ab = s.alpha_bar(t);
    double sab = std::sqrt(ab);
    int K = m.components();
    int d = m.dim();
    std::vector<double> lp(K);
    for (int k = 0; k < K; ++k) {
        double v = ab * m.variances[k] + (1.0 - ab);
        double q = 0.0;
        for (int j = 0; j < d; ++j) {
            double r = x_t[j] - sab * m.means[k][j];
            q += r * r;
        }
        lp[k] = std::log(m.weights[k]) - 0.5 * q / v - 0.5 * d * (kLog2Pi + std::log(v));
    }
    double mx = *std::max_element(lp.begin(), lp.end());
    double sum = 0.0;
    for (double v : lp) sum += std::exp(v - mx);
    *lse = mx + std::log(sum);
    return lp;
}

}  // namespace

void GaussianMixture::validate() const {
    if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size())
        throw std::invalid_argument("mixture: inconsistent component counts");
    double sum = 0.0;
    for (double w : weights) {
        if (w <= 0.0) throw std::invalid_argument("mixture: weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) >= 1e-12)
        throw std::invalid_argument("mixture: weights must sum to 1");
    for (double v : variances)
        if (v <= 0.0) throw std::invalid_argument("mixture: variances must be positive");
    std::size_t d = means[0].size();
    for (const auto& mu : means)
        if (mu.size() != d) throw std::invalid_argument("mixture: means must share dimension");
}

double GaussianMixture::nearest_mode_distance(const Vec& x, int* which) const {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < components(); ++k) {
        double q = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double r = x[j] - means[k][j];
            q += r * r;
        }
        double dk = std::sqrt(q);
        if (dk < best) {
            best = dk;
            if (which) *which = k;
        }
    }
    return best;
}

GaussianMixture mixture_preset(const std::string& name) {
    GaussianMixture m;
    if (name == "bimodal-far") {
        m.weights = {0.5, 0.5};
        m.means = {{4.0, 0.0}, {-4.0, 0.0}};
        m.variances = {0.05, 0.05};
    } else if (name == "quad") {
        m.weights = {0.25, 0.25, 0.25, 0.25};
        m.means = {{3.0, 3.0}, {3.0, -3.0}, {-3.0, 3.0}, {-3.0, -3.0}};
        m.variances = {0.05, 0.05, 0.05, 0.05};
    } else {
        throw std::invalid_argument("unknown mixture preset: " + name);
    }
    m.validate();
    return m;
}

double log_density(const GaussianMixture& mixture, const NoiseSchedule& schedule, const Vec& x_t,
                   int t) {
    double lse;
    component_logp(mixture, schedule, x_t, t, &lse);
    return lse;
}

Vec oracle_eps(const GaussianMixture& mixture, const NoiseSchedule& schedule, const Vec& x_t,
               int t) {
    double lse;
    auto lp = component_logp(mixture, schedule, x_t, t, &lse);
    double ab = schedule.alpha_bar(t);
    double sab = std::sqrt(ab);
    double somab = std::sqrt(1.0 - ab);
    int K = mixture.components();
    int d = mixture.dim();
    Vec score(d, 0.0);
    for (int k = 0; k < K; ++k) {
        double resp = std::exp(lp[k] - lse);
        double v = ab * mixture.variances[k] + (1.0 - ab);
        for (int j = 0; j < d; ++j)
            score[j] += resp * (-(x_t[j] - sab * mixture.means[k][j]) / v);
    }
    Vec eps(d);
    for (int j = 0; j < d; ++j) eps[j] = -somab * score[j];
    return eps;
}

}  // namespace sdlab

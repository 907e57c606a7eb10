#include "sdlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace sdlab {

namespace {

double quantile(std::vector<int> sorted, double q) {
    if (sorted.empty()) return 0.0;
    double pos = q * (sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - lo;
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Naive separable DFT; grids here are small analysis windows.
std::vector<std::vector<std::complex<double>>> dft2(
    const std::vector<std::vector<double>>& image) {
    int H = static_cast<int>(image.size());
    int W = static_cast<int>(image[0].size());
    using C = std::complex<double>;
    std::vector<std::vector<C>> rows(H, std::vector<C>(W));
    for (int y = 0; y < H; ++y)
        for (int v = 0; v < W; ++v) {
            C acc = 0.0;
            for (int x = 0; x < W; ++x)
                acc += image[y][x] * std::polar(1.0, -2.0 * M_PI * v * x / W);
            rows[y][v] = acc;
        }
    std::vector<std::vector<C>> out(H, std::vector<C>(W));
    for (int v = 0; v < W; ++v)
        for (int u = 0; u < H; ++u) {
            C acc = 0.0;
            for (int y = 0; y < H; ++y)
                acc += rows[y][v] * std::polar(1.0, -2.0 * M_PI * u * y / H);
            out[u][v] = acc;
        }
    return out;
}

}  // namespace

DiversityReport mode_coverage(const std::vector<TrajectoryRecord>& trajectories,
                              const GaussianMixture& mixture, double tau) {
    if (trajectories.empty()) throw std::invalid_argument("mode_coverage: empty trajectory set");
    if (tau <= 0.0) throw std::invalid_argument("mode_coverage: tau must be positive");
    DiversityReport rep;
    rep.mode_counts.assign(mixture.components(), 0);
    rep.n_seeds = static_cast<int>(trajectories.size());
    for (const auto& tr : trajectories) {
        // Terminal distances come from the last recorded row, which matches
        // the final parameter state; divergent or empty runs never converge.
        if (tr.diverged() || tr.rows.empty()) {
            rep.unconverged++;
            continue;
        }
        const auto& dists = tr.rows.back().dist_to_modes;
        auto it = std::min_element(dists.begin(), dists.end());
        if (*it < tau)
            rep.mode_counts[it - dists.begin()]++;
        else
            rep.unconverged++;
    }
    int converged = rep.n_seeds - rep.unconverged;
    if (converged > 0) {
        for (int c : rep.mode_counts) {
            if (c == 0) continue;
            double p = double(c) / converged;
            rep.entropy -= p * std::log(p);
        }
    }
    return rep;
}

ConvergenceReport convergence_stats(const std::vector<TrajectoryRecord>& trajectories,
                                    const GaussianMixture& mixture, double tau) {
    (void)mixture;  // distances are already recorded per row
    if (trajectories.empty())
        throw std::invalid_argument("convergence_stats: empty trajectory set");
    if (tau <= 0.0) throw std::invalid_argument("convergence_stats: tau must be positive");
    ConvergenceReport rep;
    rep.n_runs = static_cast<int>(trajectories.size());
    for (const auto& tr : trajectories) {
        int fp = 0;
        for (const auto& row : tr.rows) {
            double d = *std::min_element(row.dist_to_modes.begin(), row.dist_to_modes.end());
            if (d < tau) {
                fp = row.i;
                break;
            }
        }
        if (fp > 0)
            rep.first_passage.push_back(fp);
        else
            rep.censored++;
    }
    std::vector<int> sorted = rep.first_passage;
    std::sort(sorted.begin(), sorted.end());
    rep.median = quantile(sorted, 0.5);
    rep.q1 = quantile(sorted, 0.25);
    rep.q3 = quantile(sorted, 0.75);
    return rep;
}

SpectrumReport radial_power_spectrum(const std::vector<std::vector<double>>& image) {
    int H = static_cast<int>(image.size());
    if (H < 4) throw std::invalid_argument("radial_power_spectrum: grid too small");
    int W = static_cast<int>(image[0].size());
    if (W < 4) throw std::invalid_argument("radial_power_spectrum: grid too small");
    for (const auto& row : image)
        if (static_cast<int>(row.size()) != W)
            throw std::invalid_argument("radial_power_spectrum: ragged grid");

    auto F = dft2(image);
    SpectrumReport rep;
    rep.bins = std::min(H, W) / 2;
    rep.radial_power.assign(rep.bins, 0.0);
    std::vector<int> counts(rep.bins, 0);
    double low_cut = rep.bins / 4.0;
    double low_power = 0.0;
    for (int u = 0; u < H; ++u) {
        for (int v = 0; v < W; ++v) {
            double p = std::norm(F[u][v]);
            rep.total_power += p;
            int fu = (u <= H / 2) ? u : u - H;
            int fv = (v <= W / 2) ? v : v - W;
            double radius = std::hypot(double(fu), double(fv));
            if (radius <= low_cut) low_power += p;
            int bin = static_cast<int>(std::lround(radius));
            if (bin < rep.bins) {
                rep.radial_power[bin] += p;
                counts[bin]++;
            }
        }
    }
    for (int b = 0; b < rep.bins; ++b)
        if (counts[b] > 0) rep.radial_power[b] /= counts[b];
    rep.low_frequency_fraction = rep.total_power > 0.0 ? low_power / rep.total_power : 0.0;
    return rep;
}

}  // namespace sdlab

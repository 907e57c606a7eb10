#pragma once

#include "sdlab/sds.hpp"

namespace sdlab {

struct DiversityReport {
    std::vector<int> mode_counts;  // terminal assignments per mixture mode
    int unconverged = 0;           // runs farther than tau from every mode
    int n_seeds = 0;
    double entropy = 0.0;  // over converged assignments; 0 when none converged
};

struct ConvergenceReport {
    // First iteration with distance-to-nearest-mode < tau, per run, in input
    // order; censored runs are absent here and counted below.
    std::vector<int> first_passage;
    int censored = 0;
    int n_runs = 0;
    double median = 0.0;  // over uncensored runs; 0 when none passed
    double q1 = 0.0;
    double q3 = 0.0;
};

struct SpectrumReport {
    std::vector<double> radial_power;  // mean power per integer-radius annulus
    double low_frequency_fraction = 0.0;
    double total_power = 0.0;  // sum of |F|^2 over all 2-D bins
    int bins = 0;
};

DiversityReport mode_coverage(const std::vector<TrajectoryRecord>& trajectories,
                              const GaussianMixture& mixture, double tau);

ConvergenceReport convergence_stats(const std::vector<TrajectoryRecord>& trajectories,
                                    const GaussianMixture& mixture, double tau);

// Radially averaged power spectrum of an H x W grid. Unnormalized forward
// DFT, so sum |F|^2 == H * W * sum x^2 (the Parseval constant). Bin count is
// floor(min(H, W) / 2); the low-frequency fraction is the share of total
// power at radius <= bins / 4.
SpectrumReport radial_power_spectrum(const std::vector<std::vector<double>>& image);

}  // namespace sdlab

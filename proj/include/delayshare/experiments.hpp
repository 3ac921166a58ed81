#pragma once

#include <span>
#include <string>
#include <vector>

#include "delayshare/allocation.hpp"

namespace delayshare {

// Aggregates of the conditional simulation: realizations x^i drawn from X0,
// kept only when C(x^i) > 0, each allocated with both rules.
struct ConditionalStudyResult {
    long long runs = 0;
    std::vector<ActivityId> players;
    std::vector<double> mean_ssh;  // average SSh payment per activity
    std::vector<double> mean_sh;   // average deterministic-rule payment
    double mean_cost = 0.0;
    long long rejection_count = 0;
    // The deterministic rule is computed with planned' = min(mean, actual),
    // so realized problems always satisfy actual >= planned.
    bool planned_clamped = true;
};

// Percentages of runs with payment >= 0 / < 0 per activity, per rule.
struct SignFrequencyTable {
    std::vector<ActivityId> players;
    std::vector<double> sh_nonneg_pct, sh_neg_pct;
    std::vector<double> ssh_nonneg_pct, ssh_neg_pct;
};

// Raw per-run payments of one rule for one activity across all accepted
// realizations; the input of the density export.
struct DensitySample {
    std::string rule;  // "sh" or "ssh"
    ActivityId activity = 0;
    std::string activity_label;
    std::vector<double> values;
};

struct StudyOutput {
    ConditionalStudyResult result;
    SignFrequencyTable signs;
    std::vector<DensitySample> densities;
    std::vector<double> costs;  // per accepted run
};

// Draws realizations from the planned distributions until `runs` of them
// have positive delay cost, allocates each with the deterministic rule (on
// the clamped mean-planned problem) and the stochastic rule, and aggregates.
// BudgetError when a run exhausts max_attempts_per_run rejections.
StudyOutput conditional_study(const StochasticProblem& problem, long long runs,
                              const SamplingPlan& plan,
                              long long max_attempts_per_run = 1000000);

// Gaussian KDE on an even grid, bandwidth by Silverman's rule of thumb
// (0.9 * min(sd, IQR/1.34) * n^-1/5 with the usual degenerate fallbacks),
// grid extended 4 bandwidths past the sample range.
struct KdeGrid {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
};

KdeGrid kde_grid(std::span<const double> values, int grid_points = 512);

// Writes density.csv (rule, activity, grid_point, density) and
// raw_samples.csv (rule, activity, run, payment) under out_dir.
void export_density(const std::vector<DensitySample>& data, const std::string& out_dir);

}  // namespace delayshare

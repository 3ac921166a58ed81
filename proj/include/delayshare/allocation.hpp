#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "delayshare/game.hpp"

namespace delayshare {

inline constexpr std::uint64_t kDefaultSeed = 123456789;

// Parameters for the permutation-sampling estimator and the exact-path
// switch. The same plan drives deterministic and stochastic allocations.
struct SamplingPlan {
    long long m = 10000;  // permutations
    int m1 = 1000;        // rows of the shared sample matrix
    std::uint64_t seed = kDefaultSeed;
    double alpha = 0.05;
    int workers = 1;
    int exact_cutoff = 20;       // max player count for subset enumeration
    bool force_sampling = false; // skip the exact path even when available
    double exact_budget = 1e7;   // joint-support bound for exact evaluation

    void validate() const;
};

struct AllocationMeta {
    std::string method;  // "exact" or "sampled"
    long long m = 0;
    int m1 = 0;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    int workers = 1;
};

// Per-activity payments; sampled allocations carry per-activity standard
// errors estimated from the permutation marginals.
struct Allocation {
    std::vector<ActivityId> players;  // ascending
    std::vector<double> payments;     // aligned with players
    std::optional<std::vector<double>> std_errors;
    AllocationMeta meta;

    double total() const;
    double payment_for(ActivityId id) const;
};

// Shapley value by subset enumeration. Player count must not exceed
// exact_cutoff (and never 26, the tabulation memory guard).
Allocation exact_shapley(const CharacteristicFunction& v, int exact_cutoff = 20);

// Permutation-sampling Shapley estimate: m uniform permutations, marginal
// contributions accumulated per activity in chunked streaming accumulators
// whose merge order is fixed, so equal (seed, m, m1) give bit-identical
// results for any worker count. The factory is invoked once per worker.
using EvaluatorFactory = std::function<std::unique_ptr<CoalitionEvaluator>()>;
Allocation sampled_shapley(const EvaluatorFactory& make_evaluator,
                           const std::vector<ActivityId>& players,
                           const SamplingPlan& plan);

// Shapley rule for deterministic problems; exact when the player count is
// within the cutoff, sampled otherwise.
Allocation shapley_det(const DeterministicProblem& problem,
                       const SamplingPlan& plan = {});

// Stochastic Shapley rule. Uses exact enumeration over exact coalition
// values when every distribution has finite support within budget and the
// player count is within the cutoff; otherwise draws one shared sample
// matrix and runs permutation sampling over Monte-Carlo coalition values.
Allocation shapley_stoch(const StochasticProblem& problem, const SamplingPlan& plan);

// Standard normal quantile (inverse CDF), |error| < 1e-13 over (0,1).
double normal_quantile(double p);

// z_{alpha/2} * (s / sqrt(n)) * 100 / |mean|: the relative half-width used
// for the a-posteriori error reports. DomainError when the mean is zero
// (callers report the absolute half-width instead).
double relative_error_pct(std::span<const double> samples, double alpha);
double relative_error_pct_from_se(double std_error, double estimate, double alpha);

// |[SSh_i(SP) - SSh_i(SP_-j)] - [SSh_j(SP) - SSh_j(SP_-i)]| with exact
// coalition values; BudgetError when the exact path is unavailable.
double balancedness_residual(const StochasticProblem& problem, ActivityId i,
                             ActivityId j, double budget = 1e7);

}  // namespace delayshare

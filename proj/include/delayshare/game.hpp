#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "delayshare/distributions.hpp"
#include "delayshare/project.hpp"

namespace delayshare {

// Deterministic problem (N, prec, x0, x, C): planned and actual durations.
// Construction enforces actual >= planned componentwise and C(planned) = 0.
class DeterministicProblem {
public:
    DeterministicProblem(Project project, DurationVector planned, DurationVector actual,
                         ThresholdCost cost);

    const Project& project() const { return project_; }
    const DurationVector& planned() const { return planned_; }
    const DurationVector& actual() const { return actual_; }
    const ThresholdCost& cost() const { return cost_; }
    double cost_of_actual() const;

private:
    Project project_;
    DurationVector planned_;
    DurationVector actual_;
    ThresholdCost cost_;
};

// Stochastic problem (N, prec, X0, x, C): planned durations are independent
// distributions; actual durations only need to be non-negative. Activities
// eliminated by `eliminate` stay in the underlying project but are flagged
// inactive: they are integrated out (always random) when coalition values of
// the reduced problem are evaluated, which realizes the reduced cost
// function without nested expectations.
class StochasticProblem {
public:
    StochasticProblem(Project project, std::vector<DurationDistribution> planned,
                      DurationVector actual, ThresholdCost cost);

    const Project& project() const { return project_; }
    const std::vector<DurationDistribution>& planned_dists() const { return planned_; }
    const DurationVector& actual() const { return actual_; }
    const ThresholdCost& cost() const { return cost_; }

    // Active (non-eliminated) activities, ascending.
    const std::vector<ActivityId>& active() const { return active_; }
    int active_count() const { return static_cast<int>(active_.size()); }
    bool is_active(ActivityId i) const { return active_flags_[i]; }
    bool is_reduced() const { return active_count() < project_.size(); }

    StochasticProblem eliminate(ActivityId i) const;

    DurationVector planned_means() const;
    double cost_of_actual() const;

    // True when every distribution has finite support and the product of all
    // support sizes stays within `budget` joint outcomes.
    bool exact_evaluation_possible(double budget) const;

private:
    Project project_;
    std::vector<DurationDistribution> planned_;
    DurationVector actual_;
    ThresholdCost cost_;
    std::vector<char> active_flags_;
    std::vector<ActivityId> active_;
};

StochasticProblem eliminate(const StochasticProblem& problem, ActivityId i);

// Pre-drawn duration samples: row j holds one joint draw of X0; column i is
// dedicated to activity i and is generated from its own RNG stream, so the
// matrix depends only on (seed, m1), never on thread count.
struct SampleMatrix {
    int rows = 0;
    int cols = 0;
    std::uint64_t seed = 0;
    std::vector<double> data;  // row-major

    double at(int row, int col) const { return data[static_cast<std::size_t>(row) * cols + col]; }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
};

SampleMatrix draw_sample_matrix(const StochasticProblem& problem, int m1,
                                std::uint64_t seed);

// Evaluates coalition values for one problem. `member` is indexed by the
// problem's player list (ascending active ids); `mask` mirrors it when the
// player count is <= 64 and is used as the cache key. Instances carry
// scratch buffers and are not shareable across threads.
class CoalitionEvaluator {
public:
    virtual ~CoalitionEvaluator() = default;
    virtual double value(const std::vector<char>& member, std::uint64_t mask) = 0;
    virtual const std::vector<ActivityId>& players() const = 0;
};

std::unique_ptr<CoalitionEvaluator> make_det_evaluator(const DeterministicProblem& problem);
std::unique_ptr<CoalitionEvaluator> make_stoch_mc_evaluator(const StochasticProblem& problem,
                                                            const SampleMatrix& samples);
std::unique_ptr<CoalitionEvaluator> make_stoch_exact_evaluator(const StochasticProblem& problem,
                                                               double budget);

// Shared-ownership variants; workers use these to share one immutable
// problem/matrix while owning private scratch space.
std::unique_ptr<CoalitionEvaluator> make_det_evaluator(
    std::shared_ptr<const DeterministicProblem> problem);
std::unique_ptr<CoalitionEvaluator> make_stoch_mc_evaluator(
    std::shared_ptr<const StochasticProblem> problem,
    std::shared_ptr<const SampleMatrix> samples);
std::unique_ptr<CoalitionEvaluator> make_stoch_exact_evaluator(
    std::shared_ptr<const StochasticProblem> problem, double budget);

// Memoizes values by coalition mask; enabled only for small player counts.
std::unique_ptr<CoalitionEvaluator> with_cache(std::unique_ptr<CoalitionEvaluator> inner);

// Coalition-value accessor over masks local to `players` (bit k of the mask
// is players[k]); value(0) == 0 always.
struct CharacteristicFunction {
    enum class Kind { exact, estimated };

    std::vector<ActivityId> players;
    std::function<double(std::uint64_t)> value;
    std::function<double(std::uint64_t)> std_error;  // null when exact
    Kind kind = Kind::exact;
    int m1 = 0;
};

CharacteristicFunction make_det_game(const DeterministicProblem& problem);
CharacteristicFunction make_stoch_game_mc(const StochasticProblem& problem,
                                          std::shared_ptr<const SampleMatrix> samples);
CharacteristicFunction make_stoch_game_exact(const StochasticProblem& problem,
                                             double budget = 1e7);

// Spec-level coalition ops over global masks (bit i = activity id i);
// require the underlying project to have at most 64 activities.
double det_value(const DeterministicProblem& problem, std::uint64_t coalition);
std::pair<double, double> stoch_value_mc(const StochasticProblem& problem,
                                         std::uint64_t coalition,
                                         const SampleMatrix& samples);
double stoch_value_exact(const StochasticProblem& problem, std::uint64_t coalition,
                         double budget = 1e7);

}  // namespace delayshare

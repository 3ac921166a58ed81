#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delayshare/errors.hpp"

namespace delayshare {

// Activities are dense indices 0..n-1; external names live in labels.
using ActivityId = int;

using DurationVector = std::vector<double>;

// A project: activity set plus immediate precedence pairs (i, j), meaning
// activity j cannot start until activity i has finished. The full precedence
// relation is the transitive closure of these pairs and is derived, never
// stored by the user. Construction rejects cyclic inputs.
class Project {
public:
    Project(int n, std::vector<std::pair<ActivityId, ActivityId>> immediate_prec,
            std::vector<std::string> labels = {});

    int size() const { return n_; }
    const std::vector<std::pair<ActivityId, ActivityId>>& immediate_prec() const {
        return edges_;
    }
    const std::vector<ActivityId>& predecessors(ActivityId i) const { return preds_[i]; }
    const std::vector<ActivityId>& successors(ActivityId i) const { return succs_[i]; }
    const std::string& label(ActivityId i) const { return labels_[i]; }
    const std::vector<std::string>& labels() const { return labels_; }

    // Topological order with ascending-id tie-break (fixed at construction).
    const std::vector<ActivityId>& topo_order() const { return topo_; }

private:
    int n_;
    std::vector<std::pair<ActivityId, ActivityId>> edges_;
    std::vector<std::vector<ActivityId>> preds_;
    std::vector<std::vector<ActivityId>> succs_;
    std::vector<std::string> labels_;
    std::vector<ActivityId> topo_;
};

// Threshold delay cost: max(makespan - delta, 0) for a committed
// delivery date delta. Non-negative and non-decreasing in every duration;
// all cost evaluation in the library funnels through this call.
struct ThresholdCost {
    double delta = 0.0;

    explicit ThresholdCost(double delta_) : delta(delta_) {
        if (!(delta_ >= 0.0))
            throw ValidationError("threshold cost: delta must be non-negative");
    }
    double operator()(double makespan) const {
        return makespan > delta ? makespan - delta : 0.0;
    }
};

std::vector<ActivityId> topological_order(const Project& project);

// Full precedence relation: smallest transitive relation containing the
// immediate precedences. Asymmetric because the graph is acyclic.
std::set<std::pair<ActivityId, ActivityId>> transitive_closure(const Project& project);

// Earliest start times: e_i = 0 for activities without predecessors,
// otherwise max over immediate predecessors j of (e_j + y_j).
DurationVector early_times(const Project& project, const DurationVector& y);

// Project duration max_i(e_i + y_i) == longest path in the PERT graph.
double project_duration(const Project& project, const DurationVector& y);

double delay_cost(const ThresholdCost& cost, const Project& project,
                  const DurationVector& y);

namespace detail {

// Unchecked makespan for hot loops; scratch holds early times and is resized
// as needed.
double makespan_unchecked(const Project& project, std::span<const double> y,
                          std::vector<double>& scratch);

void check_durations(const Project& project, const DurationVector& y);

}  // namespace detail

}  // namespace delayshare

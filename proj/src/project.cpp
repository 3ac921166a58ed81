#include "delayshare/project.hpp"

#include <queue>
#include <sstream>

namespace delayshare {

namespace {

// Locates one cycle among the nodes Kahn's algorithm could not place.
std::vector<ActivityId> find_cycle(const std::vector<std::vector<ActivityId>>& succs,
                                   const std::vector<char>& unplaced) {
    const int n = static_cast<int>(succs.size());
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<ActivityId> parent(n, -1);

    for (int start = 0; start < n; ++start) {
        if (!unplaced[start] || state[start] != 0) continue;
        std::vector<std::pair<ActivityId, std::size_t>> stack{{start, 0}};
        state[start] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next < succs[u].size()) {
                ActivityId v = succs[u][next++];
                if (!unplaced[v]) continue;
                if (state[v] == 1) {
                    std::vector<ActivityId> cycle{v};
                    for (ActivityId w = u; w != v; w = parent[w]) cycle.push_back(w);
                    std::reverse(cycle.begin(), cycle.end());
                    return cycle;
                }
                if (state[v] == 0) {
                    state[v] = 1;
                    parent[v] = u;
                    stack.emplace_back(v, 0);
                }
            } else {
                state[u] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

}  // namespace

Project::Project(int n, std::vector<std::pair<ActivityId, ActivityId>> immediate_prec,
                 std::vector<std::string> labels)
    : n_(n), edges_(std::move(immediate_prec)), labels_(std::move(labels)) {
    if (n_ < 1) throw ValidationError("project needs at least one activity");
    if (labels_.empty()) {
        labels_.reserve(n_);
        for (int i = 0; i < n_; ++i) labels_.push_back(std::to_string(i));
    }
    if (static_cast<int>(labels_.size()) != n_)
        throw ValidationError("labels size does not match activity count");

    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    preds_.resize(n_);
    succs_.resize(n_);
    for (auto [i, j] : edges_) {
        if (i < 0 || i >= n_ || j < 0 || j >= n_)
            throw ValidationError("precedence pair references an unknown activity id");
        if (i == j) throw CycleError("activity " + labels_[i] + " precedes itself", {i});
        preds_[j].push_back(i);
        succs_[i].push_back(j);
    }

    // Kahn's algorithm; a min-heap of ready activities gives the
    // ascending-id tie-break, so downstream outputs are reproducible.
    std::vector<int> indegree(n_);
    for (int i = 0; i < n_; ++i) indegree[i] = static_cast<int>(preds_[i].size());
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int i = 0; i < n_; ++i)
        if (indegree[i] == 0) ready.push(i);
    topo_.reserve(n_);
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        topo_.push_back(u);
        for (int v : succs_[u])
            if (--indegree[v] == 0) ready.push(v);
    }
    if (static_cast<int>(topo_.size()) != n_) {
        std::vector<char> unplaced(n_, 1);
        for (int u : topo_) unplaced[u] = 0;
        auto cycle = find_cycle(succs_, unplaced);
        std::ostringstream msg;
        msg << "precedence graph has a cycle:";
        for (ActivityId id : cycle) msg << ' ' << labels_[id];
        throw CycleError(msg.str(), cycle);
    }
}

std::vector<ActivityId> topological_order(const Project& project) {
    return project.topo_order();
}

std::set<std::pair<ActivityId, ActivityId>> transitive_closure(const Project& project) {
    const int n = project.size();
    // Reachability in reverse topological order: reach[u] = succs + their reach.
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    const auto& topo = project.topo_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        int u = *it;
        for (int v : project.successors(u)) {
            reach[u][v] = 1;
            for (int w = 0; w < n; ++w)
                if (reach[v][w]) reach[u][w] = 1;
        }
    }
    std::set<std::pair<ActivityId, ActivityId>> closure;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (reach[u][v]) closure.emplace(u, v);
    return closure;
}

namespace detail {

void check_durations(const Project& project, const DurationVector& y) {
    if (static_cast<int>(y.size()) != project.size())
        throw ValidationError("duration vector size does not match activity count");
    for (double d : y)
        if (!(d >= 0.0)) throw ValidationError("durations must be non-negative");
}

double makespan_unchecked(const Project& project, std::span<const double> y,
                          std::vector<double>& scratch) {
    const int n = project.size();
    scratch.assign(n, 0.0);
    double makespan = 0.0;
    for (ActivityId i : project.topo_order()) {
        double start = 0.0;
        for (ActivityId j : project.predecessors(i)) {
            double t = scratch[j] + y[j];
            if (t > start) start = t;
        }
        scratch[i] = start;
        double finish = start + y[i];
        if (finish > makespan) makespan = finish;
    }
    return makespan;
}

}  // namespace detail

DurationVector early_times(const Project& project, const DurationVector& y) {
    detail::check_durations(project, y);
    std::vector<double> e;
    detail::makespan_unchecked(project, y, e);
    return e;
}

double project_duration(const Project& project, const DurationVector& y) {
    detail::check_durations(project, y);
    std::vector<double> scratch;
    return detail::makespan_unchecked(project, y, scratch);
}

double delay_cost(const ThresholdCost& cost, const Project& project,
                  const DurationVector& y) {
    return cost(project_duration(project, y));
}

}  // namespace delayshare

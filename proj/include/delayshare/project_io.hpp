#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "delayshare/allocation.hpp"
#include "delayshare/game.hpp"

namespace delayshare {

// One activity row of a project file. Predecessors are immediate and given
// by name; `dist` describes the planned duration distribution, `planned` a
// deterministic planned duration. Either may be present; commands state
// which they need.
struct ActivitySpec {
    std::string name;
    std::vector<std::string> predecessors;
    std::optional<DurationDistribution> dist;
    std::optional<double> planned;
    std::optional<double> actual;

    bool operator==(const ActivitySpec&) const = default;
};

struct ProjectFile {
    int schema_version = 1;
    std::vector<ActivitySpec> activities;
    double delta = 0.0;  // threshold cost parameter

    bool operator==(const ProjectFile&) const = default;
};

ProjectFile parse_project_json(const std::string& text);
std::string serialize_project_json(const ProjectFile& file);
ProjectFile load_project_json(const std::string& path);

// Minimal CSV import for flat threshold projects:
// header name,predecessors,planned,actual with ';'-separated predecessors.
ProjectFile load_project_csv(const std::string& path, double delta);

// All schema violations (empty when valid). Cycle detection included.
std::vector<std::string> validate_project_file(const ProjectFile& file);

Project build_project(const ProjectFile& file);

// Deterministic problem: planned durations from `planned`, falling back to
// the distribution mean. Every activity needs an actual duration.
DeterministicProblem build_deterministic(const ProjectFile& file);

// Stochastic problem: requires a distribution per activity; missing actual
// durations default to zero (the experiment command redraws them anyway).
StochasticProblem build_stochastic(const ProjectFile& file);

void write_allocation_csv(const Allocation& alloc, const std::vector<std::string>& labels,
                          std::ostream& out);
std::string allocation_to_json(const Allocation& alloc,
                               const std::vector<std::string>& labels);
// Human-readable table, payments at 5 decimals.
std::string format_allocation_table(const Allocation& alloc,
                                    const std::vector<std::string>& labels);

}  // namespace delayshare

#include "delayshare/project_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace delayshare {

namespace {

using nlohmann::json;

std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

DurationDistribution dist_from_json(const json& spec) {
    if (!spec.is_object() || !spec.contains("type"))
        throw SchemaError("distribution spec must be an object with a \"type\" field");
    const std::string type = spec.at("type").get<std::string>();
    try {
        if (type == "point") return DurationDistribution::point(spec.at("value").get<double>());
        if (type == "uniform")
            return DurationDistribution::uniform(spec.at("a").get<double>(),
                                                 spec.at("b").get<double>());
        if (type == "triangular")
            return DurationDistribution::triangular(spec.at("min").get<double>(),
                                                    spec.at("mode").get<double>(),
                                                    spec.at("max").get<double>());
        if (type == "exponential")
            return DurationDistribution::exponential(spec.at("rate").get<double>());
        if (type == "discrete")
            return DurationDistribution::discrete(
                spec.at("values").get<std::vector<double>>(),
                spec.at("probs").get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw SchemaError("malformed " + type + " distribution: " + e.what());
    }
    throw SchemaError("unknown distribution type \"" + type + "\"");
}

json dist_to_json(const DurationDistribution& d) {
    json spec;
    switch (d.kind()) {
        case DurationDistribution::Kind::point:
            spec = {{"type", "point"}, {"value", d.point_value()}};
            break;
        case DurationDistribution::Kind::uniform:
            spec = {{"type", "uniform"}, {"a", d.param_a()}, {"b", d.param_b()}};
            break;
        case DurationDistribution::Kind::triangular:
            spec = {{"type", "triangular"},
                    {"min", d.param_a()},
                    {"mode", d.param_c()},
                    {"max", d.param_b()}};
            break;
        case DurationDistribution::Kind::exponential:
            spec = {{"type", "exponential"}, {"rate", d.rate()}};
            break;
        case DurationDistribution::Kind::discrete:
            spec = {{"type", "discrete"},
                    {"values", d.support_values()},
                    {"probs", d.support_probs()}};
            break;
    }
    return spec;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    parts.push_back(current);
    return parts;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ProjectFile parse_project_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("project file must be a JSON object");

    ProjectFile file;
    try {
        file.schema_version = doc.value("schema_version", 1);
        if (!doc.contains("activities") || !doc.at("activities").is_array())
            throw SchemaError("project file needs an \"activities\" array");
        for (const json& a : doc.at("activities")) {
            ActivitySpec spec;
            spec.name = a.at("name").get<std::string>();
            if (a.contains("predecessors"))
                spec.predecessors = a.at("predecessors").get<std::vector<std::string>>();
            if (a.contains("dist")) spec.dist = dist_from_json(a.at("dist"));
            if (a.contains("planned")) spec.planned = a.at("planned").get<double>();
            if (a.contains("actual")) spec.actual = a.at("actual").get<double>();
            file.activities.push_back(std::move(spec));
        }
        const json& cost = doc.at("cost");
        if (cost.value("type", "") != "threshold")
            throw SchemaError("cost.type must be \"threshold\"");
        file.delta = cost.at("delta").get<double>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed project file: ") + e.what());
    }
    return file;
}

std::string serialize_project_json(const ProjectFile& file) {
    json doc;
    doc["schema_version"] = file.schema_version;
    json acts = json::array();
    for (const ActivitySpec& a : file.activities) {
        json obj;
        obj["name"] = a.name;
        obj["predecessors"] = a.predecessors;
        if (a.dist) obj["dist"] = dist_to_json(*a.dist);
        if (a.planned) obj["planned"] = *a.planned;
        if (a.actual) obj["actual"] = *a.actual;
        acts.push_back(std::move(obj));
    }
    doc["activities"] = std::move(acts);
    doc["cost"] = {{"type", "threshold"}, {"delta", file.delta}};
    return doc.dump(2) + "\n";
}

ProjectFile load_project_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_project_json(buffer.str());
}

ProjectFile load_project_csv(const std::string& path, double delta) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    ProjectFile file;
    file.delta = delta;

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV file " + path);
    if (trim(line) != "name,predecessors,planned,actual")
        throw ParseError("CSV header must be: name,predecessors,planned,actual");

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != 4)
            throw ParseError("line " + std::to_string(lineno) + ": expected 4 cells");
        ActivitySpec spec;
        spec.name = trim(cells[0]);
        for (const std::string& p : split(cells[1], ';'))
            if (!trim(p).empty()) spec.predecessors.push_back(trim(p));
        try {
            spec.planned = std::stod(cells[2]);
            spec.actual = std::stod(cells[3]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(lineno) + ": bad number");
        }
        file.activities.push_back(std::move(spec));
    }
    return file;
}

std::vector<std::string> validate_project_file(const ProjectFile& file) {
    std::vector<std::string> violations;
    if (file.schema_version != 1)
        violations.push_back("unsupported schema_version " +
                             std::to_string(file.schema_version));
    if (file.activities.empty()) violations.push_back("no activities");
    if (!(file.delta >= 0.0)) violations.push_back("cost delta must be non-negative");

    std::map<std::string, int> index;
    for (std::size_t i = 0; i < file.activities.size(); ++i) {
        const ActivitySpec& a = file.activities[i];
        if (a.name.empty())
            violations.push_back("activity " + std::to_string(i) + " has an empty name");
        else if (!index.emplace(a.name, static_cast<int>(i)).second)
            violations.push_back("duplicate activity name \"" + a.name + "\"");
        if (a.actual && !(*a.actual >= 0.0))
            violations.push_back("activity \"" + a.name + "\": negative actual duration");
        if (a.planned && !(*a.planned >= 0.0))
            violations.push_back("activity \"" + a.name + "\": negative planned duration");
    }
    for (const ActivitySpec& a : file.activities)
        for (const std::string& p : a.predecessors) {
            if (!index.count(p))
                violations.push_back("activity \"" + a.name +
                                     "\" references unknown predecessor \"" + p + "\"");
            else if (p == a.name)
                violations.push_back("activity \"" + a.name + "\" precedes itself");
        }

    if (violations.empty()) {
        try {
            build_project(file);
        } catch (const Error& e) {
            violations.push_back(e.what());
        }
    }
    return violations;
}

Project build_project(const ProjectFile& file) {
    std::map<std::string, int> index;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < file.activities.size(); ++i) {
        const std::string& name = file.activities[i].name;
        if (name.empty()) throw SchemaError("activity " + std::to_string(i) + " has an empty name");
        if (!index.emplace(name, static_cast<int>(i)).second)
            throw SchemaError("duplicate activity name \"" + name + "\"");
        labels.push_back(name);
    }
    std::vector<std::pair<ActivityId, ActivityId>> edges;
    for (std::size_t i = 0; i < file.activities.size(); ++i)
        for (const std::string& p : file.activities[i].predecessors) {
            auto it = index.find(p);
            if (it == index.end())
                throw SchemaError("activity \"" + file.activities[i].name +
                                  "\" references unknown predecessor \"" + p + "\"");
            edges.emplace_back(it->second, static_cast<int>(i));
        }
    return Project(static_cast<int>(file.activities.size()), std::move(edges),
                   std::move(labels));
}

DeterministicProblem build_deterministic(const ProjectFile& file) {
    Project project = build_project(file);
    DurationVector planned, actual;
    for (const ActivitySpec& a : file.activities) {
        if (a.planned)
            planned.push_back(*a.planned);
        else if (a.dist)
            planned.push_back(a.dist->mean());
        else
            throw SchemaError("activity \"" + a.name +
                              "\" needs a planned duration or a distribution");
        if (!a.actual)
            throw SchemaError("activity \"" + a.name + "\" needs an actual duration");
        actual.push_back(*a.actual);
    }
    return DeterministicProblem(std::move(project), std::move(planned), std::move(actual),
                                ThresholdCost(file.delta));
}

StochasticProblem build_stochastic(const ProjectFile& file) {
    Project project = build_project(file);
    std::vector<DurationDistribution> dists;
    DurationVector actual;
    for (const ActivitySpec& a : file.activities) {
        if (!a.dist)
            throw SchemaError("activity \"" + a.name + "\" needs a duration distribution");
        dists.push_back(*a.dist);
        actual.push_back(a.actual.value_or(0.0));
    }
    return StochasticProblem(std::move(project), std::move(dists), std::move(actual),
                             ThresholdCost(file.delta));
}

void write_allocation_csv(const Allocation& alloc, const std::vector<std::string>& labels,
                          std::ostream& out) {
    out << "activity,payment,std_error,rel_err_pct\n";
    for (std::size_t k = 0; k < alloc.players.size(); ++k) {
        const ActivityId id = alloc.players[k];
        out << labels[id] << ',' << format_full(alloc.payments[k]) << ',';
        if (alloc.std_errors) {
            double se = (*alloc.std_errors)[k];
            out << format_full(se) << ',';
            if (alloc.payments[k] != 0.0)
                out << format_full(relative_error_pct_from_se(se, alloc.payments[k],
                                                              alloc.meta.alpha));
        } else {
            out << ',';
        }
        out << '\n';
    }
}

std::string allocation_to_json(const Allocation& alloc,
                               const std::vector<std::string>& labels) {
    json doc;
    doc["method"] = alloc.meta.method;
    doc["m"] = alloc.meta.m;
    doc["m1"] = alloc.meta.m1;
    doc["seed"] = alloc.meta.seed;
    doc["alpha"] = alloc.meta.alpha;
    doc["total"] = alloc.total();
    json rows = json::array();
    for (std::size_t k = 0; k < alloc.players.size(); ++k) {
        json row;
        row["activity"] = labels[alloc.players[k]];
        row["payment"] = alloc.payments[k];
        if (alloc.std_errors) {
            double se = (*alloc.std_errors)[k];
            row["std_error"] = se;
            if (alloc.payments[k] != 0.0)
                row["rel_err_pct"] =
                    relative_error_pct_from_se(se, alloc.payments[k], alloc.meta.alpha);
        }
        rows.push_back(std::move(row));
    }
    doc["payments"] = std::move(rows);
    return doc.dump(2) + "\n";
}

std::string format_allocation_table(const Allocation& alloc,
                                    const std::vector<std::string>& labels) {
    std::size_t width = 8;
    for (ActivityId id : alloc.players) width = std::max(width, labels[id].size());

    std::ostringstream os;
    char buf[64];
    os << std::string(width, ' ') << "  payment";
    if (alloc.std_errors) os << "  std_error  rel_err_pct";
    os << '\n';
    double rel_sum = 0.0;
    int rel_count = 0;
    for (std::size_t k = 0; k < alloc.players.size(); ++k) {
        const std::string& name = labels[alloc.players[k]];
        os << name << std::string(width - name.size(), ' ');
        std::snprintf(buf, sizeof(buf), " %8.5f", alloc.payments[k]);
        os << buf;
        if (alloc.std_errors) {
            double se = (*alloc.std_errors)[k];
            std::snprintf(buf, sizeof(buf), "  %9.5f", se);
            os << buf;
            if (alloc.payments[k] != 0.0) {
                double rel = relative_error_pct_from_se(se, alloc.payments[k],
                                                        alloc.meta.alpha);
                std::snprintf(buf, sizeof(buf), "  %10.3f%%", rel);
                os << buf;
                rel_sum += rel;
                ++rel_count;
            } else {
                // zero payment: relative error undefined, show the absolute
                // half-width instead
                double half = normal_quantile(1.0 - alloc.meta.alpha / 2.0) * se;
                std::snprintf(buf, sizeof(buf), "  +/-%.5f (abs)", half);
                os << buf;
            }
        }
        os << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.5f", alloc.total());
    os << "total " << buf << "  (" << alloc.meta.method;
    if (alloc.meta.method == "sampled")
        os << ", m=" << alloc.meta.m << ", m1=" << alloc.meta.m1
           << ", seed=" << alloc.meta.seed;
    os << ")\n";
    if (rel_count > 0) {
        std::snprintf(buf, sizeof(buf), "%.3f", rel_sum / rel_count);
        os << "avg_rel_err_pct " << buf << "  (mean over " << rel_count
           << " activities with non-zero payment)\n";
    }
    return os.str();
}

}  // namespace delayshare

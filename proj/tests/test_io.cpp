#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "delayshare/project_io.hpp"
#include "test_util.hpp"

using namespace delayshare;
namespace tt = delayshare::testing;

TEST_CASE("the five-activity fixture parses and validates") {
    ProjectFile file = load_project_json(tt::fixture_path("example2.json"));
    CHECK(validate_project_file(file).empty());
    CHECK(file.activities.size() == 5);
    CHECK(file.delta == 6.5);

    Project project = build_project(file);
    CHECK(project.size() == 5);
    CHECK(project.immediate_prec().size() == 4);

    StochasticProblem sp = build_stochastic(file);
    CHECK(sp.planned_means() == DurationVector{2, 1, 1, 4, 2});
    CHECK(sp.actual() == tt::example2_actual());
}

TEST_CASE("parse-serialize-parse is the identity") {
    for (const char* name : {"example1.json", "example2.json"}) {
        ProjectFile a = load_project_json(tt::fixture_path(name));
        ProjectFile b = parse_project_json(serialize_project_json(a));
        CHECK(a == b);
        CHECK(serialize_project_json(a) == serialize_project_json(b));
    }
}

TEST_CASE("round-trip covers every distribution kind") {
    ProjectFile file;
    file.delta = 2.0;
    file.activities = {
        {"p", {}, DurationDistribution::point(3), std::nullopt, 3.0},
        {"u", {"p"}, DurationDistribution::uniform(0, 10), 1.0, 7.0},
        {"t", {}, DurationDistribution::triangular(1, 2, 3), std::nullopt, 2.5},
        {"e", {"p", "t"}, DurationDistribution::exponential(0.5), std::nullopt, 1.0},
        {"d", {}, DurationDistribution::discrete({1, 2.5}, {0.25, 0.75}), std::nullopt,
         2.0}};
    ProjectFile back = parse_project_json(serialize_project_json(file));
    CHECK(file == back);
}

TEST_CASE("schema violations are reported") {
    ProjectFile file = load_project_json(tt::fixture_path("example2.json"));

    ProjectFile cyc = file;
    cyc.activities[0].predecessors = {"5"};  // 1 -> ... -> 5 -> 1
    auto violations = validate_project_file(cyc);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("cycle") != std::string::npos);

    ProjectFile neg = file;
    neg.activities[2].actual = -1.0;
    violations = validate_project_file(neg);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("negative actual") != std::string::npos);

    ProjectFile dup = file;
    dup.activities[1].name = "1";
    CHECK_FALSE(validate_project_file(dup).empty());

    ProjectFile unknown = file;
    unknown.activities[3].predecessors = {"zzz"};
    CHECK_FALSE(validate_project_file(unknown).empty());

    ProjectFile version = file;
    version.schema_version = 2;
    CHECK_FALSE(validate_project_file(version).empty());
}

TEST_CASE("parse errors carry useful types") {
    CHECK_THROWS_AS(parse_project_json("{not json"), ParseError);
    CHECK_THROWS_AS(parse_project_json("[]"), SchemaError);
    CHECK_THROWS_AS(parse_project_json(R"({"activities": [], "cost": {"type": "linear", "delta": 1}})"),
                    SchemaError);
    CHECK_THROWS_AS(
        parse_project_json(
            R"({"activities": [{"name":"a","dist":{"type":"gamma","k":1}}], "cost":{"type":"threshold","delta":1}})"),
        SchemaError);
    CHECK_THROWS_AS(load_project_json("/nonexistent/file.json"), IoError);
}

TEST_CASE("csv import for flat threshold projects") {
    auto path = std::filesystem::temp_directory_path() / "delayshare_import.csv";
    {
        std::ofstream out(path);
        out << "name,predecessors,planned,actual\n";
        out << "design,,2,2.5\n";
        out << "build,design,3,3\n";
        out << "test,design;build,1,2\n";
    }
    ProjectFile file = load_project_csv(path.string(), 6.0);
    CHECK(file.delta == 6.0);
    REQUIRE(file.activities.size() == 3);
    CHECK(file.activities[2].predecessors == std::vector<std::string>{"design", "build"});
    CHECK(validate_project_file(file).empty());

    DeterministicProblem det = build_deterministic(file);
    CHECK(det.planned() == DurationVector{2, 3, 1});
    CHECK(det.cost_of_actual() == doctest::Approx(1.5));  // chain 2.5+3+2 = 7.5
    std::filesystem::remove(path);

    {
        std::ofstream out(path);
        out << "wrong,header\n";
    }
    CHECK_THROWS_AS(load_project_csv(path.string(), 1.0), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("builders enforce per-command requirements") {
    ProjectFile file = load_project_json(tt::fixture_path("example2.json"));
    ProjectFile no_actual = file;
    no_actual.activities[0].actual.reset();
    CHECK_THROWS_AS(build_deterministic(no_actual), SchemaError);
    CHECK_NOTHROW(build_stochastic(no_actual));  // experiments redraw actuals

    ProjectFile no_dist = file;
    no_dist.activities[0].dist.reset();
    CHECK_THROWS_AS(build_stochastic(no_dist), SchemaError);
    // deterministic build falls back from dist to explicit planned
    no_dist.activities[0].planned = 2.0;
    CHECK_NOTHROW(build_deterministic(no_dist));
}

TEST_CASE("allocation csv has the fixed column list") {
    Allocation alloc = shapley_det(tt::example2_spbar());
    std::ostringstream out;
    write_allocation_csv(alloc, tt::example2_spbar().project().labels(), out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "activity,payment,std_error,rel_err_pct");
    std::string row;
    std::getline(in, row);
    CHECK(row.substr(0, 2) == "1,");
    int rows = 1;
    while (std::getline(in, row)) ++rows;
    CHECK(rows == 5);
}

TEST_CASE("allocation json carries metadata and payments") {
    StochasticProblem sp = tt::example2_problem();
    SamplingPlan plan;
    plan.m = 50;
    plan.m1 = 40;
    Allocation alloc = shapley_stoch(sp, plan);
    std::string text = allocation_to_json(alloc, sp.project().labels());
    CHECK(text.find("\"method\": \"sampled\"") != std::string::npos);
    CHECK(text.find("\"payments\"") != std::string::npos);
    CHECK(text.find("\"std_error\"") != std::string::npos);

    std::string table = format_allocation_table(alloc, sp.project().labels());
    CHECK(table.find("total") != std::string::npos);
}

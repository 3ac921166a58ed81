#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "delayshare/experiments.hpp"
#include "delayshare/project_io.hpp"

namespace {

using namespace delayshare;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5f", x);
    return buf;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
    if (seed_opt->count() > 0) return seed_flag;
    if (const char* env = std::getenv("DELAYSHARE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ValidationError("DELAYSHARE_SEED is not an unsigned integer");
        }
    }
    return kDefaultSeed;
}

ProjectFile load_any(const std::string& path, double csv_delta) {
    if (std::filesystem::path(path).extension() == ".csv")
        return load_project_csv(path, csv_delta);
    return load_project_json(path);
}

void write_allocation_output(const Allocation& alloc, const std::vector<std::string>& labels,
                             const std::string& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open " + out_path);
    if (std::filesystem::path(out_path).extension() == ".json")
        out << allocation_to_json(alloc, labels);
    else
        write_allocation_csv(alloc, labels, out);
    if (!out.good()) throw IoError("failed writing " + out_path);
}

int cmd_validate(const std::string& path, double csv_delta) {
    ProjectFile file = load_any(path, csv_delta);
    auto violations = validate_project_file(file);
    if (!violations.empty()) {
        std::cout << "invalid: " << violations.size() << " problem(s)\n";
        for (const auto& v : violations) std::cout << "  - " << v << '\n';
        return 2;
    }
    Project project = build_project(file);
    std::cout << "valid: n=" << project.size() << " activities, "
              << project.immediate_prec().size() << " immediate precedence pairs, "
              << "delta=" << file.delta << '\n';
    return 0;
}

void print_duration_block(const Project& project, const DurationVector& y,
                          const ThresholdCost& cost, const std::string& title) {
    DurationVector e = early_times(project, y);
    std::cout << title << '\n';
    for (int i = 0; i < project.size(); ++i)
        std::cout << "  " << project.label(i) << ": early=" << fmt(e[i])
                  << " duration=" << fmt(y[i]) << '\n';
    double d = project_duration(project, y);
    std::cout << "  makespan " << fmt(d) << ", delay cost " << fmt(cost(d)) << '\n';
}

int cmd_duration(const std::string& path, double csv_delta) {
    ProjectFile file = load_any(path, csv_delta);
    Project project = build_project(file);
    ThresholdCost cost(file.delta);

    DurationVector actual;
    bool have_actual = true;
    for (const ActivitySpec& a : file.activities) {
        if (!a.actual) {
            have_actual = false;
            break;
        }
        actual.push_back(*a.actual);
    }
    if (have_actual) print_duration_block(project, actual, cost, "actual durations:");

    DurationVector planned;
    bool have_planned = true;
    for (const ActivitySpec& a : file.activities) {
        if (a.planned)
            planned.push_back(*a.planned);
        else if (a.dist)
            planned.push_back(a.dist->mean());
        else {
            have_planned = false;
            break;
        }
    }
    if (have_planned)
        print_duration_block(project, planned, cost, "planned/mean durations:");

    if (!have_actual && !have_planned)
        throw SchemaError("project file carries neither actual nor planned durations");
    return 0;
}

int cmd_allocate(const std::string& path, double csv_delta, const std::string& rule,
                 const SamplingPlan& plan, const std::string& out_path) {
    ProjectFile file = load_any(path, csv_delta);
    Allocation alloc;
    std::vector<std::string> labels;
    if (rule == "det") {
        DeterministicProblem problem = build_deterministic(file);
        labels = problem.project().labels();
        alloc = shapley_det(problem, plan);
    } else {
        for (const ActivitySpec& a : file.activities)
            if (!a.actual)
                throw SchemaError("activity \"" + a.name +
                                  "\" needs an actual duration for allocation");
        StochasticProblem problem = build_stochastic(file);
        labels = problem.project().labels();
        alloc = shapley_stoch(problem, plan);
    }
    std::cout << format_allocation_table(alloc, labels);
    if (!out_path.empty()) write_allocation_output(alloc, labels, out_path);
    return 0;
}

int cmd_experiment(const std::string& path, double csv_delta, long long runs,
                   const SamplingPlan& plan, const std::string& out_dir) {
    ProjectFile file = load_any(path, csv_delta);
    StochasticProblem problem = build_stochastic(file);
    StudyOutput study = conditional_study(problem, runs, plan);

    const Project& project = problem.project();
    std::cout << "accepted runs: " << study.result.runs
              << ", rejected draws: " << study.result.rejection_count << '\n';
    std::cout << "mean delay cost: " << fmt(study.result.mean_cost) << '\n';
    std::cout << "mean payments (ssh | sh):\n";
    for (int i = 0; i < project.size(); ++i)
        std::cout << "  " << project.label(i) << ": " << fmt(study.result.mean_ssh[i])
                  << " | " << fmt(study.result.mean_sh[i]) << '\n';

    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

    {
        std::ofstream f(dir / "study_summary.csv");
        if (!f) throw IoError("cannot open study_summary.csv");
        f << "activity,mean_ssh_payment,mean_sh_payment\n";
        for (int i = 0; i < project.size(); ++i) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", project.label(i).c_str(),
                          study.result.mean_ssh[i], study.result.mean_sh[i]);
            f << buf;
        }
    }
    {
        std::ofstream f(dir / "study_stats.csv");
        if (!f) throw IoError("cannot open study_stats.csv");
        f << "runs,rejections,mean_cost,seed,m,m1\n"
          << study.result.runs << ',' << study.result.rejection_count << ','
          << study.result.mean_cost << ',' << plan.seed << ',' << plan.m << ','
          << plan.m1 << '\n';
    }
    {
        std::ofstream f(dir / "sign_table.csv");
        if (!f) throw IoError("cannot open sign_table.csv");
        f << "rule,activity,pct_nonneg,pct_neg\n";
        for (int i = 0; i < project.size(); ++i) {
            f << "sh," << project.label(i) << ',' << study.signs.sh_nonneg_pct[i] << ','
              << study.signs.sh_neg_pct[i] << '\n';
        }
        for (int i = 0; i < project.size(); ++i) {
            f << "ssh," << project.label(i) << ',' << study.signs.ssh_nonneg_pct[i] << ','
              << study.signs.ssh_neg_pct[i] << '\n';
        }
    }
    export_density(study.densities, out_dir);
    std::cout << "wrote study_summary.csv, study_stats.csv, sign_table.csv, "
                 "density.csv, raw_samples.csv to "
              << out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayshare: allocate project delay costs among activities with "
                 "stochastic durations"};
    app.require_subcommand(1);

    std::string path, rule = "stoch", out_path, out_dir = ".";
    double csv_delta = 0.0;
    long long runs = 1000;
    SamplingPlan plan;

    auto add_common = [&](CLI::App* cmd, bool sampling) {
        cmd->add_option("file", path, "project file (.json or .csv)")->required();
        cmd->add_option("--delta", csv_delta,
                        "threshold delta for CSV project files");
        if (!sampling) return static_cast<CLI::Option*>(nullptr);
        cmd->add_option("--m", plan.m, "number of sampled permutations");
        cmd->add_option("--m1", plan.m1, "sample-matrix rows for coalition values");
        CLI::Option* seed = cmd->add_option("--seed", plan.seed,
                                            "RNG seed (env DELAYSHARE_SEED as fallback)");
        cmd->add_option("--alpha", plan.alpha, "significance level for error reports");
        cmd->add_option("--workers", plan.workers, "worker threads");
        cmd->add_option("--exact-cutoff", plan.exact_cutoff,
                        "max activities for exact enumeration");
        cmd->add_flag("--force-sampling", plan.force_sampling,
                      "always use the sampling estimator");
        return seed;
    };

    CLI::App* validate = app.add_subcommand("validate", "check a project file");
    add_common(validate, false);

    CLI::App* duration = app.add_subcommand("duration",
                                            "early times, makespan and delay cost");
    add_common(duration, false);

    CLI::App* allocate = app.add_subcommand("allocate", "allocate the delay cost");
    CLI::Option* alloc_seed = add_common(allocate, true);
    allocate->add_option("--rule", rule, "allocation rule")
        ->check(CLI::IsMember({"det", "stoch"}))
        ->required();
    allocate->add_option("--out", out_path, "write allocation to .csv or .json");

    CLI::App* experiment = app.add_subcommand(
        "experiment", "conditional simulation study with both rules");
    CLI::Option* exp_seed = add_common(experiment, true);
    experiment->add_option("--runs", runs, "accepted realizations to collect");
    experiment->add_option("--outdir", out_dir, "directory for the CSV outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(path, csv_delta);
        if (duration->parsed()) return cmd_duration(path, csv_delta);
        if (allocate->parsed()) {
            plan.seed = resolve_seed(alloc_seed, plan.seed);
            return cmd_allocate(path, csv_delta, rule, plan, out_path);
        }
        if (experiment->parsed()) {
            plan.seed = resolve_seed(exp_seed, plan.seed);
            return cmd_experiment(path, csv_delta, runs, plan, out_dir);
        }
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

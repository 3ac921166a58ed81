#include "delayshare/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "delayshare/rng.hpp"

namespace delayshare {

namespace {

struct RunRecord {
    DurationVector realization;
    double cost = 0.0;
    long long rejections = 0;
    std::vector<double> ssh;
    std::vector<double> sh;
};

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// R type-7 sample quantile on sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.size() == 1) return sorted[0];
    double idx = p * (sorted.size() - 1);
    auto lo = static_cast<std::size_t>(idx);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = idx - lo;
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

StudyOutput conditional_study(const StochasticProblem& problem, long long runs,
                              const SamplingPlan& plan,
                              long long max_attempts_per_run) {
    plan.validate();
    if (runs < 1) throw ValidationError("conditional study: runs must be >= 1");
    if (problem.is_reduced())
        throw ValidationError("conditional study applies to unreduced problems");

    const Project& project = problem.project();
    const int n = project.size();
    const DurationVector means = problem.planned_means();

    std::vector<RunRecord> records(runs);

    auto execute_run = [&](long long r) {
        RunRecord& rec = records[r];
        const std::uint64_t run_seed = RngStream::derive_seed(
            plan.seed, streams::kExperimentRunBase + static_cast<std::uint64_t>(r));

        RngStream draw(run_seed, streams::kRealizationDraw);
        DurationVector x(n);
        std::vector<double> scratch;
        long long attempts = 0;
        while (true) {
            if (attempts >= max_attempts_per_run)
                throw BudgetError(
                    "conditional study: no realization with positive delay cost after " +
                    std::to_string(attempts) + " attempts; the delivery date " +
                    "is never exceeded or almost never exceeded by this project");
            ++attempts;
            for (int i = 0; i < n; ++i) x[i] = problem.planned_dists()[i].sample(draw);
            rec.cost = problem.cost()(detail::makespan_unchecked(project, x, scratch));
            if (rec.cost > 0.0) break;
        }
        rec.rejections = attempts - 1;
        rec.realization = x;

        SamplingPlan run_plan = plan;
        run_plan.seed = RngStream::derive_seed(run_seed, streams::kAllocationSeedTag);
        run_plan.workers = 1;  // parallelism lives at the run level

        StochasticProblem realized(project, problem.planned_dists(), x, problem.cost());
        rec.ssh = shapley_stoch(realized, run_plan).payments;

        DurationVector clamped(n);
        for (int i = 0; i < n; ++i) clamped[i] = std::min(means[i], x[i]);
        DeterministicProblem det(project, clamped, x, problem.cost());
        rec.sh = shapley_det(det, run_plan).payments;
    };

    const int workers = std::max(1, plan.workers);
    if (workers == 1) {
        for (long long r = 0; r < runs; ++r) execute_run(r);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (long long r = next.fetch_add(1); r < runs; r = next.fetch_add(1))
                        execute_run(r);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& f : failures)
            if (f) std::rethrow_exception(f);
    }

    StudyOutput out;
    out.result.runs = runs;
    out.result.players = problem.active();
    out.result.mean_ssh.assign(n, 0.0);
    out.result.mean_sh.assign(n, 0.0);
    out.signs.players = problem.active();
    out.signs.sh_nonneg_pct.assign(n, 0.0);
    out.signs.sh_neg_pct.assign(n, 0.0);
    out.signs.ssh_nonneg_pct.assign(n, 0.0);
    out.signs.ssh_neg_pct.assign(n, 0.0);
    out.costs.reserve(runs);

    std::vector<long long> sh_neg(n, 0), ssh_neg(n, 0);
    for (const RunRecord& rec : records) {
        out.costs.push_back(rec.cost);
        out.result.mean_cost += rec.cost;
        out.result.rejection_count += rec.rejections;
        for (int i = 0; i < n; ++i) {
            out.result.mean_ssh[i] += rec.ssh[i];
            out.result.mean_sh[i] += rec.sh[i];
            if (rec.ssh[i] < 0.0) ++ssh_neg[i];
            if (rec.sh[i] < 0.0) ++sh_neg[i];
        }
    }
    out.result.mean_cost /= runs;
    for (int i = 0; i < n; ++i) {
        out.result.mean_ssh[i] /= runs;
        out.result.mean_sh[i] /= runs;
        out.signs.ssh_neg_pct[i] = 100.0 * ssh_neg[i] / runs;
        out.signs.ssh_nonneg_pct[i] = 100.0 - out.signs.ssh_neg_pct[i];
        out.signs.sh_neg_pct[i] = 100.0 * sh_neg[i] / runs;
        out.signs.sh_nonneg_pct[i] = 100.0 - out.signs.sh_neg_pct[i];
    }

    out.densities.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        DensitySample z1{"sh", i, project.label(i), {}};
        DensitySample z2{"ssh", i, project.label(i), {}};
        z1.values.reserve(runs);
        z2.values.reserve(runs);
        for (const RunRecord& rec : records) {
            z1.values.push_back(rec.sh[i]);
            z2.values.push_back(rec.ssh[i]);
        }
        out.densities.push_back(std::move(z1));
        out.densities.push_back(std::move(z2));
    }
    return out;
}

KdeGrid kde_grid(std::span<const double> values, int grid_points) {
    if (values.empty()) throw ValidationError("kde: no samples");
    if (grid_points < 2) throw ValidationError("kde: need at least two grid points");
    const auto n = static_cast<double>(values.size());

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    double mean = 0.0;
    for (double v : sorted) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    double sigma = std::min(sd, iqr / 1.34);
    if (sigma == 0.0) sigma = sd;
    if (sigma == 0.0) sigma = std::abs(sorted.front());
    if (sigma == 0.0) sigma = 1.0;
    double h = 0.9 * sigma * std::pow(n, -0.2);

    KdeGrid kde;
    kde.bandwidth = h;
    kde.grid.resize(grid_points);
    kde.density.assign(grid_points, 0.0);
    // 4 bandwidths past the sample range: the clipped Gaussian mass stays
    // below 1e-4, so grid integrals hit 1 within 1e-3 even for point masses
    const double lo = sorted.front() - 4.0 * h;
    const double hi = sorted.back() + 4.0 * h;
    const double step = (hi - lo) / (grid_points - 1);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
    for (int g = 0; g < grid_points; ++g) {
        double t = lo + g * step;
        kde.grid[g] = t;
        double acc = 0.0;
        for (double v : sorted) {
            double z = (t - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        kde.density[g] = norm * acc;
    }
    return kde;
}

void export_density(const std::vector<DensitySample>& data, const std::string& out_dir) {
    if (data.empty()) throw ValidationError("export_density: no samples");
    for (const auto& sample : data)
        if (sample.values.empty())
            throw ValidationError("export_density: empty sample for activity " +
                                  sample.activity_label);

    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

    std::ofstream density_file(dir / "density.csv");
    if (!density_file) throw IoError("cannot open " + (dir / "density.csv").string());
    density_file << "rule,activity,grid_point,density\n";
    for (const auto& sample : data) {
        KdeGrid kde = kde_grid(sample.values);
        for (std::size_t g = 0; g < kde.grid.size(); ++g)
            density_file << sample.rule << ',' << sample.activity_label << ','
                         << format_double(kde.grid[g]) << ','
                         << format_double(kde.density[g]) << '\n';
    }
    if (!density_file.good()) throw IoError("failed writing density.csv");

    std::ofstream raw_file(dir / "raw_samples.csv");
    if (!raw_file) throw IoError("cannot open " + (dir / "raw_samples.csv").string());
    raw_file << "rule,activity,run,payment\n";
    for (const auto& sample : data)
        for (std::size_t r = 0; r < sample.values.size(); ++r)
            raw_file << sample.rule << ',' << sample.activity_label << ',' << r << ','
                     << format_double(sample.values[r]) << '\n';
    if (!raw_file.good()) throw IoError("failed writing raw_samples.csv");
}

}  // namespace delayshare

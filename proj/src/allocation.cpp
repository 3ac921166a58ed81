#include "delayshare/allocation.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>

#include "delayshare/rng.hpp"

namespace delayshare {

namespace {

constexpr int kTabulationLimit = 24;   // 2^24 doubles = 128 MiB; hard stop
constexpr long long kChunk = 1024;     // permutations per accumulator chunk

struct Welford {
    long long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }

    // Chan's pairwise combination; `other` follows `this` in merge order.
    void merge(const Welford& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        long long total = count + other.count;
        double delta = other.mean - mean;
        mean += delta * other.count / total;
        m2 += other.m2 + delta * delta * static_cast<double>(count) *
                             static_cast<double>(other.count) / total;
        count = total;
    }

    double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
};

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

void SamplingPlan::validate() const {
    if (m < 1) throw ValidationError("sampling plan: m must be >= 1");
    if (m1 < 1) throw ValidationError("sampling plan: m1 must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("sampling plan: alpha must be in (0,1)");
    if (workers < 1) throw ValidationError("sampling plan: workers must be >= 1");
    if (exact_cutoff < 1) throw ValidationError("sampling plan: exact cutoff must be >= 1");
}

double Allocation::total() const {
    return std::accumulate(payments.begin(), payments.end(), 0.0);
}

double Allocation::payment_for(ActivityId id) const {
    auto it = std::lower_bound(players.begin(), players.end(), id);
    if (it == players.end() || *it != id)
        throw ValidationError("allocation does not cover activity " + std::to_string(id));
    return payments[it - players.begin()];
}

Allocation exact_shapley(const CharacteristicFunction& v, int exact_cutoff) {
    const int k = static_cast<int>(v.players.size());
    if (k < 1) throw ValidationError("exact shapley: empty player set");
    if (k > exact_cutoff || k > kTabulationLimit)
        throw BudgetError("exact shapley: " + std::to_string(k) +
                          " players exceed the exact cutoff of " +
                          std::to_string(std::min(exact_cutoff, kTabulationLimit)));

    const std::uint64_t full = (std::uint64_t{1} << k) - 1;
    std::vector<double> tab(full + 1);
    tab[0] = 0.0;
    for (std::uint64_t mask = 1; mask <= full; ++mask) tab[mask] = v.value(mask);

    // weight for |S| = s: s! (k-s-1)! / k! = 1 / (k * C(k-1, s))
    std::vector<double> weight(k);
    for (int s = 0; s < k; ++s) weight[s] = 1.0 / (k * binomial(k - 1, s));

    Allocation alloc;
    alloc.players = v.players;
    alloc.payments.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        double phi = 0.0;
        for (std::uint64_t mask = 0; mask <= full; ++mask) {
            if (mask & bit) continue;
            phi += weight[std::popcount(mask)] * (tab[mask | bit] - tab[mask]);
        }
        alloc.payments[i] = phi;
    }
    alloc.meta.method = "exact";
    return alloc;
}

Allocation sampled_shapley(const EvaluatorFactory& make_evaluator,
                           const std::vector<ActivityId>& players,
                           const SamplingPlan& plan) {
    plan.validate();
    const int k = static_cast<int>(players.size());
    if (k < 1) throw ValidationError("sampled shapley: empty player set");

    const long long m = plan.m;
    const long long nchunks = (m + kChunk - 1) / kChunk;
    std::vector<std::vector<Welford>> chunk_stats(nchunks, std::vector<Welford>(k));

    auto run_worker = [&](std::atomic<long long>& next_chunk) {
        auto evaluator = make_evaluator();
        std::vector<int> perm(k);
        std::vector<char> member(k);
        std::vector<double> marginal(k);
        for (long long c = next_chunk.fetch_add(1); c < nchunks;
             c = next_chunk.fetch_add(1)) {
            auto& stats = chunk_stats[c];
            const long long lo = c * kChunk;
            const long long hi = std::min(m, lo + kChunk);
            for (long long j = lo; j < hi; ++j) {
                RngStream rng(plan.seed,
                              streams::kPermutationBase + static_cast<std::uint64_t>(j));
                std::iota(perm.begin(), perm.end(), 0);
                for (int i = k - 1; i >= 1; --i) {
                    auto idx = static_cast<int>(rng.next_below(i + 1));
                    std::swap(perm[i], perm[idx]);
                }
                std::fill(member.begin(), member.end(), 0);
                std::uint64_t mask = 0;
                double prev = 0.0;  // v(empty) = 0
                for (int pos = 0; pos < k; ++pos) {
                    int p = perm[pos];
                    member[p] = 1;
                    if (k <= 64) mask |= std::uint64_t{1} << p;
                    double cur = evaluator->value(member, mask);
                    marginal[p] = cur - prev;
                    prev = cur;
                }
                for (int p = 0; p < k; ++p) stats[p].add(marginal[p]);
            }
        }
    };

    std::atomic<long long> next_chunk{0};
    const int workers = std::max(1, plan.workers);
    if (workers == 1 || nchunks == 1) {
        run_worker(next_chunk);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] { run_worker(next_chunk); });
        for (auto& t : pool) t.join();
    }

    // Merge in chunk order: result is independent of worker scheduling.
    std::vector<Welford> totals(k);
    for (long long c = 0; c < nchunks; ++c)
        for (int p = 0; p < k; ++p) totals[p].merge(chunk_stats[c][p]);

    Allocation alloc;
    alloc.players = players;
    alloc.payments.resize(k);
    for (int p = 0; p < k; ++p) alloc.payments[p] = totals[p].mean;
    if (m >= 2) {
        std::vector<double> se(k);
        for (int p = 0; p < k; ++p) se[p] = std::sqrt(totals[p].variance() / m);
        alloc.std_errors = std::move(se);
    }
    alloc.meta.method = "sampled";
    alloc.meta.m = m;
    alloc.meta.seed = plan.seed;
    alloc.meta.alpha = plan.alpha;
    alloc.meta.workers = workers;
    return alloc;
}

Allocation shapley_det(const DeterministicProblem& problem, const SamplingPlan& plan) {
    plan.validate();
    const int n = problem.project().size();
    if (n <= plan.exact_cutoff && !plan.force_sampling) {
        Allocation alloc = exact_shapley(make_det_game(problem), plan.exact_cutoff);
        alloc.meta.seed = plan.seed;
        alloc.meta.alpha = plan.alpha;
        return alloc;
    }
    auto prob = std::make_shared<const DeterministicProblem>(problem);
    EvaluatorFactory factory = [prob] { return with_cache(make_det_evaluator(prob)); };
    std::vector<ActivityId> players(n);
    std::iota(players.begin(), players.end(), 0);
    return sampled_shapley(factory, players, plan);
}

Allocation shapley_stoch(const StochasticProblem& problem, const SamplingPlan& plan) {
    plan.validate();
    const int k = problem.active_count();
    if (k <= plan.exact_cutoff && !plan.force_sampling &&
        problem.exact_evaluation_possible(plan.exact_budget)) {
        Allocation alloc = exact_shapley(make_stoch_game_exact(problem, plan.exact_budget),
                                         plan.exact_cutoff);
        alloc.meta.seed = plan.seed;
        alloc.meta.alpha = plan.alpha;
        return alloc;
    }
    auto prob = std::make_shared<const StochasticProblem>(problem);
    auto samples = std::make_shared<const SampleMatrix>(
        draw_sample_matrix(problem, plan.m1, plan.seed));
    EvaluatorFactory factory = [prob, samples] {
        return with_cache(make_stoch_mc_evaluator(prob, samples));
    };
    Allocation alloc = sampled_shapley(factory, problem.active(), plan);
    alloc.meta.m1 = plan.m1;
    return alloc;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile: p must be in (0,1)");

    // Acklam's rational approximation, then one Halley step through erfc.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double relative_error_pct(std::span<const double> samples, double alpha) {
    if (samples.size() < 2)
        throw ValidationError("relative error: need at least two samples");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("relative error: alpha must be in (0,1)");
    Welford w;
    for (double x : samples) w.add(x);
    if (w.mean == 0.0)
        throw DomainError("relative error undefined for zero mean; report the absolute half-width");
    double se = std::sqrt(w.variance() / static_cast<double>(samples.size()));
    return normal_quantile(1.0 - alpha / 2.0) * se * 100.0 / std::abs(w.mean);
}

double relative_error_pct_from_se(double std_error, double estimate, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("relative error: alpha must be in (0,1)");
    if (estimate == 0.0)
        throw DomainError("relative error undefined for zero mean; report the absolute half-width");
    return normal_quantile(1.0 - alpha / 2.0) * std_error * 100.0 / std::abs(estimate);
}

double balancedness_residual(const StochasticProblem& problem, ActivityId i,
                             ActivityId j, double budget) {
    if (problem.active_count() < 2)
        throw ValidationError("balancedness residual needs at least two activities");
    if (i == j) throw ValidationError("balancedness residual needs distinct activities");
    if (!problem.is_active(i) || !problem.is_active(j))
        throw ValidationError("balancedness residual: both activities must be active");
    if (!problem.exact_evaluation_possible(budget))
        throw BudgetError("balancedness residual requires the exact evaluation path "
                          "(finite supports within budget)");

    Allocation full = exact_shapley(make_stoch_game_exact(problem, budget));
    Allocation without_j = exact_shapley(make_stoch_game_exact(problem.eliminate(j), budget));
    Allocation without_i = exact_shapley(make_stoch_game_exact(problem.eliminate(i), budget));

    double lhs = full.payment_for(i) - without_j.payment_for(i);
    double rhs = full.payment_for(j) - without_i.payment_for(j);
    return std::abs(lhs - rhs);
}

}  // namespace delayshare

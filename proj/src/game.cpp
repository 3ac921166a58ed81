#include "delayshare/game.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace delayshare {

namespace {

std::shared_ptr<const StochasticProblem> borrow(const StochasticProblem& p) {
    return {&p, [](const StochasticProblem*) {}};
}
std::shared_ptr<const SampleMatrix> borrow(const SampleMatrix& m) {
    return {&m, [](const SampleMatrix*) {}};
}
std::shared_ptr<const DeterministicProblem> borrow(const DeterministicProblem& p) {
    return {&p, [](const DeterministicProblem*) {}};
}

int count_members(const std::vector<char>& member) {
    int c = 0;
    for (char b : member) c += b != 0;
    return c;
}

}  // namespace

DeterministicProblem::DeterministicProblem(Project project, DurationVector planned,
                                           DurationVector actual, ThresholdCost cost)
    : project_(std::move(project)),
      planned_(std::move(planned)),
      actual_(std::move(actual)),
      cost_(cost) {
    detail::check_durations(project_, planned_);
    detail::check_durations(project_, actual_);
    for (int i = 0; i < project_.size(); ++i)
        if (actual_[i] < planned_[i])
            throw ValidationError("deterministic problem: actual duration of activity " +
                                  project_.label(i) + " is below its planned duration");
    if (delay_cost(cost_, project_, planned_) != 0.0)
        throw ValidationError("deterministic problem: planned durations already incur a delay cost");
}

double DeterministicProblem::cost_of_actual() const {
    return delay_cost(cost_, project_, actual_);
}

StochasticProblem::StochasticProblem(Project project,
                                     std::vector<DurationDistribution> planned,
                                     DurationVector actual, ThresholdCost cost)
    : project_(std::move(project)),
      planned_(std::move(planned)),
      actual_(std::move(actual)),
      cost_(cost) {
    if (static_cast<int>(planned_.size()) != project_.size())
        throw ValidationError("stochastic problem: one distribution per activity required");
    detail::check_durations(project_, actual_);
    active_flags_.assign(project_.size(), 1);
    active_.resize(project_.size());
    for (int i = 0; i < project_.size(); ++i) active_[i] = i;
}

StochasticProblem StochasticProblem::eliminate(ActivityId i) const {
    if (i < 0 || i >= project_.size() || !active_flags_[i])
        throw ValidationError("eliminate: activity is unknown or already eliminated");
    if (active_count() < 2)
        throw DomainError("eliminate: cannot remove the last remaining activity");
    StochasticProblem reduced(*this);
    reduced.active_flags_[i] = 0;
    reduced.active_.erase(
        std::find(reduced.active_.begin(), reduced.active_.end(), i));
    return reduced;
}

StochasticProblem eliminate(const StochasticProblem& problem, ActivityId i) {
    return problem.eliminate(i);
}

DurationVector StochasticProblem::planned_means() const {
    DurationVector m(planned_.size());
    for (std::size_t i = 0; i < planned_.size(); ++i) m[i] = planned_[i].mean();
    return m;
}

double StochasticProblem::cost_of_actual() const {
    return delay_cost(cost_, project_, actual_);
}

bool StochasticProblem::exact_evaluation_possible(double budget) const {
    double product = 1.0;
    for (const auto& d : planned_) {
        if (!d.is_finite_support()) return false;
        product *= static_cast<double>(d.support_values().size());
        if (product > budget) return false;
    }
    return true;
}

SampleMatrix draw_sample_matrix(const StochasticProblem& problem, int m1,
                                std::uint64_t seed) {
    if (m1 < 1) throw ValidationError("sample matrix needs at least one row");
    const int n = problem.project().size();
    SampleMatrix m;
    m.rows = m1;
    m.cols = n;
    m.seed = seed;
    m.data.resize(static_cast<std::size_t>(m1) * n);
    for (int col = 0; col < n; ++col) {
        RngStream rng(seed, streams::kSampleColumnBase + static_cast<std::uint64_t>(col));
        const auto& dist = problem.planned_dists()[col];
        for (int row = 0; row < m1; ++row)
            m.data[static_cast<std::size_t>(row) * n + col] = dist.sample(rng);
    }
    return m;
}

namespace {

class DetEvaluator final : public CoalitionEvaluator {
public:
    explicit DetEvaluator(std::shared_ptr<const DeterministicProblem> problem)
        : problem_(std::move(problem)) {
        const int n = problem_->project().size();
        players_.resize(n);
        for (int i = 0; i < n; ++i) players_[i] = i;
    }

    double value(const std::vector<char>& member, std::uint64_t) override {
        if (count_members(member) == 0) return 0.0;
        y_ = problem_->planned();
        for (std::size_t k = 0; k < member.size(); ++k)
            if (member[k]) y_[players_[k]] = problem_->actual()[players_[k]];
        return problem_->cost()(detail::makespan_unchecked(problem_->project(), y_, scratch_));
    }

    const std::vector<ActivityId>& players() const override { return players_; }

private:
    std::shared_ptr<const DeterministicProblem> problem_;
    std::vector<ActivityId> players_;
    std::vector<double> y_, scratch_;
};

class StochMcEvaluator final : public CoalitionEvaluator {
public:
    StochMcEvaluator(std::shared_ptr<const StochasticProblem> problem,
                     std::shared_ptr<const SampleMatrix> samples)
        : problem_(std::move(problem)), samples_(std::move(samples)) {
        if (samples_->cols != problem_->project().size())
            throw ValidationError("sample matrix does not match the project");
        y_.resize(problem_->project().size());
    }

    double value(const std::vector<char>& member, std::uint64_t) override {
        double mean, se;
        evaluate(member, /*want_se=*/false, mean, se);
        return mean;
    }

    void value_with_se(const std::vector<char>& member, double& mean, double& se) {
        evaluate(member, /*want_se=*/true, mean, se);
    }

    const std::vector<ActivityId>& players() const override {
        return problem_->active();
    }

private:
    void evaluate(const std::vector<char>& member, bool want_se, double& mean,
                  double& se) {
        const int members = count_members(member);
        if (members == 0) {
            mean = 0.0;  // v(empty) = 0 by the TU-game convention
            se = 0.0;
            return;
        }
        const auto& prob = *problem_;
        const int n = prob.project().size();
        const auto& actives = prob.active();
        if (members == n) {  // no random component remains: exactly C(x)
            mean = prob.cost()(
                detail::makespan_unchecked(prob.project(), prob.actual(), scratch_));
            se = 0.0;
            return;
        }
        const int rows = samples_->rows;
        double acc = 0.0, wmean = 0.0, m2 = 0.0;
        for (int r = 0; r < rows; ++r) {
            auto row = samples_->row(r);
            std::copy(row.begin(), row.end(), y_.begin());
            for (std::size_t k = 0; k < member.size(); ++k)
                if (member[k]) y_[actives[k]] = prob.actual()[actives[k]];
            double c = prob.cost()(detail::makespan_unchecked(prob.project(), y_, scratch_));
            if (want_se) {
                double delta = c - wmean;
                wmean += delta / (r + 1);
                m2 += delta * (c - wmean);
            } else {
                acc += c;
            }
        }
        if (want_se) {
            mean = wmean;
            se = rows > 1 ? std::sqrt(m2 / (rows - 1) / rows) : 0.0;
        } else {
            mean = acc / rows;
            se = 0.0;
        }
    }

    std::shared_ptr<const StochasticProblem> problem_;
    std::shared_ptr<const SampleMatrix> samples_;
    std::vector<double> y_, scratch_;
};

class StochExactEvaluator final : public CoalitionEvaluator {
public:
    StochExactEvaluator(std::shared_ptr<const StochasticProblem> problem, double budget)
        : problem_(std::move(problem)), budget_(budget) {
        y_.resize(problem_->project().size());
    }

    double value(const std::vector<char>& member, std::uint64_t) override {
        if (count_members(member) == 0) return 0.0;
        const auto& prob = *problem_;
        const int n = prob.project().size();
        const auto& actives = prob.active();

        member_global_.assign(n, 0);
        for (std::size_t k = 0; k < member.size(); ++k)
            if (member[k]) member_global_[actives[k]] = 1;

        random_ids_.clear();
        double product = 1.0;
        for (int id = 0; id < n; ++id) {
            if (member_global_[id]) {
                y_[id] = prob.actual()[id];
                continue;
            }
            const auto& dist = prob.planned_dists()[id];
            if (!dist.is_finite_support())
                throw DomainError("exact coalition value: activity " +
                                  prob.project().label(id) +
                                  " has a non-discrete distribution outside the coalition");
            random_ids_.push_back(id);
            product *= static_cast<double>(dist.support_values().size());
            if (product > budget_)
                throw BudgetError("exact coalition value: joint support of " +
                                  std::to_string(product) + " outcomes exceeds budget of " +
                                  std::to_string(budget_));
        }

        // Odometer over the joint discrete support.
        idx_.assign(random_ids_.size(), 0);
        for (int id : random_ids_)
            y_[id] = prob.planned_dists()[id].support_values()[0];
        double acc = 0.0;
        while (true) {
            double w = 1.0;
            for (std::size_t r = 0; r < random_ids_.size(); ++r)
                w *= prob.planned_dists()[random_ids_[r]].support_probs()[idx_[r]];
            acc += w * prob.cost()(detail::makespan_unchecked(prob.project(), y_, scratch_));

            std::size_t r = 0;
            for (; r < random_ids_.size(); ++r) {
                const auto& vals = prob.planned_dists()[random_ids_[r]].support_values();
                if (++idx_[r] < vals.size()) {
                    y_[random_ids_[r]] = vals[idx_[r]];
                    break;
                }
                idx_[r] = 0;
                y_[random_ids_[r]] = vals[0];
            }
            if (r == random_ids_.size()) break;
        }
        return acc;
    }

    const std::vector<ActivityId>& players() const override {
        return problem_->active();
    }

private:
    std::shared_ptr<const StochasticProblem> problem_;
    double budget_;
    std::vector<double> y_, scratch_;
    std::vector<char> member_global_;
    std::vector<int> random_ids_;
    std::vector<std::size_t> idx_;
};

class CachingEvaluator final : public CoalitionEvaluator {
public:
    explicit CachingEvaluator(std::unique_ptr<CoalitionEvaluator> inner)
        : inner_(std::move(inner)),
          enabled_(inner_->players().size() <= kMaxCachedPlayers) {}

    double value(const std::vector<char>& member, std::uint64_t mask) override {
        if (!enabled_) return inner_->value(member, mask);
        auto it = cache_.find(mask);
        if (it != cache_.end()) return it->second;
        double v = inner_->value(member, mask);
        cache_.emplace(mask, v);
        return v;
    }

    const std::vector<ActivityId>& players() const override { return inner_->players(); }

private:
    static constexpr std::size_t kMaxCachedPlayers = 20;

    std::unique_ptr<CoalitionEvaluator> inner_;
    bool enabled_;
    std::unordered_map<std::uint64_t, double> cache_;
};

// Builds the local member vector for a global coalition mask.
std::vector<char> member_from_global_mask(const std::vector<ActivityId>& players,
                                          std::uint64_t coalition, int project_size) {
    if (project_size > 64)
        throw DomainError("mask-based coalition values support at most 64 activities");
    std::uint64_t allowed = 0;
    for (ActivityId id : players) allowed |= std::uint64_t{1} << id;
    if ((coalition & ~allowed) != 0)
        throw ValidationError("coalition mask references eliminated or unknown activities");
    std::vector<char> member(players.size(), 0);
    for (std::size_t k = 0; k < players.size(); ++k)
        member[k] = (coalition >> players[k]) & 1 ? 1 : 0;
    return member;
}

std::function<double(std::uint64_t)> local_mask_accessor(
    std::shared_ptr<CoalitionEvaluator> eval) {
    return [eval](std::uint64_t mask) {
        const auto k = eval->players().size();
        std::vector<char> member(k, 0);
        for (std::size_t b = 0; b < k; ++b) member[b] = (mask >> b) & 1 ? 1 : 0;
        return eval->value(member, mask);
    };
}

}  // namespace

std::unique_ptr<CoalitionEvaluator> make_det_evaluator(const DeterministicProblem& problem) {
    return std::make_unique<DetEvaluator>(
        std::make_shared<const DeterministicProblem>(problem));
}

std::unique_ptr<CoalitionEvaluator> make_stoch_mc_evaluator(const StochasticProblem& problem,
                                                            const SampleMatrix& samples) {
    return std::make_unique<StochMcEvaluator>(
        std::make_shared<const StochasticProblem>(problem),
        std::make_shared<const SampleMatrix>(samples));
}

std::unique_ptr<CoalitionEvaluator> make_stoch_exact_evaluator(const StochasticProblem& problem,
                                                               double budget) {
    return std::make_unique<StochExactEvaluator>(
        std::make_shared<const StochasticProblem>(problem), budget);
}

std::unique_ptr<CoalitionEvaluator> make_det_evaluator(
    std::shared_ptr<const DeterministicProblem> problem) {
    return std::make_unique<DetEvaluator>(std::move(problem));
}

std::unique_ptr<CoalitionEvaluator> make_stoch_mc_evaluator(
    std::shared_ptr<const StochasticProblem> problem,
    std::shared_ptr<const SampleMatrix> samples) {
    return std::make_unique<StochMcEvaluator>(std::move(problem), std::move(samples));
}

std::unique_ptr<CoalitionEvaluator> make_stoch_exact_evaluator(
    std::shared_ptr<const StochasticProblem> problem, double budget) {
    return std::make_unique<StochExactEvaluator>(std::move(problem), budget);
}

std::unique_ptr<CoalitionEvaluator> with_cache(std::unique_ptr<CoalitionEvaluator> inner) {
    return std::make_unique<CachingEvaluator>(std::move(inner));
}

CharacteristicFunction make_det_game(const DeterministicProblem& problem) {
    auto eval = std::shared_ptr<CoalitionEvaluator>(
        with_cache(make_det_evaluator(problem)).release());
    CharacteristicFunction cf;
    cf.players = eval->players();
    cf.value = local_mask_accessor(std::move(eval));
    cf.kind = CharacteristicFunction::Kind::exact;
    return cf;
}

CharacteristicFunction make_stoch_game_exact(const StochasticProblem& problem,
                                             double budget) {
    auto eval = std::shared_ptr<CoalitionEvaluator>(
        with_cache(make_stoch_exact_evaluator(problem, budget)).release());
    CharacteristicFunction cf;
    cf.players = eval->players();
    cf.value = local_mask_accessor(std::move(eval));
    cf.kind = CharacteristicFunction::Kind::exact;
    return cf;
}

CharacteristicFunction make_stoch_game_mc(const StochasticProblem& problem,
                                          std::shared_ptr<const SampleMatrix> samples) {
    auto prob = std::make_shared<const StochasticProblem>(problem);
    auto eval = std::shared_ptr<CoalitionEvaluator>(
        with_cache(std::make_unique<StochMcEvaluator>(prob, samples)).release());
    CharacteristicFunction cf;
    cf.players = eval->players();
    cf.value = local_mask_accessor(eval);
    cf.kind = CharacteristicFunction::Kind::estimated;
    cf.m1 = samples->rows;
    cf.std_error = [prob, samples](std::uint64_t mask) {
        StochMcEvaluator fresh(prob, samples);
        const auto k = prob->active().size();
        std::vector<char> member(k, 0);
        for (std::size_t b = 0; b < k; ++b) member[b] = (mask >> b) & 1 ? 1 : 0;
        double mean, se;
        fresh.value_with_se(member, mean, se);
        return se;
    };
    return cf;
}

double det_value(const DeterministicProblem& problem, std::uint64_t coalition) {
    DetEvaluator eval(borrow(problem));
    auto member = member_from_global_mask(eval.players(), coalition,
                                          problem.project().size());
    return eval.value(member, coalition);
}

std::pair<double, double> stoch_value_mc(const StochasticProblem& problem,
                                         std::uint64_t coalition,
                                         const SampleMatrix& samples) {
    StochMcEvaluator eval(borrow(problem), borrow(samples));
    auto member = member_from_global_mask(problem.active(), coalition,
                                          problem.project().size());
    double mean, se;
    eval.value_with_se(member, mean, se);
    return {mean, se};
}

double stoch_value_exact(const StochasticProblem& problem, std::uint64_t coalition,
                         double budget) {
    StochExactEvaluator eval(borrow(problem), budget);
    auto member = member_from_global_mask(problem.active(), coalition,
                                          problem.project().size());
    return eval.value(member, coalition);
}

}  // namespace delayshare

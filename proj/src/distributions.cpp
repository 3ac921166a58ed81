#include "delayshare/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace delayshare {

DurationDistribution DurationDistribution::point(double value) {
    if (!(value >= 0.0)) throw ValidationError("point distribution: value must be >= 0");
    DurationDistribution d(Kind::point, value, value, value);
    d.values_ = {value};
    d.probs_ = {1.0};
    d.cum_ = {1.0};
    return d;
}

DurationDistribution DurationDistribution::uniform(double a, double b) {
    if (!(a >= 0.0) || !(a < b))
        throw ValidationError("uniform distribution requires 0 <= a < b");
    return DurationDistribution(Kind::uniform, a, b, 0.0);
}

DurationDistribution DurationDistribution::triangular(double min, double mode,
                                                      double max) {
    if (!(min >= 0.0) || !(min <= mode) || !(mode <= max) || !(min < max))
        throw ValidationError("triangular distribution requires 0 <= min <= mode <= max, min < max");
    return DurationDistribution(Kind::triangular, min, max, mode);
}

DurationDistribution DurationDistribution::exponential(double rate) {
    if (!(rate > 0.0)) throw ValidationError("exponential distribution requires rate > 0");
    return DurationDistribution(Kind::exponential, rate, 0.0, 0.0);
}

DurationDistribution DurationDistribution::discrete(std::vector<double> values,
                                                    std::vector<double> probs) {
    if (values.empty() || values.size() != probs.size())
        throw ValidationError("discrete distribution: values/probs must be non-empty and equal-sized");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0))
            throw ValidationError("discrete distribution: values must be >= 0");
        if (!(probs[i] > 0.0))
            throw ValidationError("discrete distribution: probabilities must be > 0");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("discrete distribution: probabilities must sum to 1 (within 1e-12)");
    DurationDistribution d(Kind::discrete, 0.0, 0.0, 0.0);
    d.values_ = std::move(values);
    d.probs_ = std::move(probs);
    d.cum_.resize(d.probs_.size());
    std::partial_sum(d.probs_.begin(), d.probs_.end(), d.cum_.begin());
    return d;
}

double DurationDistribution::sample(RngStream& rng) const {
    switch (kind_) {
        case Kind::point:
            return a_;
        case Kind::uniform:
            return a_ + (b_ - a_) * rng.next_double();
        case Kind::triangular:
            return quantile(rng.next_double());
        case Kind::exponential:
            return -std::log(rng.next_double_pos()) / a_;
        case Kind::discrete: {
            double u = rng.next_double();
            auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
            std::size_t idx = static_cast<std::size_t>(it - cum_.begin());
            if (idx >= values_.size()) idx = values_.size() - 1;
            return values_[idx];
        }
    }
    return 0.0;  // unreachable
}

double DurationDistribution::mean() const {
    switch (kind_) {
        case Kind::point:
            return a_;
        case Kind::uniform:
            return 0.5 * (a_ + b_);
        case Kind::triangular:
            return (a_ + b_ + c_) / 3.0;
        case Kind::exponential:
            return 1.0 / a_;
        case Kind::discrete: {
            double m = 0.0;
            for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * probs_[i];
            return m;
        }
    }
    return 0.0;
}

double DurationDistribution::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must be in [0,1]");
    switch (kind_) {
        case Kind::uniform:
            return a_ + (b_ - a_) * p;
        case Kind::exponential:
            if (p == 1.0) throw DomainError("exponential quantile at p=1 is unbounded");
            return -std::log1p(-p) / a_;
        case Kind::triangular: {
            double span = b_ - a_;
            double q = (c_ - a_) / span;
            if (p <= q) return a_ + std::sqrt(p * span * (c_ - a_));
            return b_ - std::sqrt((1.0 - p) * span * (b_ - c_));
        }
        default:
            throw DomainError("quantile is defined for continuous distributions only");
    }
}

double DurationDistribution::cdf(double x) const {
    switch (kind_) {
        case Kind::uniform:
            if (x <= a_) return 0.0;
            if (x >= b_) return 1.0;
            return (x - a_) / (b_ - a_);
        case Kind::exponential:
            return x <= 0.0 ? 0.0 : -std::expm1(-a_ * x);
        case Kind::triangular: {
            if (x <= a_) return 0.0;
            if (x >= b_) return 1.0;
            double span = b_ - a_;
            if (x <= c_) return (x - a_) * (x - a_) / (span * (c_ - a_));
            return 1.0 - (b_ - x) * (b_ - x) / (span * (b_ - c_));
        }
        case Kind::point:
            return x >= a_ ? 1.0 : 0.0;
        case Kind::discrete: {
            double acc = 0.0;
            for (std::size_t i = 0; i < values_.size(); ++i)
                if (values_[i] <= x) acc += probs_[i];
            return acc;
        }
    }
    return 0.0;  // unreachable
}

DurationDistribution DurationDistribution::discretize(int k) const {
    if (is_finite_support())
        throw DomainError("discretize applies to continuous distributions only");
    if (k < 2) throw ValidationError("discretize requires k >= 2");
    std::vector<double> values(k);
    for (int i = 0; i < k; ++i) values[i] = quantile((i + 0.5) / k);
    std::vector<double> probs(k, 1.0 / k);
    return discrete(std::move(values), std::move(probs));
}

const std::vector<double>& DurationDistribution::support_values() const {
    if (!is_finite_support())
        throw DomainError("support_values: distribution has no finite support");
    return values_;
}

const std::vector<double>& DurationDistribution::support_probs() const {
    if (!is_finite_support())
        throw DomainError("support_probs: distribution has no finite support");
    return probs_;
}

double DurationDistribution::min_support() const {
    switch (kind_) {
        case Kind::point:
            return a_;
        case Kind::uniform:
        case Kind::triangular:
            return a_;
        case Kind::exponential:
            return 0.0;
        case Kind::discrete:
            return *std::min_element(values_.begin(), values_.end());
    }
    return 0.0;
}

double DurationDistribution::max_support() const {
    switch (kind_) {
        case Kind::point:
            return a_;
        case Kind::uniform:
        case Kind::triangular:
            return b_;
        case Kind::exponential:
            return std::numeric_limits<double>::infinity();
        case Kind::discrete:
            return *std::max_element(values_.begin(), values_.end());
    }
    return 0.0;
}

bool DurationDistribution::operator==(const DurationDistribution& other) const {
    return kind_ == other.kind_ && a_ == other.a_ && b_ == other.b_ && c_ == other.c_ &&
           values_ == other.values_ && probs_ == other.probs_;
}

std::string DurationDistribution::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::point:
            os << "point(" << a_ << ")";
            break;
        case Kind::uniform:
            os << "uniform(" << a_ << "," << b_ << ")";
            break;
        case Kind::triangular:
            os << "triangular(" << a_ << "," << c_ << "," << b_ << ")";
            break;
        case Kind::exponential:
            os << "exponential(rate=" << a_ << ")";
            break;
        case Kind::discrete:
            os << "discrete(" << values_.size() << " points)";
            break;
    }
    return os.str();
}

}  // namespace delayshare

#pragma once

#include <string>
#include <vector>

#include "delayshare/errors.hpp"
#include "delayshare/rng.hpp"

namespace delayshare {

// One independent non-negative activity duration. Triangular parameters are
// (min, mode, max); the exponential parameter is the rate, so
// exponential(0.5) has mean 2.
class DurationDistribution {
public:
    enum class Kind { point, uniform, triangular, exponential, discrete };

    static DurationDistribution point(double value);
    static DurationDistribution uniform(double a, double b);
    static DurationDistribution triangular(double min, double mode, double max);
    static DurationDistribution exponential(double rate);
    static DurationDistribution discrete(std::vector<double> values,
                                         std::vector<double> probs);

    Kind kind() const { return kind_; }
    bool is_finite_support() const {
        return kind_ == Kind::point || kind_ == Kind::discrete;
    }

    double sample(RngStream& rng) const;
    double mean() const;

    // Inverse CDF; defined for the continuous kinds.
    double quantile(double p) const;
    double cdf(double x) const;

    // Equal-probability discrete approximation on the k mid-quantile points
    // (i + 0.5)/k. Only for continuous kinds.
    DurationDistribution discretize(int k) const;

    // Finite-support accessors (point/discrete).
    const std::vector<double>& support_values() const;
    const std::vector<double>& support_probs() const;

    double min_support() const;
    double max_support() const;  // +inf for exponential

    // Parameter accessors, valid per kind.
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    double param_c() const { return c_; }
    double rate() const { return a_; }
    double point_value() const { return a_; }

    bool operator==(const DurationDistribution& other) const;

    std::string describe() const;

private:
    DurationDistribution(Kind kind, double a, double b, double c)
        : kind_(kind), a_(a), b_(b), c_(c) {}

    Kind kind_;
    double a_ = 0.0, b_ = 0.0, c_ = 0.0;  // meaning depends on kind
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> cum_;
};

}  // namespace delayshare

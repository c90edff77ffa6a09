#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ellipmoment {

using Vector = std::vector<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

/// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A series or adaptive scheme failed to reach the requested tolerance.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A family parameter gate failed (e.g. Student-t degrees of freedom too small).
class validity_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Compensated (Neumaier) accumulator; keeps long MC sums exact to a final rounding.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Running mean/variance with compensated sums.
struct MeanVar {
    KahanSum sum;
    KahanSum sumsq;   // of deviations from `center` (first value), for stability
    double center = 0.0;
    std::size_t n = 0;

    void add(double x) {
        if (n == 0) center = x;
        sum.add(x);
        double d = x - center;
        sumsq.add(d * d);
        ++n;
    }
    double mean() const { return sum.value() / static_cast<double>(n); }
    /// Sample variance (n-1 denominator); 0 for n < 2 or constant input.
    double variance() const {
        if (n < 2) return 0.0;
        double m = mean() - center;
        double v = (sumsq.value() - static_cast<double>(n) * m * m) /
                   static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double stderr_of_mean() const {
        return std::sqrt(variance() / static_cast<double>(n));
    }
};

inline double sqr(double x) { return x * x; }

}  // namespace ellipmoment

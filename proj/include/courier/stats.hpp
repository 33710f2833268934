#pragma once

#include <cstddef>
#include <vector>

namespace courier::stats {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased (n-1 denominator); 0 for n < 2
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

SampleStats summarize(const std::vector<double>& xs);

// Result of a two-sample Welch t-test. p_greater is the one-sided p-value
// for the alternative "mean(a) > mean(b)"; p_two_sided doubles the smaller
// tail. With degenerate inputs (either sample smaller than 2, or both
// variances zero) the test falls back to comparing means directly.
struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_greater = 1.0;
    double p_two_sided = 1.0;
};

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// CDF of Student's t distribution with nu degrees of freedom, via the
// regularized incomplete beta function.
double student_t_cdf(double t, double nu);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incbeta(double a, double b, double x);

// Five-number summary used for box plots: min, lower quartile, median,
// upper quartile, max. Quartiles use linear interpolation between order
// statistics (the common "type 7" rule).
struct BoxStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

BoxStats box_stats(std::vector<double> xs);

}  // namespace courier::stats

#include "courier/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace courier::stats {

SampleStats summarize(const std::vector<double>& xs) {
    SampleStats s;
    s.n = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    s.min = xs[0];
    s.max = xs[0];
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double x : xs) {
            double d = x - s.mean;
            ss += d * d;
        }
        s.variance = ss / static_cast<double>(s.n - 1);
        s.stddev = std::sqrt(s.variance);
    }
    return s;
}

// Lentz's algorithm for the continued fraction of the incomplete beta
// function, as in the standard numerical-recipes formulation.
static double incbeta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-14;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double incbeta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incbeta: parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    // Use the symmetry relation to keep the continued fraction convergent.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * incbeta_cf(a, b, x) / a;
    }
    return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("student_t_cdf: df must be positive");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    double x = nu / (nu + t * t);
    double tail = 0.5 * incbeta(nu / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    WelchResult r;
    SampleStats sa = summarize(a);
    SampleStats sb = summarize(b);
    if (sa.n < 2 || sb.n < 2 || (sa.variance == 0.0 && sb.variance == 0.0)) {
        // No usable variance estimate. Decide by the means alone so callers
        // still get a sensible direction for deterministic inputs.
        if (sa.mean > sb.mean) {
            r.t = std::numeric_limits<double>::infinity();
            r.p_greater = 0.0;
            r.p_two_sided = 0.0;
        } else if (sa.mean < sb.mean) {
            r.t = -std::numeric_limits<double>::infinity();
            r.p_greater = 1.0;
            r.p_two_sided = 0.0;
        } else {
            r.t = 0.0;
            r.p_greater = 0.5;
            r.p_two_sided = 1.0;
        }
        r.df = 1.0;
        return r;
    }
    double va = sa.variance / static_cast<double>(sa.n);
    double vb = sb.variance / static_cast<double>(sb.n);
    double se = std::sqrt(va + vb);
    r.t = (sa.mean - sb.mean) / se;
    double num = (va + vb) * (va + vb);
    double den = va * va / static_cast<double>(sa.n - 1) + vb * vb / static_cast<double>(sb.n - 1);
    r.df = num / den;
    double cdf = student_t_cdf(r.t, r.df);
    r.p_greater = 1.0 - cdf;
    r.p_two_sided = 2.0 * std::min(cdf, 1.0 - cdf);
    return r;
}

static double quantile_sorted(const std::vector<double>& xs, double q) {
    double pos = q * static_cast<double>(xs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

BoxStats box_stats(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("box_stats: empty sample");
    std::sort(xs.begin(), xs.end());
    BoxStats b;
    b.min = xs.front();
    b.max = xs.back();
    b.q1 = quantile_sorted(xs, 0.25);
    b.median = quantile_sorted(xs, 0.5);
    b.q3 = quantile_sorted(xs, 0.75);
    return b;
}

}  // namespace courier::stats

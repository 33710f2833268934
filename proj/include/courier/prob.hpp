#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace courier {

// Exact rational with int64 parts. Enough range for map-sized transition
// tables (denominators here are products of small counts, not factorials).
struct Frac {
    long long num = 0;
    long long den = 1;

    Frac() = default;
    Frac(long long n) : num(n), den(1) {}
    Frac(long long n, long long d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("Frac: zero denominator");
        normalize();
    }

    void normalize() {
        if (den < 0) { num = -num; den = -den; }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Frac operator+(Frac a, Frac b) { return Frac(a.num * b.den + b.num * a.den, a.den * b.den); }
    friend Frac operator-(Frac a, Frac b) { return Frac(a.num * b.den - b.num * a.den, a.den * b.den); }
    friend Frac operator*(Frac a, Frac b) { return Frac(a.num * b.num, a.den * b.den); }
    friend Frac operator/(Frac a, Frac b) {
        if (b.num == 0) throw std::invalid_argument("Frac: division by zero");
        return Frac(a.num * b.den, a.den * b.num);
    }
    friend bool operator==(const Frac& a, const Frac& b) { return a.num == b.num && a.den == b.den; }
    friend bool operator!=(const Frac& a, const Frac& b) { return !(a == b); }
    friend bool operator<(const Frac& a, const Frac& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator<=(const Frac& a, const Frac& b) { return a.num * b.den <= b.num * a.den; }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

// Parses "8/10", "0.8", "1", ".5". Exact: decimals become num/10^k.
Frac parse_frac(const std::string& s);

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream-splitting: one master seed, stable per-trial engines regardless of
// scheduling order. Two rounds of mixing so adjacent ids decorrelate.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t master, uint64_t stream = 0) { return Rng(derive_seed(master, stream)); }

// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Index into an explicit distribution by CDF walk. Entries need not sum to
// exactly 1; trailing slack goes to the last entry.
inline size_t sample_index(Rng& rng, const std::vector<double>& probs) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

// Standard normal via Box-Muller. std::normal_distribution is
// implementation-defined, which would break byte-identical reruns.
double normal01(Rng& rng);

// Gamma(alpha, 1) by Marsaglia-Tsang squeeze, alpha > 0. Small shapes use
// the boost Gamma(alpha+1) * U^(1/alpha).
double gamma_sample(Rng& rng, double alpha);

// Symmetric Dirichlet draw on the n-simplex: normalized gamma variates.
std::vector<double> dirichlet_sample(Rng& rng, double alpha, size_t n);

}  // namespace courier

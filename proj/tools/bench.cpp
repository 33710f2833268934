// Times the OpenMP value-iteration sweep against the serial reference on
// random MDPs of growing size and verifies the two produce bit-identical
// values and policies. Exits nonzero on any mismatch so CI can run it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "courier/mdp.hpp"
#include "courier/prob.hpp"

using namespace courier;

namespace {

mdp::Mdp random_mdp(int states, int actions, int branch, uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    mdp::Mdp m;
    m.init(states, actions, 0.95);
    m.terminal[states - 1] = 1;
    for (int s = 0; s + 1 < states; ++s) {
        for (int a = 0; a < actions; ++a) {
            double left = 1.0;
            for (int b = 0; b < branch; ++b) {
                double p = (b + 1 == branch) ? left : left * (0.3 + 0.4 * uniform01(rng));
                int next = static_cast<int>(rng() % static_cast<uint64_t>(states));
                m.trans[s][a].push_back({next, p});
                left -= p;
            }
            m.reward[s][a] = -1.0 + 2.0 * uniform01(rng);
        }
    }
    m.validate();
    return m;
}

template <typename F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("value iteration, %d thread(s)\n", omp_get_max_threads());
#else
    std::printf("value iteration, OpenMP disabled\n");
#endif
    std::printf("%8s %6s %10s %10s %8s %10s  %s\n", "states", "iters", "serial_ms", "omp_ms",
                "speedup", "max_diff", "verdict");

    bool all_match = true;
    const double eps = 1e-8;
    for (int states : {400, 2500, 10000}) {
        mdp::Mdp m = random_mdp(states, 4, 4, 0xBE5C000000000000ULL + states);

        mdp::Solution serial, parallel;
        double t_serial = best_of(3, [&] { serial = mdp::value_iteration_serial(m, eps); });
        double t_omp = best_of(3, [&] { parallel = mdp::value_iteration(m, eps); });

        double max_diff = 0.0;
        for (int s = 0; s < states; ++s)
            max_diff = std::max(max_diff, std::fabs(serial.value[s] - parallel.value[s]));
        bool match = max_diff == 0.0 && serial.policy == parallel.policy &&
                     serial.iterations == parallel.iterations;
        all_match = all_match && match;

        std::printf("%8d %6d %10.2f %10.2f %8.2f %10.2e  %s\n", states, parallel.iterations,
                    t_serial, t_omp, t_serial / t_omp, max_diff,
                    match ? "identical" : "MISMATCH");
    }
    return all_match ? 0 : 1;
}

#include "mixflow/exec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <omp.h>

namespace mixflow {

namespace {
std::atomic<Exec> g_default_exec{Exec::Parallel};
}

Exec default_exec() noexcept { return g_default_exec.load(); }
void set_default_exec(Exec exec) noexcept { g_default_exec.store(exec); }

int max_threads() noexcept { return omp_get_max_threads(); }

void set_threads(int n) noexcept {
    if (n > 0) omp_set_num_threads(n);
}

double dot(Exec exec, std::span<const double> a, std::span<const double> b) {
    return deterministic_sum(exec, a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace mixflow

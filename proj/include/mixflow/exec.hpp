#pragma once

#include <cstddef>
#include <memory>
#include <span>

namespace mixflow {

/// Execution policy for cell loops. `Serial` is the reference path; `Parallel`
/// runs the same loop body under OpenMP and must produce identical bits.
enum class Exec { Serial, Parallel };

/// Process-wide default used by solvers that are not given an explicit policy.
Exec default_exec() noexcept;
void set_default_exec(Exec exec) noexcept;

/// Number of OpenMP threads (1 when built without OpenMP support).
int max_threads() noexcept;
void set_threads(int n) noexcept;

/// Calls body(i) for i in [0, n). Iterations must be independent.
template <class Body>
void for_each_index(Exec exec, std::size_t n, Body&& body) {
    const auto count = static_cast<long long>(n);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    } else {
        for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    }
}

/// Sums term(i) over [0, n) with a fixed blocking, so the result is the same
/// for every thread count and for both policies.
template <class Term>
double deterministic_sum(Exec exec, std::size_t n, Term&& term) {
    constexpr std::size_t block = 1024;
    const std::size_t nblocks = (n + block - 1) / block;
    if (nblocks <= 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += term(i);
        return s;
    }
    double partial_stack[64];
    double* partial = partial_stack;
    std::unique_ptr<double[]> heap;
    if (nblocks > 64) {
        heap.reset(new double[nblocks]);
        partial = heap.get();
    }
    for_each_index(exec, nblocks, [&](std::size_t b) {
        const std::size_t lo = b * block;
        const std::size_t hi = lo + block < n ? lo + block : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[b] = s;
    });
    double total = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) total += partial[b];
    return total;
}

double dot(Exec exec, std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);

}  // namespace mixflow

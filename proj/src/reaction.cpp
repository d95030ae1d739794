#include "mixflow/reaction.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mixflow {

ReactionField::ReactionField(const MixtureModel& model, RateFunction rate, std::string name)
    : model_(model), rate_(std::move(rate)), name_(std::move(name)) {
    if (!rate_) throw ConfigError("reaction rate function is empty");
}

ReactionField ReactionField::exchange(const MixtureModel& model, DenseMatrix rates) {
    const std::size_t n = model.n_species();
    if (rates.n != n || rates.data.size() != n * n)
        throw ConfigError("exchange rates must be an N x N matrix");
    auto rate = [k = std::move(rates), n](std::span<const double> rho, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) {
            double gain = 0.0;
            double loss = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                gain += k(j, i) * rho[j];
                loss += k(i, j);
            }
            out[i] = gain - loss * rho[i];
        }
    };
    return ReactionField(model, rate, "exchange");
}

ReactionField ReactionField::logistic(const MixtureModel& model, std::vector<double> gamma, double capacity) {
    const std::size_t n = model.n_species();
    if (gamma.size() != n) throw ConfigError("logistic rates need one gamma per species");
    if (!(capacity > 0.0)) throw ConfigError("logistic capacity must be positive");
    VolumeExtension ext = model.extension;
    auto rate = [gamma = std::move(gamma), capacity, ext, n](std::span<const double> rho,
                                                              std::span<double> out) {
        const double factor = 1.0 - ext.value(rho) / capacity;
        for (std::size_t i = 0; i < n; ++i) out[i] = gamma[i] * rho[i] * factor;
    };
    return ReactionField(model, rate, "logistic");
}

ReactionField ReactionField::zero(const MixtureModel& model) {
    return ReactionField(model, [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    }, "zero");
}

void ReactionField::rate(std::span<const double> rho, std::span<double> out) const {
    rate_(rho, out);
}

namespace {

constexpr std::size_t kStackSpecies = 16;

// Small-vector scratch: stack storage for the common case.
struct Scratch {
    double stack[3 * kStackSpecies];
    std::vector<double> heap;
    double* data;

    explicit Scratch(std::size_t n) {
        if (n <= kStackSpecies) {
            data = stack;
        } else {
            heap.resize(3 * n);
            data = heap.data();
        }
    }
};

}  // namespace

double ReactionField::f(double w, std::span<const double> u) const {
    const std::size_t n = size();
    Scratch s(n);
    std::span<double> rho(s.data, n), r(s.data + n, n), grad(s.data + 2 * n, n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = w * u[i];
    rate_(rho, r);
    model_.extension.gradient(u, grad);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += r[i] * grad[i];
    return v;
}

void ReactionField::g_tilde(double w, std::span<const double> u, std::span<double> out) const {
    const std::size_t n = size();
    Scratch s(n);
    std::span<double> rho(s.data, n), r(s.data + n, n), grad(s.data + 2 * n, n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = w * u[i];
    rate_(rho, r);
    model_.extension.gradient(u, grad);
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += r[i] * grad[i];
    const double lambda = model_.extension.value(u);
    for (std::size_t i = 0; i < n; ++i) out[i] = (r[i] - u[i] * f / lambda) / w;
}

double ReactionField::orthogonality_residual(double w, std::span<const double> u) const {
    const std::size_t n = size();
    std::vector<double> g(n), grad(n);
    g_tilde(w, u, g);
    model_.extension.gradient(u, grad);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += g[i] * grad[i];
    return s;
}

// ---------------------------------------------------------------------------

int sample_fractions(const MixtureModel& model, std::uint64_t& state, std::span<double> u) {
    std::mt19937_64 rng(state);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) u[i] = unit(rng);
    int zeroed = -1;
    if (n > 1 && (rng() & 1u)) {
        zeroed = static_cast<int>(rng() % n);
        u[static_cast<std::size_t>(zeroed)] = 0.0;
    }
    const double lambda = model.extension.value(u);
    for (std::size_t i = 0; i < n; ++i) u[i] /= lambda;
    state = rng();
    return zeroed;
}

ReactionCheck check_reaction(const ReactionField& reaction, double w_min, double w_max,
                             std::size_t samples, std::uint64_t seed) {
    const std::size_t n = reaction.size();
    ReactionCheck out;
    std::vector<double> u(n), g(n), grad(n);
    std::uint64_t state = seed;
    std::mt19937_64 wrng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> wdist(w_min, w_max);
    for (std::size_t k = 0; k < samples; ++k) {
        const int zeroed = sample_fractions(reaction.model(), state, u);
        const double w = wdist(wrng);
        reaction.g_tilde(w, u, g);
        reaction.model().extension.gradient(u, grad);
        double orth = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            orth += g[i] * grad[i];
            scale += std::abs(g[i] * grad[i]);
        }
        out.worst_orthogonality = std::max(out.worst_orthogonality, std::abs(orth) / std::max(1.0, scale));
        if (zeroed >= 0) {
            const double gi = g[static_cast<std::size_t>(zeroed)];
            if (gi < out.worst_quasi) {
                out.worst_quasi = gi;
                if (gi < 0.0 && out.quasi_positive) {
                    std::ostringstream os;
                    os << "g_" << zeroed + 1 << " = " << gi << " < 0 at w = " << w << " with u_" << zeroed + 1
                       << " = 0";
                    out.detail = os.str();
                }
            }
            if (gi < 0.0) out.quasi_positive = false;
        }
        ++out.samples;
    }
    return out;
}

SourceBarrierCheck check_source_barrier(const ReactionField& reaction, double w_lower, double w_upper,
                                        std::size_t samples, std::uint64_t seed) {
    const std::size_t n = reaction.size();
    SourceBarrierCheck out;
    std::vector<double> u(n);
    std::uint64_t state = seed;
    std::mt19937_64 wrng(seed + 17);
    std::uniform_real_distribution<double> below(0.0, 1.0);
    for (std::size_t k = 0; k < samples; ++k) {
        sample_fractions(reaction.model(), state, u);
        const double t = below(wrng);
        // Below the lower barrier: w in (0, w_lower]; above: w in [w_upper, 4 w_upper].
        const double wl = w_lower * std::max(t, 1e-3);
        const double wh = w_upper * (1.0 + 3.0 * t);
        const double fl = reaction.f(wl, u);
        const double fh = reaction.f(wh, u);
        out.worst_low = std::min(out.worst_low, fl);
        out.worst_high = std::max(out.worst_high, fh);
    }
    out.holds = out.worst_low >= 0.0 && out.worst_high <= 0.0;
    return out;
}

}  // namespace mixflow

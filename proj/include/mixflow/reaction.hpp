#pragma once

// Reaction rates r(rho) and the derived sources of the decomposed system:
//
//     f(w, u)  = r(w u) . Lambda'(u)                     (w-equation)
//     g_i(w, u) = (r_i(w u) - u_i f(w, u) / Lambda(u)) / w (fraction ODEs)
//
// g is orthogonal to Lambda'(u), which keeps Lambda(u) = 1 along characteristics.

#include "mixflow/mixture_model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mixflow {

/// r(rho) -> out. Must be thread-safe.
using RateFunction = std::function<void(std::span<const double> rho, std::span<double> out)>;

class ReactionField {
public:
    ReactionField(const MixtureModel& model, RateFunction rate, std::string name);

    /// r_i = sum_j k_ji rho_j - rho_i sum_j k_ij with k_ij the rate of i -> j.
    /// Conserves total mass; quasi-positive when all k_ij >= 0.
    static ReactionField exchange(const MixtureModel& model, DenseMatrix rates);
    /// r_i = gamma_i rho_i (1 - Lambda(rho) / capacity).
    static ReactionField logistic(const MixtureModel& model, std::vector<double> gamma, double capacity);
    /// r = 0; used to check that the reactive path reduces to plain transport.
    static ReactionField zero(const MixtureModel& model);

    std::size_t size() const noexcept { return model_.n_species(); }
    const std::string& name() const noexcept { return name_; }
    const MixtureModel& model() const noexcept { return model_; }

    void rate(std::span<const double> rho, std::span<double> out) const;
    double f(double w, std::span<const double> u) const;
    void g_tilde(double w, std::span<const double> u, std::span<double> out) const;
    /// sum_i g_i dLambda/drho_i(u); zero for any admissible state.
    double orthogonality_residual(double w, std::span<const double> u) const;

private:
    MixtureModel model_;
    RateFunction rate_;
    std::string name_;
};

/// Result of checking rate properties on sampled states (w, u) with
/// Lambda(u) = 1, u >= 0.
struct ReactionCheck {
    bool quasi_positive = true;
    double worst_quasi = 0.0;         // most negative g_i seen where u_i = 0
    double worst_orthogonality = 0.0; // max |sum g_i dLambda_i| (relative)
    std::size_t samples = 0;
    std::string detail;                // first offending state, if any
};

ReactionCheck check_reaction(const ReactionField& reaction, double w_min, double w_max,
                             std::size_t samples, std::uint64_t seed);

/// Sign check of the w-source: f >= 0 for w <= w_lower and f <= 0 for
/// w >= w_upper on sampled fractions. When it holds, implicit steps keep w in
/// [min(w0, w_lower), max(w0, w_upper)].
struct SourceBarrierCheck {
    bool holds = true;
    double worst_low = 0.0;   // most negative f found below w_lower
    double worst_high = 0.0;  // most positive f found above w_upper
};

SourceBarrierCheck check_source_barrier(const ReactionField& reaction, double w_lower, double w_upper,
                                        std::size_t samples, std::uint64_t seed);

/// Random fractions with Lambda(u) = 1; with probability 1/2 one component is
/// set to exactly zero before normalizing. Returns the index of the zeroed
/// component or -1.
int sample_fractions(const MixtureModel& model, std::uint64_t& state, std::span<double> u);

}  // namespace mixflow

#pragma once

// Thermodynamic closure of an N-species mixture: volume extension Lambda,
// pressure law G, free energy h(rho) = h_M(Lambda(rho)), chemical potentials
// and the rank-one mobility kappa * rho rho^T.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mixflow {

struct SpeciesSet {
    std::vector<double> molecular_masses;
    std::optional<std::vector<double>> reference_volumes;

    std::size_t size() const noexcept { return molecular_masses.size(); }
    void validate() const;
};

/// Strictly increasing pressure law p = G(s). The power-law family is closed
/// form; custom laws fall back to quadrature and bracketed root finding.
class PressureLaw {
public:
    static PressureLaw power_law(double c0, double alpha);
    static PressureLaw custom(std::string name, std::function<double(double)> g,
                              std::function<double(double)> dg);

    double value(double s) const;
    double derivative(double s) const;
    double second_derivative(double s) const;
    double inverse(double p) const;

    /// I(s) = integral_{s0}^{s} G(t)/t^2 dt.
    double energy_integral(double s, double s0) const;

    bool is_power_law() const noexcept { return !custom_g_; }
    double c0() const noexcept { return c0_; }
    double alpha() const noexcept { return alpha_; }
    const std::string& name() const noexcept { return name_; }

private:
    PressureLaw() = default;

    std::string name_;
    double c0_ = 1.0;
    double alpha_ = 1.0;
    std::function<double(double)> custom_g_;
    std::function<double(double)> custom_dg_;
};

enum class VolumeModel { Unit, Linear, PowerMean };

/// Positively homogeneous, convex volume extension Lambda(rho).
class VolumeExtension {
public:
    /// Lambda(rho) = sum_i c_i rho_i.
    static VolumeExtension linear_combination(std::vector<double> coeffs);
    /// Lambda(rho) = n_tot H(n / n_tot) with n_i = rho_i / m_i.
    static VolumeExtension number_density(std::vector<double> masses, VolumeModel model,
                                          std::vector<double> volumes = {},
                                          double alpha_h = 1.0);

    std::size_t size() const noexcept { return masses_.size(); }
    double value(std::span<const double> rho) const;
    /// Analytic partial derivatives. Throws DomainError where Lambda is not
    /// differentiable (the origin for the power-mean model).
    void gradient(std::span<const double> rho, std::span<double> out) const;

    /// True when Lambda is linear in rho; linear_coefficients() is then valid.
    bool is_linear() const noexcept { return model_ != VolumeModel::PowerMean; }
    const std::vector<double>& linear_coefficients() const noexcept { return coeffs_; }

    /// Constants with r0 |rho| <= Lambda(rho) <= r1 |rho| (Euclidean norm).
    double lower_constant() const;
    double upper_constant() const;

    VolumeModel model() const noexcept { return model_; }
    double alpha_h() const noexcept { return alpha_h_; }
    std::string describe() const;

private:
    VolumeExtension() = default;

    bool number_form_ = false;
    VolumeModel model_ = VolumeModel::Linear;
    std::vector<double> masses_;
    std::vector<double> coeffs_;  // effective linear coefficients
    double alpha_h_ = 1.0;
};

/// Porosity coefficient kappa(w) > 0.
class Porosity {
public:
    static Porosity constant(double kappa);
    /// kappa(w) = k0 * w^beta.
    static Porosity power(double k0, double beta);
    /// Piecewise-linear in w, constant outside the table.
    static Porosity table(std::vector<double> w, std::vector<double> kappa);

    double operator()(double w) const;
    double derivative(double w) const;
    bool is_constant() const noexcept { return kind_ == Kind::Constant; }
    bool is_power() const noexcept { return kind_ != Kind::Table; }
    double k0() const noexcept { return k0_; }
    /// Exponent of the power form (0 for constants).
    double beta() const noexcept { return beta_; }
    /// Kinks of the table form (empty otherwise).
    const std::vector<double>& breakpoints() const noexcept { return table_w_; }

private:
    enum class Kind { Constant, Power, Table };
    Porosity() = default;

    Kind kind_ = Kind::Constant;
    double k0_ = 1.0;
    double beta_ = 0.0;
    std::vector<double> table_w_;
    std::vector<double> table_k_;
};

struct MixtureModel {
    SpeciesSet species;
    PressureLaw pressure = PressureLaw::power_law(1.0, 1.0);
    VolumeExtension extension = VolumeExtension::linear_combination({1.0});
    Porosity kappa = Porosity::constant(1.0);
    double s0 = 1.0;
    /// Value of h_M at s0. Enters h_M as the linear term h_const * s / s0,
    /// which leaves s h_M' - h_M = G untouched.
    double h_const = 0.0;

    std::size_t n_species() const noexcept { return extension.size(); }
    void validate() const;

    double h_M(double s) const;
    double h_M_prime(double s) const;
    double h_M_second(double s) const;
};

/// Row-major dense square matrix, just enough for the mobility.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> data;

    double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
};

double eval_lambda(const MixtureModel& model, std::span<const double> rho);
std::vector<double> grad_lambda(const MixtureModel& model, std::span<const double> rho);
double pressure(const MixtureModel& model, std::span<const double> rho);
double free_energy_density(const MixtureModel& model, std::span<const double> rho);
std::vector<double> chemical_potentials(const MixtureModel& model, std::span<const double> rho);
double gibbs_duhem_residual(const MixtureModel& model, std::span<const double> rho);
DenseMatrix mobility_matrix(const MixtureModel& model, std::span<const double> rho, double w);

}  // namespace mixflow

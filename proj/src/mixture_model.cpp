#include "mixflow/mixture_model.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mixflow {

namespace {

void check_size(std::span<const double> rho, std::size_t n) {
    if (rho.size() != n) {
        std::ostringstream os;
        os << "state has " << rho.size() << " components, model has " << n << " species";
        throw DomainError(os.str());
    }
}

void check_nonnegative(std::span<const double> rho) {
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(rho[i] >= 0.0)) {
            std::ostringstream os;
            os << "component " << i << " is negative (" << rho[i] << ")";
            throw DomainError(os.str());
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

void SpeciesSet::validate() const {
    if (molecular_masses.empty()) throw ConfigError("species set is empty");
    for (double m : molecular_masses)
        if (!(m > 0.0)) throw ConfigError("molecular masses must be positive");
    if (reference_volumes) {
        if (reference_volumes->size() != molecular_masses.size())
            throw ConfigError("reference volumes must have one entry per species");
        for (double v : *reference_volumes)
            if (!(v > 0.0)) throw ConfigError("reference volumes must be positive");
    }
}

// ---------------------------------------------------------------------------

PressureLaw PressureLaw::power_law(double c0, double alpha) {
    if (!(c0 > 0.0)) throw ConfigError("pressure law: c0 must be positive");
    if (!(alpha >= 1.0))
        throw ConfigError("pressure law: alpha must be >= 1 (G must be strictly increasing "
                          "with s*G'(s) twice differentiable on (0, inf))");
    PressureLaw g;
    g.c0_ = c0;
    g.alpha_ = alpha;
    std::ostringstream os;
    os << "power_law(c0=" << c0 << ", alpha=" << alpha << ")";
    g.name_ = os.str();
    return g;
}

PressureLaw PressureLaw::custom(std::string name, std::function<double(double)> g,
                                std::function<double(double)> dg) {
    PressureLaw p;
    p.name_ = std::move(name);
    p.custom_g_ = std::move(g);
    p.custom_dg_ = std::move(dg);
    return p;
}

double PressureLaw::value(double s) const {
    if (custom_g_) {
        const double v = custom_g_(s);
        if (!std::isfinite(v)) throw DomainError("pressure law is singular at s = " + std::to_string(s));
        return v;
    }
    return c0_ * std::pow(s, alpha_);
}

double PressureLaw::derivative(double s) const {
    if (custom_dg_) return custom_dg_(s);
    if (alpha_ == 1.0) return c0_;
    return c0_ * alpha_ * std::pow(s, alpha_ - 1.0);
}

double PressureLaw::second_derivative(double s) const {
    if (custom_dg_) {
        const double h = 1e-5 * std::max(1.0, std::abs(s));
        return (custom_dg_(s + h) - custom_dg_(s - h)) / (2.0 * h);
    }
    if (alpha_ == 1.0) return 0.0;
    return c0_ * alpha_ * (alpha_ - 1.0) * std::pow(s, alpha_ - 2.0);
}

double PressureLaw::inverse(double p) const {
    if (!custom_g_) {
        if (p < 0.0) throw DomainError("pressure law inverse: negative pressure");
        return std::pow(p / c0_, 1.0 / alpha_);
    }
    // Bracket, then safeguarded Newton.
    double lo = 0.0;
    double hi = 1.0;
    while (value(hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw DomainError("pressure law inverse: pressure out of range");
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double r = value(s) - p;
        if (r > 0.0) hi = s; else lo = s;
        const double d = derivative(s);
        double next = s - r / d;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-15 * std::max(1.0, s)) return next;
        s = next;
    }
    return s;
}

double PressureLaw::energy_integral(double s, double s0) const {
    if (!custom_g_) {
        const double log_ratio = std::log(s / s0);
        if (alpha_ == 1.0) return c0_ * log_ratio;
        const double e = alpha_ - 1.0;
        // (s^e - s0^e)/e without cancellation for e -> 0.
        return c0_ * std::pow(s0, e) * std::expm1(e * log_ratio) / e;
    }
    if (s == s0) return 0.0;
    auto integrand = [this](double t) { return value(t) / (t * t); };
    double err = 0.0;
    const double lo = std::min(s, s0);
    const double hi = std::max(s, s0);
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, lo, hi, 15, 1e-13, &err);
    return s >= s0 ? v : -v;
}

// ---------------------------------------------------------------------------

VolumeExtension VolumeExtension::linear_combination(std::vector<double> coeffs) {
    if (coeffs.empty()) throw ConfigError("volume extension needs at least one coefficient");
    for (double c : coeffs)
        if (!(c > 0.0)) throw ConfigError("volume extension coefficients must be positive");
    VolumeExtension ext;
    ext.model_ = VolumeModel::Linear;
    ext.masses_.assign(coeffs.size(), 1.0);
    ext.coeffs_ = std::move(coeffs);
    return ext;
}

VolumeExtension VolumeExtension::number_density(std::vector<double> masses, VolumeModel model,
                                                std::vector<double> volumes, double alpha_h) {
    if (masses.empty()) throw ConfigError("volume extension needs at least one species");
    for (double m : masses)
        if (!(m > 0.0)) throw ConfigError("molecular masses must be positive");
    VolumeExtension ext;
    ext.number_form_ = true;
    ext.model_ = model;
    ext.masses_ = std::move(masses);
    const std::size_t n = ext.masses_.size();
    ext.coeffs_.resize(n);
    switch (model) {
    case VolumeModel::Unit:
        for (std::size_t i = 0; i < n; ++i) ext.coeffs_[i] = 1.0 / ext.masses_[i];
        break;
    case VolumeModel::Linear:
        if (volumes.size() != n)
            throw ConfigError("linear volume model needs one reference volume per species");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(volumes[i] > 0.0)) throw ConfigError("reference volumes must be positive");
            ext.coeffs_[i] = volumes[i] / ext.masses_[i];
        }
        break;
    case VolumeModel::PowerMean:
        if (!(alpha_h >= 1.0)) throw ConfigError("power-mean exponent alpha_h must be >= 1");
        if (alpha_h == 1.0) {
            // ||n||_1 is the unit model.
            ext.model_ = VolumeModel::Unit;
            for (std::size_t i = 0; i < n; ++i) ext.coeffs_[i] = 1.0 / ext.masses_[i];
        } else {
            ext.alpha_h_ = alpha_h;
            for (std::size_t i = 0; i < n; ++i) ext.coeffs_[i] = 1.0 / ext.masses_[i];
        }
        break;
    }
    return ext;
}

double VolumeExtension::value(std::span<const double> rho) const {
    check_size(rho, size());
    check_nonnegative(rho);
    if (is_linear()) {
        double s = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) s += coeffs_[i] * rho[i];
        return s;
    }
    // (sum n_i^a)^(1/a), scaled by the largest entry to avoid overflow.
    double nmax = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) nmax = std::max(nmax, rho[i] * coeffs_[i]);
    if (nmax == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) s += std::pow(rho[i] * coeffs_[i] / nmax, alpha_h_);
    return nmax * std::pow(s, 1.0 / alpha_h_);
}

void VolumeExtension::gradient(std::span<const double> rho, std::span<double> out) const {
    check_size(rho, size());
    check_nonnegative(rho);
    if (out.size() != size()) throw DomainError("gradient output has wrong size");
    if (is_linear()) {
        std::copy(coeffs_.begin(), coeffs_.end(), out.begin());
        return;
    }
    const double lambda = value(rho);
    if (lambda == 0.0) throw DomainError("power-mean volume extension is not differentiable at 0");
    // d/drho_i = (n_i / Lambda)^(a-1) / m_i
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double ratio = rho[i] * coeffs_[i] / lambda;
        out[i] = std::pow(ratio, alpha_h_ - 1.0) * coeffs_[i];
    }
}

double VolumeExtension::lower_constant() const {
    const double cmin = *std::min_element(coeffs_.begin(), coeffs_.end());
    if (is_linear()) return cmin;
    const double n = static_cast<double>(size());
    return cmin * std::min(1.0, std::pow(n, 1.0 / alpha_h_ - 0.5));
}

double VolumeExtension::upper_constant() const {
    const double cmax = *std::max_element(coeffs_.begin(), coeffs_.end());
    const double n = static_cast<double>(size());
    if (is_linear()) return cmax * std::sqrt(n);
    return cmax * std::max(1.0, std::pow(n, 1.0 / alpha_h_ - 0.5));
}

std::string VolumeExtension::describe() const {
    std::ostringstream os;
    if (!number_form_) {
        os << "linear_combination";
    } else {
        switch (model_) {
        case VolumeModel::Unit: os << "number_density/unit"; break;
        case VolumeModel::Linear: os << "number_density/linear"; break;
        case VolumeModel::PowerMean: os << "number_density/power_mean(" << alpha_h_ << ")"; break;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------

Porosity Porosity::constant(double kappa) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    Porosity p;
    p.kind_ = Kind::Constant;
    p.k0_ = kappa;
    return p;
}

Porosity Porosity::power(double k0, double beta) {
    if (!(k0 > 0.0)) throw ConfigError("kappa.k0 must be positive");
    if (!std::isfinite(beta)) throw ConfigError("kappa.beta must be finite");
    Porosity p;
    p.kind_ = beta == 0.0 ? Kind::Constant : Kind::Power;
    p.k0_ = k0;
    p.beta_ = beta;
    return p;
}

Porosity Porosity::table(std::vector<double> w, std::vector<double> kappa) {
    if (w.size() != kappa.size() || w.size() < 2)
        throw ConfigError("kappa table needs at least two (w, kappa) pairs of equal length");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(kappa[i] > 0.0)) throw ConfigError("kappa table values must be positive");
        if (i > 0 && !(w[i] > w[i - 1])) throw ConfigError("kappa table w must be strictly increasing");
    }
    Porosity p;
    p.kind_ = Kind::Table;
    p.table_w_ = std::move(w);
    p.table_k_ = std::move(kappa);
    return p;
}

double Porosity::operator()(double w) const {
    switch (kind_) {
    case Kind::Constant: return k0_;
    case Kind::Power: return k0_ * std::pow(w, beta_);
    case Kind::Table: {
        if (w <= table_w_.front()) return table_k_.front();
        if (w >= table_w_.back()) return table_k_.back();
        const auto it = std::upper_bound(table_w_.begin(), table_w_.end(), w);
        const std::size_t j = static_cast<std::size_t>(it - table_w_.begin());
        const double t = (w - table_w_[j - 1]) / (table_w_[j] - table_w_[j - 1]);
        return (1.0 - t) * table_k_[j - 1] + t * table_k_[j];
    }
    }
    return k0_;
}

double Porosity::derivative(double w) const {
    switch (kind_) {
    case Kind::Constant: return 0.0;
    case Kind::Power: return k0_ * beta_ * std::pow(w, beta_ - 1.0);
    case Kind::Table: {
        if (w < table_w_.front() || w > table_w_.back()) return 0.0;
        auto it = std::upper_bound(table_w_.begin(), table_w_.end(), w);
        if (it == table_w_.end()) --it;
        const std::size_t j = static_cast<std::size_t>(it - table_w_.begin());
        return (table_k_[j] - table_k_[j - 1]) / (table_w_[j] - table_w_[j - 1]);
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

void MixtureModel::validate() const {
    species.validate();
    if (species.size() != extension.size())
        throw ConfigError("species count does not match the volume extension");
    if (!(s0 > 0.0)) throw ConfigError("s0 must be positive");
    if (!std::isfinite(h_const)) throw ConfigError("h_const must be finite");
}

double MixtureModel::h_M(double s) const {
    if (!(s > 0.0)) throw DomainError("free energy requires Lambda(rho) > 0");
    return s * (pressure.energy_integral(s, s0) + h_const / s0);
}

double MixtureModel::h_M_prime(double s) const {
    if (!(s > 0.0)) throw DomainError("free energy requires Lambda(rho) > 0");
    return pressure.energy_integral(s, s0) + h_const / s0 + pressure.value(s) / s;
}

double MixtureModel::h_M_second(double s) const {
    if (!(s > 0.0)) throw DomainError("free energy requires Lambda(rho) > 0");
    return pressure.derivative(s) / s;
}

// ---------------------------------------------------------------------------

double eval_lambda(const MixtureModel& model, std::span<const double> rho) {
    return model.extension.value(rho);
}

std::vector<double> grad_lambda(const MixtureModel& model, std::span<const double> rho) {
    std::vector<double> g(model.n_species());
    model.extension.gradient(rho, g);
    return g;
}

double pressure(const MixtureModel& model, std::span<const double> rho) {
    return model.pressure.value(eval_lambda(model, rho));
}

double free_energy_density(const MixtureModel& model, std::span<const double> rho) {
    return model.h_M(eval_lambda(model, rho));
}

std::vector<double> chemical_potentials(const MixtureModel& model, std::span<const double> rho) {
    std::vector<double> mu = grad_lambda(model, rho);
    const double dh = model.h_M_prime(eval_lambda(model, rho));
    for (double& m : mu) m *= dh;
    return mu;
}

double gibbs_duhem_residual(const MixtureModel& model, std::span<const double> rho) {
    const double lambda = eval_lambda(model, rho);
    const double p = model.pressure.value(lambda);
    const double h = model.h_M(lambda);
    const std::vector<double> mu = chemical_potentials(model, rho);
    double rho_mu = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) rho_mu += rho[i] * mu[i];
    return std::abs(p + h - rho_mu) / std::max(1.0, std::abs(p));
}

DenseMatrix mobility_matrix(const MixtureModel& model, std::span<const double> rho, double w) {
    check_size(rho, model.n_species());
    const double k = model.kappa(w);
    DenseMatrix m;
    m.n = rho.size();
    m.data.resize(m.n * m.n);
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = 0; j < m.n; ++j) m(i, j) = k * rho[i] * rho[j];
    return m;
}

}  // namespace mixflow

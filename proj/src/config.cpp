#include "mixflow/config.hpp"

#include "mixflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mixflow {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

// Raw key/value store with line bookkeeping and typed accessors. Problems are
// collected instead of thrown so one pass reports all of them.
class Reader {
public:
    std::vector<std::string> errors;

    void parse(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string s = raw;
            const auto hash = s.find_first_of("#;");
            if (hash != std::string::npos) s = s.substr(0, hash);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') {
                    error(line, "malformed section header '" + s + "'");
                    continue;
                }
                section = trim(s.substr(1, s.size() - 2));
                if (!known_sections().count(section)) error(line, "unknown section [" + section + "]");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                error(line, "expected 'key = value'");
                continue;
            }
            if (section.empty()) {
                error(line, "key outside of any section");
                continue;
            }
            const std::string key = section + "." + trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            auto it = entries_.find(key);
            if (it != entries_.end()) {
                std::ostringstream os;
                os << "duplicate key '" << key << "' (lines " << it->second.line << " and " << line << ")";
                error(line, os.str());
                continue;
            }
            entries_[key] = Entry{value, line, false};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const Entry* find(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    int line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    std::string get_string(const std::string& key, const std::string& def) {
        const Entry* e = find(key);
        return e ? e->value : def;
    }

    double get_double(const std::string& key, double def) {
        const Entry* e = find(key);
        if (!e) return def;
        double v;
        if (!to_double(e->value, v)) {
            error(e->line, key + ": expected a number, got '" + e->value + "'");
            return def;
        }
        return v;
    }

    long long get_int(const std::string& key, long long def) {
        const Entry* e = find(key);
        if (!e) return def;
        char* end = nullptr;
        const long long v = std::strtoll(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0') {
            error(e->line, key + ": expected an integer, got '" + e->value + "'");
            return def;
        }
        return v;
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> def = {}) {
        const Entry* e = find(key);
        if (!e) return def;
        std::vector<double> out;
        std::string tok;
        std::string v = e->value;
        std::replace(v.begin(), v.end(), ',', ' ');
        std::istringstream in(v);
        while (in >> tok) {
            double d;
            if (!to_double(tok, d)) {
                error(e->line, key + ": expected a list of numbers, got '" + e->value + "'");
                return def;
            }
            out.push_back(d);
        }
        return out;
    }

    void error(int line, const std::string& msg) {
        std::ostringstream os;
        if (line > 0) os << "line " << line << ": ";
        os << msg;
        errors.push_back(os.str());
    }

    void error_key(const std::string& key, const std::string& msg) { error(line_of(key), key + ": " + msg); }

    void report_unused() {
        for (const auto& [key, e] : entries_) {
            if (e.used) continue;
            const auto dot = key.find('.');
            const std::string section = key.substr(0, dot);
            if (known_keys().count(key))
                error(e.line, "key '" + key + "' has no effect with the selected options");
            else if (known_sections().count(section))
                error(e.line, "unknown key '" + key + "'");
        }
    }

    static const std::set<std::string>& known_sections() {
        static const std::set<std::string> s{"grid", "model", "initial", "boundary", "time",
                                             "solver", "reaction", "gravity", "study"};
        return s;
    }

    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> k{
            "grid.dim", "grid.cells", "grid.origin", "grid.length",
            "boundary.default", "boundary.x_lo", "boundary.x_hi", "boundary.y_lo", "boundary.y_hi",
            "boundary.p0.x_lo", "boundary.p0.x_hi", "boundary.p0.y_lo", "boundary.p0.y_hi",
            "boundary.inflow.x_lo", "boundary.inflow.x_hi", "boundary.inflow.y_lo", "boundary.inflow.y_hi",
            "model.species", "model.masses", "model.pressure.c0", "model.pressure.alpha", "model.extension",
            "model.extension.coeffs", "model.extension.volumes", "model.extension.alpha_h", "model.kappa",
            "model.kappa.kind", "model.kappa.beta", "model.kappa.table_w", "model.kappa.table_k", "model.s0",
            "model.h_const",
            "initial.kind", "initial.rho", "initial.background", "initial.amplitude", "initial.center",
            "initial.width", "initial.splits", "initial.block_rho", "initial.modulation.amplitude",
            "initial.modulation.center", "initial.modulation.width", "initial.file", "initial.vacuum_threshold",
            "time.T", "time.dt", "time.dt_min", "time.output_every",
            "solver.newton_tol", "solver.max_iters", "solver.n_sub", "solver.rk_order", "solver.constraint",
            "solver.picard_tol", "solver.max_picard", "solver.transport", "solver.truncation_k", "solver.s_ref",
            "solver.threads", "solver.exec", "solver.seed",
            "reaction.kind", "reaction.rates", "reaction.gamma", "reaction.capacity", "reaction.samples",
            "gravity.C0", "gravity.g",
            "study.kind", "study.t0", "study.constant", "study.floor", "study.velocity", "study.base_cells",
            "study.levels"};
        return k;
    }

private:
    static bool to_double(const std::string& s, double& v) {
        char* end = nullptr;
        v = std::strtod(s.c_str(), &end);
        return end != s.c_str() && *end == '\0' && std::isfinite(v);
    }

    std::map<std::string, Entry> entries_;
};

const char* kSideNames[4] = {"x_lo", "x_hi", "y_lo", "y_hi"};

// Two-component value: one number applies to both axes.
Point pair_value(Reader& r, const std::string& key, Point def, int dim) {
    const std::vector<double> v = r.get_list(key, {});
    if (v.empty()) return def;
    if (v.size() == 1) return {v[0], dim == 2 ? v[0] : def[1]};
    if (v.size() == 2 && dim == 2) return {v[0], v[1]};
    r.error_key(key, "expected " + std::to_string(dim) + " value(s)");
    return def;
}

bool parse_boundary_kind(const std::string& s, BoundaryKind& out) {
    if (s == "no_penetration") {
        out = BoundaryKind::NoPenetration;
        return true;
    }
    if (s == "dirichlet_pressure" || s == "dirichlet") {
        out = BoundaryKind::DirichletPressure;
        return true;
    }
    return false;
}

void read_grid(Reader& r, SimulationConfig& cfg) {
    StructuredGrid& g = cfg.grid;
    g.dim = static_cast<int>(r.get_int("grid.dim", 1));
    if (g.dim != 1 && g.dim != 2) {
        r.error_key("grid.dim", "must be 1 or 2");
        g.dim = 1;
    }
    const std::vector<double> cells = r.get_list("grid.cells", {64});
    if (cells.empty() || cells.size() > static_cast<std::size_t>(g.dim)) {
        r.error_key("grid.cells", "expected " + std::to_string(g.dim) + " value(s)");
    } else {
        for (double c : cells) {
            if (c < 2 || c != std::floor(c)) r.error_key("grid.cells", "cell counts must be integers >= 2");
        }
        g.cells[0] = static_cast<std::size_t>(std::max(2.0, cells[0]));
        g.cells[1] = g.dim == 2 ? static_cast<std::size_t>(std::max(2.0, cells.size() > 1 ? cells[1] : cells[0])) : 1;
    }
    g.origin = pair_value(r, "grid.origin", {0.0, 0.0}, g.dim);
    const Point len = pair_value(r, "grid.length", {1.0, 1.0}, g.dim);
    g.length = {len[0], g.dim == 2 ? len[1] : 1.0};
    for (int a = 0; a < g.dim; ++a)
        if (!(g.length[a] > 0.0)) r.error_key("grid.length", "lengths must be positive");
    g.length[0] = std::max(g.length[0], 1e-300);
    g.length[1] = std::max(g.length[1], 1e-300);
    g.spacing = {g.length[0] / static_cast<double>(g.cells[0]),
                 g.dim == 2 ? g.length[1] / static_cast<double>(g.cells[1]) : 1.0};
}

void read_model(Reader& r, SimulationConfig& cfg) {
    const long long n = r.get_int("model.species", 1);
    if (n < 1 || n > 64) r.error_key("model.species", "number of species must be between 1 and 64");
    const std::size_t N = static_cast<std::size_t>(std::clamp<long long>(n, 1, 64));
    MixtureModel& m = cfg.model;
    std::vector<double> masses = r.get_list("model.masses", std::vector<double>(N, 1.0));
    if (masses.size() != N) {
        r.error_key("model.masses", "expected one mass per species");
        masses.assign(N, 1.0);
    }
    for (double v : masses)
        if (!(v > 0.0)) r.error_key("model.masses", "molecular masses must be positive");
    m.species.molecular_masses = masses;

    const double c0 = r.get_double("model.pressure.c0", 1.0);
    const double alpha = r.get_double("model.pressure.alpha", 1.0);
    if (!(c0 > 0.0)) r.error_key("model.pressure.c0", "pressure coefficient must be positive");
    if (!(alpha >= 1.0)) {
        std::ostringstream os;
        os << "pressure exponent " << alpha
           << " < 1 is not allowed: G must be strictly increasing with s G'(s) twice continuously "
              "differentiable on [0, inf)";
        r.error_key("model.pressure.alpha", os.str());
    }
    if (c0 > 0.0 && alpha >= 1.0) m.pressure = PressureLaw::power_law(c0, alpha);

    const std::string ext = r.get_string("model.extension", "linear");
    try {
        if (ext == "linear") {
            std::vector<double> c = r.get_list("model.extension.coeffs", std::vector<double>(N, 1.0));
            if (c.size() != N) {
                r.error_key("model.extension.coeffs", "expected one coefficient per species");
                c.assign(N, 1.0);
            }
            for (double v : c)
                if (!(v > 0.0)) r.error_key("model.extension.coeffs", "coefficients must be positive");
            if (std::all_of(c.begin(), c.end(), [](double v) { return v > 0.0; }))
                m.extension = VolumeExtension::linear_combination(c);
        } else if (ext == "unit") {
            m.extension = VolumeExtension::number_density(masses, VolumeModel::Unit);
        } else if (ext == "linear_h") {
            std::vector<double> vol = r.get_list("model.extension.volumes", {});
            if (vol.size() != N) {
                r.error_key("model.extension.volumes", "linear_h needs one reference volume per species");
            } else {
                for (double v : vol)
                    if (!(v > 0.0)) r.error_key("model.extension.volumes", "volumes must be positive");
                m.species.reference_volumes = vol;
                m.extension = VolumeExtension::number_density(masses, VolumeModel::Linear, vol);
            }
        } else if (ext == "power_mean") {
            const double ah = r.get_double("model.extension.alpha_h", 2.0);
            if (!(ah >= 1.0)) r.error_key("model.extension.alpha_h", "power-mean exponent must be >= 1");
            else m.extension = VolumeExtension::number_density(masses, VolumeModel::PowerMean, {}, ah);
        } else {
            r.error_key("model.extension", "unknown extension '" + ext + "' (linear | unit | linear_h | power_mean)");
        }
    } catch (const std::exception& e) {
        r.error_key("model.extension", e.what());
    }

    const std::string kkind = r.get_string("model.kappa.kind", "constant");
    const double k0 = r.get_double("model.kappa", 1.0);
    if (!(k0 > 0.0)) r.error_key("model.kappa", "porosity coefficient must be positive");
    try {
        if (kkind == "constant") {
            if (k0 > 0.0) m.kappa = Porosity::constant(k0);
        } else if (kkind == "power") {
            const double beta = r.get_double("model.kappa.beta", 0.0);
            if (k0 > 0.0) m.kappa = Porosity::power(k0, beta);
        } else if (kkind == "table") {
            m.kappa = Porosity::table(r.get_list("model.kappa.table_w"), r.get_list("model.kappa.table_k"));
        } else {
            r.error_key("model.kappa.kind", "unknown porosity kind '" + kkind + "' (constant | power | table)");
        }
    } catch (const std::exception& e) {
        r.error_key("model.kappa.kind", e.what());
    }
    m.s0 = r.get_double("model.s0", 1.0);
    if (!(m.s0 > 0.0)) r.error_key("model.s0", "reference point must be positive");
    m.h_const = r.get_double("model.h_const", 0.0);
    if (m.extension.size() != N && r.errors.empty())
        r.error_key("model.extension", "extension size does not match the species count");
}

void read_initial(Reader& r, SimulationConfig& cfg) {
    const std::size_t N = cfg.model.n_species();
    InitialSpec& in = cfg.initial;
    const int dim = cfg.grid.dim;
    const std::string kind = r.get_string("initial.kind", "uniform");
    auto need_n = [&](const std::string& key, std::vector<double> def) {
        std::vector<double> v = r.get_list(key, def);
        if (v.size() != N) {
            r.error_key(key, "expected " + std::to_string(N) + " value(s)");
            v.assign(N, 1.0);
        }
        for (double x : v)
            if (x < 0.0) r.error_key(key, "densities must be nonnegative");
        return v;
    };
    Point mid{cfg.grid.origin[0] + 0.5 * cfg.grid.length[0], cfg.grid.origin[1] + 0.5 * cfg.grid.length[1]};
    if (kind == "uniform") {
        in.kind = InitialSpec::Kind::Uniform;
        in.rho = need_n("initial.rho", std::vector<double>(N, 1.0));
    } else if (kind == "gaussian") {
        in.kind = InitialSpec::Kind::Gaussian;
        in.background = need_n("initial.background", std::vector<double>(N, 1.0));
        in.amplitude = r.get_list("initial.amplitude", std::vector<double>(N, 0.0));
        if (in.amplitude.size() != N) {
            r.error_key("initial.amplitude", "expected " + std::to_string(N) + " value(s)");
            in.amplitude.assign(N, 0.0);
        }
        in.center = pair_value(r, "initial.center", mid, dim);
        in.width = r.get_double("initial.width", 0.1);
        if (!(in.width > 0.0)) r.error_key("initial.width", "width must be positive");
    } else if (kind == "blocks") {
        in.kind = InitialSpec::Kind::Blocks;
        in.splits = r.get_list("initial.splits", {});
        if (!std::is_sorted(in.splits.begin(), in.splits.end()))
            r.error_key("initial.splits", "split positions must be increasing");
        const std::size_t blocks = in.splits.size() + 1;
        in.block_rho = r.get_list("initial.block_rho", {});
        if (in.block_rho.size() != blocks * N) {
            r.error_key("initial.block_rho", "expected " + std::to_string(blocks * N) +
                                                 " values (species densities for each block)");
            in.block_rho.assign(blocks * N, 1.0);
        }
        for (double x : in.block_rho)
            if (x < 0.0) r.error_key("initial.block_rho", "densities must be nonnegative");
        in.modulation_amplitude = r.get_double("initial.modulation.amplitude", 0.0);
        if (in.modulation_amplitude != 0.0) {
            in.modulation_center = pair_value(r, "initial.modulation.center", mid, dim);
            in.modulation_width = r.get_double("initial.modulation.width", 0.1);
            if (!(in.modulation_width > 0.0)) r.error_key("initial.modulation.width", "width must be positive");
            if (in.modulation_amplitude <= -1.0)
                r.error_key("initial.modulation.amplitude", "modulation must keep densities nonnegative (> -1)");
        }
    } else if (kind == "table") {
        in.kind = InitialSpec::Kind::Table;
        in.file = r.get_string("initial.file", "");
        if (in.file.empty()) r.error_key("initial.kind", "table initial data needs initial.file");
    } else {
        r.error_key("initial.kind", "unknown initial data kind '" + kind + "' (uniform | gaussian | blocks | table)");
    }
    in.vacuum_threshold = r.get_double("initial.vacuum_threshold", 1e-12);
    if (!(in.vacuum_threshold > 0.0)) r.error_key("initial.vacuum_threshold", "must be positive");
}

void read_boundary(Reader& r, SimulationConfig& cfg) {
    const std::size_t N = cfg.model.n_species();
    const std::string def = r.get_string("boundary.default", "no_penetration");
    BoundaryKind dk = BoundaryKind::NoPenetration;
    if (!parse_boundary_kind(def, dk)) r.error_key("boundary.default", "unknown boundary kind '" + def + "'");
    const int sides = cfg.grid.dim == 2 ? 4 : 2;
    for (int s = 0; s < 4; ++s) cfg.grid.boundary[s] = s < sides ? dk : BoundaryKind::NoPenetration;
    for (int s = 0; s < 4; ++s) {
        const std::string key = std::string("boundary.") + kSideNames[s];
        if (!r.has(key)) continue;
        if (s >= sides) {
            r.find(key);
            r.error_key(key, "side does not exist in 1D");
            continue;
        }
        const std::string v = r.get_string(key, def);
        BoundaryKind k;
        if (!parse_boundary_kind(v, k)) r.error_key(key, "unknown boundary kind '" + v + "'");
        else cfg.grid.boundary[s] = k;
    }
    for (int s = 0; s < sides; ++s) {
        if (cfg.grid.boundary[s] != BoundaryKind::DirichletPressure) continue;
        const std::string pkey = std::string("boundary.p0.") + kSideNames[s];
        const std::string ikey = std::string("boundary.inflow.") + kSideNames[s];
        if (!r.has(pkey)) {
            r.error(0, std::string("boundary side ") + kSideNames[s] + " is dirichlet_pressure but " + pkey +
                           " is missing");
        } else {
            const double p0 = r.get_double(pkey, 1.0);
            if (!(p0 > 0.0)) r.error_key(pkey, "boundary pressure must be positive");
            cfg.boundary_pressure[s] = p0;
        }
        if (!r.has(ikey)) {
            r.error(0, std::string("boundary side ") + kSideNames[s] + " is dirichlet_pressure but " + ikey +
                           " (fractions entering through it) is missing");
            continue;
        }
        std::vector<double> u = r.get_list(ikey, {});
        if (u.size() != N) {
            r.error_key(ikey, "expected " + std::to_string(N) + " fraction(s)");
            continue;
        }
        bool ok = true;
        for (double x : u) ok = ok && x >= 0.0;
        const double lambda = ok ? cfg.model.extension.value(u) : 0.0;
        if (!ok || !(lambda > 0.0)) {
            r.error_key(ikey, "inflow fractions must be nonnegative and not all zero");
            continue;
        }
        for (double& x : u) x /= lambda;
        cfg.inflow.fractions[s] = u;
    }
}

void read_time(Reader& r, SimulationConfig& cfg) {
    cfg.time.T = r.get_double("time.T", 0.0);
    cfg.time.dt = r.get_double("time.dt", 1e-3);
    cfg.time.dt_min = r.get_double("time.dt_min", 0.0);
    cfg.output_every = static_cast<int>(r.get_int("time.output_every", 0));
    if (cfg.time.T < 0.0) r.error_key("time.T", "final time must be nonnegative");
    if (!(cfg.time.dt > 0.0)) r.error_key("time.dt", "time step must be positive");
    if (cfg.time.dt_min < 0.0 || cfg.time.dt_min > cfg.time.dt) r.error_key("time.dt_min", "must lie in [0, dt]");
    if (cfg.output_every < 0) r.error_key("time.output_every", "must be nonnegative");
}

void read_solver(Reader& r, SimulationConfig& cfg) {
    StepOptions& o = cfg.options;
    o.newton_tol = r.get_double("solver.newton_tol", 1e-10);
    o.max_iters = static_cast<int>(r.get_int("solver.max_iters", 30));
    o.n_sub = static_cast<int>(r.get_int("solver.n_sub", 4));
    o.rk_order = static_cast<int>(r.get_int("solver.rk_order", 2));
    o.picard_tol = r.get_double("solver.picard_tol", 1e-10);
    o.max_picard = static_cast<int>(r.get_int("solver.max_picard", 20));
    cfg.truncation_k = r.get_double("solver.truncation_k", 0.0);
    cfg.s_ref = r.get_double("solver.s_ref", -1.0);
    cfg.threads = static_cast<int>(r.get_int("solver.threads", 0));
    cfg.seed = static_cast<std::uint64_t>(r.get_int("solver.seed", 12345));
    if (!(o.newton_tol > 0.0)) r.error_key("solver.newton_tol", "must be positive");
    if (o.max_iters < 1) r.error_key("solver.max_iters", "must be >= 1");
    if (o.n_sub < 1) r.error_key("solver.n_sub", "must be >= 1");
    if (o.rk_order != 2 && o.rk_order != 4) r.error_key("solver.rk_order", "must be 2 or 4");
    if (!(o.picard_tol > 0.0)) r.error_key("solver.picard_tol", "must be positive");
    if (o.max_picard < 1) r.error_key("solver.max_picard", "must be >= 1");
    if (cfg.truncation_k != 0.0 && !(cfg.truncation_k > 1.0)) r.error_key("solver.truncation_k", "must be 0 (off) or > 1");
    if (r.has("solver.s_ref") && !(cfg.s_ref >= 0.0)) r.error_key("solver.s_ref", "must be >= 0");
    if (cfg.threads < 0) r.error_key("solver.threads", "must be >= 0");

    const std::string mode = r.get_string("solver.constraint", "auto");
    const bool linear = cfg.model.extension.is_linear();
    if (mode == "auto") {
        o.constraint = linear ? ConstraintMode::ExactLinear : ConstraintMode::Renormalize;
    } else if (mode == "exact_linear") {
        o.constraint = ConstraintMode::ExactLinear;
        if (!linear) r.error_key("solver.constraint", "exact_linear requires a linear volume extension");
    } else if (mode == "renormalize") {
        o.constraint = ConstraintMode::Renormalize;
    } else if (mode == "off") {
        o.constraint = ConstraintMode::Off;
    } else {
        r.error_key("solver.constraint", "unknown mode '" + mode + "' (auto | exact_linear | renormalize | off)");
    }
    const std::string tr = r.get_string("solver.transport", "conservative");
    if (tr == "conservative") o.transport = TransportScheme::Conservative;
    else if (tr == "semi_lagrangian") o.transport = TransportScheme::SemiLagrangian;
    else r.error_key("solver.transport", "unknown scheme '" + tr + "' (conservative | semi_lagrangian)");
    const std::string ex = r.get_string("solver.exec", "parallel");
    if (ex == "parallel") o.exec = Exec::Parallel;
    else if (ex == "serial") o.exec = Exec::Serial;
    else r.error_key("solver.exec", "unknown policy '" + ex + "' (serial | parallel)");
}

void read_reaction(Reader& r, SimulationConfig& cfg) {
    const std::size_t N = cfg.model.n_species();
    ReactionSpec& rs = cfg.reaction;
    rs.kind = r.get_string("reaction.kind", "none");
    if (rs.kind == "none") return;
    rs.samples = static_cast<std::size_t>(std::max<long long>(1, r.get_int("reaction.samples", 2000)));
    if (rs.kind == "exchange") {
        rs.rates = r.get_list("reaction.rates", {});
        if (rs.rates.size() != N * N) r.error_key("reaction.rates", "expected an N x N matrix (" + std::to_string(N * N) + " values)");
    } else if (rs.kind == "logistic") {
        rs.gamma = r.get_list("reaction.gamma", {});
        if (rs.gamma.size() != N) r.error_key("reaction.gamma", "expected one rate per species");
        rs.capacity = r.get_double("reaction.capacity", 1.0);
        if (!(rs.capacity > 0.0)) r.error_key("reaction.capacity", "must be positive");
    } else if (rs.kind == "zero") {
    } else {
        r.error_key("reaction.kind", "unknown reaction family '" + rs.kind + "' (none | zero | exchange | logistic)");
    }
}

void read_gravity(Reader& r, SimulationConfig& cfg) {
    if (!r.has("gravity.C0") && !r.has("gravity.g")) return;
    GravityDrift g;
    g.fraction_sum = r.get_double("gravity.C0", 1.0);
    const std::vector<double> v = r.get_list("gravity.g", {});
    if (v.size() != static_cast<std::size_t>(cfg.grid.dim)) {
        r.error_key("gravity.g", "expected " + std::to_string(cfg.grid.dim) + " component(s)");
    } else {
        g.g = {v[0], cfg.grid.dim == 2 ? v[1] : 0.0};
    }
    if (!(g.fraction_sum > 0.0)) r.error_key("gravity.C0", "must be positive");
    cfg.gravity = g;
}

void read_study(Reader& r, SimulationConfig& cfg) {
    StudySpec& s = cfg.study;
    s.kind = r.get_string("study.kind", "");
    if (s.kind.empty()) return;
    if (s.kind != "barenblatt" && s.kind != "oracle_compare" && s.kind != "translation") {
        r.error_key("study.kind", "unknown study '" + s.kind + "' (barenblatt | oracle_compare | translation)");
        return;
    }
    s.base_cells = static_cast<std::size_t>(std::max<long long>(2, r.get_int("study.base_cells", 64)));
    for (double v : r.get_list("study.levels", {})) s.levels.push_back(static_cast<std::size_t>(v));
    if (s.kind == "barenblatt") {
        s.t0 = r.get_double("study.t0", 0.1);
        s.constant = r.get_double("study.constant", 1.0);
        s.floor = r.get_double("study.floor", 1e-12);
        if (!(s.t0 > 0.0)) r.error_key("study.t0", "must be positive");
        if (!(s.constant > 0.0)) r.error_key("study.constant", "must be positive");
        if (!(s.floor > 0.0)) r.error_key("study.floor", "must be positive");
    } else if (s.kind == "translation") {
        s.velocity = r.get_double("study.velocity", 0.0);
    }
}

// Sum of the initial fractions must be the constant C0 for the gravity drift.
void check_gravity_fractions(const SimulationConfig& cfg, const SpeciesField& rho, std::vector<std::string>& errors) {
    if (!cfg.gravity) return;
    for (std::size_t c = 0; c < rho.num_cells(); ++c) {
        const auto r = rho.cell(c);
        const double lambda = cfg.model.extension.value(r);
        if (!(lambda > 0.0)) return;  // reported as vacuum elsewhere
        double sum = 0.0;
        for (double v : r) sum += v / lambda;
        if (std::abs(sum - cfg.gravity->fraction_sum) > 1e-10 * cfg.gravity->fraction_sum) {
            std::ostringstream os;
            os << "gravity needs the fractions to sum to C0 = " << cfg.gravity->fraction_sum
               << " everywhere; cell " << c << " has " << sum;
            errors.push_back(os.str());
            return;
        }
    }
}

void check_vacuum(const SimulationConfig& cfg, const SpeciesField& rho, std::vector<std::string>& errors) {
    for (std::size_t c = 0; c < rho.num_cells(); ++c) {
        double sum = 0.0;
        for (double v : rho.cell(c)) sum += v;
        if (!(sum >= cfg.initial.vacuum_threshold)) {
            std::ostringstream os;
            os << "initial data: vacuum at cell " << c << " (sum of densities " << sum << " below "
               << cfg.initial.vacuum_threshold << ")";
            errors.push_back(os.str());
            return;
        }
    }
}

}  // namespace

SimulationConfig parse_config(const std::string& text, const std::string& base_dir) {
    Reader r;
    r.parse(text);
    SimulationConfig cfg;
    cfg.base_dir = base_dir;
    read_grid(r, cfg);
    read_model(r, cfg);
    read_boundary(r, cfg);
    read_initial(r, cfg);
    read_time(r, cfg);
    read_solver(r, cfg);
    read_reaction(r, cfg);
    read_gravity(r, cfg);
    read_study(r, cfg);
    r.report_unused();
    if (r.errors.empty()) {
        try {
            const SpeciesField rho = make_initial_density(cfg);
            check_vacuum(cfg, rho, r.errors);
            if (r.errors.empty()) check_gravity_fractions(cfg, rho, r.errors);
        } catch (const std::exception& e) {
            r.errors.push_back(std::string("initial data: ") + e.what());
        }
    }
    if (!r.errors.empty()) {
        std::ostringstream os;
        for (std::size_t k = 0; k < r.errors.size(); ++k) os << (k ? "\n" : "") << r.errors[k];
        throw ConfigError(os.str());
    }
    return cfg;
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string dir = ".";
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash == 0 ? 1 : slash);
    return parse_config(ss.str(), dir);
}

SpeciesField make_initial_density(const SimulationConfig& cfg) {
    const StructuredGrid& g = cfg.grid;
    const std::size_t N = cfg.model.n_species();
    const InitialSpec& in = cfg.initial;
    SpeciesField rho(g, N);
    auto gauss = [&](const Point& x, const Point& c, double width) {
        double r2 = (x[0] - c[0]) * (x[0] - c[0]);
        if (g.dim == 2) r2 += (x[1] - c[1]) * (x[1] - c[1]);
        return std::exp(-r2 / (2.0 * width * width));
    };
    switch (in.kind) {
    case InitialSpec::Kind::Uniform:
        for (std::size_t c = 0; c < g.num_cells(); ++c)
            for (std::size_t s = 0; s < N; ++s) rho.at(c, s) = in.rho[s];
        break;
    case InitialSpec::Kind::Gaussian:
        for (std::size_t c = 0; c < g.num_cells(); ++c) {
            const double b = gauss(g.center(c), in.center, in.width);
            for (std::size_t s = 0; s < N; ++s) rho.at(c, s) = in.background[s] + in.amplitude[s] * b;
        }
        break;
    case InitialSpec::Kind::Blocks:
        for (std::size_t c = 0; c < g.num_cells(); ++c) {
            const Point x = g.center(c);
            const std::size_t block = static_cast<std::size_t>(
                std::upper_bound(in.splits.begin(), in.splits.end(), x[0]) - in.splits.begin());
            const double mod = in.modulation_amplitude != 0.0
                                   ? 1.0 + in.modulation_amplitude * gauss(x, in.modulation_center, in.modulation_width)
                                   : 1.0;
            for (std::size_t s = 0; s < N; ++s) rho.at(c, s) = in.block_rho[block * N + s] * mod;
        }
        break;
    case InitialSpec::Kind::Table: {
        std::string path = in.file;
        if (!path.empty() && path.front() != '/') path = cfg.base_dir + "/" + path;
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot read initial table '" + path + "'");
        std::string line;
        std::size_t c = 0;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::replace(line.begin(), line.end(), ',', ' ');
            line = trim(line);
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::vector<double> vals;
            double v;
            while (ls >> v) vals.push_back(v);
            if (!ls.eof()) {
                if (c == 0 && vals.empty()) continue;  // header row
                throw ConfigError("initial table line " + std::to_string(lineno) + ": not numeric");
            }
            if (vals.size() != N)
                throw ConfigError("initial table line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(N) + " values");
            if (c >= g.num_cells()) throw ConfigError("initial table has more rows than grid cells");
            for (std::size_t s = 0; s < N; ++s) rho.at(c, s) = vals[s];
            ++c;
        }
        if (c != g.num_cells())
            throw ConfigError("initial table has " + std::to_string(c) + " rows, grid has " +
                              std::to_string(g.num_cells()) + " cells");
        break;
    }
    }
    return rho;
}

std::optional<ReactionField> make_reaction(const SimulationConfig& cfg) {
    const ReactionSpec& rs = cfg.reaction;
    if (rs.kind == "none") return std::nullopt;
    if (rs.kind == "zero") return ReactionField::zero(cfg.model);
    if (rs.kind == "exchange") {
        DenseMatrix k;
        k.n = cfg.model.n_species();
        k.data = rs.rates;
        return ReactionField::exchange(cfg.model, k);
    }
    return ReactionField::logistic(cfg.model, rs.gamma, rs.capacity);
}

CoupledProblem make_problem(const SimulationConfig& cfg, bool check_rates) {
    CoupledProblem p(cfg.grid, cfg.model, cfg.s_ref, cfg.truncation_k);
    p.parabolic.boundary_pressure = cfg.boundary_pressure;
    p.parabolic.gravity = cfg.gravity;
    p.inflow = cfg.inflow;
    p.options = cfg.options;
    p.sync_options();
    p.reaction = make_reaction(cfg);
    if (p.reaction && check_rates) {
        const SpeciesField rho = make_initial_density(cfg);
        double wmin = 1e300, wmax = 0.0;
        for (std::size_t c = 0; c < rho.num_cells(); ++c) {
            const double w = cfg.model.extension.value(rho.cell(c));
            wmin = std::min(wmin, w);
            wmax = std::max(wmax, w);
        }
        const ReactionCheck chk = check_reaction(*p.reaction, 0.5 * wmin, 2.0 * wmax, cfg.reaction.samples, cfg.seed);
        if (!chk.quasi_positive)
            throw ConfigError("reaction rates are not quasi-positive: " + chk.detail);
    }
    if (cfg.threads > 0) set_threads(cfg.threads);
    return p;
}

}  // namespace mixflow

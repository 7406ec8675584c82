#pragma once

// JSON scenario configuration. Every section is optional except `model` and
// `domain`. Unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "exponents.hpp"
#include "forward.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "report.hpp"

namespace skt {

using json = nlohmann::json;

inline constexpr int config_schema_version = 1;

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Reads keys from one JSON object and remembers which were consumed.
class ObjectReader
{
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    T get(const std::string& key, T fallback)
    {
        if (!j_.contains(key)) return fallback;
        return read<T>(key);
    }

    template <class T>
    T required(const std::string& key)
    {
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing required key '" + key + "'");
        return read<T>(key);
    }

    template <class T>
    std::optional<T> optional(const std::string& key)
    {
        if (!j_.contains(key) || j_.at(key).is_null()) {
            used_.insert(key);
            return std::nullopt;
        }
        return read<T>(key);
    }

    /// A number, or "inf" for no ceiling.
    double ceiling(const std::string& key, double fallback)
    {
        if (j_.contains(key) && j_.at(key).is_string()) {
            used_.insert(key);
            if (j_.at(key).get<std::string>() == "inf") return INFINITY;
            throw ConfigError(path_ + "." + key + ": expected a number or \"inf\"");
        }
        return get(key, fallback);
    }

    const json& sub(const std::string& key)
    {
        used_.insert(key);
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

private:
    template <class T>
    T read(const std::string& key)
    {
        used_.insert(key);
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

using MatrixRows = std::vector<std::vector<double>>;

inline Matrix to_matrix(const MatrixRows& rows, int m, const std::string& what)
{
    if (static_cast<int>(rows.size()) != m) throw ConfigError(what + ": expected " + std::to_string(m) + " rows");
    Matrix A(m, m);
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m)
            throw ConfigError(what + ": row " + std::to_string(i) + " has the wrong length");
        for (int j = 0; j < m; ++j) A(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return A;
}

inline Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct ModelSpec
{
    std::string kind = "skt"; // skt | generalized_skt | linear
    std::vector<double> d;
    MatrixRows alpha, beta;
    std::vector<double> k;
    double lambda0 = 1.0;
    double kappa = 0.0;
    std::string lambda = "default"; // default | constant (lambda == lambda0)
    MatrixRows D;                   // linear only

    int m() const { return kind == "linear" ? static_cast<int>(D.size()) : static_cast<int>(d.size()); }

    CrossDiffusionModel build() const
    {
        if (lambda != "default" && lambda != "constant") throw ConfigError("model.lambda must be default or constant");
        CrossDiffusionModel model = build_base();
        return lambda == "constant" ? with_constant_lambda(std::move(model), lambda0) : model;
    }

private:
    CrossDiffusionModel build_base() const
    {
        try {
            if (kind == "linear") {
                const int n = m();
                if (n < 1) throw ConfigError("model.D must be a nonempty square matrix");
                return make_linear(to_matrix(D, n, "model.D"), lambda0);
            }
            const int n = m();
            SKTParams p;
            p.m = n;
            p.d = to_vector(d);
            p.alpha = to_matrix(alpha, n, "model.alpha");
            p.beta = to_matrix(beta, n, "model.beta");
            if (static_cast<int>(k.size()) != n) throw ConfigError("model.k must have m entries");
            p.k = to_vector(k);
            p.lambda0 = lambda0;
            if (kind == "skt") return make_skt(p);
            if (kind == "generalized_skt") return make_generalized_skt(p, kappa);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
        throw ConfigError("model.kind must be skt, generalized_skt or linear");
    }
};

struct DomainSpec
{
    int dim = 2;
    std::vector<double> lengths{1.0, 1.0};
    std::vector<int> nodes{17, 17};

    Domain build() const
    {
        try {
            if (dim == 1) {
                if (lengths.size() != 1 || nodes.size() != 1)
                    throw ConfigError("domain: dim 1 needs one length and one node count");
                return Domain::line(lengths[0], nodes[0]);
            }
            if (dim == 2) {
                if (lengths.size() != 2 || nodes.size() != 2)
                    throw ConfigError("domain: dim 2 needs two lengths and two node counts");
                return Domain::box(lengths[0], lengths[1], nodes[0], nodes[1]);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("domain: ") + e.what());
        }
        throw ConfigError("domain.dim must be 1 or 2");
    }
};

/// One sine mode amplitude * sin(kx pi x / Lx) sin(ky pi y / Ly) in a component.
struct ModeSpec
{
    int component = 0;
    double amplitude = 1.0;
    int kx = 1;
    int ky = 1;
};

struct InitialSpec
{
    std::vector<ModeSpec> modes{{0, 1.0, 1, 1}};
    double scale = 1.0;

    Field build(const Domain& d, int m) const
    {
        for (const auto& md : modes)
            if (md.component < 0 || md.component >= m) throw ConfigError("initial: mode component out of range");
        Field f = Field::sample(d, m, [&](const Point& x) {
            Vector v = Vector::Zero(m);
            for (const auto& md : modes) {
                double s = std::sin(md.kx * std::numbers::pi * x[0] / d.length(0));
                if (d.dim() == 2) s *= std::sin(md.ky * std::numbers::pi * x[1] / d.length(1));
                v[md.component] += scale * md.amplitude * s;
            }
            return v;
        });
        f.zero_boundary();
        return f;
    }
};

struct DualSpec
{
    std::vector<int> levels{2, 4, 8, 16};
    int quad_points = 2;
    double sigma_N = 4.0;
    double q0 = 2.0;
    double ceiling = 2.0;
    int liminf_K = 10;
    double liminf_tol = 0.05;
    InitialSpec psi;
    std::string partner = "semi_implicit"; // semi_implicit | scaled_initial
    double partner_scale = 0.8;
};

struct LadderLevel
{
    std::vector<int> nodes;
    double dt = 1e-3;
    int n = 1;
};

struct UniquenessSpec
{
    std::vector<LadderLevel> ladder{{{9, 9}, 4e-3, 2}, {{17, 17}, 2e-3, 4}, {{33, 33}, 1e-3, 8}};
    double threshold_factor = 1e-4;
    double negative_scale = 0.8;
    double negative_factor = 10.0;
};

struct CheckSpec
{
    std::vector<std::string> selection;
    int samples = 100;
    double sample_radius = 10.0;
    double jacobian_tol = 1e-6;
    int condition_F_pairs = 1000;
    double condition_F_tol = 1e-12;
    double growth_lambda_ceiling = INFINITY;
    double growth_f_ceiling = INFINITY;
    double growth_f_jacobian_ceiling = INFINITY;
    double growth_min_radius = 0.0;
    double sktfu_eps0 = 0.5;
    double sktfu_C = 1.0;
    double jensen_q0 = 2.0;
    double jensen_tol = 1e-6;
    std::vector<std::string> jensen_functionals{"abs", "abs2"};
    int very_weak_count = 5;
    double very_weak_ceiling = 1e-2;
    std::vector<LadderLevel> ladder{{{9, 9}, 4e-3, 1}, {{17, 17}, 2e-3, 1}, {{33, 33}, 1e-3, 1}};
    double stability = 0.2;
    std::vector<double> sigma_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    double apriori_q0 = 2.0;
    double apriori_tol = 0.05;
    double apriori_factor = 2.0;
    int field_max_mode = 8;
    double field_decay = 0.0;
    int interpolation_count = 32;
    double interpolation_eps = 0.01;
    double interpolation_beta = 1.0;
    double interpolation_p = 2.0;
    double interpolation_q = 2.0;
    double functional_stability = 0.1;
    int sobolev_count = 32;
    double sobolev_p = 2.0;
    double sobolev_r = 0.5;
    double sobolev_r_star = 0.9;
    std::vector<double> sobolev_eps{1.0, 0.1, 0.01};
    std::vector<double> bmo_radii;
    double bmo_mu = 0.5;
};

struct ExponentSpec
{
    int N = 2;
    double p = 4.0;
    double k = 1.0;
    double l = 1.0;
    std::optional<double> sigma_choice;
    std::optional<double> q0_choice;
};

struct Config
{
    int schema_version = config_schema_version;
    std::uint64_t seed = 0;
    ModelSpec model;
    DomainSpec domain;
    InitialSpec initial;
    SolverConfig solver;
    DualSpec dual;
    UniquenessSpec uniqueness;
    CheckSpec checks;
    ExponentSpec exponents;
};

inline const std::set<std::string>& known_checks()
{
    static const std::set<std::string> names{
        "jacobian",   "ellipticity", "condition_F",    "growth",          "sktfu",
        "jensen",     "very_weak",   "energy_gronwall", "energy_monotone", "apriori",
        "interpolation", "parabolic_sobolev", "skt_l2", "bmo",            "dual_estimates",
        "liminf"};
    return names;
}

// ---------------------------------------------------------------------------
// JSON -> Config

namespace detail {

inline std::vector<ModeSpec> read_modes(const json& j, const std::string& path)
{
    if (!j.is_array()) throw ConfigError(path + ": expected an array of modes");
    std::vector<ModeSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        ObjectReader r(j[i], path + "[" + std::to_string(i) + "]");
        ModeSpec m;
        m.component = r.get("component", m.component);
        m.amplitude = r.get("amplitude", m.amplitude);
        m.kx = r.get("kx", m.kx);
        m.ky = r.get("ky", m.ky);
        r.finish();
        out.push_back(m);
    }
    return out;
}

inline InitialSpec read_initial(const json& j, const std::string& path)
{
    ObjectReader r(j, path);
    InitialSpec s;
    if (r.has("modes")) s.modes = read_modes(r.sub("modes"), r.path("modes"));
    s.scale = r.get("scale", s.scale);
    r.finish();
    return s;
}

inline std::vector<LadderLevel> read_ladder(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a nonempty array");
    std::vector<LadderLevel> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        ObjectReader r(j[i], path + "[" + std::to_string(i) + "]");
        LadderLevel l;
        l.nodes = r.required<std::vector<int>>("nodes");
        l.dt = r.required<double>("dt");
        l.n = r.get("n", l.n);
        r.finish();
        if (!(l.dt > 0.0) || l.n < 1) throw ConfigError(path + ": ladder levels need dt > 0 and n >= 1");
        out.push_back(l);
    }
    return out;
}

} // namespace detail

inline Config parse_config(const json& root)
{
    ObjectReader top(root, "config");
    Config c;
    c.schema_version = top.required<int>("schema_version");
    if (c.schema_version != config_schema_version)
        throw ConfigError("config: unsupported schema_version " + std::to_string(c.schema_version));
    c.seed = top.get<std::uint64_t>("seed", 0);

    if (!top.has("model")) throw ConfigError("config: missing required key 'model'");
    {
        ObjectReader r(top.sub("model"), "model");
        auto& m = c.model;
        m.kind = r.required<std::string>("kind");
        if (m.kind == "linear") {
            m.D = r.required<MatrixRows>("D");
        } else {
            m.d = r.required<std::vector<double>>("d");
            const std::size_t n = m.d.size();
            m.alpha = r.get("alpha", MatrixRows(n, std::vector<double>(n, 0.0)));
            m.beta = r.get("beta", MatrixRows(n, std::vector<double>(n, 0.0)));
            m.k = r.get("k", std::vector<double>(n, 0.0));
            if (m.kind == "generalized_skt") m.kappa = r.required<double>("kappa");
        }
        m.lambda0 = r.get("lambda0", m.lambda0);
        m.lambda = r.get("lambda", m.lambda);
        r.finish();
    }
    {
        if (!top.has("domain")) throw ConfigError("config: missing required key 'domain'");
        ObjectReader r(top.sub("domain"), "domain");
        c.domain.dim = r.required<int>("dim");
        c.domain.lengths = r.required<std::vector<double>>("lengths");
        c.domain.nodes = r.required<std::vector<int>>("nodes");
        r.finish();
    }
    if (top.has("initial")) c.initial = detail::read_initial(top.sub("initial"), "initial");
    if (top.has("solver")) {
        ObjectReader r(top.sub("solver"), "solver");
        auto& s = c.solver;
        s.dt = r.get("dt", s.dt);
        s.T = r.get("T", s.T);
        s.newton_tol = r.get("newton_tol", s.newton_tol);
        s.newton_max_iter = r.get("newton_max_iter", s.newton_max_iter);
        s.sigma = r.get("sigma", s.sigma);
        const std::string scheme = r.get<std::string>("scheme", to_string(s.scheme));
        if (scheme == "fully_implicit") s.scheme = Scheme::fully_implicit;
        else if (scheme == "semi_implicit") s.scheme = Scheme::semi_implicit;
        else throw ConfigError("solver.scheme must be fully_implicit or semi_implicit");
        r.finish();
    }
    if (c.domain.dim >= 1)
        for (auto* ladder : {&c.checks.ladder, &c.uniqueness.ladder})
            for (auto& l : *ladder) l.nodes.assign(static_cast<std::size_t>(c.domain.dim), l.nodes.front());
    if (top.has("dual")) {
        ObjectReader r(top.sub("dual"), "dual");
        auto& d = c.dual;
        d.levels = r.get("levels", d.levels);
        d.quad_points = r.get("quad_points", d.quad_points);
        d.sigma_N = r.get("sigma_N", d.sigma_N);
        d.q0 = r.get("q0", d.q0);
        d.ceiling = r.get("ceiling", d.ceiling);
        d.liminf_K = r.get("liminf_K", d.liminf_K);
        d.liminf_tol = r.get("liminf_tol", d.liminf_tol);
        if (r.has("psi")) d.psi = detail::read_initial(r.sub("psi"), "dual.psi");
        d.partner = r.get("partner", d.partner);
        d.partner_scale = r.get("partner_scale", d.partner_scale);
        r.finish();
    }
    if (top.has("uniqueness")) {
        ObjectReader r(top.sub("uniqueness"), "uniqueness");
        auto& u = c.uniqueness;
        if (r.has("ladder")) u.ladder = detail::read_ladder(r.sub("ladder"), "uniqueness.ladder");
        u.threshold_factor = r.get("threshold_factor", u.threshold_factor);
        u.negative_scale = r.get("negative_scale", u.negative_scale);
        u.negative_factor = r.get("negative_factor", u.negative_factor);
        r.finish();
    }
    if (top.has("checks")) {
        ObjectReader r(top.sub("checks"), "checks");
        auto& k = c.checks;
        k.selection = r.get("selection", k.selection);
        k.samples = r.get("samples", k.samples);
        k.sample_radius = r.get("sample_radius", k.sample_radius);
        k.jacobian_tol = r.get("jacobian_tol", k.jacobian_tol);
        k.condition_F_pairs = r.get("condition_F_pairs", k.condition_F_pairs);
        k.condition_F_tol = r.get("condition_F_tol", k.condition_F_tol);
        k.growth_lambda_ceiling = r.ceiling("growth_lambda_ceiling", k.growth_lambda_ceiling);
        k.growth_f_ceiling = r.ceiling("growth_f_ceiling", k.growth_f_ceiling);
        k.growth_f_jacobian_ceiling = r.ceiling("growth_f_jacobian_ceiling", k.growth_f_jacobian_ceiling);
        k.growth_min_radius = r.get("growth_min_radius", k.growth_min_radius);
        k.sktfu_eps0 = r.get("sktfu_eps0", k.sktfu_eps0);
        k.sktfu_C = r.get("sktfu_C", k.sktfu_C);
        k.jensen_q0 = r.get("jensen_q0", k.jensen_q0);
        k.jensen_tol = r.get("jensen_tol", k.jensen_tol);
        k.jensen_functionals = r.get("jensen_functionals", k.jensen_functionals);
        k.very_weak_count = r.get("very_weak_count", k.very_weak_count);
        k.very_weak_ceiling = r.get("very_weak_ceiling", k.very_weak_ceiling);
        if (r.has("ladder")) k.ladder = detail::read_ladder(r.sub("ladder"), "checks.ladder");
        k.stability = r.get("stability", k.stability);
        k.sigma_grid = r.get("sigma_grid", k.sigma_grid);
        k.apriori_q0 = r.get("apriori_q0", k.apriori_q0);
        k.apriori_tol = r.get("apriori_tol", k.apriori_tol);
        k.apriori_factor = r.get("apriori_factor", k.apriori_factor);
        k.field_max_mode = r.get("field_max_mode", k.field_max_mode);
        k.field_decay = r.get("field_decay", k.field_decay);
        k.interpolation_count = r.get("interpolation_count", k.interpolation_count);
        k.interpolation_eps = r.get("interpolation_eps", k.interpolation_eps);
        k.interpolation_beta = r.get("interpolation_beta", k.interpolation_beta);
        k.interpolation_p = r.get("interpolation_p", k.interpolation_p);
        k.interpolation_q = r.get("interpolation_q", k.interpolation_q);
        k.functional_stability = r.get("functional_stability", k.functional_stability);
        k.sobolev_count = r.get("sobolev_count", k.sobolev_count);
        k.sobolev_p = r.get("sobolev_p", k.sobolev_p);
        k.sobolev_r = r.get("sobolev_r", k.sobolev_r);
        k.sobolev_r_star = r.get("sobolev_r_star", k.sobolev_r_star);
        k.sobolev_eps = r.get("sobolev_eps", k.sobolev_eps);
        k.bmo_radii = r.get("bmo_radii", k.bmo_radii);
        k.bmo_mu = r.get("bmo_mu", k.bmo_mu);
        r.finish();
    }
    if (top.has("exponents")) {
        ObjectReader r(top.sub("exponents"), "exponents");
        auto& e = c.exponents;
        e.N = r.get("N", e.N);
        e.p = r.get("p", e.p);
        e.k = r.get("k", e.k);
        e.l = r.get("l", e.l);
        e.sigma_choice = r.optional<double>("sigma_choice");
        e.q0_choice = r.optional<double>("q0_choice");
        r.finish();
    }
    top.finish();
    return c;
}

/// Checks everything that can be checked before any computation starts.
inline void validate_config(const Config& c)
{
    const CrossDiffusionModel model = c.model.build();
    const Domain d = c.domain.build();
    c.initial.build(d, model.m);
    try {
        c.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    for (int n : c.dual.levels)
        if (n < 1) throw ConfigError("dual.levels must be positive");
    if (c.dual.quad_points < 1) throw ConfigError("dual.quad_points must be >= 1");
    if (c.dual.partner != "semi_implicit" && c.dual.partner != "scaled_initial")
        throw ConfigError("dual.partner must be semi_implicit or scaled_initial");
    c.dual.psi.build(d, model.m);
    for (const auto& s : c.checks.selection)
        if (!known_checks().count(s)) throw ConfigError("checks.selection: unknown check '" + s + "'");
    for (const auto& f : c.checks.jensen_functionals)
        if (f != "abs" && f != "abs2" && f != "hatF")
            throw ConfigError("checks.jensen_functionals: expected abs, abs2 or hatF");
    if (c.checks.field_max_mode < 1) throw ConfigError("checks.field_max_mode must be >= 1");
    if (!(c.checks.field_decay >= 0.0)) throw ConfigError("checks.field_decay must be >= 0");
    if (c.checks.interpolation_count < 2 || c.checks.sobolev_count < 2)
        throw ConfigError("checks: interpolation_count and sobolev_count must be >= 2");
    for (double s : c.checks.sigma_grid)
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("checks.sigma_grid values must lie in [0, 1]");
    for (const auto* ladder : {&c.checks.ladder, &c.uniqueness.ladder})
        for (const auto& l : *ladder)
            if (l.nodes.size() != static_cast<std::size_t>(c.domain.dim))
                throw ConfigError("ladder levels need one node count per dimension");
}

inline Config load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    Config c = parse_config(j);
    validate_config(c);
    return c;
}

// ---------------------------------------------------------------------------
// Config -> JSON (canonical form used for hashing)

namespace detail {

inline ordered_json dump_modes(const std::vector<ModeSpec>& ms)
{
    ordered_json a = ordered_json::array();
    for (const auto& m : ms)
        a.push_back({{"component", m.component}, {"amplitude", m.amplitude}, {"kx", m.kx}, {"ky", m.ky}});
    return a;
}

inline ordered_json dump_initial(const InitialSpec& s)
{
    return {{"modes", dump_modes(s.modes)}, {"scale", s.scale}};
}

inline ordered_json dump_ladder(const std::vector<LadderLevel>& l)
{
    ordered_json a = ordered_json::array();
    for (const auto& x : l) a.push_back({{"nodes", x.nodes}, {"dt", x.dt}, {"n", x.n}});
    return a;
}

inline ordered_json num(double v)
{
    return finite_or_null(v);
}

} // namespace detail

inline ordered_json to_json(const Config& c)
{
    ordered_json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    ordered_json m;
    m["kind"] = c.model.kind;
    if (c.model.kind == "linear") {
        m["D"] = c.model.D;
    } else {
        m["d"] = c.model.d;
        m["alpha"] = c.model.alpha;
        m["beta"] = c.model.beta;
        m["k"] = c.model.k;
        if (c.model.kind == "generalized_skt") m["kappa"] = c.model.kappa;
    }
    m["lambda0"] = c.model.lambda0;
    m["lambda"] = c.model.lambda;
    j["model"] = m;
    j["domain"] = {{"dim", c.domain.dim}, {"lengths", c.domain.lengths}, {"nodes", c.domain.nodes}};
    j["initial"] = detail::dump_initial(c.initial);
    j["solver"] = {{"dt", c.solver.dt},
                   {"T", c.solver.T},
                   {"newton_tol", c.solver.newton_tol},
                   {"newton_max_iter", c.solver.newton_max_iter},
                   {"sigma", c.solver.sigma},
                   {"scheme", to_string(c.solver.scheme)}};
    j["dual"] = {{"levels", c.dual.levels},         {"quad_points", c.dual.quad_points},
                 {"sigma_N", c.dual.sigma_N},       {"q0", c.dual.q0},
                 {"ceiling", c.dual.ceiling},       {"liminf_K", c.dual.liminf_K},
                 {"liminf_tol", c.dual.liminf_tol}, {"psi", detail::dump_initial(c.dual.psi)},
                 {"partner", c.dual.partner},       {"partner_scale", c.dual.partner_scale}};
    j["uniqueness"] = {{"ladder", detail::dump_ladder(c.uniqueness.ladder)},
                       {"threshold_factor", c.uniqueness.threshold_factor},
                       {"negative_scale", c.uniqueness.negative_scale},
                       {"negative_factor", c.uniqueness.negative_factor}};
    const auto& k = c.checks;
    ordered_json ch;
    ch["selection"] = k.selection;
    ch["samples"] = k.samples;
    ch["sample_radius"] = k.sample_radius;
    ch["jacobian_tol"] = k.jacobian_tol;
    ch["condition_F_pairs"] = k.condition_F_pairs;
    ch["condition_F_tol"] = k.condition_F_tol;
    ch["growth_lambda_ceiling"] = detail::num(k.growth_lambda_ceiling);
    ch["growth_f_ceiling"] = detail::num(k.growth_f_ceiling);
    ch["growth_f_jacobian_ceiling"] = detail::num(k.growth_f_jacobian_ceiling);
    ch["growth_min_radius"] = k.growth_min_radius;
    ch["sktfu_eps0"] = k.sktfu_eps0;
    ch["sktfu_C"] = k.sktfu_C;
    ch["jensen_q0"] = k.jensen_q0;
    ch["jensen_tol"] = k.jensen_tol;
    ch["jensen_functionals"] = k.jensen_functionals;
    ch["very_weak_count"] = k.very_weak_count;
    ch["very_weak_ceiling"] = k.very_weak_ceiling;
    ch["ladder"] = detail::dump_ladder(k.ladder);
    ch["stability"] = k.stability;
    ch["sigma_grid"] = k.sigma_grid;
    ch["apriori_q0"] = k.apriori_q0;
    ch["apriori_tol"] = k.apriori_tol;
    ch["apriori_factor"] = k.apriori_factor;
    ch["field_max_mode"] = k.field_max_mode;
    ch["field_decay"] = k.field_decay;
    ch["interpolation_count"] = k.interpolation_count;
    ch["interpolation_eps"] = k.interpolation_eps;
    ch["interpolation_beta"] = k.interpolation_beta;
    ch["interpolation_p"] = k.interpolation_p;
    ch["interpolation_q"] = k.interpolation_q;
    ch["functional_stability"] = k.functional_stability;
    ch["sobolev_count"] = k.sobolev_count;
    ch["sobolev_p"] = k.sobolev_p;
    ch["sobolev_r"] = k.sobolev_r;
    ch["sobolev_r_star"] = k.sobolev_r_star;
    ch["sobolev_eps"] = k.sobolev_eps;
    ch["bmo_radii"] = k.bmo_radii;
    ch["bmo_mu"] = k.bmo_mu;
    j["checks"] = ch;
    ordered_json e;
    e["N"] = c.exponents.N;
    e["p"] = c.exponents.p;
    e["k"] = c.exponents.k;
    e["l"] = c.exponents.l;
    e["sigma_choice"] = c.exponents.sigma_choice ? ordered_json(*c.exponents.sigma_choice) : ordered_json(nullptr);
    e["q0_choice"] = c.exponents.q0_choice ? ordered_json(*c.exponents.q0_choice) : ordered_json(nullptr);
    j["exponents"] = e;
    return j;
}

/// Hash of the canonical dump; embedded in every output file.
inline std::string config_hash(const Config& c)
{
    return hex64(fnv1a(to_json(c).dump()));
}

/// Applies a `--tol key=value` override.
inline void apply_tolerance_override(Config& c, const std::string& key, double v)
{
    static const std::map<std::string, std::function<void(Config&, double)>> setters{
        {"newton_tol", [](Config& c, double v) { c.solver.newton_tol = v; }},
        {"jacobian_tol", [](Config& c, double v) { c.checks.jacobian_tol = v; }},
        {"condition_F_tol", [](Config& c, double v) { c.checks.condition_F_tol = v; }},
        {"jensen_tol", [](Config& c, double v) { c.checks.jensen_tol = v; }},
        {"very_weak_ceiling", [](Config& c, double v) { c.checks.very_weak_ceiling = v; }},
        {"stability", [](Config& c, double v) { c.checks.stability = v; }},
        {"apriori_tol", [](Config& c, double v) { c.checks.apriori_tol = v; }},
        {"functional_stability", [](Config& c, double v) { c.checks.functional_stability = v; }},
        {"bmo_mu", [](Config& c, double v) { c.checks.bmo_mu = v; }},
        {"dual_ceiling", [](Config& c, double v) { c.dual.ceiling = v; }},
        {"liminf_tol", [](Config& c, double v) { c.dual.liminf_tol = v; }},
        {"threshold_factor", [](Config& c, double v) { c.uniqueness.threshold_factor = v; }},
    };
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("--tol: unknown tolerance '" + key + "'");
    if (!(v >= 0.0)) throw ConfigError("--tol: " + key + " must be >= 0");
    it->second(c, v);
}

} // namespace skt

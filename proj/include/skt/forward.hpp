#pragma once

// Backward-Euler time stepping for the sigma-family
//
//   w_t = Lap(P(w)) + sigma^2 f(w) (+ g),   w = 0 on the boundary,
//   w(0) = sigma u0,
//
// with Newton iteration on the fully implicit scheme, or a single linearized
// solve per step for the semi-implicit variant.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "grid.hpp"
#include "model.hpp"

namespace skt {

enum class Scheme
{
    fully_implicit,
    semi_implicit,
};

inline const char* to_string(Scheme s)
{
    return s == Scheme::fully_implicit ? "fully_implicit" : "semi_implicit";
}

struct SolverConfig
{
    double dt = 1e-3;
    double T = 0.1;
    double newton_tol = 1e-10;
    int newton_max_iter = 20;
    double sigma = 1.0;
    Scheme scheme = Scheme::fully_implicit;

    void validate() const
    {
        if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
        if (!(T > 0.0)) throw std::invalid_argument("SolverConfig: T must be > 0");
        if (!(sigma >= 0.0 && sigma <= 1.0))
            throw std::invalid_argument("SolverConfig: sigma must lie in [0, 1]");
        if (!(newton_tol > 0.0)) throw std::invalid_argument("SolverConfig: newton_tol must be > 0");
        if (newton_max_iter < 1) throw std::invalid_argument("SolverConfig: newton_max_iter must be >= 1");
    }

    int steps() const { return static_cast<int>(std::lround(T / dt)); }
};

/// Optional source g(x, t), used for manufactured solutions.
using SourceTerm = std::function<Vector(const Point&, double)>;

/// Maps grid nodes to unknown blocks; boundary nodes carry no unknowns.
class InteriorIndex
{
public:
    explicit InteriorIndex(const Domain& d) : map_(static_cast<std::size_t>(d.size()), -1)
    {
        for (int n = 0; n < d.size(); ++n)
            if (!d.on_boundary(n)) {
                map_[static_cast<std::size_t>(n)] = static_cast<int>(nodes_.size());
                nodes_.push_back(n);
            }
    }
    int count() const { return static_cast<int>(nodes_.size()); }
    int of(int node) const { return map_[static_cast<std::size_t>(node)]; }
    int node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }

private:
    std::vector<int> map_;
    std::vector<int> nodes_;
};

/// Calls fn(neighbour_node, weight) for each term of the Laplacian stencil
/// at an interior node, including the centre.
template <class Fn>
void for_each_stencil_term(const Domain& d, int n, Fn&& fn)
{
    const double ix2 = 1.0 / (d.h(0) * d.h(0));
    double centre = -2.0 * ix2;
    fn(n - 1, ix2);
    fn(n + 1, ix2);
    if (d.dim() == 2) {
        const double iy2 = 1.0 / (d.h(1) * d.h(1));
        centre -= 2.0 * iy2;
        fn(n - d.nodes(0), iy2);
        fn(n + d.nodes(0), iy2);
    }
    fn(n, centre);
}

struct StepStats
{
    int newton_iters = 0;
    double residual = 0.0;
    int ellipticity_warnings = 0;
};

struct StepResult
{
    Field u;
    StepStats stats;
};

namespace detail {

inline Field source_field(const Domain& d, int m, const SourceTerm& g, double t)
{
    Field out(d, m);
    if (!g) return out;
    for (int n = 0; n < d.size(); ++n)
        if (!d.on_boundary(n)) out.set(n, g(d.coord(n), t));
    return out;
}

inline double interior_l2(const Field& r)
{
    const Domain& d = r.domain();
    double s = 0.0;
    for (int n = 0; n < d.size(); ++n)
        if (!d.on_boundary(n)) s += r.state(n).squaredNorm();
    return std::sqrt(s * d.cell_volume());
}

} // namespace detail

/// Residual u - u_prev - dt Lap(P(u)) - dt s2 f(u) - dt g of the implicit
/// scheme (s2 = sigma^2); zero on boundary nodes.
inline Field implicit_residual(const CrossDiffusionModel& model, const Field& u_prev,
                               const Field& u, double dt, double s2, const Field& g)
{
    const Field Pu = map_states(u, model.m, model.P);
    const Field LPu = laplacian(Pu);
    Field r(u.domain(), model.m);
    for (int n = 0; n < u.size(); ++n) {
        if (u.domain().on_boundary(n)) continue;
        Vector v = u.state(n) - u_prev.state(n) - dt * LPu.state(n) - dt * g.state(n);
        if (s2 != 0.0) v -= dt * s2 * model.f(u.state(n));
        r.set(n, v);
    }
    return r;
}

/// Discrete L2 norm of the implicit-scheme residual; exposed so callers can
/// check a computed step against the scheme it should satisfy.
inline double implicit_residual_norm(const CrossDiffusionModel& model, const Field& u_prev,
                                     const Field& u, double dt, double sigma)
{
    return detail::interior_l2(implicit_residual(model, u_prev, u, dt, sigma * sigma,
                                                 Field(u.domain(), model.m)));
}

/// Newton matrix I - dt Lap(jacP(u) .) - dt s2 jacf(u) on the interior unknowns.
inline Eigen::SparseMatrix<double> implicit_jacobian(const CrossDiffusionModel& model,
                                                     const Field& u, double dt, double s2,
                                                     const InteriorIndex& idx)
{
    const Domain& d = u.domain();
    const int m = model.m;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(idx.count() * m * m * (2 * d.dim() + 1)));
    std::vector<Matrix> A(static_cast<std::size_t>(d.size()));
    for (int n = 0; n < d.size(); ++n) A[static_cast<std::size_t>(n)] = model.jacP(u.state(n));
    for (int k = 0; k < idx.count(); ++k) {
        const int n = idx.node(k);
        Matrix diag = Matrix::Identity(m, m);
        if (s2 != 0.0) diag -= dt * s2 * model.jacf(u.state(n));
        for_each_stencil_term(d, n, [&](int nb, double w) {
            if (nb == n) {
                diag -= dt * w * A[static_cast<std::size_t>(n)];
                return;
            }
            const int col = idx.of(nb);
            if (col < 0) return;
            const Matrix& Anb = A[static_cast<std::size_t>(nb)];
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    if (Anb(a, b) != 0.0) trip.emplace_back(k * m + a, col * m + b, -dt * w * Anb(a, b));
        });
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                if (diag(a, b) != 0.0 || a == b) trip.emplace_back(k * m + a, k * m + b, diag(a, b));
    }
    Eigen::SparseMatrix<double> J(idx.count() * m, idx.count() * m);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

namespace detail {

inline int count_ellipticity_failures(const CrossDiffusionModel& model, const Field& u)
{
    int bad = 0;
    for (int n = 0; n < u.size(); ++n)
        if (!u.domain().on_boundary(n) && !ellipticity_certificate(model, u.state(n)).passes) ++bad;
    return bad;
}

// Solves J x = b; returns nullopt when the factorization or solve fails.
inline std::optional<Eigen::VectorXd> sparse_solve(const Eigen::SparseMatrix<double>& J,
                                                   const Eigen::VectorXd& b)
{
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
    return x;
}

inline Eigen::VectorXd pack(const Field& f, const InteriorIndex& idx)
{
    const int m = f.m();
    Eigen::VectorXd v(idx.count() * m);
    for (int k = 0; k < idx.count(); ++k)
        for (int c = 0; c < m; ++c) v[k * m + c] = f(idx.node(k), c);
    return v;
}

inline void unpack_add(Field& f, const Eigen::VectorXd& v, double scale, const InteriorIndex& idx)
{
    const int m = f.m();
    for (int k = 0; k < idx.count(); ++k)
        for (int c = 0; c < m; ++c) f(idx.node(k), c) += scale * v[k * m + c];
}

} // namespace detail

/// Advances one backward-Euler step. `t_next` is only used to evaluate the
/// optional source. The ellipticity certificate is evaluated at u_prev and the
/// number of failing nodes reported; it never aborts the step on its own.
inline StepResult step_implicit(const CrossDiffusionModel& model, const Field& u_prev,
                                const SolverConfig& cfg, double t_next = 0.0,
                                const SourceTerm& source = {})
{
    const Domain& d = u_prev.domain();
    const InteriorIndex idx(d);
    const double dt = cfg.dt;
    const double s2 = cfg.sigma * cfg.sigma;
    const Field g = detail::source_field(d, model.m, source, t_next);

    StepResult out;
    out.stats.ellipticity_warnings = detail::count_ellipticity_failures(model, u_prev);

    Field u = u_prev;
    u.zero_boundary();
    Field r = implicit_residual(model, u_prev, u, dt, s2, g);
    double rn = detail::interior_l2(r);

    if (cfg.scheme == Scheme::semi_implicit) {
        const auto J = implicit_jacobian(model, u, dt, s2, idx);
        const auto delta = detail::sparse_solve(J, -detail::pack(r, idx));
        if (!delta) throw NewtonDiverged("semi-implicit linear solve failed", rn, t_next);
        detail::unpack_add(u, *delta, 1.0, idx);
        out.stats.newton_iters = 1;
        out.stats.residual = detail::interior_l2(implicit_residual(model, u_prev, u, dt, s2, g));
        out.u = std::move(u);
        return out;
    }

    int it = 0;
    while (rn > cfg.newton_tol) {
        if (it >= cfg.newton_max_iter)
            throw NewtonDiverged("Newton did not converge in " + std::to_string(cfg.newton_max_iter) +
                                     " iterations (residual " + format_double(rn) + ")",
                                 rn, t_next);
        const auto J = implicit_jacobian(model, u, dt, s2, idx);
        const auto delta = detail::sparse_solve(J, -detail::pack(r, idx));
        if (!delta) {
            if (detail::count_ellipticity_failures(model, u) > 0)
                throw EllipticityLost("ellipticity lost at a Newton iterate and the linear solve failed", t_next);
            throw NewtonDiverged("Newton linear solve failed", rn, t_next);
        }
        // Step halving: accept the first damped step that reduces the residual.
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 8; ++halving, scale *= 0.5) {
            Field trial = u;
            detail::unpack_add(trial, *delta, scale, idx);
            Field rt = implicit_residual(model, u_prev, trial, dt, s2, g);
            const double rtn = detail::interior_l2(rt);
            if (rtn < rn) {
                u = std::move(trial);
                r = std::move(rt);
                rn = rtn;
                accepted = true;
                break;
            }
        }
        ++it;
        if (!accepted)
            throw NewtonDiverged("Newton step could not reduce the residual (" + format_double(rn) + ")",
                                 rn, t_next);
    }
    out.stats.newton_iters = it;
    out.stats.residual = rn;
    out.u = std::move(u);
    return out;
}

struct SliceDiagnostics
{
    double t = 0.0;
    int newton_iters = 0;
    double residual = 0.0;
    double energy_lambda = 0.0; // int lambda(w)^2 |Dw|^2
    double energy_A = 0.0;      // int |A(w) Dw|^2 = int |D P(w)|^2
    int ellipticity_warnings = 0;
};

/// int lambda(w)^2 |Dw|^2, lambda at edge midpoints.
inline double energy_lambda(const CrossDiffusionModel& model, const Field& w)
{
    return weighted_dirichlet_energy(w, [&](const Vector& v) {
        const double l = model.lambda(v);
        return l * l;
    });
}

/// int |A(w) Dw|^2, discretized as the Dirichlet energy of P(w).
inline double energy_A(const CrossDiffusionModel& model, const Field& w)
{
    return dirichlet_energy(map_states(w, model.m, model.P));
}

struct FamilyResult
{
    Trajectory traj;
    std::vector<SliceDiagnostics> diagnostics;
};

/// Solves the sigma-family from w(0) = sigma u0 up to T. Diagnostics has one
/// row per slice (the first with zero Newton iterations).
inline FamilyResult solve_family(const CrossDiffusionModel& model, const Field& u0,
                                 const SolverConfig& cfg, const SourceTerm& source = {})
{
    cfg.validate();
    if (u0.m() != model.m) throw std::invalid_argument("solve_family: initial data has wrong m");
    if (!u0.satisfies_dirichlet(1e-14))
        throw std::invalid_argument("solve_family: initial data violates the boundary condition");
    const int K = cfg.steps();
    FamilyResult res;
    res.traj = make_trajectory(u0.domain(), model.m, 0.0, cfg.dt);
    res.traj.slices.reserve(static_cast<std::size_t>(K + 1));
    Field w = cfg.sigma * u0;
    w.zero_boundary();

    auto record = [&](const Field& f, double t, const StepStats& st) {
        SliceDiagnostics dg;
        dg.t = t;
        dg.newton_iters = st.newton_iters;
        dg.residual = st.residual;
        dg.energy_lambda = energy_lambda(model, f);
        dg.energy_A = energy_A(model, f);
        dg.ellipticity_warnings = st.ellipticity_warnings;
        res.diagnostics.push_back(dg);
    };
    record(w, 0.0, {});
    res.traj.slices.push_back(w);
    for (int k = 1; k <= K; ++k) {
        const double t = k * cfg.dt;
        StepResult st;
        try {
            st = step_implicit(model, w, cfg, t, source);
        } catch (const NewtonDiverged& e) {
            throw NewtonDiverged(std::string(e.what()) + " at t=" + format_double(t), e.last_residual(), t);
        } catch (const EllipticityLost& e) {
            throw EllipticityLost(std::string(e.what()) + " at t=" + format_double(t), t);
        }
        w = std::move(st.u);
        record(w, t, st.stats);
        res.traj.slices.push_back(w);
    }
    return res;
}

/// The rescaled family form: coefficients A(sigma u), reaction sigma f(sigma u).
/// If u solves it, w = sigma u solves the sigma-family. Requires sigma > 0.
inline CrossDiffusionModel scaled_family_model(const CrossDiffusionModel& model, double sigma)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("scaled_family_model: sigma must be > 0");
    CrossDiffusionModel s = model;
    const auto P = model.P, f = model.f;
    const auto jP = model.jacP, jf = model.jacf;
    s.P = [P, sigma](const Vector& u) -> Vector { return P(sigma * u) / sigma; };
    s.jacP = [jP, sigma](const Vector& u) -> Matrix { return jP(sigma * u); };
    s.f = [f, sigma](const Vector& u) -> Vector { return sigma * f(sigma * u); };
    s.jacf = [jf, sigma](const Vector& u) -> Matrix { return sigma * sigma * jf(sigma * u); };
    s.descriptor += " scaled_family sigma=" + format_double(sigma);
    return s;
}

} // namespace skt

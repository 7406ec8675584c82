#pragma once

// Duality machinery: space-time mollification, averaged Jacobian
// coefficients, the backward linear dual system and the estimates measured
// on its solutions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "forward.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "report.hpp"

namespace skt {

// ---------------------------------------------------------------------------
// Mollification

/// Smooth bump exp(-1 / (1 - r^2)) on |r| < 1, unnormalized.
inline double bump_profile(double r)
{
    const double r2 = r * r;
    return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

/// Level-n kernels eta_n(t) = n eta(n t) and rho_n(x) = n^N rho(n x), both
/// supported in a radius 1/n. Discretely, a kernel row is
///
///   k(x, y) = c rho_n(x - y) w_y        (y != x),
///   k(x, x) = 1 - sum_{y != x} k(x, y),
///
/// with quadrature weights w and c fixing unit mass for rows whose support
/// lies inside the grid. Mass cut off by the domain boundary or the time
/// endpoints returns to the centre, which keeps every row at unit mass and
/// makes the operator self-adjoint in the weighted inner product.
class Mollifier
{
public:
    explicit Mollifier(int n) : n_(n)
    {
        if (n < 1) throw std::invalid_argument("Mollifier: level must be >= 1");
    }

    int level() const { return n_; }
    double radius() const { return 1.0 / n_; }

    double eta(double t) const { return n_ * bump_profile(n_ * t); }
    double rho(const Point& x, int dim) const
    {
        const double r = std::hypot(x[0], dim == 2 ? x[1] : 0.0);
        return std::pow(static_cast<double>(n_), dim) * bump_profile(n_ * r);
    }

    /// Applies the spatial kernel to one slice.
    Field apply_space(const Field& u) const
    {
        const Domain& d = u.domain();
        const int nx = d.nodes(0), ny = d.dim() == 2 ? d.nodes(1) : 1;
        const int rx = static_cast<int>(std::floor(radius() / d.h(0)));
        const int ry = d.dim() == 2 ? static_cast<int>(std::floor(radius() / d.h(1))) : 0;
        struct Offset { int di, dj; double k; };
        std::vector<Offset> offs;
        double full = 0.0;
        for (int dj = -ry; dj <= ry; ++dj)
            for (int di = -rx; di <= rx; ++di) {
                const Point z{di * d.h(0), d.dim() == 2 ? dj * d.h(1) : 0.0};
                const double k = rho(z, d.dim());
                if (k <= 0.0) continue;
                full += k;
                if (di != 0 || dj != 0) offs.push_back({di, dj, k});
            }
        Field out(d, u.m());
        if (offs.empty()) return u;
        const double c = 1.0 / (full * d.cell_volume());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int n = d.index(i, j);
                double off_mass = 0.0;
                Vector acc = Vector::Zero(u.m());
                for (const auto& o : offs) {
                    const int ii = i + o.di, jj = j + o.dj;
                    if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
                    const int nb = d.index(ii, jj);
                    const double k = c * o.k * d.weight(nb);
                    off_mass += k;
                    acc += k * u.state(nb);
                }
                out.set(n, acc + (1.0 - off_mass) * u.state(n));
            }
        return out;
    }

    /// Row masses of the spatial kernel, for diagnostics.
    std::vector<double> space_masses(const Domain& d) const
    {
        Field one = Field::sample(d, 1, [](const Point&) { return Vector::Ones(1); });
        const Field r = apply_space(one);
        std::vector<double> out(static_cast<std::size_t>(d.size()));
        for (int n = 0; n < d.size(); ++n) out[static_cast<std::size_t>(n)] = r(n, 0);
        return out;
    }

    /// Temporal kernel weights k(t_a, t_b) as a dense (K+1)^2 matrix.
    Matrix time_kernel(int K, double dt) const
    {
        const int r = static_cast<int>(std::floor(radius() / dt));
        double full = 0.0;
        for (int s = -r; s <= r; ++s) full += eta(s * dt);
        const double c = 1.0 / (full * dt);
        Matrix k = Matrix::Zero(K + 1, K + 1);
        for (int a = 0; a <= K; ++a) {
            double off = 0.0;
            for (int b = std::max(0, a - r); b <= std::min(K, a + r); ++b) {
                if (b == a) continue;
                const double wb = dt * ((b == 0 || b == K) ? 0.5 : 1.0);
                const double v = c * eta((b - a) * dt) * wb;
                k(a, b) = v;
                off += v;
            }
            k(a, a) = 1.0 - off;
        }
        return k;
    }

    /// Space-time mollification: spatial pass per slice, then temporal pass.
    Trajectory apply(const Trajectory& tr) const
    {
        const Trajectory sp = map_trajectory(tr, [this](const Field& f) { return apply_space(f); });
        const int K = tr.steps();
        const Matrix k = time_kernel(K, tr.dt);
        Trajectory out = make_trajectory(tr.domain, tr.m, tr.t0, tr.dt);
        for (int a = 0; a <= K; ++a) {
            Field f(tr.domain, tr.m);
            for (int b = 0; b <= K; ++b) {
                const double v = k(a, b);
                if (v == 0.0) continue;
                const auto& src = sp.slices[static_cast<std::size_t>(b)].data();
                auto& dst = f.data();
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += v * src[i];
            }
            out.slices.push_back(std::move(f));
        }
        return out;
    }

private:
    int n_;
};

inline Trajectory mollify(const Trajectory& tr, int n)
{
    return Mollifier(n).apply(tr);
}

// ---------------------------------------------------------------------------
// Averaged coefficients

/// a(u1,u2) = int_0^1 jacP(s u1 + (1-s) u2) ds, g likewise with jacf, and
/// lambda_* the same average of lambda, at every space-time node. Storage is
/// indexed by slice * nodes + node.
struct AveragedCoefficients
{
    Domain domain;
    int m = 1;
    int slices = 0;
    double t0 = 0.0;
    double dt = 1.0;
    double q0 = 2.0;
    std::vector<Matrix> a;
    std::vector<Matrix> g;
    std::vector<double> lambda_star;

    std::size_t at(int k, int node) const
    {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(domain.size()) +
               static_cast<std::size_t>(node);
    }
    const Matrix& A(int k, int node) const { return a[at(k, node)]; }
    const Matrix& G(int k, int node) const { return g[at(k, node)]; }
    double lam(int k, int node) const { return lambda_star[at(k, node)]; }
    int steps() const { return slices - 1; }
    double horizon() const { return t0 + steps() * dt; }

    /// Space-time constant coefficients, mainly for oracles.
    static AveragedCoefficients constant(const Domain& d, int K, double dt, const Matrix& a,
                                         const Matrix& g, double lambda_star)
    {
        AveragedCoefficients c;
        c.domain = d;
        c.m = static_cast<int>(a.rows());
        c.slices = K + 1;
        c.dt = dt;
        const std::size_t total = static_cast<std::size_t>(K + 1) * static_cast<std::size_t>(d.size());
        c.a.assign(total, a);
        c.g.assign(total, g);
        c.lambda_star.assign(total, lambda_star);
        return c;
    }
};

inline AveragedCoefficients averaged_coefficients(const CrossDiffusionModel& model, const Trajectory& u1,
                                                  const Trajectory& u2, int quad_points, double q0 = 2.0)
{
    if (!(u1.domain == u2.domain) || u1.slices.size() != u2.slices.size() || u1.m != u2.m)
        throw std::invalid_argument("averaged_coefficients: trajectories do not share grid and horizon");
    const QuadratureRule q = gauss_legendre_01(quad_points);
    AveragedCoefficients c;
    c.domain = u1.domain;
    c.m = model.m;
    c.slices = static_cast<int>(u1.slices.size());
    c.t0 = u1.t0;
    c.dt = u1.dt;
    c.q0 = q0;
    const int N = u1.domain.size();
    const std::size_t total = static_cast<std::size_t>(c.slices) * static_cast<std::size_t>(N);
    c.a.resize(total);
    c.g.resize(total);
    c.lambda_star.resize(total);
    for (int k = 0; k < c.slices; ++k)
        for (int n = 0; n < N; ++n) {
            const Vector x1 = u1.slices[static_cast<std::size_t>(k)].state(n);
            const Vector x2 = u2.slices[static_cast<std::size_t>(k)].state(n);
            Matrix A = Matrix::Zero(model.m, model.m);
            Matrix G = Matrix::Zero(model.m, model.m);
            double L = 0.0;
            for (std::size_t i = 0; i < q.nodes.size(); ++i) {
                const double s = q.nodes[i], w = q.weights[i];
                const Vector x = s * x1 + (1.0 - s) * x2;
                A += w * model.jacP(x);
                G += w * model.jacf(x);
                L += w * model.lambda(x);
            }
            const std::size_t id = c.at(k, n);
            c.a[id] = std::move(A);
            c.g[id] = std::move(G);
            c.lambda_star[id] = L;
        }
    return c;
}

// ---------------------------------------------------------------------------
// Dual problem

struct DualProblem
{
    AveragedCoefficients coeffs;
    Field psi;

    double T() const { return coeffs.horizon(); }
    double dt() const { return coeffs.dt; }

    void validate() const
    {
        if (!(psi.domain() == coeffs.domain) || psi.m() != coeffs.m)
            throw std::invalid_argument("DualProblem: terminal data does not match the coefficient grid");
        if (!psi.satisfies_dirichlet(1e-12))
            throw std::invalid_argument("DualProblem: terminal data must vanish on the boundary");
        if (coeffs.slices < 2) throw std::invalid_argument("DualProblem: need at least one time step");
        for (std::size_t i = 0; i < coeffs.a.size(); ++i)
            if (!coeffs.a[i].allFinite() || !coeffs.g[i].allFinite() || !std::isfinite(coeffs.lambda_star[i]))
                throw std::invalid_argument("DualProblem: non-finite coefficients");
    }
};

/// Solves Psi_t + a^T Lap Psi + g^T Psi = 0, Psi(T) = psi. In reversed time
/// tau = T - t this is Psi^_tau = A Lap Psi^ + G Psi^ with A = a^T, G = g^T,
/// stepped by implicit Euler with coefficients frozen at the new slice. The
/// result is returned in the original orientation, so back() == psi.
inline Trajectory solve_dual(const DualProblem& prob)
{
    prob.validate();
    const AveragedCoefficients& c = prob.coeffs;
    const Domain& d = c.domain;
    const int m = c.m;
    const int K = c.steps();
    const double dt = c.dt;
    const InteriorIndex idx(d);

    std::vector<Field> rev;
    rev.reserve(static_cast<std::size_t>(K + 1));
    rev.push_back(prob.psi);
    rev.back().zero_boundary();
    for (int j = 1; j <= K; ++j) {
        const int slice = K - j; // original time index of the new reversed slice
        std::vector<Eigen::Triplet<double>> trip;
        for (int r = 0; r < idx.count(); ++r) {
            const int n = idx.node(r);
            const Matrix A = c.A(slice, n).transpose();
            Matrix diag = Matrix::Identity(m, m) - dt * c.G(slice, n).transpose();
            for_each_stencil_term(d, n, [&](int nb, double w) {
                if (nb == n) {
                    diag -= dt * w * A;
                    return;
                }
                const int col = idx.of(nb);
                if (col < 0) return;
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b)
                        if (A(a, b) != 0.0) trip.emplace_back(r * m + a, col * m + b, -dt * w * A(a, b));
            });
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    if (diag(a, b) != 0.0 || a == b) trip.emplace_back(r * m + a, r * m + b, diag(a, b));
        }
        Eigen::SparseMatrix<double> M(idx.count() * m, idx.count() * m);
        M.setFromTriplets(trip.begin(), trip.end());
        const auto x = detail::sparse_solve(M, detail::pack(rev.back(), idx));
        if (!x) throw LinearSolveFailed("dual linear solve failed", j);
        Field next(d, m);
        detail::unpack_add(next, *x, 1.0, idx);
        rev.push_back(std::move(next));
    }
    Trajectory out = make_trajectory(d, m, c.t0, dt);
    out.slices.assign(rev.rbegin(), rev.rend());
    return out;
}

// ---------------------------------------------------------------------------
// Estimates

/// The quantities measured on one dual solution.
struct DualEstimates
{
    int level = 0;
    double sup_grad_sq = 0.0;    // sup_t |D Psi|^2_{L2}
    double lap_sq = 0.0;         // int int |Lap Psi|^2
    double psi_LsigmaN = 0.0;    // |Psi|_{L^sigmaN(Q)}
    double sup_gstar_Lq0 = 0.0;  // sup_t |g_*|_{L^q0}
    bool finite() const
    {
        return std::isfinite(sup_grad_sq) && std::isfinite(lap_sq) && std::isfinite(psi_LsigmaN) &&
               std::isfinite(sup_gstar_Lq0);
    }
};

/// g_* = |G|_F^2 / lambda_* per node of slice k.
inline Field gstar_field(const AveragedCoefficients& c, int k)
{
    Field out(c.domain, 1);
    for (int n = 0; n < c.domain.size(); ++n) out(n, 0) = c.G(k, n).squaredNorm() / c.lam(k, n);
    return out;
}

inline DualEstimates dual_estimates(const AveragedCoefficients& c, const Trajectory& psi, double sigmaN,
                                    int level = 0)
{
    DualEstimates e;
    e.level = level;
    e.sup_grad_sq = sup_norm_in_time(psi, [](const Field& f) { return dirichlet_energy(f); });
    e.lap_sq = time_integral(psi, [](const Field& f) {
        const double l2 = norm_Lp(laplacian(f), 2.0);
        return l2 * l2;
    });
    e.psi_LsigmaN = norm_Lp_spacetime(psi, sigmaN);
    double g = 0.0;
    for (int k = 0; k < c.slices; ++k) g = std::max(g, norm_Lp(gstar_field(c, k), c.q0));
    e.sup_gstar_Lq0 = g;
    return e;
}

namespace detail {

// max/min over the levels; all-zero counts as perfectly uniform.
inline double spread_ratio(const std::vector<double>& v)
{
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi == 0.0) return 1.0;
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace detail

/// Uniformity in n: for each estimate quantity, the max/min ratio across the
/// supplied levels must stay below `ceiling`. The sup_t |D Psi| entry uses the
/// norm, not its square.
inline VerificationReport dual_estimate_report(const std::vector<DualEstimates>& levels, double ceiling = 2.0)
{
    VerificationReport rep;
    std::vector<double> grad, lap, lsig, gst;
    bool finite = true;
    for (const auto& e : levels) {
        grad.push_back(std::sqrt(e.sup_grad_sq));
        lap.push_back(e.lap_sq);
        lsig.push_back(e.psi_LsigmaN);
        gst.push_back(e.sup_gstar_Lq0);
        finite = finite && e.finite();
    }
    const std::vector<std::pair<std::string, double>> cst{{"levels", static_cast<double>(levels.size())}};
    rep.add(ReportEntry::make("dual_uniform_sup_grad", detail::spread_ratio(grad), ceiling, 0.0, cst));
    rep.add(ReportEntry::make("dual_uniform_lap_sq", detail::spread_ratio(lap), ceiling, 0.0, cst));
    rep.add(ReportEntry::make("dual_uniform_psi_LsigmaN", detail::spread_ratio(lsig), ceiling, 0.0, cst));
    rep.add(ReportEntry::make("dual_uniform_gstar_Lq0", detail::spread_ratio(gst), ceiling, 0.0, cst));
    rep.add(ReportEntry::flag("dual_estimates_finite", finite));
    return rep;
}

/// sup_t |D Psi| against |D psi|.
inline ReportEntry dual_gradient_bound(const Trajectory& psi, double tol = 1e-10)
{
    const double sup = std::sqrt(sup_norm_in_time(psi, [](const Field& f) { return dirichlet_energy(f); }));
    const double term = std::sqrt(dirichlet_energy(psi.back()));
    return ReportEntry::make("dual_sup_grad_vs_terminal", sup, term, tol);
}

/// min over reversed steps 1..K of |D Psi^| against (1 + tol_lim) |D psi|.
inline ReportEntry liminf_terminal_gradient_check(const Trajectory& psi, int K = 10, double tol_lim = 0.05)
{
    const int steps = psi.steps();
    if (K < 1) throw std::invalid_argument("liminf check: K must be >= 1");
    const double term = std::sqrt(dirichlet_energy(psi.back()));
    double mn = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= std::min(K, steps); ++j)
        mn = std::min(mn, std::sqrt(dirichlet_energy(psi.slices[static_cast<std::size_t>(steps - j)])));
    if (steps == 0) mn = term;
    return ReportEntry::make("liminf_terminal_gradient", mn, term, tol_lim,
                             {{"K", static_cast<double>(K)}, {"tol_lim", tol_lim}});
}

/// Pointwise convex functional applied to a field.
using ScalarFunctional = std::function<double(const Vector&)>;

/// For each level n: the worst slice of |F(u_n(t))|_{L^q0} / |F(u(t))|_{L^q0}
/// with F applied node-wise. A second entry per level measures the same lhs
/// against the eta_n-weighted time average of the unmollified norms.
inline VerificationReport jensen_mollification_check(const Trajectory& tr, const std::vector<int>& levels,
                                                     double q0, const ScalarFunctional& F,
                                                     double tol_jensen = 1e-6, const std::string& tag = "")
{
    VerificationReport rep;
    const int K = tr.steps();
    std::vector<double> rhs_slice(static_cast<std::size_t>(K + 1));
    for (int k = 0; k <= K; ++k)
        rhs_slice[static_cast<std::size_t>(k)] = norm_Lp(map_scalar(tr.slices[static_cast<std::size_t>(k)], F), q0);
    for (int n : levels) {
        const Mollifier mol(n);
        const Trajectory un = mol.apply(tr);
        const Matrix kt = mol.time_kernel(K, tr.dt);
        double worst = -std::numeric_limits<double>::infinity(), wl = 0.0, wr = 0.0;
        double worst_w = -std::numeric_limits<double>::infinity(), wlw = 0.0, wrw = 0.0;
        for (int k = 0; k <= K; ++k) {
            const double lhs = norm_Lp(map_scalar(un.slices[static_cast<std::size_t>(k)], F), q0);
            const double rhs = rhs_slice[static_cast<std::size_t>(k)];
            const double excess = lhs - rhs * (1.0 + tol_jensen);
            if (excess > worst) { worst = excess; wl = lhs; wr = rhs; }
            double avg = 0.0;
            for (int b = 0; b <= K; ++b) avg += kt(k, b) * rhs_slice[static_cast<std::size_t>(b)];
            const double ex_w = lhs - avg * (1.0 + tol_jensen);
            if (ex_w > worst_w) { worst_w = ex_w; wlw = lhs; wrw = avg; }
        }
        const std::vector<std::pair<std::string, double>> cst{{"n", static_cast<double>(n)}, {"q0", q0}};
        const std::string suffix = (tag.empty() ? "" : "_" + tag) + "_n" + std::to_string(n);
        rep.add(ReportEntry::make("jensen_slice" + suffix, wl, wr, tol_jensen, cst));
        rep.add(ReportEntry::make("jensen_time_window" + suffix, wlw, wrw, tol_jensen, cst));
    }
    return rep;
}

inline VerificationReport jensen_mollification_check(const CrossDiffusionModel& model, const Trajectory& tr,
                                                     const std::vector<int>& levels, double q0,
                                                     double tol_jensen = 1e-6)
{
    return jensen_mollification_check(tr, levels, q0, model.hatF, tol_jensen, "hatF");
}

} // namespace skt

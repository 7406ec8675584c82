#pragma once

// Checks run on computed trajectories: very weak residuals, the duality
// pairing, energy and Gronwall fits, a priori bounds across the sigma family,
// functional inequalities and the BMO smallness probe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dual.hpp"
#include "forward.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "report.hpp"

namespace skt {

// ---------------------------------------------------------------------------
// Test functions

/// A smooth space-time test function with its time derivative and Laplacian.
struct TestFunction
{
    std::string name;
    std::function<Vector(const Point&, double)> phi;
    std::function<Vector(const Point&, double)> phi_t;
    std::function<Vector(const Point&, double)> lap_phi;
};

/// e_c * prod sin(k_a pi x_a / L_a) * p(t), p(t) = sum_j coeffs[j] t^j.
inline TestFunction sine_test_function(const Domain& d, int m, int component, int kx, int ky,
                                       std::vector<double> coeffs)
{
    if (component < 0 || component >= m) throw std::invalid_argument("sine_test_function: bad component");
    const double ax = kx * std::numbers::pi / d.length(0);
    const double ay = d.dim() == 2 ? ky * std::numbers::pi / d.length(1) : 0.0;
    const int dim = d.dim();
    auto S = [=](const Point& x) { return std::sin(ax * x[0]) * (dim == 2 ? std::sin(ay * x[1]) : 1.0); };
    auto poly = [coeffs](double t) {
        double v = 0.0;
        for (std::size_t j = coeffs.size(); j-- > 0;) v = v * t + coeffs[j];
        return v;
    };
    auto dpoly = [coeffs](double t) {
        double v = 0.0;
        for (std::size_t j = coeffs.size(); j-- > 1;) v = v * t + static_cast<double>(j) * coeffs[j];
        return v;
    };
    auto unit = [m, component](double s) {
        Vector v = Vector::Zero(m);
        v[component] = s;
        return v;
    };
    const double mu = ax * ax + ay * ay;
    TestFunction tf;
    tf.name = "sin(" + std::to_string(kx) + "," + std::to_string(ky) + ")e" + std::to_string(component);
    tf.phi = [=](const Point& x, double t) { return unit(S(x) * poly(t)); };
    tf.phi_t = [=](const Point& x, double t) { return unit(S(x) * dpoly(t)); };
    tf.lap_phi = [=](const Point& x, double t) { return unit(-mu * S(x) * poly(t)); };
    return tf;
}

/// The standard basis of `count` test functions cycling through modes,
/// components and time envelopes.
inline std::vector<TestFunction> test_function_library(const Domain& d, int m, int count = 5)
{
    static const int modes[][2] = {{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 1}, {1, 3}};
    static const std::vector<std::vector<double>> envelopes = {{1.0}, {1.0, -2.0}, {0.5, 1.0, -1.0}};
    std::vector<TestFunction> out;
    for (int i = 0; i < count; ++i) {
        const auto& md = modes[i % 6];
        out.push_back(sine_test_function(d, m, i % m, md[0], d.dim() == 2 ? md[1] : 1,
                                         envelopes[static_cast<std::size_t>(i) % envelopes.size()]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Very weak residual

/// |<u(T),phi(T)> - <u(0),phi(0)> - int int [<u,phi_t> + <P(u),Lap phi> + <f(u),phi>]|
/// with trapezoid quadrature in space and time.
inline double very_weak_residual(const CrossDiffusionModel& model, const Trajectory& tr, const TestFunction& tf)
{
    const Domain& d = tr.domain;
    auto pair_at = [&](const Field& u, double t, auto&& fn) {
        double s = 0.0;
        for (int n = 0; n < d.size(); ++n) s += d.weight(n) * fn(u.state(n), d.coord(n), t);
        return s;
    };
    const int K = tr.steps();
    double bulk = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double t = tr.time(k);
        const double wt = (K == 0) ? 0.0 : tr.dt * ((k == 0 || k == K) ? 0.5 : 1.0);
        bulk += wt * pair_at(tr.slices[static_cast<std::size_t>(k)], t, [&](const Vector& u, const Point& x, double tt) {
            return u.dot(tf.phi_t(x, tt)) + model.P(u).dot(tf.lap_phi(x, tt)) + model.f(u).dot(tf.phi(x, tt));
        });
    }
    auto ends = [&](const Field& u, double t) {
        return pair_at(u, t, [&](const Vector& v, const Point& x, double tt) { return v.dot(tf.phi(x, tt)); });
    };
    return std::abs(ends(tr.back(), tr.horizon()) - ends(tr.front(), tr.t0) - bulk);
}

// ---------------------------------------------------------------------------
// Uniqueness pairing

struct PairingResult
{
    double pairing = 0.0; // int <w(T), psi>
    double rhs_a = 0.0;   // -int int <[a_n - a] w, Lap Psi_n>
    double rhs_g = 0.0;   // -int int <[g_n - g] w, Psi_n>
    Trajectory psi;       // Psi_n
};

/// Pairs w = u1 - u2 with the dual solution driven by the level-n mollified
/// coefficients. `pairing` does not depend on n.
inline PairingResult uniqueness_pairing(const CrossDiffusionModel& model, const Trajectory& u1,
                                        const Trajectory& u2, const Field& psi, int n, int quad_points = 2)
{
    if (!(u1.domain == u2.domain) || u1.slices.size() != u2.slices.size())
        throw std::invalid_argument("uniqueness_pairing: trajectories do not share grid and horizon");
    const Trajectory w = difference(u1, u2);
    const Trajectory u1n = mollify(u1, n);
    const Trajectory u2n = mollify(u2, n);
    const AveragedCoefficients cn = averaged_coefficients(model, u1n, u2n, quad_points);
    const AveragedCoefficients c = averaged_coefficients(model, u1, u2, quad_points);
    PairingResult r;
    r.psi = solve_dual(DualProblem{cn, psi});
    r.pairing = inner(w.back(), psi);
    const Domain& d = w.domain;
    const int K = w.steps();
    for (int k = 0; k <= K; ++k) {
        const double wt = w.dt * ((k == 0 || k == K) ? 0.5 : 1.0);
        const Field& wk = w.slices[static_cast<std::size_t>(k)];
        const Field& Pk = r.psi.slices[static_cast<std::size_t>(k)];
        const Field LPk = laplacian(Pk);
        double sa = 0.0, sg = 0.0;
        for (int node = 0; node < d.size(); ++node) {
            const Vector wv = wk.state(node);
            sa += d.weight(node) * ((cn.A(k, node) - c.A(k, node)) * wv).dot(LPk.state(node));
            sg += d.weight(node) * ((cn.G(k, node) - c.G(k, node)) * wv).dot(Pk.state(node));
        }
        r.rhs_a -= wt * sa;
        r.rhs_g -= wt * sg;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Minimal linear-bound fits

/// Smallest (a, b) >= 0 with y_i <= a x_i + b for all i, "smallest" meaning
/// a * max(x) + b is minimal. That objective is convex in a, so a golden
/// section search followed by the exact b(a) suffices.
struct LinearBoundFit
{
    double a = 0.0;
    double b = 0.0;
    bool finite() const { return std::isfinite(a) && std::isfinite(b); }
};

inline LinearBoundFit fit_linear_bound(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw std::invalid_argument("fit_linear_bound: size mismatch");
    LinearBoundFit fit;
    if (x.empty()) return fit;
    double xmax = 0.0, a_hi = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) throw std::invalid_argument("fit_linear_bound: x must be nonnegative");
        xmax = std::max(xmax, x[i]);
        if (x[i] > 0.0) a_hi = std::max(a_hi, y[i] / x[i]);
    }
    auto b_of = [&](double a) {
        double b = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) b = std::max(b, y[i] - a * x[i]);
        return b;
    };
    auto obj = [&](double a) { return a * xmax + b_of(a); };
    double lo = 0.0, hi = a_hi;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
    double f1 = obj(c1), f2 = obj(c2);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, a_hi); ++it) {
        if (f1 <= f2) {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - gr * (hi - lo);
            f1 = obj(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = obj(c2);
        }
    }
    // Compare with the end points, where the objective may be flat.
    double best = 0.5 * (lo + hi);
    for (double cand : {0.0, a_hi})
        if (obj(cand) <= obj(best)) best = cand;
    fit.a = best;
    fit.b = b_of(best);
    return fit;
}

/// Relative change between two fitted values; values below `floor` in
/// magnitude count as zero.
inline double relative_variation(double coarse, double fine, double floor = 0.0)
{
    const double s = std::max(std::abs(coarse), std::abs(fine));
    if (s <= floor) return 0.0;
    return std::abs(fine - coarse) / s;
}

// ---------------------------------------------------------------------------
// Energy / Gronwall

struct EnergyGronwallFit
{
    std::vector<double> E;        // int |A(w) Dw|^2 per slice
    std::vector<double> reaction; // int lambda(w) |f(w)|^2 per slice
    LinearBoundFit gronwall;      // E'_k <= C_a E_k + C_b, forward differences
    LinearBoundFit reaction_fit;  // reaction_k <= c1 E_k + c2
    double max_increase = 0.0;    // max_k (E_{k+1} - E_k)
};

/// The reaction term uses sigma^2 f, matching the sigma-family being solved.
inline EnergyGronwallFit energy_gronwall_fit(const CrossDiffusionModel& model, const Trajectory& tr,
                                             double sigma = 1.0)
{
    EnergyGronwallFit r;
    const double s2 = sigma * sigma;
    for (const auto& w : tr.slices) {
        r.E.push_back(energy_A(model, w));
        double re = 0.0;
        for (int n = 0; n < w.size(); ++n) {
            const Vector v = w.state(n);
            re += w.domain().weight(n) * model.lambda(v) * (s2 * model.f(v)).squaredNorm();
        }
        r.reaction.push_back(re);
    }
    std::vector<double> x, y;
    r.max_increase = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < tr.steps(); ++k) {
        const double dE = r.E[static_cast<std::size_t>(k + 1)] - r.E[static_cast<std::size_t>(k)];
        r.max_increase = std::max(r.max_increase, dE);
        x.push_back(r.E[static_cast<std::size_t>(k)]);
        y.push_back(dE / tr.dt);
    }
    if (tr.steps() == 0) r.max_increase = 0.0;
    r.gronwall = fit_linear_bound(x, y);
    r.reaction_fit = fit_linear_bound(r.E, r.reaction);
    return r;
}

/// Fits on each ladder level (coarse to fine) and checks that the fitted
/// constants are finite and move by at most `stability` between the two
/// finest levels. Constants below `floor` times the energy scale count as zero.
inline VerificationReport energy_gronwall_check(const CrossDiffusionModel& model,
                                                const std::vector<Trajectory>& ladder, double sigma = 1.0,
                                                double stability = 0.2, double floor = 1e-9)
{
    if (ladder.empty()) throw std::invalid_argument("energy_gronwall_check: empty ladder");
    std::vector<EnergyGronwallFit> fits;
    for (const auto& tr : ladder) fits.push_back(energy_gronwall_fit(model, tr, sigma));
    VerificationReport rep;
    const auto& f = fits.back();
    const double escale = *std::max_element(f.E.begin(), f.E.end());
    const std::vector<std::pair<std::string, double>> cst{
        {"C_a", f.gronwall.a}, {"C_b", f.gronwall.b}, {"c1", f.reaction_fit.a}, {"c2", f.reaction_fit.b}};
    rep.add(ReportEntry::flag("gronwall_fit_finite", f.gronwall.finite() && f.reaction_fit.finite(), cst));
    if (fits.size() >= 2) {
        const auto& c = fits[fits.size() - 2];
        const double rscale = *std::max_element(f.reaction.begin(), f.reaction.end());
        rep.add(ReportEntry::make("gronwall_C_a_stability",
                                  relative_variation(c.gronwall.a, f.gronwall.a, floor), stability, 0.0,
                                  {{"coarse", c.gronwall.a}, {"fine", f.gronwall.a}}));
        rep.add(ReportEntry::make("gronwall_C_b_stability",
                                  relative_variation(c.gronwall.b, f.gronwall.b, floor * escale / ladder.back().dt),
                                  stability, 0.0, {{"coarse", c.gronwall.b}, {"fine", f.gronwall.b}}));
        rep.add(ReportEntry::make("reaction_c1_stability",
                                  relative_variation(c.reaction_fit.a, f.reaction_fit.a, floor), stability, 0.0,
                                  {{"coarse", c.reaction_fit.a}, {"fine", f.reaction_fit.a}}));
        rep.add(ReportEntry::make("reaction_c2_stability",
                                  relative_variation(c.reaction_fit.b, f.reaction_fit.b, floor * rscale), stability,
                                  0.0, {{"coarse", c.reaction_fit.b}, {"fine", f.reaction_fit.b}}));
    }
    return rep;
}

/// For f = 0: E(t) nonincreasing, max_k (E_{k+1} - E_k) <= slack * max(E_0, 1).
inline ReportEntry energy_monotonicity_check(const CrossDiffusionModel& model, const Trajectory& tr,
                                             double slack = 1e-12)
{
    const auto f = energy_gronwall_fit(model, tr);
    const double scale = std::max(1.0, f.E.empty() ? 0.0 : f.E.front());
    return ReportEntry::make("energy_nonincreasing", f.max_increase, slack * scale, 0.0,
                             {{"E0", f.E.empty() ? 0.0 : f.E.front()}});
}

// ---------------------------------------------------------------------------
// A priori bounds across the sigma family

struct SigmaRun
{
    double sigma = 0.0;
    Trajectory w; // solution of the sigma-family, w(0) = sigma u0
};

/// (i) sup_t int lambda^2(w)|Dw|^2 <= sigma^2 C with C the sigma = 1 value;
/// (ii) sup_t int |Du|^2, u = w / sigma, within `factor` of its sigma = 1 value;
/// (iii) sup_t |lambda(w)|_{L^q0} and |w|_{L^q0} within `factor` of theirs;
/// plus the exact zero trajectory at sigma = 0.
inline VerificationReport apriori_bounds_check(const CrossDiffusionModel& model, const std::vector<SigmaRun>& runs,
                                               double q0, double tol = 0.05, double factor = 2.0)
{
    const SigmaRun* one = nullptr;
    for (const auto& r : runs)
        if (r.sigma == 1.0) one = &r;
    if (!one) throw std::invalid_argument("apriori_bounds_check: the sigma grid must contain 1");
    auto lam_energy = [&](const Trajectory& w) {
        return sup_norm_in_time(w, [&](const Field& f) { return energy_lambda(model, f); });
    };
    auto grad_u = [&](const SigmaRun& r) {
        return sup_norm_in_time(r.w, [](const Field& f) { return dirichlet_energy(f); }) / (r.sigma * r.sigma);
    };
    auto lam_q0 = [&](const Trajectory& w) {
        return sup_norm_in_time(w, [&](const Field& f) { return norm_Lp(map_scalar(f, model.lambda), q0); });
    };
    auto w_q0 = [&](const Trajectory& w) {
        return sup_norm_in_time(w, [&](const Field& f) { return norm_Lp(f, q0); });
    };
    const double C = lam_energy(one->w);
    const double G1 = grad_u(*one), L1 = lam_q0(one->w), W1 = w_q0(one->w);
    double viol = 0.0, gmax = 0.0, lmax = 0.0, wmax = 0.0;
    bool zero_ok = true;
    for (const auto& r : runs) {
        lmax = std::max(lmax, lam_q0(r.w));
        wmax = std::max(wmax, w_q0(r.w));
        if (r.sigma == 0.0) {
            for (const auto& s : r.w.slices)
                for (double v : s.data()) zero_ok = zero_ok && v == 0.0;
            continue;
        }
        const double S = lam_energy(r.w);
        viol = std::max(viol, C > 0.0 ? S / (r.sigma * r.sigma * C) - 1.0 : (S > 0.0 ? INFINITY : 0.0));
        gmax = std::max(gmax, grad_u(r));
    }
    VerificationReport rep;
    rep.add(ReportEntry::make("apriori_lambda_energy_sigma2", 1.0 + viol, 1.0, tol, {{"C", C}}));
    rep.add(ReportEntry::make("apriori_grad_u_uniform", gmax, factor * G1, 0.0, {{"sigma1", G1}}));
    rep.add(ReportEntry::make("apriori_lambda_Lq0_uniform", lmax, factor * L1, 0.0, {{"sigma1", L1}, {"q0", q0}}));
    rep.add(ReportEntry::make("apriori_w_Lq0_uniform", wmax, factor * W1, 0.0, {{"sigma1", W1}, {"q0", q0}}));
    rep.add(ReportEntry::flag("apriori_sigma0_zero", zero_ok));
    return rep;
}

// ---------------------------------------------------------------------------
// Functional inequalities

/// Sobolev conjugate N p / (N - p), infinite when p >= N.
inline double sobolev_conjugate(int N, double p)
{
    return p < N ? N * p / (N - p) : INFINITY;
}

/// Ratio (|W|_q - eps |DW|_p) / (int |W|^beta)^(1/beta) for one field; 0 for W = 0.
inline double interpolation_ratio(const Field& W, double eps, double beta, double p, double q)
{
    double wb = 0.0;
    const Domain& d = W.domain();
    for (int n = 0; n < d.size(); ++n) wb += d.weight(n) * std::pow(W.state(n).norm(), beta);
    const double den = std::pow(wb, 1.0 / beta);
    const double num = norm_Lp(W, q) - eps * norm_grad_Lp(W, p);
    if (den == 0.0) return 0.0;
    return num / den;
}

/// Fits the smallest C(eps, beta) over the sample and compares it with the fit
/// on the first half of the sample.
inline VerificationReport interpolation_inequality_check(const std::vector<Field>& fields, double eps, double beta,
                                                         double p, double q, double stability = 0.1)
{
    if (fields.empty()) throw std::invalid_argument("interpolation check: empty sample");
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("interpolation check: beta must lie in (0, 1]");
    const int N = fields.front().domain().dim();
    if (!(q >= 1.0 && q < sobolev_conjugate(N, p)))
        throw std::invalid_argument("interpolation check: q must lie in [1, p_*)");
    double full = 0.0, half = 0.0;
    const std::size_t h = std::max<std::size_t>(1, fields.size() / 2);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const double r = std::max(0.0, interpolation_ratio(fields[i], eps, beta, p, q));
        full = std::max(full, r);
        if (i < h) half = std::max(half, r);
    }
    VerificationReport rep;
    const std::vector<std::pair<std::string, double>> cst{{"C", full}, {"C_half", half}, {"eps", eps}, {"beta", beta}};
    rep.add(ReportEntry::flag("interpolation_C_finite", std::isfinite(full), cst));
    rep.add(ReportEntry::make("interpolation_C_stability", relative_variation(half, full), stability, 0.0, cst));
    return rep;
}

/// One (g, G) pair of nonnegative scalar trajectories.
struct SobolevSample
{
    Trajectory g;
    Trajectory G;
};

struct ParabolicSobolevTerms
{
    double lhs = 0.0;     // int int g^r G^p
    double sup_g_r = 0.0; // sup_t (int g)^r
    double grad = 0.0;    // int int |DG|^p
    double mass = 0.0;    // int int G^p
};

inline ParabolicSobolevTerms parabolic_sobolev_terms(const SobolevSample& s, double p, double r)
{
    ParabolicSobolevTerms t;
    const Trajectory& g = s.g;
    const Trajectory& G = s.G;
    if (!(g.domain == G.domain) || g.slices.size() != G.slices.size())
        throw std::invalid_argument("parabolic Sobolev: g and G do not share grid and horizon");
    const Domain& d = g.domain;
    const int K = g.steps();
    for (int k = 0; k <= K; ++k) {
        const double wt = K == 0 ? 1.0 : g.dt * ((k == 0 || k == K) ? 0.5 : 1.0);
        const Field& gk = g.slices[static_cast<std::size_t>(k)];
        const Field& Gk = G.slices[static_cast<std::size_t>(k)];
        double l = 0.0, m = 0.0, gi = 0.0;
        for (int n = 0; n < d.size(); ++n) {
            const double gv = gk(n, 0), Gv = Gk(n, 0);
            if (gv < 0.0 || Gv < 0.0) throw std::invalid_argument("parabolic Sobolev: g and G must be nonnegative");
            l += d.weight(n) * std::pow(gv, r) * std::pow(Gv, p);
            m += d.weight(n) * std::pow(Gv, p);
            gi += d.weight(n) * gv;
        }
        t.lhs += wt * l;
        t.mass += wt * m;
        t.grad += wt * std::pow(norm_grad_Lp(Gk, p), p);
        t.sup_g_r = std::max(t.sup_g_r, std::pow(gi, r));
    }
    return t;
}

/// Fits C = lhs / [sup (int g)^r int int (|DG|^p + G^p)] over the samples and,
/// for r < r_star, C(eps) in the eps-form with the outer constant set to 1.
inline VerificationReport parabolic_sobolev_check(const std::vector<SobolevSample>& samples, double p, double r,
                                                  double r_star, const std::vector<double>& eps_list = {1.0, 0.1, 0.01},
                                                  double stability = 0.1)
{
    if (samples.empty()) throw std::invalid_argument("parabolic Sobolev: empty sample");
    if (!(r > 0.0 && r <= r_star)) throw std::invalid_argument("parabolic Sobolev: need 0 < r <= r*");
    const std::size_t h = std::max<std::size_t>(1, samples.size() / 2);
    std::vector<ParabolicSobolevTerms> terms;
    for (const auto& s : samples) terms.push_back(parabolic_sobolev_terms(s, p, r));
    auto fitC = [&](std::size_t count) {
        double C = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const auto& t = terms[i];
            const double den = t.sup_g_r * (t.grad + t.mass);
            if (t.lhs == 0.0) continue;
            C = std::max(C, den > 0.0 ? t.lhs / den : INFINITY);
        }
        return C;
    };
    VerificationReport rep;
    const double C = fitC(terms.size()), Ch = fitC(h);
    rep.add(ReportEntry::flag("parabolic_sobolev_C_finite", std::isfinite(C), {{"C", C}, {"C_half", Ch}}));
    rep.add(ReportEntry::make("parabolic_sobolev_C_stability", relative_variation(Ch, C), stability, 0.0,
                              {{"C", C}, {"C_half", Ch}}));
    if (r < r_star) {
        for (double eps : eps_list) {
            auto fitCe = [&](std::size_t count) {
                double Ce = 0.0;
                for (std::size_t i = 0; i < count; ++i) {
                    const auto& t = terms[i];
                    if (t.lhs == 0.0) continue;
                    const double need = t.sup_g_r > 0.0 ? t.lhs / t.sup_g_r - eps * t.grad : INFINITY;
                    if (need <= 0.0) continue;
                    Ce = std::max(Ce, t.mass > 0.0 ? need / t.mass : INFINITY);
                }
                return Ce;
            };
            const double Ce = fitCe(terms.size()), Ceh = fitCe(h);
            const std::vector<std::pair<std::string, double>> cst{{"eps", eps}, {"C_eps", Ce}, {"C_eps_half", Ceh}};
            rep.add(ReportEntry::flag("parabolic_sobolev_eps_" + format_label(eps) + "_finite", std::isfinite(Ce), cst));
            rep.add(ReportEntry::make("parabolic_sobolev_eps_" + format_label(eps) + "_stability",
                                      relative_variation(Ceh, Ce), stability, 0.0, cst));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// L2 Gronwall chain for polynomial lambda growth

struct SKTL2Fit
{
    double poincare_C = 0.0; // max over slices of int|w|^{k+2} / int|w|^k|Dw|^2
    LinearBoundFit gronwall; // sup_{s<=t} int|w(s)|^2 <= c1 int_0^t int|w|^2 + c2
};

inline double poincare_ratio(const Field& w, double k)
{
    const Domain& d = w.domain();
    double num = 0.0;
    for (int n = 0; n < d.size(); ++n) num += d.weight(n) * std::pow(w.state(n).norm(), k + 2.0);
    const double den = weighted_dirichlet_energy(w, [k](const Vector& v) { return std::pow(v.norm(), k); });
    if (num == 0.0) return 0.0;
    return den > 0.0 ? num / den : INFINITY;
}

inline SKTL2Fit skt_l2_fit(const Trajectory& tr, double k)
{
    SKTL2Fit f;
    std::vector<double> x, y;
    double running_sup = 0.0, integral = 0.0;
    for (int s = 0; s <= tr.steps(); ++s) {
        const Field& w = tr.slices[static_cast<std::size_t>(s)];
        f.poincare_C = std::max(f.poincare_C, poincare_ratio(w, k));
        const double l2 = std::pow(norm_Lp(w, 2.0), 2.0);
        if (s > 0) {
            const double prev = std::pow(norm_Lp(tr.slices[static_cast<std::size_t>(s - 1)], 2.0), 2.0);
            integral += 0.5 * tr.dt * (prev + l2);
        }
        running_sup = std::max(running_sup, l2);
        x.push_back(integral);
        y.push_back(running_sup);
    }
    f.gronwall = fit_linear_bound(x, y);
    return f;
}

/// Poincare-type slice inequality and the L2 Gronwall bound, each fitted on
/// every ladder level; passes iff finite and stable between the two finest.
inline VerificationReport skt_l2_gronwall_check(const CrossDiffusionModel& model, const std::vector<Trajectory>& ladder,
                                                double stability = 0.2)
{
    if (ladder.empty()) throw std::invalid_argument("skt_l2_gronwall_check: empty ladder");
    if (ladder.front().domain.dim() != 2) throw std::invalid_argument("skt_l2_gronwall_check: needs N = 2");
    const double k = model.growth_k;
    if (!(k < 2.0)) throw std::invalid_argument("skt_l2_gronwall_check: lambda growth k must be < 2");
    std::vector<SKTL2Fit> fits;
    for (const auto& tr : ladder) fits.push_back(skt_l2_fit(tr, k));
    const auto& f = fits.back();
    VerificationReport rep;
    const std::vector<std::pair<std::string, double>> cst{
        {"poincare_C", f.poincare_C}, {"c1", f.gronwall.a}, {"c2", f.gronwall.b}, {"k", k}};
    rep.add(ReportEntry::flag("skt_l2_fit_finite", std::isfinite(f.poincare_C) && f.gronwall.finite(), cst));
    if (fits.size() >= 2) {
        const auto& c = fits[fits.size() - 2];
        rep.add(ReportEntry::make("skt_poincare_stability", relative_variation(c.poincare_C, f.poincare_C), stability,
                                  0.0, {{"coarse", c.poincare_C}, {"fine", f.poincare_C}}));
        rep.add(ReportEntry::make("skt_l2_gronwall_stability",
                                  relative_variation(c.gronwall.a + c.gronwall.b, f.gronwall.a + f.gronwall.b),
                                  stability, 0.0, {{"coarse_c1", c.gronwall.a}, {"fine_c1", f.gronwall.a},
                                                   {"coarse_c2", c.gronwall.b}, {"fine_c2", f.gronwall.b}}));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// BMO smallness

struct BMOProbe
{
    std::vector<double> radii;       // increasing
    std::vector<double> oscillation; // sup_t of the oscillation term at each radius
};

inline BMOProbe bmo_probe(const Trajectory& tr, std::vector<double> radii)
{
    std::sort(radii.begin(), radii.end());
    BMOProbe p;
    p.radii = radii;
    for (double R : radii)
        p.oscillation.push_back(sup_norm_in_time(tr, [R](const Field& f) { return bmo_oscillation_term(f, R); }));
    return p;
}

/// Passes iff the oscillation term is nonincreasing as R decreases and is at
/// most mu at the smallest radius.
inline VerificationReport bmo_smallness_probe(const Trajectory& tr, const std::vector<double>& radii, double mu)
{
    if (tr.domain.dim() != 2) throw std::invalid_argument("bmo_smallness_probe: needs N = 2");
    if (radii.empty()) throw std::invalid_argument("bmo_smallness_probe: no radii");
    const BMOProbe p = bmo_probe(tr, radii);
    double worst_increase = 0.0;
    for (std::size_t i = 1; i < p.radii.size(); ++i)
        worst_increase = std::max(worst_increase, p.oscillation[i - 1] - p.oscillation[i]);
    std::vector<std::pair<std::string, double>> cst;
    for (std::size_t i = 0; i < p.radii.size(); ++i)
        cst.emplace_back("osc_R" + format_label(p.radii[i]), p.oscillation[i]);
    VerificationReport rep;
    rep.add(ReportEntry::make("bmo_monotone_in_R", worst_increase, 0.0, 0.0, cst));
    rep.add(ReportEntry::make("bmo_small_at_min_radius", p.oscillation.front(), mu, 0.0, {{"R", p.radii.front()}}));
    return rep;
}

// ---------------------------------------------------------------------------
// Seeded sample generators for the functional inequalities

/// Random smooth fields: sums of sine modes up to `max_mode` per axis with
/// amplitudes uniform in [-1, 1] damped by (kx^2 + ky^2)^-decay. Zero on the boundary.
inline std::vector<Field> random_smooth_fields(const Domain& d, int m, int count, std::uint64_t seed,
                                               int max_mode = 4, double decay = 1.0)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int my = d.dim() == 2 ? max_mode : 1;
    std::vector<Field> out;
    for (int s = 0; s < count; ++s) {
        std::vector<double> amp(static_cast<std::size_t>(m * max_mode * my));
        for (auto& a : amp) a = unit(gen);
        Field f = Field::sample(d, m, [&](const Point& x) {
            Vector v = Vector::Zero(m);
            std::size_t i = 0;
            for (int c = 0; c < m; ++c)
                for (int ky = 1; ky <= my; ++ky)
                    for (int kx = 1; kx <= max_mode; ++kx, ++i) {
                        double b = std::sin(kx * std::numbers::pi * x[0] / d.length(0));
                        if (d.dim() == 2) b *= std::sin(ky * std::numbers::pi * x[1] / d.length(1));
                        v[c] += amp[i] * b * std::pow(kx * kx + ky * ky, -decay);
                    }
            return v;
        });
        out.push_back(f.zero_boundary());
    }
    return out;
}

/// Pairs (g, G) = (|W|^q1, |W|) with W(t) = (1 - t/T) W0 + (t/T) W1 for two
/// random smooth scalar fields.
inline std::vector<SobolevSample> random_sobolev_samples(const Domain& d, int count, std::uint64_t seed, int steps,
                                                         double dt, double q1, int max_mode = 4, double decay = 1.0)
{
    const auto fields = random_smooth_fields(d, 1, 2 * count, seed, max_mode, decay);
    std::vector<SobolevSample> out;
    const double T = steps * dt;
    for (int s = 0; s < count; ++s) {
        const Field& a = fields[static_cast<std::size_t>(2 * s)];
        const Field& b = fields[static_cast<std::size_t>(2 * s + 1)];
        SobolevSample smp{make_trajectory(d, 1, 0.0, dt), make_trajectory(d, 1, 0.0, dt)};
        for (int k = 0; k <= steps; ++k) {
            const double th = k * dt / T;
            const Field W = (1.0 - th) * a + th * b;
            smp.G.slices.push_back(map_scalar(W, [](const Vector& v) { return v.norm(); }));
            smp.g.slices.push_back(map_scalar(W, [q1](const Vector& v) { return std::pow(v.norm(), q1); }));
        }
        out.push_back(std::move(smp));
    }
    return out;
}

} // namespace skt

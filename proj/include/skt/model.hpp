#pragma once

// Cross-diffusion models u_t = Lap(P(u)) + f(u): the maps P and f, their
// Jacobians, the ellipticity function lambda and the convex majorant hatF,
// plus the sampled structural-condition checks that operate on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "report.hpp"

namespace skt {

struct SKTParams
{
    int m = 2;
    Vector d;     // diffusion constants, all > 0
    Matrix alpha; // alpha(i, j): row i is the self/cross-diffusion vector alpha_i
    Matrix beta;  // beta(i, j): row i is the reaction vector beta_i
    Vector k;     // linear reaction rates
    double lambda0 = 1.0;

    /// Zero-coupling parameters with the given diffusion constants.
    static SKTParams diagonal(const Vector& d, double lambda0)
    {
        SKTParams p;
        p.m = static_cast<int>(d.size());
        p.d = d;
        p.alpha = Matrix::Zero(p.m, p.m);
        p.beta = Matrix::Zero(p.m, p.m);
        p.k = Vector::Zero(p.m);
        p.lambda0 = lambda0;
        return p;
    }

    void validate() const
    {
        if (m < 2) throw std::invalid_argument("SKTParams: species count m must be >= 2");
        if (d.size() != m || k.size() != m || alpha.rows() != m || alpha.cols() != m ||
            beta.rows() != m || beta.cols() != m)
            throw std::invalid_argument("SKTParams: coefficient shapes do not match m");
        for (int i = 0; i < m; ++i)
            if (!(d[i] > 0.0))
                throw std::invalid_argument("SKTParams: diffusion constant d_" +
                                            std::to_string(i) + " must be > 0");
        if (!(lambda0 > 0.0)) throw std::invalid_argument("SKTParams: lambda0 must be > 0");
    }
};

/// A model of the form u_t = Lap(P(u)) + f(u). All members are plain values or
/// pure callables, so copies are independent and safe to share across threads.
struct CrossDiffusionModel
{
    int m = 1;
    std::function<Vector(const Vector&)> P;
    std::function<Vector(const Vector&)> f;
    std::function<Matrix(const Vector&)> jacP;
    std::function<Matrix(const Vector&)> jacf;
    std::function<double(const Vector&)> lambda;
    std::function<double(const Vector&)> hatF;
    double lambda0 = 1.0;
    double growth_k = 0.0;
    double growth_l = 0.0;
    /// Exponent e of the majorant family hatF(u) = C (1 + |u|)^e.
    double hatF_exponent = 0.0;
    double hatF_constant = 0.0;
    /// Canonical text description; the model hash is derived from it.
    std::string descriptor;

    std::string hash() const { return hex64(fnv1a(descriptor)); }
};

namespace detail {

inline std::string describe(const std::string& kind, const SKTParams& p, double kappa)
{
    std::ostringstream os;
    os.precision(17);
    os << kind << " m=" << p.m << " lambda0=" << p.lambda0 << " kappa=" << kappa << " d=";
    for (int i = 0; i < p.m; ++i) os << p.d[i] << ',';
    os << " k=";
    for (int i = 0; i < p.m; ++i) os << p.k[i] << ',';
    os << " alpha=";
    for (int i = 0; i < p.m; ++i)
        for (int j = 0; j < p.m; ++j) os << p.alpha(i, j) << ',';
    os << " beta=";
    for (int i = 0; i < p.m; ++i)
        for (int j = 0; j < p.m; ++j) os << p.beta(i, j) << ',';
    return os.str();
}

// C such that |jacf(u)|_F^2 / lambda(u) <= C (1 + |u|)^(kappa+1) for the
// (generalized) SKT reaction, from |jacf| <= |k| + (2 + kappa) |beta|_F s(u) |u|.
inline double skt_hatF_constant(const SKTParams& p, double kappa)
{
    const double a = p.k.norm();
    const double b = (2.0 + kappa) * p.beta.norm();
    return 2.0 * a * a / p.lambda0 +
           std::pow(2.0, kappa + 1.0) * b * b / std::min(p.lambda0, 1.0);
}

} // namespace detail

/// Multiplier s(u) = (1 + |u|^2)^(kappa/2) of the generalized SKT coefficient
/// maps alpha_i(u) = alpha_i s(u), beta_i(u) = beta_i s(u).
inline double generalized_coefficient_scale(double kappa, const Vector& u)
{
    return std::pow(1.0 + u.squaredNorm(), 0.5 * kappa);
}

/// P_i(u) = d_i u_i + u_i <alpha_i, u>,  f_i(u) = k_i u_i + u_i <beta_i, u>,
/// lambda(u) = lambda0 + |u|.
inline CrossDiffusionModel make_skt(const SKTParams& params)
{
    params.validate();
    const SKTParams p = params;
    CrossDiffusionModel model;
    model.m = p.m;
    model.lambda0 = p.lambda0;
    model.growth_k = 1.0;
    model.growth_l = 1.0;
    model.hatF_exponent = 1.0;
    model.hatF_constant = detail::skt_hatF_constant(p, 0.0);
    model.descriptor = detail::describe("skt", p, 0.0);

    model.P = [p](const Vector& u) -> Vector {
        Vector out(p.m);
        for (int i = 0; i < p.m; ++i) out[i] = p.d[i] * u[i] + u[i] * p.alpha.row(i).dot(u);
        return out;
    };
    model.f = [p](const Vector& u) -> Vector {
        Vector out(p.m);
        for (int i = 0; i < p.m; ++i) out[i] = p.k[i] * u[i] + u[i] * p.beta.row(i).dot(u);
        return out;
    };
    model.jacP = [p](const Vector& u) -> Matrix {
        Matrix J(p.m, p.m);
        for (int i = 0; i < p.m; ++i) {
            const double au = p.alpha.row(i).dot(u);
            for (int j = 0; j < p.m; ++j)
                J(i, j) = (i == j ? p.d[i] + au : 0.0) + u[i] * p.alpha(i, j);
        }
        return J;
    };
    model.jacf = [p](const Vector& u) -> Matrix {
        Matrix J(p.m, p.m);
        for (int i = 0; i < p.m; ++i) {
            const double bu = p.beta.row(i).dot(u);
            for (int j = 0; j < p.m; ++j)
                J(i, j) = (i == j ? p.k[i] + bu : 0.0) + u[i] * p.beta(i, j);
        }
        return J;
    };
    const double l0 = p.lambda0;
    model.lambda = [l0](const Vector& u) { return l0 + u.norm(); };
    const double C = model.hatF_constant;
    model.hatF = [C](const Vector& u) { return C * (1.0 + u.norm()); };
    return model;
}

/// Generalized SKT: alpha_i, beta_i replaced by alpha_i s(u), beta_i s(u) with
/// s(u) = (1 + |u|^2)^(kappa/2). Growth exponents become kappa + 1 and
/// lambda(u) = lambda0 + |u|^(kappa+1).
inline CrossDiffusionModel make_generalized_skt(const SKTParams& params, double kappa)
{
    params.validate();
    if (!(kappa >= 0.0)) throw std::invalid_argument("generalized SKT: kappa must be >= 0");
    const SKTParams p = params;
    CrossDiffusionModel model;
    model.m = p.m;
    model.lambda0 = p.lambda0;
    model.growth_k = kappa + 1.0;
    model.growth_l = kappa + 1.0;
    model.hatF_exponent = kappa + 1.0;
    model.hatF_constant = detail::skt_hatF_constant(p, kappa);
    model.descriptor = detail::describe("generalized_skt", p, kappa);

    // Shared shape: F_i(u) = c_i u_i + u_i s(u) <coef_i, u>.
    auto value = [kappa](const Vector& c, const Matrix& coef, const Vector& u) -> Vector {
        const double s = generalized_coefficient_scale(kappa, u);
        Vector out(u.size());
        for (int i = 0; i < u.size(); ++i) out[i] = c[i] * u[i] + u[i] * (s * coef.row(i).dot(u));
        return out;
    };
    auto jacobian = [kappa](const Vector& c, const Matrix& coef, const Vector& u) -> Matrix {
        const int m = static_cast<int>(u.size());
        const double r2 = u.squaredNorm();
        const double s = generalized_coefficient_scale(kappa, u);
        // ds/du_j = kappa (1 + |u|^2)^(kappa/2 - 1) u_j
        const double ds_scale = kappa == 0.0 ? 0.0 : kappa * std::pow(1.0 + r2, 0.5 * kappa - 1.0);
        Matrix J(m, m);
        for (int i = 0; i < m; ++i) {
            const double cu = coef.row(i).dot(u);
            for (int j = 0; j < m; ++j)
                J(i, j) = (i == j ? c[i] + s * cu : 0.0) + u[i] * s * coef(i, j) +
                          u[i] * cu * (ds_scale * u[j]);
        }
        return J;
    };

    model.P = [p, value](const Vector& u) { return value(p.d, p.alpha, u); };
    model.f = [p, value](const Vector& u) { return value(p.k, p.beta, u); };
    model.jacP = [p, jacobian](const Vector& u) { return jacobian(p.d, p.alpha, u); };
    model.jacf = [p, jacobian](const Vector& u) { return jacobian(p.k, p.beta, u); };
    const double l0 = p.lambda0;
    model.lambda = [l0, kappa](const Vector& u) { return l0 + std::pow(u.norm(), kappa + 1.0); };
    const double C = model.hatF_constant;
    model.hatF = [C, kappa](const Vector& u) { return C * std::pow(1.0 + u.norm(), kappa + 1.0); };
    return model;
}

/// P(u) = D u with a constant matrix D, f = 0. lambda is the constant lambda0;
/// with D = [1] this is the heat equation.
inline CrossDiffusionModel make_linear(const Matrix& D, double lambda0)
{
    if (D.rows() != D.cols() || D.rows() < 1)
        throw std::invalid_argument("linear model: D must be a nonempty square matrix");
    if (!(lambda0 > 0.0)) throw std::invalid_argument("linear model: lambda0 must be > 0");
    CrossDiffusionModel model;
    model.m = static_cast<int>(D.rows());
    model.lambda0 = lambda0;
    std::ostringstream os;
    os.precision(17);
    os << "linear m=" << model.m << " lambda0=" << lambda0 << " D=";
    for (int i = 0; i < D.rows(); ++i)
        for (int j = 0; j < D.cols(); ++j) os << D(i, j) << ',';
    model.descriptor = os.str();
    const int m = model.m;
    model.P = [D](const Vector& u) -> Vector { return D * u; };
    model.f = [m](const Vector&) -> Vector { return Vector::Zero(m); };
    model.jacP = [D](const Vector&) -> Matrix { return D; };
    model.jacf = [m](const Vector&) -> Matrix { return Matrix::Zero(m, m); };
    model.lambda = [lambda0](const Vector&) { return lambda0; };
    model.hatF = [](const Vector&) { return 0.0; };
    return model;
}

/// Copy of `model` whose ellipticity function is the constant `value`.
inline CrossDiffusionModel with_constant_lambda(CrossDiffusionModel model, double value)
{
    model.lambda = [value](const Vector&) { return value; };
    model.lambda0 = value;
    model.descriptor += " lambda=const:" + format_double(value);
    return model;
}

// ---------------------------------------------------------------------------
// Structural checks

struct EllipticityCertificate
{
    double min_quadratic_form = 0.0;
    double lambda = 0.0;
    bool passes = false;
};

/// Smallest eigenvalue of the symmetric part of jacP(u) against lambda(u).
inline EllipticityCertificate ellipticity_certificate(const CrossDiffusionModel& model,
                                                      const Vector& u, double tol_ell = 1e-10)
{
    const Matrix A = model.jacP(u);
    const Matrix S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
    EllipticityCertificate cert;
    cert.min_quadratic_form = eig.eigenvalues().minCoeff();
    cert.lambda = model.lambda(u);
    cert.passes = cert.min_quadratic_form >= cert.lambda - tol_ell;
    return cert;
}

inline Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& F,
                                         const Vector& u, double rel_step = 1e-5)
{
    const int m = static_cast<int>(u.size());
    const double h = rel_step * std::max(1.0, u.norm());
    Matrix J(m, m);
    for (int j = 0; j < m; ++j) {
        Vector up = u, um = u;
        up[j] += h;
        um[j] -= h;
        J.col(j) = (F(up) - F(um)) / (2.0 * h);
    }
    return J;
}

/// Max over samples of |J_analytic - J_fd|_F / max(|J_analytic|_F, 1) for both
/// jacP and jacf.
inline ReportEntry jacobian_consistency(const CrossDiffusionModel& model,
                                        const std::vector<Vector>& samples,
                                        double rel_tol = 1e-6)
{
    double worst_P = 0.0, worst_f = 0.0;
    for (const auto& u : samples) {
        const Matrix JP = model.jacP(u);
        const Matrix Jf = model.jacf(u);
        worst_P = std::max(worst_P, (JP - finite_difference_jacobian(model.P, u)).norm() /
                                        std::max(JP.norm(), 1.0));
        worst_f = std::max(worst_f, (Jf - finite_difference_jacobian(model.f, u)).norm() /
                                        std::max(Jf.norm(), 1.0));
    }
    const double worst = std::max(worst_P, worst_f);
    return ReportEntry::make("jacobian_consistency", worst, rel_tol, 0.0,
                             {{"max_rel_err_jacP", worst_P}, {"max_rel_err_jacf", worst_f}});
}

struct ConditionFReport
{
    double max_excess = 0.0;          // max of |jacf|^2/lambda - hatF
    double max_convexity_violation = 0.0;
    bool majorant_ok = false;
    bool convex_ok = false;
    bool passes = false;
    double tol = 0.0;

    std::vector<ReportEntry> entries() const
    {
        return {ReportEntry::make("condition_F_majorant", max_excess, tol),
                ReportEntry::make("condition_F_convexity", max_convexity_violation, tol)};
    }
};

/// |jacf(u)|_F^2 / lambda(u) <= hatF(u) on the samples, plus midpoint convexity
/// of hatF on `pairs` random sample pairs. Excesses are measured relative to
/// max(1, |rhs|) so the tolerances act at double-precision scale.
inline ConditionFReport check_condition_F(const CrossDiffusionModel& model,
                                          const std::vector<Vector>& samples,
                                          std::uint64_t seed = 1, int pairs = 1000,
                                          double tol = 1e-12)
{
    if (samples.empty()) throw std::invalid_argument("check_condition_F: empty sample set");
    ConditionFReport r;
    r.max_excess = -std::numeric_limits<double>::infinity();
    for (const auto& u : samples) {
        const double jf = model.jacf(u).squaredNorm();
        const double bound = model.hatF(u);
        r.max_excess = std::max(r.max_excess, (jf / model.lambda(u) - bound) / std::max(1.0, std::abs(bound)));
    }
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    r.max_convexity_violation = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < pairs; ++i) {
        const Vector& a = samples[pick(gen)];
        const Vector& b = samples[pick(gen)];
        const double avg = 0.5 * (model.hatF(a) + model.hatF(b));
        const double mid = model.hatF(0.5 * (a + b));
        r.max_convexity_violation =
            std::max(r.max_convexity_violation, (mid - avg) / std::max(1.0, std::abs(avg)));
    }
    r.tol = tol;
    r.majorant_ok = r.max_excess <= tol;
    r.convex_ok = r.max_convexity_violation <= tol;
    r.passes = r.majorant_ok && r.convex_ok;
    return r;
}

struct HatFFit
{
    double constant = 0.0;
    double exponent = 0.0;
    CrossDiffusionModel model; // copy of the input model carrying the fitted hatF
};

/// Fits hatF(u) = C (1 + |u|)^exponent as `safety` times the largest sampled
/// ratio |jacf|_F^2 / (lambda (1 + |u|)^exponent). The fit must be validated
/// on a disjoint sample set with check_condition_F.
inline HatFFit fit_hatF(const CrossDiffusionModel& model, double exponent,
                        const std::vector<Vector>& samples, double safety = 2.0)
{
    double ratio = 0.0;
    for (const auto& u : samples) {
        const double jf = model.jacf(u).squaredNorm() / model.lambda(u);
        ratio = std::max(ratio, jf / std::pow(1.0 + u.norm(), exponent));
    }
    HatFFit fit;
    fit.constant = safety * ratio;
    fit.exponent = exponent;
    fit.model = model;
    const double C = fit.constant;
    fit.model.hatF = [C, exponent](const Vector& u) { return C * std::pow(1.0 + u.norm(), exponent); };
    fit.model.hatF_constant = C;
    fit.model.hatF_exponent = exponent;
    return fit;
}

struct GrowthCeilings
{
    double lambda_log_derivative = std::numeric_limits<double>::infinity();
    double f_growth = std::numeric_limits<double>::infinity();
    double f_jacobian = std::numeric_limits<double>::infinity();
};

struct GrowthReport
{
    double C_lambda = 0.0;     // |lambda_u(u)| |u| <= C lambda(u)
    double C_f_growth = 0.0;   // |f(u)| <= C (1 + |u|)(1 + lambda(u))
    double C_f_jacobian = 0.0; // |f(u)| <= C |u| |jacf(u)|
    bool lambda_ok = false;
    bool f_growth_ok = false;
    bool f_jacobian_ok = false;

    std::vector<ReportEntry> entries(const GrowthCeilings& c) const
    {
        return {ReportEntry::make("growth_lambda", C_lambda, c.lambda_log_derivative, 0.0,
                                  {{"C", C_lambda}}),
                ReportEntry::make("growth_f", C_f_growth, c.f_growth, 0.0, {{"C", C_f_growth}}),
                ReportEntry::make("growth_f_jacobian", C_f_jacobian, c.f_jacobian, 0.0,
                                  {{"C", C_f_jacobian}})};
    }
};

/// Smallest constants for the three growth inequalities over the samples.
/// lambda_u comes from centered finite differences. Samples with |u| <
/// min_radius are skipped (the f-Jacobian bound is only required for large
/// |u|); samples where both sides of an inequality vanish are ignored.
inline GrowthReport check_growth_conditions(const CrossDiffusionModel& model,
                                            const std::vector<Vector>& samples,
                                            const GrowthCeilings& ceilings = {},
                                            double min_radius = 0.0)
{
    if (samples.empty()) throw std::invalid_argument("check_growth_conditions: empty sample set");
    constexpr double inf = std::numeric_limits<double>::infinity();
    auto ratio = [](double num, double den) {
        if (num == 0.0) return 0.0;
        return den > 0.0 ? num / den : inf;
    };
    GrowthReport r;
    for (const auto& u : samples) {
        const double un = u.norm();
        if (un < min_radius) continue;
        const double lam = model.lambda(u);
        const double h = 1e-6 * std::max(1.0, un);
        Vector grad(u.size());
        for (int j = 0; j < u.size(); ++j) {
            Vector up = u, um = u;
            up[j] += h;
            um[j] -= h;
            grad[j] = (model.lambda(up) - model.lambda(um)) / (2.0 * h);
        }
        const double fn = model.f(u).norm();
        r.C_lambda = std::max(r.C_lambda, ratio(grad.norm() * un, lam));
        r.C_f_growth = std::max(r.C_f_growth, ratio(fn, (1.0 + un) * (1.0 + lam)));
        r.C_f_jacobian = std::max(r.C_f_jacobian, ratio(fn, un * model.jacf(u).norm()));
    }
    r.lambda_ok = r.C_lambda <= ceilings.lambda_log_derivative;
    r.f_growth_ok = r.C_f_growth <= ceilings.f_growth;
    r.f_jacobian_ok = r.C_f_jacobian <= ceilings.f_jacobian;
    return r;
}

/// <f(u), u> <= eps0 lambda(u) |u|^2 + C |u|^2 on every sample. The entry's lhs
/// is the largest relative excess; the fitted minimal C is reported alongside.
inline ReportEntry check_sktfu(const CrossDiffusionModel& model, double eps0, double C,
                               const std::vector<Vector>& samples, double tol = 1e-12)
{
    if (!(eps0 > 0.0) || !(C >= 0.0))
        throw std::invalid_argument("check_sktfu: need eps0 > 0 and C >= 0");
    double worst = -std::numeric_limits<double>::infinity();
    double C_min = 0.0;
    for (const auto& u : samples) {
        const double u2 = u.squaredNorm();
        const double fu = model.f(u).dot(u);
        const double rhs = eps0 * model.lambda(u) * u2 + C * u2;
        worst = std::max(worst, (fu - rhs) / std::max(1.0, std::abs(rhs)));
        if (u2 > 0.0) C_min = std::max(C_min, (fu - eps0 * model.lambda(u) * u2) / u2);
    }
    return ReportEntry::make("sktfu", worst, tol, 0.0,
                             {{"eps0", eps0}, {"C", C}, {"C_min", C_min}});
}

} // namespace skt

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace skt {

/// Hoelder conjugate r' = r / (r - 1).
inline double conjugate_exponent(double r)
{
    if (!(r > 1.0)) throw std::invalid_argument("conjugate exponent needs r > 1");
    return r / (r - 1.0);
}

/// Integrability exponents for the uniqueness argument, including the
/// polynomial-growth cases.
struct ExponentTable
{
    int N = 2;
    double p = 0.0;
    double k = 0.0;
    double l = 0.0;
    double sigmaN = 0.0;
    double p2 = 0.0;       // 2p / (p - 2)
    double p_sigmaN = 0.0; // sigmaN' p / (p - sigmaN')
    double q0 = 0.0;
    double r_required = 0.0;
    double p_required = 0.0; // max{2(1 + k), sigmaN' (1 + l)}
    bool p_ok = false;
    bool skt_uni_ok = false;
    bool gen_skt_uni_ok = false;

    bool operator==(const ExponentTable&) const = default;
};

/// Upper end of the admissible sigma_N interval for N = 3.
inline constexpr double sigma3_upper = 6.0 + 10.0 / 3.0;

/// sigma_N: caller's choice in (1, inf) for N = 2, in (1, 6 + 10/3) for N = 3,
/// and 2(N + 2)/(N - 2) for N >= 4 (a supplied value must then match).
inline double sigma_N(int N, std::optional<double> choice)
{
    if (N < 2) throw std::invalid_argument("sigma_N: spatial dimension must be >= 2");
    if (N >= 4) {
        const double v = 2.0 * (N + 2) / (N - 2);
        if (choice && std::abs(*choice - v) > 1e-12 * v)
            throw std::invalid_argument("sigma_N: for N >= 4 the value is fixed at " +
                                        std::to_string(v));
        return v;
    }
    if (!choice)
        throw std::invalid_argument("sigma_N: a value must be chosen for N = " + std::to_string(N));
    const double hi = N == 2 ? INFINITY : sigma3_upper;
    if (!(*choice > 1.0 && *choice < hi))
        throw std::invalid_argument("sigma_N: choice outside the admissible open interval");
    return *choice;
}

/// Fills the exponent table. `q0_choice` is only consulted for N = 2, where
/// the g_* bound needs q0 > 1 (default 2); for N >= 3, q0 = N/2. The
/// required sup-in-time exponent is r = (2l - k) q0.
inline ExponentTable exponent_table(int N, double p, double k, double l,
                                    std::optional<double> sigma_choice = std::nullopt,
                                    std::optional<double> q0_choice = std::nullopt)
{
    if (!(p > 2.0)) throw std::invalid_argument("exponent_table: p must be > 2");
    ExponentTable t;
    t.N = N;
    t.p = p;
    t.k = k;
    t.l = l;
    t.sigmaN = sigma_N(N, sigma_choice);
    t.p2 = 2.0 * p / (p - 2.0);
    const double sc = conjugate_exponent(t.sigmaN);
    if (!(p > sc))
        throw std::invalid_argument("exponent_table: p must exceed sigma_N' for p_sigmaN to be finite");
    t.p_sigmaN = sc * p / (p - sc);
    if (N == 2) {
        t.q0 = q0_choice.value_or(2.0);
        if (!(t.q0 > 1.0)) throw std::invalid_argument("exponent_table: q0 must be > 1 for N = 2");
    } else {
        t.q0 = 0.5 * N;
    }
    t.r_required = (2.0 * l - k) * t.q0;
    t.p_required = std::max(2.0 * (1.0 + k), sc * (1.0 + l));
    t.p_ok = p >= t.p_required;
    t.skt_uni_ok = N <= 4;
    t.gen_skt_uni_ok = k >= 1.0 && k <= 4.0 / N;
    return t;
}

} // namespace skt

#pragma once

// Structured box grids in one or two dimensions with homogeneous Dirichlet
// boundary, centered finite-difference operators, trapezoid quadrature, and
// the space / space-time norms used by the estimate checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"

namespace skt {

using Point = std::array<double, 2>;

/// Node-centred box [0, L_0] (x [0, L_1]); nodes include the boundary, so the
/// spacing per axis is L / (n - 1).
class Domain
{
public:
    Domain() = default;

    static Domain line(double length, int nodes) { return Domain(1, {length, 0.0}, {nodes, 1}); }
    static Domain box(double lx, double ly, int nx, int ny) { return Domain(2, {lx, ly}, {nx, ny}); }

    int dim() const { return dim_; }
    double length(int axis) const { return lengths_[static_cast<std::size_t>(axis)]; }
    int nodes(int axis) const { return nodes_[static_cast<std::size_t>(axis)]; }
    double h(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
    double h_min() const { return dim_ == 1 ? h_[0] : std::min(h_[0], h_[1]); }
    int size() const { return nodes_[0] * nodes_[1]; }
    double volume() const { return dim_ == 1 ? lengths_[0] : lengths_[0] * lengths_[1]; }

    int index(int i, int j = 0) const { return i + nodes_[0] * j; }
    std::array<int, 2> ij(int node) const { return {node % nodes_[0], node / nodes_[0]}; }

    Point coord(int node) const
    {
        const auto [i, j] = ij(node);
        return {i * h_[0], dim_ == 2 ? j * h_[1] : 0.0};
    }

    bool on_boundary(int node) const
    {
        const auto [i, j] = ij(node);
        if (i == 0 || i == nodes_[0] - 1) return true;
        return dim_ == 2 && (j == 0 || j == nodes_[1] - 1);
    }

    /// Trapezoid weight of a node: product of h per axis, halved on each
    /// boundary face the node sits on.
    double weight(int node) const
    {
        const auto [i, j] = ij(node);
        double w = h_[0] * ((i == 0 || i == nodes_[0] - 1) ? 0.5 : 1.0);
        if (dim_ == 2) w *= h_[1] * ((j == 0 || j == nodes_[1] - 1) ? 0.5 : 1.0);
        return w;
    }

    /// Weight of an interior node.
    double cell_volume() const { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }

    std::string describe() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "N=" << dim_ << " L=" << lengths_[0];
        if (dim_ == 2) os << 'x' << lengths_[1];
        os << " nodes=" << nodes_[0];
        if (dim_ == 2) os << 'x' << nodes_[1];
        return os.str();
    }

    /// Same box with each axis refined by halving the spacing.
    Domain refined() const
    {
        return dim_ == 1 ? line(lengths_[0], 2 * nodes_[0] - 1)
                         : box(lengths_[0], lengths_[1], 2 * nodes_[0] - 1, 2 * nodes_[1] - 1);
    }

    bool operator==(const Domain& o) const
    {
        return dim_ == o.dim_ && lengths_ == o.lengths_ && nodes_ == o.nodes_;
    }

private:
    Domain(int dim, std::array<double, 2> lengths, std::array<int, 2> nodes)
        : dim_(dim), lengths_(lengths), nodes_(nodes)
    {
        for (int a = 0; a < dim; ++a) {
            if (nodes_[static_cast<std::size_t>(a)] < 4)
                throw std::invalid_argument("Domain: need at least 4 nodes per axis");
            if (!(lengths_[static_cast<std::size_t>(a)] > 0.0))
                throw std::invalid_argument("Domain: side lengths must be > 0");
            h_[static_cast<std::size_t>(a)] =
                lengths_[static_cast<std::size_t>(a)] / (nodes_[static_cast<std::size_t>(a)] - 1);
        }
    }

    int dim_ = 1;
    std::array<double, 2> lengths_{1.0, 0.0};
    std::array<int, 2> nodes_{4, 1};
    std::array<double, 2> h_{1.0 / 3.0, 0.0};
};

/// m values per node, stored node-major. Solution fields keep the boundary
/// nodes at zero; auxiliary fields (coefficients, integrands) may not.
class Field
{
public:
    Field() = default;
    Field(Domain domain, int m) : domain_(std::move(domain)), m_(m),
        data_(static_cast<std::size_t>(domain_.size() * m), 0.0)
    {}

    template <class Fn>
    static Field sample(const Domain& domain, int m, Fn&& fn)
    {
        Field out(domain, m);
        for (int n = 0; n < domain.size(); ++n) out.set(n, Vector(fn(domain.coord(n))));
        return out;
    }

    const Domain& domain() const { return domain_; }
    int m() const { return m_; }
    int size() const { return domain_.size(); }

    double& operator()(int node, int c) { return data_[static_cast<std::size_t>(node * m_ + c)]; }
    double operator()(int node, int c) const { return data_[static_cast<std::size_t>(node * m_ + c)]; }

    Vector state(int node) const
    {
        return Eigen::Map<const Vector>(data_.data() + static_cast<std::ptrdiff_t>(node) * m_, m_);
    }
    void set(int node, const Vector& v)
    {
        Eigen::Map<Vector>(data_.data() + static_cast<std::ptrdiff_t>(node) * m_, m_) = v;
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Field& zero_boundary()
    {
        for (int n = 0; n < size(); ++n)
            if (domain_.on_boundary(n))
                for (int c = 0; c < m_; ++c) (*this)(n, c) = 0.0;
        return *this;
    }

    bool satisfies_dirichlet(double tol = 0.0) const
    {
        for (int n = 0; n < size(); ++n)
            if (domain_.on_boundary(n))
                for (int c = 0; c < m_; ++c)
                    if (std::abs((*this)(n, c)) > tol) return false;
        return true;
    }

    Field component(int c) const
    {
        Field out(domain_, 1);
        for (int n = 0; n < size(); ++n) out(n, 0) = (*this)(n, c);
        return out;
    }

    Field& operator+=(const Field& o)
    {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Field& operator-=(const Field& o)
    {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Field& operator*=(double s)
    {
        for (auto& v : data_) v *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }

    bool operator==(const Field& o) const
    {
        return domain_ == o.domain_ && m_ == o.m_ && data_ == o.data_;
    }

private:
    Domain domain_;
    int m_ = 1;
    std::vector<double> data_;
};

/// Applies a state map node by node.
template <class Fn>
Field map_states(const Field& u, int m_out, Fn&& fn)
{
    Field out(u.domain(), m_out);
    for (int n = 0; n < u.size(); ++n) out.set(n, fn(u.state(n)));
    return out;
}

/// Scalar field s(u(x)).
template <class Fn>
Field map_scalar(const Field& u, Fn&& fn)
{
    Field out(u.domain(), 1);
    for (int n = 0; n < u.size(); ++n) out(n, 0) = fn(u.state(n));
    return out;
}

/// Five-point (three-point in 1D) Laplacian with the stored boundary values
/// as Dirichlet data. Boundary nodes of the result are zero.
inline Field laplacian(const Field& u)
{
    const Domain& d = u.domain();
    Field out(d, u.m());
    const int nx = d.nodes(0);
    const double ix2 = 1.0 / (d.h(0) * d.h(0));
    const double iy2 = d.dim() == 2 ? 1.0 / (d.h(1) * d.h(1)) : 0.0;
    for (int n = 0; n < d.size(); ++n) {
        if (d.on_boundary(n)) continue;
        for (int c = 0; c < u.m(); ++c) {
            double v = ix2 * (u(n - 1, c) - 2.0 * u(n, c) + u(n + 1, c));
            if (d.dim() == 2) v += iy2 * (u(n - nx, c) - 2.0 * u(n, c) + u(n + nx, c));
            out(n, c) = v;
        }
    }
    return out;
}

/// Per-axis first derivatives: centred at interior nodes, one-sided at the
/// boundary nodes of that axis.
inline std::vector<Field> gradient(const Field& u)
{
    const Domain& d = u.domain();
    std::vector<Field> out;
    for (int a = 0; a < d.dim(); ++a) {
        Field g(d, u.m());
        const int stride = a == 0 ? 1 : d.nodes(0);
        const int last = d.nodes(a) - 1;
        const double h = d.h(a);
        for (int n = 0; n < d.size(); ++n) {
            const int i = d.ij(n)[static_cast<std::size_t>(a)];
            for (int c = 0; c < u.m(); ++c) {
                if (i == 0)
                    g(n, c) = (u(n + stride, c) - u(n, c)) / h;
                else if (i == last)
                    g(n, c) = (u(n, c) - u(n - stride, c)) / h;
                else
                    g(n, c) = (u(n + stride, c) - u(n - stride, c)) / (2.0 * h);
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

/// Sum over axes of the derivative of the axis component, with the same
/// stencils as `gradient`.
inline Field divergence(const std::vector<Field>& F)
{
    if (F.empty()) throw std::invalid_argument("divergence: empty vector field");
    const Domain& d = F[0].domain();
    if (static_cast<int>(F.size()) != d.dim())
        throw std::invalid_argument("divergence: need one field per axis");
    Field out(d, F[0].m());
    for (int a = 0; a < d.dim(); ++a) out += gradient(F[static_cast<std::size_t>(a)])[static_cast<std::size_t>(a)];
    return out;
}

/// Trapezoid inner product sum_x w(x) <a(x), b(x)>.
inline double inner(const Field& a, const Field& b)
{
    const Domain& d = a.domain();
    double s = 0.0;
    for (int n = 0; n < d.size(); ++n) {
        double dot = 0.0;
        for (int c = 0; c < a.m(); ++c) dot += a(n, c) * b(n, c);
        s += d.weight(n) * dot;
    }
    return s;
}

/// Trapezoid integral of a scalar (m = 1) field, or of the first component.
inline double integral(const Field& u)
{
    const Domain& d = u.domain();
    double s = 0.0;
    for (int n = 0; n < d.size(); ++n) s += d.weight(n) * u(n, 0);
    return s;
}

/// (int |u|^p)^(1/p) with |.| the Euclidean norm across components;
/// p = infinity gives the max norm.
inline double norm_Lp(const Field& u, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("norm_Lp: p must be >= 1");
    const Domain& d = u.domain();
    if (std::isinf(p)) {
        double mx = 0.0;
        for (int n = 0; n < d.size(); ++n) mx = std::max(mx, u.state(n).norm());
        return mx;
    }
    double s = 0.0;
    for (int n = 0; n < d.size(); ++n) s += d.weight(n) * std::pow(u.state(n).norm(), p);
    return std::pow(s, 1.0 / p);
}

namespace detail {

// Visits each grid edge (n0, n1) along `axis` with the edge's quadrature
// weight: h_axis * (trapezoid weight across the other axis).
template <class Fn>
void for_each_edge(const Domain& d, Fn&& fn)
{
    const int nx = d.nodes(0), ny = d.nodes(1);
    for (int a = 0; a < d.dim(); ++a) {
        const double h = d.h(a);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int n0 = d.index(i, j);
                int n1;
                double wt = h;
                if (a == 0) {
                    if (i == nx - 1) continue;
                    n1 = n0 + 1;
                    if (d.dim() == 2) wt *= d.h(1) * ((j == 0 || j == ny - 1) ? 0.5 : 1.0);
                } else {
                    if (j == ny - 1) continue;
                    n1 = n0 + nx;
                    wt *= d.h(0) * ((i == 0 || i == nx - 1) ? 0.5 : 1.0);
                }
                fn(a, n0, n1, wt, h);
            }
    }
}

} // namespace detail

/// int |Du|^2 from forward differences on grid edges. For fields vanishing on
/// the boundary this equals -<laplacian(u), u> exactly.
inline double dirichlet_energy(const Field& u)
{
    double s = 0.0;
    detail::for_each_edge(u.domain(), [&](int, int n0, int n1, double wt, double h) {
        double sq = 0.0;
        for (int c = 0; c < u.m(); ++c) {
            const double g = (u(n1, c) - u(n0, c)) / h;
            sq += g * g;
        }
        s += wt * sq;
    });
    return s;
}

/// int weight(u) |Du|^2 with the weight evaluated at edge midpoints.
template <class Fn>
double weighted_dirichlet_energy(const Field& u, Fn&& weight)
{
    double s = 0.0;
    detail::for_each_edge(u.domain(), [&](int, int n0, int n1, double wt, double h) {
        const Vector mid = 0.5 * (u.state(n0) + u.state(n1));
        const double g2 = (u.state(n1) - u.state(n0)).squaredNorm() / (h * h);
        s += wt * weight(mid) * g2;
    });
    return s;
}

/// L^p norm of |Du| using the node gradient.
inline double norm_grad_Lp(const Field& u, double p)
{
    if (p == 2.0) return std::sqrt(dirichlet_energy(u));
    const auto g = gradient(u);
    const Domain& d = u.domain();
    double s = 0.0;
    for (int n = 0; n < d.size(); ++n) {
        double sq = 0.0;
        for (const auto& ga : g) sq += ga.state(n).squaredNorm();
        s += d.weight(n) * std::pow(std::sqrt(sq), p);
    }
    return std::pow(s, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Trajectories

/// Uniformly spaced time slices u(t0 + k dt), k = 0..K.
struct Trajectory
{
    Domain domain;
    int m = 1;
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<Field> slices;

    int steps() const { return static_cast<int>(slices.size()) - 1; }
    double time(int k) const { return t0 + k * dt; }
    double horizon() const { return time(steps()); }
    const Field& front() const { return slices.front(); }
    const Field& back() const { return slices.back(); }

    bool operator==(const Trajectory& o) const
    {
        return domain == o.domain && m == o.m && t0 == o.t0 && dt == o.dt && slices == o.slices;
    }
};

inline Trajectory make_trajectory(const Domain& d, int m, double t0, double dt)
{
    Trajectory tr;
    tr.domain = d;
    tr.m = m;
    tr.t0 = t0;
    tr.dt = dt;
    return tr;
}

template <class Fn>
Trajectory map_trajectory(const Trajectory& tr, Fn&& fn)
{
    Trajectory out = make_trajectory(tr.domain, tr.m, tr.t0, tr.dt);
    out.slices.reserve(tr.slices.size());
    for (const auto& s : tr.slices) out.slices.push_back(fn(s));
    if (!out.slices.empty()) out.m = out.slices.front().m();
    return out;
}

inline Trajectory difference(const Trajectory& a, const Trajectory& b)
{
    if (!(a.domain == b.domain) || a.slices.size() != b.slices.size())
        throw std::invalid_argument("difference: trajectories do not share grid and horizon");
    Trajectory out = make_trajectory(a.domain, a.m, a.t0, a.dt);
    for (std::size_t k = 0; k < a.slices.size(); ++k) out.slices.push_back(a.slices[k] - b.slices[k]);
    return out;
}

/// max over slices of a spatial functional.
template <class Fn>
double sup_norm_in_time(const Trajectory& tr, Fn&& spatial)
{
    double mx = 0.0;
    for (const auto& s : tr.slices) mx = std::max(mx, static_cast<double>(spatial(s)));
    return mx;
}

/// Trapezoid-in-time integral of a spatial functional.
template <class Fn>
double time_integral(const Trajectory& tr, Fn&& spatial)
{
    const int K = tr.steps();
    if (K <= 0) return 0.0;
    double s = 0.0;
    for (int k = 0; k <= K; ++k)
        s += ((k == 0 || k == K) ? 0.5 : 1.0) * spatial(tr.slices[static_cast<std::size_t>(k)]);
    return s * tr.dt;
}

/// sup_t |u|_{L2} + |Du|_{L2(Q)}.
inline double norm_V2(const Trajectory& tr)
{
    const double sup_l2 = sup_norm_in_time(tr, [](const Field& f) { return norm_Lp(f, 2.0); });
    const double grad = std::sqrt(time_integral(tr, [](const Field& f) { return dirichlet_energy(f); }));
    return sup_l2 + grad;
}

/// Space-time L^p norm over Q.
inline double norm_Lp_spacetime(const Trajectory& tr, double p)
{
    if (std::isinf(p)) return sup_norm_in_time(tr, [](const Field& f) { return norm_Lp(f, INFINITY); });
    const double s = time_integral(tr, [p](const Field& f) { return std::pow(norm_Lp(f, p), p); });
    return std::pow(s, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Mean oscillation / BMO

/// Dyadic radii h_min * 2^j not exceeding R.
inline std::vector<double> dyadic_radii(const Domain& d, double R)
{
    std::vector<double> out;
    for (double r = d.h_min(); r <= R * (1.0 + 1e-12); r *= 2.0) out.push_back(r);
    return out;
}

/// Nodes within distance r of `center`.
inline std::vector<int> ball_nodes(const Domain& d, const Point& center, double r)
{
    std::vector<int> out;
    const double r2 = r * r * (1.0 + 1e-12);
    const int i0 = std::max(0, static_cast<int>(std::floor((center[0] - r) / d.h(0))) );
    const int i1 = std::min(d.nodes(0) - 1, static_cast<int>(std::ceil((center[0] + r) / d.h(0))));
    int j0 = 0, j1 = 0;
    if (d.dim() == 2) {
        j0 = std::max(0, static_cast<int>(std::floor((center[1] - r) / d.h(1))));
        j1 = std::min(d.nodes(1) - 1, static_cast<int>(std::ceil((center[1] + r) / d.h(1))));
    }
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            const int n = d.index(i, j);
            const Point x = d.coord(n);
            const double dx = x[0] - center[0], dy = x[1] - center[1];
            if (dx * dx + dy * dy <= r2) out.push_back(n);
        }
    return out;
}

/// Whether the closed ball of radius r about `center` lies inside the box.
inline bool ball_inside(const Domain& d, const Point& center, double r)
{
    const double eps = 1e-12 * r;
    for (int a = 0; a < d.dim(); ++a) {
        const double c = center[static_cast<std::size_t>(a)];
        if (c - r < -eps || c + r > d.length(a) + eps) return false;
    }
    return true;
}

/// Node-average of |u - u_r| over the ball, u_r the node-average of u.
inline double mean_oscillation(const Field& u, const Point& center, double r)
{
    const auto nodes = ball_nodes(u.domain(), center, r);
    if (nodes.empty()) return 0.0;
    Vector avg = Vector::Zero(u.m());
    for (int n : nodes) avg += u.state(n);
    avg /= static_cast<double>(nodes.size());
    double s = 0.0;
    for (int n : nodes) s += (u.state(n) - avg).norm();
    return s / static_cast<double>(nodes.size());
}

/// Largest mean oscillation over grid-centred balls of dyadic radius <= R
/// that fit inside the domain. Grid alignment makes this a lower bound of the
/// continuous supremum.
inline double bmo_oscillation_term(const Field& u, double R)
{
    const Domain& d = u.domain();
    double best = 0.0;
    for (double r : dyadic_radii(d, R))
        for (int n = 0; n < d.size(); ++n) {
            const Point c = d.coord(n);
            if (!ball_inside(d, c, r)) continue;
            best = std::max(best, mean_oscillation(u, c, r));
        }
    return best;
}

/// BMO(Omega_R) norm maximized over ball centres on grid nodes: sup over
/// balls B_r in Omega_R of the mean oscillation plus int_{Omega_R} |u|.
inline double norm_BMO(const Field& u, double R)
{
    if (!(R > 0.0)) throw std::invalid_argument("norm_BMO: R must be > 0");
    const Domain& d = u.domain();
    const auto radii = dyadic_radii(d, R);
    // osc[r][n]: oscillation of the ball of radius radii[r] about node n, or
    // -1 when that ball leaves the domain.
    std::vector<std::vector<double>> osc(radii.size(), std::vector<double>(static_cast<std::size_t>(d.size()), -1.0));
    for (std::size_t ri = 0; ri < radii.size(); ++ri)
        for (int n = 0; n < d.size(); ++n) {
            const Point c = d.coord(n);
            if (ball_inside(d, c, radii[ri])) osc[ri][static_cast<std::size_t>(n)] = mean_oscillation(u, c, radii[ri]);
        }
    double best = 0.0;
    for (int n = 0; n < d.size(); ++n) {
        const Point c = d.coord(n);
        double sup_osc = 0.0;
        for (std::size_t ri = 0; ri < radii.size(); ++ri)
            for (int n2 : ball_nodes(d, c, R - radii[ri]))
                sup_osc = std::max(sup_osc, osc[ri][static_cast<std::size_t>(n2)]);
        double mass = 0.0;
        for (int n2 : ball_nodes(d, c, R)) mass += d.weight(n2) * u.state(n2).norm();
        best = std::max(best, sup_osc + mass);
    }
    return best;
}

} // namespace skt

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "skt/verify.hpp"

using namespace skt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

SKTParams coupled_params()
{
    SKTParams p;
    p.m = 2;
    p.d = Vector(2);
    p.d << 1.0, 0.5;
    p.alpha = Matrix(2, 2);
    p.alpha << 0.2, 0.1, 0.1, 0.2;
    p.beta = Matrix(2, 2);
    p.beta << 0.1, 0.05, 0.05, 0.1;
    p.k = Vector(2);
    p.k << 0.5, 0.3;
    p.lambda0 = 0.5;
    return p;
}

Field bump(const Domain& d, int m, double amp = 1.0)
{
    return Field::sample(d, m, [&](const Point& x) {
               double s = std::sin(pi * x[0] / d.length(0));
               if (d.dim() == 2) s *= std::sin(pi * x[1] / d.length(1));
               return Vector(Vector::Constant(m, amp * s));
           })
        .zero_boundary();
}

// e^{-pi^2 t} sin(pi x) sampled on the grid.
Trajectory exact_heat(const Domain& d, double dt, int K)
{
    Trajectory tr = make_trajectory(d, 1, 0.0, dt);
    for (int k = 0; k <= K; ++k) tr.slices.push_back(std::exp(-pi * pi * k * dt) * bump(d, 1));
    return tr;
}

Trajectory solve(const CrossDiffusionModel& model, const Field& u0, double dt, double T, double sigma = 1.0)
{
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    cfg.sigma = sigma;
    return solve_family(model, u0, cfg).traj;
}

// Brute-force minimiser of a * max(x) + b over a fine grid in a.
double brute_objective(const std::vector<double>& x, const std::vector<double>& y)
{
    const double xmax = *std::max_element(x.begin(), x.end());
    double a_hi = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) a_hi = std::max(a_hi, y[i] / x[i]);
    double best = INFINITY;
    for (int s = 0; s <= 20000; ++s) {
        const double a = a_hi * s / 20000.0;
        double b = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) b = std::max(b, y[i] - a * x[i]);
        best = std::min(best, a * xmax + b);
    }
    return best;
}

} // namespace

TEST_CASE("very weak residual vanishes on the exact heat solution up to quadrature")
{
    const Domain d = Domain::line(1.0, 257);
    const auto heat = make_linear(Matrix::Identity(1, 1), 1.0);
    const auto tr = exact_heat(d, 1e-4, 1000);
    for (const auto& tf : test_function_library(d, 1, 5)) {
        INFO(tf.name);
        CHECK(very_weak_residual(heat, tr, tf) <= 1e-5);
    }
    // A frozen trajectory is not a solution.
    Trajectory frozen = make_trajectory(d, 1, 0.0, 1e-4);
    for (int k = 0; k <= 1000; ++k) frozen.slices.push_back(bump(d, 1));
    CHECK(very_weak_residual(heat, frozen, sine_test_function(d, 1, 0, 1, 1, {1.0})) > 1e-2);
}

TEST_CASE("very weak residual of computed SKT solutions shrinks under refinement")
{
    const auto model = make_skt(coupled_params());
    double prev = INFINITY;
    for (int nodes : {17, 33, 65}) {
        const Domain d = Domain::line(1.0, nodes);
        const auto tfd = sine_test_function(d, 2, 1, 1, 1, {1.0, -2.0});
        const double dt = 1e-3 * std::pow(16.0 / (nodes - 1), 2.0);
        const double r = very_weak_residual(model, solve(model, bump(d, 2), dt, 0.05), tfd);
        CHECK(r < prev);
        prev = r;
    }
    CHECK(prev <= 1e-3);
}

TEST_CASE("test functions carry consistent derivatives")
{
    const Domain d = Domain::box(1.0, 2.0, 9, 9);
    const auto tf = sine_test_function(d, 2, 0, 2, 1, {0.5, 1.0, -1.0});
    const Point x{0.3, 0.7};
    const double t = 0.4, e = 1e-6;
    const Vector dt_fd = (tf.phi(x, t + e) - tf.phi(x, t - e)) / (2.0 * e);
    CHECK((dt_fd - tf.phi_t(x, t)).norm() <= 1e-8);
    const double h = 1e-4;
    Vector lap = Vector::Zero(2);
    for (int a = 0; a < 2; ++a) {
        Point xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        lap += (tf.phi(xp, t) - 2.0 * tf.phi(x, t) + tf.phi(xm, t)) / (h * h);
    }
    CHECK((lap - tf.lap_phi(x, t)).norm() <= 1e-5);
    CHECK(tf.phi(x, t)[1] == 0.0);
    CHECK_THROWS_AS(sine_test_function(d, 2, 2, 1, 1, {1.0}), std::invalid_argument);
}

TEST_CASE("uniqueness pairing of a solution with itself is zero")
{
    const Domain d = Domain::box(1.0, 1.0, 9, 9);
    const auto model = make_skt(coupled_params());
    const auto u = solve(model, bump(d, 2), 5e-3, 0.05);
    const auto r = uniqueness_pairing(model, u, u, bump(d, 2), 2);
    CHECK(r.pairing == 0.0);
    CHECK(r.rhs_a == 0.0);
    CHECK(r.rhs_g == 0.0);
    CHECK(r.psi.steps() == u.steps());

    const auto shorter = solve(model, bump(d, 2), 5e-3, 0.025);
    CHECK_THROWS_AS(uniqueness_pairing(model, u, shorter, bump(d, 2), 2), std::invalid_argument);
}

TEST_CASE("uniqueness pairing is antisymmetric in the two solutions")
{
    const Domain d = Domain::box(1.0, 1.0, 9, 9);
    const auto model = make_skt(coupled_params());
    const auto u1 = solve(model, bump(d, 2), 5e-3, 0.05);
    const auto u2 = solve(model, bump(d, 2, 0.5), 5e-3, 0.05);
    const auto a = uniqueness_pairing(model, u1, u2, bump(d, 2), 4);
    const auto b = uniqueness_pairing(model, u2, u1, bump(d, 2), 4);
    CHECK_THAT(a.pairing, WithinAbs(-b.pairing, 1e-14));
    CHECK(a.pairing != 0.0);
}

TEST_CASE("minimal linear bound: covers the data and matches a brute-force search")
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> ux(0.0, 5.0), uy(-1.0, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(12), y(12);
        for (int i = 0; i < 12; ++i) {
            x[static_cast<std::size_t>(i)] = ux(gen);
            y[static_cast<std::size_t>(i)] = uy(gen);
        }
        const auto fit = fit_linear_bound(x, y);
        REQUIRE(fit.finite());
        CHECK(fit.a >= 0.0);
        CHECK(fit.b >= 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] <= fit.a * x[i] + fit.b + 1e-12);
        const double xmax = *std::max_element(x.begin(), x.end());
        CHECK(fit.a * xmax + fit.b <= brute_objective(x, y) + 1e-9);
    }
}

TEST_CASE("minimal linear bound edge cases")
{
    const auto neg = fit_linear_bound({1.0, 2.0}, {-1.0, -3.0});
    CHECK(neg.a == 0.0);
    CHECK(neg.b == 0.0);
    const auto at_zero = fit_linear_bound({0.0, 0.0}, {2.0, 1.0});
    CHECK(at_zero.b == 2.0);
    const auto empty = fit_linear_bound({}, {});
    CHECK(empty.a == 0.0);
    CHECK_THROWS_AS(fit_linear_bound({1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(fit_linear_bound({-1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("relative variation")
{
    CHECK(relative_variation(1.0, 1.1) == Catch::Approx(0.1 / 1.1));
    CHECK(relative_variation(-2.0, 2.0) == 2.0);
    CHECK(relative_variation(0.0, 0.0) == 0.0);
    CHECK(relative_variation(1e-12, 2e-12, 1e-9) == 0.0);
    CHECK(relative_variation(1e-12, 2e-12) == 0.5);
}

TEST_CASE("energy of the heat flow is nonincreasing and its Gronwall fit is zero")
{
    const Domain d = Domain::box(1.0, 1.0, 17, 17);
    const auto heat = make_linear(Matrix::Identity(1, 1), 1.0);
    const auto tr = solve(heat, bump(d, 1), 1e-3, 0.05);
    const auto fit = energy_gronwall_fit(heat, tr);
    CHECK(fit.max_increase < 0.0);
    CHECK(fit.gronwall.a == 0.0);
    CHECK(fit.gronwall.b == 0.0);
    CHECK(energy_monotonicity_check(heat, tr).passes);

    // Raising the energy at the last slice is caught.
    Trajectory bad = tr;
    bad.slices.back() = 2.0 * bad.slices.front();
    CHECK_FALSE(energy_monotonicity_check(heat, bad).passes);
}

TEST_CASE("energy check without reaction on coupled SKT")
{
    const Domain d = Domain::box(1.0, 1.0, 13, 13);
    auto p = coupled_params();
    p.k.setZero();
    const auto model = make_skt(p);
    const auto tr = solve(model, bump(d, 2), 2e-3, 0.04);
    CHECK(energy_monotonicity_check(model, tr).passes);
    CHECK_THROWS_AS(energy_gronwall_check(model, {}), std::invalid_argument);
    const auto rep = energy_gronwall_check(model, {tr});
    CHECK(rep.entries.size() == 1);
    CHECK(rep.passes());
}

TEST_CASE("a priori bounds across a sigma grid")
{
    const Domain d = Domain::box(1.0, 1.0, 9, 9);
    const auto model = make_skt(coupled_params());
    std::vector<SigmaRun> runs;
    for (double s : {0.0, 0.5, 1.0}) runs.push_back({s, solve(model, bump(d, 2), 5e-3, 0.05, s)});
    const auto rep = apriori_bounds_check(model, runs, 2.0);
    for (const auto& e : rep.entries) INFO(e.name << " " << e.lhs << " " << e.rhs);
    CHECK(rep.passes());

    // A nonzero sigma = 0 run is flagged.
    runs.front().w.slices.back()(40, 0) = 1e-3;
    bool flagged = false;
    for (const auto& e : apriori_bounds_check(model, runs, 2.0).entries)
        if (e.name == "apriori_sigma0_zero") flagged = !e.passes;
    CHECK(flagged);

    runs.pop_back();
    CHECK_THROWS_AS(apriori_bounds_check(model, runs, 2.0), std::invalid_argument);
}

TEST_CASE("Sobolev conjugate")
{
    CHECK(sobolev_conjugate(2, 1.0) == 2.0);
    CHECK(sobolev_conjugate(3, 2.0) == 6.0);
    CHECK(std::isinf(sobolev_conjugate(2, 2.0)));
    CHECK(std::isinf(sobolev_conjugate(2, 4.0)));
}

TEST_CASE("interpolation ratio: zero field, scaling invariance at beta = 1")
{
    const Domain d = Domain::box(1.0, 1.0, 17, 17);
    CHECK(interpolation_ratio(Field(d, 1), 0.1, 0.5, 2.0, 3.0) == 0.0);
    for (const auto& W : random_smooth_fields(d, 2, 6, 3, 4, 0.5)) {
        const double r = interpolation_ratio(W, 0.1, 1.0, 2.0, 3.0);
        for (double c : {1e-3, 0.5, 7.0}) CHECK_THAT(interpolation_ratio(c * W, 0.1, 1.0, 2.0, 3.0), WithinRel(r, 1e-10));
    }
}

TEST_CASE("interpolation check on random fields, and argument validation")
{
    const Domain d = Domain::box(1.0, 1.0, 17, 17);
    const auto fields = random_smooth_fields(d, 1, 16, 5, 4, 1.0);
    const auto rep = interpolation_inequality_check(fields, 0.1, 0.5, 2.0, 3.0, 1.0);
    REQUIRE(rep.entries.size() == 2);
    CHECK(rep.entries[0].passes);
    CHECK(rep.entries[0].constant("C") >= rep.entries[0].constant("C_half"));

    CHECK_THROWS_AS(interpolation_inequality_check({}, 0.1, 0.5, 2.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(interpolation_inequality_check(fields, 0.1, 1.5, 2.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(interpolation_inequality_check(fields, 0.1, 0.5, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("parabolic Sobolev terms on a time-constant pair")
{
    const Domain d = Domain::box(1.0, 1.0, 17, 17);
    const double a = 0.5, p = 2.0, r = 1.5;
    const Field G = map_scalar(bump(d, 1), [](const Vector& v) { return v.norm(); });
    Field g(d, 1);
    for (auto& v : g.data()) v = a;
    SobolevSample s{make_trajectory(d, 1, 0.0, 0.1), make_trajectory(d, 1, 0.0, 0.1)};
    for (int k = 0; k <= 10; ++k) {
        s.g.slices.push_back(g);
        s.G.slices.push_back(G);
    }
    const auto t = parabolic_sobolev_terms(s, p, r);
    // g is constant, so the left side factors through the G mass.
    CHECK_THAT(t.lhs, WithinRel(std::pow(a, r) * t.mass, 1e-12));
    CHECK_THAT(t.sup_g_r, WithinRel(std::pow(a, r), 1e-12));
    CHECK_THAT(t.mass, WithinRel(std::pow(norm_Lp(G, p), p), 1e-12));
    CHECK_THAT(t.grad, WithinRel(std::pow(norm_grad_Lp(G, p), p), 1e-12));

    s.g.slices[3](10, 0) = -1.0;
    CHECK_THROWS_AS(parabolic_sobolev_terms(s, p, r), std::invalid_argument);
}

TEST_CASE("parabolic Sobolev check: the zero sample is trivially bounded")
{
    const Domain d = Domain::box(1.0, 1.0, 9, 9);
    SobolevSample z{make_trajectory(d, 1, 0.0, 0.1), make_trajectory(d, 1, 0.0, 0.1)};
    for (int k = 0; k <= 4; ++k) {
        z.g.slices.emplace_back(d, 1);
        z.G.slices.emplace_back(d, 1);
    }
    const auto rep = parabolic_sobolev_check({z, z}, 2.0, 1.0, 2.0);
    CHECK(rep.passes());
    CHECK(rep.entries[0].constant("C") == 0.0);
    CHECK_THROWS_AS(parabolic_sobolev_check({z}, 2.0, 3.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(parabolic_sobolev_check({}, 2.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("random sample generators are seeded and respect the boundary")
{
    const Domain d = Domain::box(1.0, 1.0, 13, 13);
    const auto a = random_smooth_fields(d, 2, 4, 9);
    const auto b = random_smooth_fields(d, 2, 4, 9);
    const auto c = random_smooth_fields(d, 2, 4, 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK_FALSE(a[i] == c[i]);
        CHECK(a[i].satisfies_dirichlet());
    }
    const auto s = random_sobolev_samples(d, 3, 4, 5, 0.1, 1.5);
    REQUIRE(s.size() == 3);
    for (const auto& smp : s) {
        REQUIRE(smp.g.steps() == 5);
        for (int k = 0; k <= 5; ++k)
            for (int n = 0; n < d.size(); ++n) {
                const double G = smp.G.slices[static_cast<std::size_t>(k)](n, 0);
                CHECK(G >= 0.0);
                CHECK_THAT(smp.g.slices[static_cast<std::size_t>(k)](n, 0), WithinAbs(std::pow(G, 1.5), 1e-14));
            }
    }
}

TEST_CASE("BMO probe on a smooth trajectory")
{
    const Domain d = Domain::box(1.0, 1.0, 33, 33);
    const auto heat = make_linear(Matrix::Identity(1, 1), 1.0);
    const auto tr = solve(heat, bump(d, 1), 2e-3, 0.02);
    const std::vector<double> radii{0.4, 0.1, 0.2};
    const auto p = bmo_probe(tr, radii);
    CHECK(p.radii == std::vector<double>{0.1, 0.2, 0.4});
    CHECK(p.oscillation[0] <= p.oscillation[1]);
    CHECK(p.oscillation[1] <= p.oscillation[2]);
    CHECK(bmo_smallness_probe(tr, radii, 1.0).passes());
    CHECK_FALSE(bmo_smallness_probe(tr, radii, 0.0).passes());
    const auto line = solve(heat, bump(Domain::line(1.0, 17), 1), 2e-3, 0.01);
    CHECK_THROWS_AS(bmo_smallness_probe(line, radii, 1.0), std::invalid_argument);
}

TEST_CASE("L2 Gronwall chain: Poincare ratio and validation")
{
    const Domain d = Domain::box(1.0, 1.0, 9, 9);
    CHECK(poincare_ratio(Field(d, 2), 1.0) == 0.0);
    const Field w = bump(d, 2);
    // k = 0 reduces to |w|_2^2 / |Dw|_2^2.
    CHECK_THAT(poincare_ratio(w, 0.0), WithinRel(std::pow(norm_Lp(w, 2.0), 2.0) / dirichlet_energy(w), 1e-12));

    const auto model = make_skt(coupled_params());
    const auto tr = solve(model, w, 5e-3, 0.05);
    const auto fit = skt_l2_fit(tr, 1.0);
    CHECK(std::isfinite(fit.poincare_C));
    CHECK(fit.gronwall.finite());
    CHECK(skt_l2_gronwall_check(model, {tr}).passes());
    CHECK_THROWS_AS(skt_l2_gronwall_check(make_generalized_skt(coupled_params(), 1.5), {tr}), std::invalid_argument);
}

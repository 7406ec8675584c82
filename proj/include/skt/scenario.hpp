#pragma once

// Subcommand orchestration behind the command-line tool: every subcommand
// reads a validated Config, writes its artifacts into one output directory
// and returns a process exit code.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "dual.hpp"
#include "exponents.hpp"
#include "forward.hpp"
#include "model.hpp"
#include "report.hpp"
#include "verify.hpp"

namespace skt {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int solver_error = 3;
} // namespace exit_code

/// A solver failure tagged with the check or stage that triggered it.
class StageFailure : public std::runtime_error
{
public:
    StageFailure(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage)
    {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

inline const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> s{"simulate", "dual", "uniqueness", "verify", "exponents", "report"};
    return s;
}

class Scenario
{
public:
    Scenario(Config cfg, std::filesystem::path out, std::ostream& log = std::cout)
        : cfg_(std::move(cfg)), out_(std::move(out)), log_(log), hash_(config_hash(cfg_)),
          model_(cfg_.model.build()), domain_(cfg_.domain.build())
    {}

    const std::string& hash() const { return hash_; }

    /// Runs one subcommand and maps failures onto exit codes.
    int run(const std::string& sub)
    {
        try {
            std::filesystem::create_directories(out_);
            if (sub == "simulate") return simulate();
            if (sub == "dual") return dual();
            if (sub == "uniqueness") return uniqueness();
            if (sub == "verify") return verify();
            if (sub == "exponents") return exponents();
            if (sub == "report") return report();
            log_ << "error: unknown subcommand '" << sub << "'\n";
            return exit_code::config_error;
        } catch (const ConfigError& e) {
            log_ << "config error: " << e.what() << '\n';
            return exit_code::config_error;
        } catch (const StageFailure& e) {
            log_ << "solver failure in " << e.what() << '\n';
            return exit_code::solver_error;
        } catch (const SolverError& e) {
            log_ << "solver failure in " << sub << ": " << e.what() << '\n';
            return exit_code::solver_error;
        }
    }

private:
    // -- helpers -------------------------------------------------------------

    template <class Fn>
    auto stage(const std::string& name, Fn&& fn) -> decltype(fn())
    {
        try {
            return fn();
        } catch (const SolverError& e) {
            throw StageFailure(name, e.what());
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(name + ": " + e.what());
        }
    }

    std::vector<std::pair<std::string, std::string>> meta() const
    {
        return {{"config_hash", hash_}, {"model_hash", model_.hash()}, {"seed", std::to_string(cfg_.seed)}};
    }

    ReportMetadata report_metadata(const std::vector<int>& levels) const
    {
        ReportMetadata m;
        m.grid = domain_.describe();
        m.dt = cfg_.solver.dt;
        m.model_hash = model_.hash();
        m.levels = levels;
        m.seed = cfg_.seed;
        m.config_hash = hash_;
        return m;
    }

    std::filesystem::path file(const std::string& name) const { return out_ / name; }

    void write_text(const std::string& name, const std::string& text) const
    {
        std::ofstream os(file(name), std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + file(name).string());
        os << text;
    }

    void write_report(const std::string& stem, const VerificationReport& rep) const
    {
        write_text(stem + ".json", to_json(rep).dump(2) + "\n");
        write_text(stem + ".csv", to_csv(rep));
    }

    Domain ladder_domain(const LadderLevel& l) const
    {
        DomainSpec s = cfg_.domain;
        s.nodes = l.nodes;
        return s.build();
    }

    FamilyResult solve(const Domain& d, const SolverConfig& sc, double initial_scale = 1.0) const
    {
        Field u0 = cfg_.initial.build(d, model_.m);
        u0 *= initial_scale;
        return solve_family(model_, u0, sc);
    }

    const FamilyResult& base_solution()
    {
        if (!base_) base_ = stage("simulate", [&] { return solve(domain_, cfg_.solver); });
        return *base_;
    }

    // Partner trajectory for the dual problem: the other time scheme or a
    // rescaled initial datum.
    Trajectory partner_solution()
    {
        return stage("dual", [&] {
            SolverConfig sc = cfg_.solver;
            if (cfg_.dual.partner == "semi_implicit") {
                sc.scheme = sc.scheme == Scheme::fully_implicit ? Scheme::semi_implicit : Scheme::fully_implicit;
                return solve(domain_, sc).traj;
            }
            return solve(domain_, sc, cfg_.dual.partner_scale).traj;
        });
    }

    // -- subcommands ---------------------------------------------------------

    int simulate()
    {
        const FamilyResult& r = base_solution();
        auto m = meta();
        m.emplace_back("scheme", to_string(cfg_.solver.scheme));
        m.emplace_back("sigma", format_double(cfg_.solver.sigma));
        write_trajectory_csv(file("trajectory.csv").string(), r.traj, m);
        std::ostringstream os;
        os << "# config_hash=" << hash_ << "\n";
        os << "t,newton_iters,residual,energy_lambda,energy_A,ellipticity_warnings\n";
        for (const auto& d : r.diagnostics)
            os << format_double(d.t) << ',' << d.newton_iters << ',' << format_double(d.residual) << ','
               << format_double(d.energy_lambda) << ',' << format_double(d.energy_A) << ','
               << d.ellipticity_warnings << '\n';
        write_text("diagnostics.csv", os.str());
        log_ << "simulate: " << r.traj.steps() << " steps on " << domain_.describe() << '\n';
        return exit_code::ok;
    }

    VerificationReport dual_checks(bool write_solutions)
    {
        const Trajectory& u1 = base_solution().traj;
        const Trajectory u2 = partner_solution();
        const Field psi = cfg_.dual.psi.build(domain_, model_.m);
        std::vector<DualEstimates> est;
        VerificationReport rep;
        std::ostringstream ledger;
        ledger << "# config_hash=" << hash_ << "\n";
        ledger << "level,sup_grad_sq,lap_sq,psi_LsigmaN,sup_gstar_Lq0,liminf_min_grad,terminal_grad\n";
        for (int n : cfg_.dual.levels) {
            const std::string tag = "dual_n" + std::to_string(n);
            stage(tag, [&] {
                const AveragedCoefficients c = averaged_coefficients(model_, mollify(u1, n), mollify(u2, n),
                                                                     cfg_.dual.quad_points, cfg_.dual.q0);
                const Trajectory P = solve_dual(DualProblem{c, psi});
                est.push_back(dual_estimates(c, P, cfg_.dual.sigma_N, n));
                ReportEntry li = liminf_terminal_gradient_check(P, cfg_.dual.liminf_K, cfg_.dual.liminf_tol);
                li.name += "_n" + std::to_string(n);
                rep.add(li);
                const auto& e = est.back();
                ledger << n << ',' << format_double(e.sup_grad_sq) << ',' << format_double(e.lap_sq) << ','
                       << format_double(e.psi_LsigmaN) << ',' << format_double(e.sup_gstar_Lq0) << ','
                       << format_double(li.lhs) << ',' << format_double(li.rhs) << '\n';
                if (write_solutions) write_trajectory_csv(file(tag + ".csv").string(), P, meta());
                return 0;
            });
        }
        rep.add(dual_estimate_report(est, cfg_.dual.ceiling).entries);
        if (write_solutions) write_text("dual_estimates.csv", ledger.str());
        return rep;
    }

    int dual()
    {
        VerificationReport rep = dual_checks(true);
        rep.metadata = report_metadata(cfg_.dual.levels);
        write_report("dual_report", rep);
        log_ << "dual: " << (rep.passes() ? "pass" : "FAIL") << '\n';
        return rep.passes() ? exit_code::ok : exit_code::check_failed;
    }

    int uniqueness()
    {
        const auto& U = cfg_.uniqueness;
        std::ostringstream table;
        table << "# config_hash=" << hash_ << "\n";
        table << "level,nodes,dt,n,pairing,rhs_a,rhs_g,negative_pairing,threshold\n";
        std::vector<double> pairs, negs;
        double threshold = 0.0;
        std::vector<int> levels;
        for (std::size_t i = 0; i < U.ladder.size(); ++i) {
            const auto& L = U.ladder[i];
            levels.push_back(L.n);
            stage("uniqueness_level" + std::to_string(i), [&] {
                const Domain d = ladder_domain(L);
                SolverConfig sc = cfg_.solver;
                sc.dt = L.dt;
                sc.scheme = Scheme::fully_implicit;
                const FamilyResult r1 = solve(d, sc);
                SolverConfig ss = sc;
                ss.scheme = Scheme::semi_implicit;
                const FamilyResult r2 = solve(d, ss);
                const FamilyResult rn = solve(d, sc, U.negative_scale);
                const Field psi = cfg_.dual.psi.build(d, model_.m);
                const PairingResult p = uniqueness_pairing(model_, r1.traj, r2.traj, psi, L.n, cfg_.dual.quad_points);
                const PairingResult q = uniqueness_pairing(model_, r1.traj, rn.traj, psi, L.n, cfg_.dual.quad_points);
                const double sup_u = sup_norm_in_time(r1.traj, [](const Field& f) { return norm_Lp(f, 2.0); });
                threshold = U.threshold_factor * norm_Lp(psi, 2.0) * sup_u;
                pairs.push_back(p.pairing);
                negs.push_back(q.pairing);
                table << i << ',' << d.describe() << ',' << format_double(L.dt) << ',' << L.n << ','
                      << format_double(p.pairing) << ',' << format_double(p.rhs_a) << ',' << format_double(p.rhs_g)
                      << ',' << format_double(q.pairing) << ',' << format_double(threshold) << '\n';
                return 0;
            });
        }
        VerificationReport rep;
        double worst_increase = -INFINITY;
        for (std::size_t i = 1; i < pairs.size(); ++i)
            worst_increase = std::max(worst_increase, std::abs(pairs[i]) - std::abs(pairs[i - 1]));
        if (pairs.size() < 2) worst_increase = 0.0;
        double min_neg = INFINITY;
        for (double q : negs) min_neg = std::min(min_neg, std::abs(q));
        rep.add(ReportEntry::make("uniqueness_pairing_monotone", worst_increase, 0.0));
        rep.add(ReportEntry::make("uniqueness_pairing_final", std::abs(pairs.back()), threshold, 0.0,
                                  {{"threshold_factor", U.threshold_factor}}));
        rep.add(ReportEntry::make("uniqueness_negative_control", U.negative_factor * threshold, min_neg, 0.0,
                                  {{"negative_scale", U.negative_scale}}));
        rep.metadata = report_metadata(levels);
        write_text("pairing.csv", table.str());
        write_report("uniqueness_report", rep);
        log_ << "uniqueness: " << (rep.passes() ? "pass" : "FAIL") << '\n';
        return rep.passes() ? exit_code::ok : exit_code::check_failed;
    }

    std::vector<Trajectory> ladder_solutions()
    {
        std::vector<Trajectory> out;
        for (const auto& L : cfg_.checks.ladder) {
            SolverConfig sc = cfg_.solver;
            sc.dt = L.dt;
            out.push_back(solve(ladder_domain(L), sc).traj);
        }
        return out;
    }

    void run_check(const std::string& name, VerificationReport& rep)
    {
        const auto& k = cfg_.checks;
        const int m = model_.m;
        const auto ball = [&] { return sample_states(m, k.sample_radius, k.samples, cfg_.seed); };
        const auto orthant = [&] { return sample_nonnegative_states(m, k.sample_radius, k.samples, cfg_.seed); };
        if (name == "jacobian") {
            rep.add(jacobian_consistency(model_, ball(), k.jacobian_tol));
        } else if (name == "ellipticity") {
            int bad = 0;
            double worst = INFINITY;
            for (const auto& u : orthant()) {
                const auto c = ellipticity_certificate(model_, u);
                worst = std::min(worst, c.min_quadratic_form - c.lambda);
                if (!c.passes) ++bad;
            }
            rep.add(ReportEntry::flag("ellipticity_certificate", bad == 0,
                                      {{"failures", static_cast<double>(bad)}, {"min_gap", worst}}));
        } else if (name == "condition_F") {
            rep.add(check_condition_F(model_, ball(), cfg_.seed, k.condition_F_pairs, k.condition_F_tol).entries());
        } else if (name == "growth") {
            GrowthCeilings c{k.growth_lambda_ceiling, k.growth_f_ceiling, k.growth_f_jacobian_ceiling};
            rep.add(check_growth_conditions(model_, ball(), c, k.growth_min_radius).entries(c));
        } else if (name == "sktfu") {
            rep.add(check_sktfu(model_, k.sktfu_eps0, k.sktfu_C, orthant()));
        } else if (name == "jensen") {
            const Trajectory& tr = base_solution().traj;
            for (const auto& f : k.jensen_functionals) {
                VerificationReport r;
                if (f == "abs")
                    r = jensen_mollification_check(tr, cfg_.dual.levels, k.jensen_q0,
                                                   [](const Vector& v) { return v.norm(); }, k.jensen_tol, "abs");
                else if (f == "abs2")
                    r = jensen_mollification_check(tr, cfg_.dual.levels, k.jensen_q0,
                                                   [](const Vector& v) { return v.squaredNorm(); }, k.jensen_tol,
                                                   "abs2");
                else
                    r = jensen_mollification_check(model_, tr, cfg_.dual.levels, k.jensen_q0, k.jensen_tol);
                rep.add(r.entries);
            }
        } else if (name == "very_weak") {
            const Trajectory& tr = base_solution().traj;
            double worst = 0.0;
            for (const auto& tf : test_function_library(domain_, m, k.very_weak_count))
                worst = std::max(worst, very_weak_residual(model_, tr, tf));
            rep.add(ReportEntry::make("very_weak_residual", worst, k.very_weak_ceiling, 0.0,
                                      {{"test_functions", static_cast<double>(k.very_weak_count)}}));
        } else if (name == "energy_gronwall") {
            rep.add(energy_gronwall_check(model_, ladder_solutions(), cfg_.solver.sigma, k.stability).entries);
        } else if (name == "energy_monotone") {
            CrossDiffusionModel m0 = model_;
            m0.f = [m](const Vector&) { return Vector(Vector::Zero(m)); };
            m0.jacf = [m](const Vector&) { return Matrix(Matrix::Zero(m, m)); };
            const Field u0 = cfg_.initial.build(domain_, m);
            ReportEntry e = energy_monotonicity_check(m0, solve_family(m0, u0, cfg_.solver).traj);
            e.name += "_f0";
            rep.add(e);
        } else if (name == "apriori") {
            std::vector<SigmaRun> runs;
            for (double s : k.sigma_grid) {
                SolverConfig sc = cfg_.solver;
                sc.sigma = s;
                runs.push_back({s, solve(domain_, sc).traj});
            }
            rep.add(apriori_bounds_check(model_, runs, k.apriori_q0, k.apriori_tol, k.apriori_factor).entries);
        } else if (name == "interpolation") {
            const auto fields = random_smooth_fields(domain_, m, k.interpolation_count, cfg_.seed, k.field_max_mode, k.field_decay);
            rep.add(interpolation_inequality_check(fields, k.interpolation_eps, k.interpolation_beta,
                                                   k.interpolation_p, k.interpolation_q, k.functional_stability)
                        .entries);
        } else if (name == "parabolic_sobolev") {
            const auto samples =
                random_sobolev_samples(domain_, k.sobolev_count, cfg_.seed, 10, cfg_.solver.T / 10.0, 2.0,
                                       k.field_max_mode, k.field_decay);
            rep.add(parabolic_sobolev_check(samples, k.sobolev_p, k.sobolev_r, k.sobolev_r_star, k.sobolev_eps,
                                            k.functional_stability)
                        .entries);
        } else if (name == "skt_l2") {
            rep.add(skt_l2_gronwall_check(model_, ladder_solutions(), k.stability).entries);
        } else if (name == "bmo") {
            std::vector<double> radii = k.bmo_radii;
            if (radii.empty()) {
                double L = domain_.length(0);
                if (domain_.dim() == 2) L = std::min(L, domain_.length(1));
                radii = dyadic_radii(domain_, 0.25 * L);
            }
            rep.add(bmo_smallness_probe(base_solution().traj, radii, k.bmo_mu).entries);
        } else if (name == "dual_estimates" || name == "liminf") {
            const VerificationReport d = dual_checks(false);
            for (const auto& e : d.entries) {
                const bool is_liminf = e.name.rfind("liminf", 0) == 0;
                if ((name == "liminf") == is_liminf) rep.add(e);
            }
        }
    }

    int verify()
    {
        VerificationReport rep;
        for (const auto& name : cfg_.checks.selection) stage(name, [&] {
            run_check(name, rep);
            return 0;
        });
        rep.metadata = report_metadata(cfg_.dual.levels);
        write_report("verify_report", rep);
        for (const auto& e : rep.entries)
            log_ << (e.passes ? "  pass  " : "  FAIL  ") << e.name << "  lhs=" << format_double(e.lhs)
                 << " rhs=" << format_double(e.rhs) << '\n';
        log_ << "verify: " << rep.entries.size() << " entries, " << (rep.passes() ? "pass" : "FAIL") << '\n';
        return rep.passes() ? exit_code::ok : exit_code::check_failed;
    }

    int exponents()
    {
        const auto& e = cfg_.exponents;
        ExponentTable t;
        try {
            t = exponent_table(e.N, e.p, e.k, e.l, e.sigma_choice, e.q0_choice);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("exponents: ") + ex.what());
        }
        ordered_json j;
        j["config_hash"] = hash_;
        j["N"] = t.N;
        j["p"] = t.p;
        j["k"] = t.k;
        j["l"] = t.l;
        j["sigmaN"] = t.sigmaN;
        j["p2"] = t.p2;
        j["p_sigmaN"] = t.p_sigmaN;
        j["q0"] = t.q0;
        j["r_required"] = t.r_required;
        j["p_required"] = t.p_required;
        j["p_ok"] = t.p_ok;
        j["skt_uniqueness_ok"] = t.skt_uni_ok;
        j["generalized_skt_uniqueness_ok"] = t.gen_skt_uni_ok;
        write_text("exponents.json", j.dump(2) + "\n");
        log_ << j.dump(2) << '\n';
        return exit_code::ok;
    }

    int report()
    {
        VerificationReport merged;
        int found = 0;
        for (const char* stem : {"dual_report", "uniqueness_report", "verify_report"}) {
            const auto path = file(std::string(stem) + ".json");
            if (!std::filesystem::exists(path)) continue;
            std::ifstream is(path);
            ordered_json j;
            try {
                is >> j;
            } catch (const json::exception& e) {
                throw ConfigError(path.string() + ": " + e.what());
            }
            ++found;
            for (const auto& e : j.at("entries")) {
                ReportEntry r;
                r.name = std::string(stem) + "." + e.at("check_name").get<std::string>();
                auto num = [](const ordered_json& v) -> double {
                    if (v.is_number()) return v.get<double>();
                    if (v.is_string()) return v.get<std::string>() == "-inf" ? -INFINITY : INFINITY;
                    return NAN;
                };
                r.lhs = num(e.at("lhs"));
                r.rhs = num(e.at("rhs"));
                r.tol = e.at("tol").get<double>();
                for (auto it = e.at("constant").begin(); it != e.at("constant").end(); ++it)
                    r.constants.emplace_back(it.key(), num(it.value()));
                r.passes = e.at("passes").get<bool>();
                r.margin = num(e.at("margin"));
                merged.add(r);
            }
        }
        merged.metadata = report_metadata(cfg_.dual.levels);
        write_report("summary", merged);
        log_ << "report: merged " << found << " report(s), " << merged.entries.size() << " entries, "
             << (merged.passes() ? "pass" : "FAIL") << '\n';
        return merged.passes() ? exit_code::ok : exit_code::check_failed;
    }

    Config cfg_;
    std::filesystem::path out_;
    std::ostream& log_;
    std::string hash_;
    CrossDiffusionModel model_;
    Domain domain_;
    std::optional<FamilyResult> base_;
};

} // namespace skt

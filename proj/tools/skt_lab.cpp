// skt_lab: command-line front end for the cross-diffusion lab.
//
//   skt_lab <simulate|dual|uniqueness|verify|exponents|report> --config cfg.json --out DIR
//
// Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 solver failure.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skt/scenario.hpp"

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag)
{
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::stringstream is(item);
        T v;
        if (!(is >> v) || !is.eof()) throw skt::ConfigError(std::string(flag) + ": cannot parse '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw skt::ConfigError(std::string(flag) + ": empty list");
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cross-diffusion (SKT) numerical lab"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string levels, sigma_grid;
    std::vector<std::string> tols;

    for (const auto& name : skt::subcommands()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " scenario");
        sub->add_option("--config", config_path, "JSON scenario file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { seed = v; seed_set = true; }, "override the recorded seed");
        sub->add_option("--levels", levels, "comma-separated mollification levels");
        sub->add_option("--sigma-grid", sigma_grid, "comma-separated sigma values");
        sub->add_option("--tol", tols, "tolerance override key=value (repeatable)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : skt::exit_code::config_error;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    skt::Config cfg;
    try {
        cfg = skt::load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (!levels.empty()) cfg.dual.levels = parse_list<int>(levels, "--levels");
        if (!sigma_grid.empty()) cfg.checks.sigma_grid = parse_list<double>(sigma_grid, "--sigma-grid");
        for (const auto& t : tols) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw skt::ConfigError("--tol expects key=value, got '" + t + "'");
            skt::apply_tolerance_override(cfg, t.substr(0, eq), parse_list<double>(t.substr(eq + 1), "--tol").front());
        }
        skt::validate_config(cfg);
    } catch (const skt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return skt::exit_code::config_error;
    }

    skt::Scenario scenario(cfg, out_dir, std::cout);
    return scenario.run(sub);
}

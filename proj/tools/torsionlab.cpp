// Command-line runner: one subcommand per experiment, a JSON config file and a
// few flag overrides. Exit status 0 ok, 1 bound failure, 2 configuration or
// resolution error, 3 solver failure.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "torsionlab/experiments.hpp"

namespace tl = torsionlab;

namespace {

struct Overrides {
    std::string config;
    std::string domain;
    std::string x;
    double h = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 0;
    std::string replay;
    std::size_t walks = 0;
    double eps = 0.0;
    bool quiet = false;
};

tl::Point parse_point(const std::string& s) {
    tl::Point p;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            p.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw tl::ConfigError("cannot parse point '" + s + "'");
        }
    }
    if (p.empty()) throw tl::ConfigError("empty point");
    return p;
}

bool given(CLI::App& sub, const std::string& name) {
    const auto* opt = sub.get_option_no_throw(name);
    return opt && opt->count() > 0;
}

tl::ExperimentConfig build_config(const std::string& experiment, const Overrides& o, CLI::App& sub) {
    tl::ExperimentConfig cfg;
    if (!o.config.empty()) cfg = tl::load_config(o.config);
    if (!cfg.experiment.empty() && cfg.experiment != experiment)
        throw tl::ConfigError("config is for '" + cfg.experiment + "', not '" + experiment + "'");
    cfg.experiment = experiment;
    if (!o.domain.empty()) {
        try {
            cfg.domain = tl::domain_from_json(tl::json::parse(o.domain));
        } catch (const tl::json::parse_error& e) {
            throw tl::ConfigError(std::string("--domain: ") + e.what());
        } catch (const tl::InvalidArgument& e) {
            throw tl::ConfigError(std::string("--domain: ") + e.what());
        }
    }
    if (!o.x.empty()) cfg.x = parse_point(o.x);
    if (given(sub, "--h")) cfg.h = o.h;
    if (given(sub, "--seed")) cfg.seed = o.seed;
    if (given(sub, "--out")) cfg.out = o.out;
    if (given(sub, "--threads")) cfg.threads = o.threads;
    if (given(sub, "--replay")) cfg.replay = o.replay;
    if (given(sub, "--walks")) cfg.n_walks = o.walks;
    if (given(sub, "--eps")) cfg.eps_shell = o.eps;
    if (o.quiet) cfg.quiet = true;
    if (cfg.threads < 1) throw tl::ConfigError("--threads must be >= 1");
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"torsion function, principal eigenvalue and their product"};
    app.set_version_flag("--version", std::string(tl::version));
    app.require_subcommand(1);

    Overrides o;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"torsion", "solve -Laplace v = 1 and report sup v"},
        {"eig", "principal Dirichlet eigenvalue"},
        {"product", "lambda, sup v and their product with Richardson estimates"},
        {"convex-sweep", "rectangles, ellipses and polygons across aspect ratios"},
        {"perforated-sweep", "perforated cubes along the delta* family"},
        {"verify-bounds", "check every applicable inequality over a corpus"},
        {"wos", "walk-on-spheres estimate of v(x)"},
        {"survival", "time integral of the survival probability at x"},
        {"oracle-check", "finite differences vs walk-on-spheres vs survival integral"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* s = app.add_subcommand(name, help);
        s->set_help_flag("--help", "print this help message"); // frees -h/--h for the spacing
        s->add_option("config", o.config, "JSON config file")->check(CLI::ExistingFile);
        s->add_option("--domain", o.domain, "domain as inline JSON, e.g. {\"variant\":\"box\",\"sides\":[1,1]}");
        s->add_option("--h", o.h, "grid spacing (overrides the selection rule)")->check(CLI::PositiveNumber);
        s->add_option("--seed", o.seed, "random seed");
        s->add_option("--out", o.out, "output directory");
        s->add_option("--threads", o.threads, "worker threads");
        s->add_flag("--quiet", o.quiet, "no progress messages");
        if (name == "verify-bounds")
            s->add_option("--replay", o.replay, "recorded results to check instead of solving")
                ->check(CLI::ExistingFile);
        if (name == "wos" || name == "survival") s->add_option("--x", o.x, "probe point, comma separated");
        if (name == "wos" || name == "oracle-check") {
            s->add_option("--walks", o.walks, "number of walks")->check(CLI::PositiveNumber);
            s->add_option("--eps", o.eps, "absorption shell width")->check(CLI::PositiveNumber);
        }
        subs.push_back(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = nullptr;
    for (auto* s : subs)
        if (s->parsed()) sub = s;
    try {
        const auto cfg = build_config(sub->get_name(), o, *sub);
        const auto res = tl::run_experiment(cfg);
        std::cout << sub->get_name() << ": " << res.summary << '\n';
        for (const auto& f : res.files) std::cout << "  wrote " << f << '\n';
        return res.exit_code;
    } catch (const tl::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const tl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const tl::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

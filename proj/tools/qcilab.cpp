#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qcilab/qcilab.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    unsigned threads = 1;
    bool verify = false;
};

int run_verify() {
    int failures = 0;
    for (const auto& c : qcilab::verify_oracles()) {
        std::printf("%s %-40s value=%.12g expected=%.12g tol=%.1e\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.expected, c.tolerance);
        failures += c.pass ? 0 : 1;
    }
    return failures;
}

int execute(qcilab::Experiment experiment, const Options& opt) {
    if (opt.verify && run_verify() > 0) {
        std::cerr << "oracle cross-checks failed\n";
        return 3;
    }
    if (opt.config.empty()) {
        if (opt.verify) return 0;
        std::cerr << "--config is required\n";
        return 2;
    }
    qcilab::RunConfig config = qcilab::load_config(opt.config);
    if (config.experiment != experiment) {
        throw qcilab::ConfigError("run.experiment", std::string("is '") + qcilab::to_string(config.experiment) +
                                                        "' but the subcommand runs '" + qcilab::to_string(experiment) +
                                                        "'");
    }
    const auto dir = qcilab::resolve_output(config, opt.out);
    const auto result = qcilab::run(config, dir, qcilab::Parallelism{opt.threads});
    for (const auto& f : result.files) std::cout << f.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcilab: semiclassical quasimode and eigenfunction growth experiments"};
    app.require_subcommand(1);
    Options opt;
    const std::pair<const char*, qcilab::Experiment> commands[] = {
        {"mass", qcilab::Experiment::MassSweep},
        {"spectrum", qcilab::Experiment::SurfaceSpectrum},
        {"blowup", qcilab::Experiment::Blowup},
        {"classify", qcilab::Experiment::Classify},
        {"weyl", qcilab::Experiment::Weyl},
    };
    qcilab::Experiment chosen = qcilab::Experiment::MassSweep;
    for (const auto& [name, experiment] : commands) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + qcilab::to_string(experiment) + " experiment");
        sub->add_option("--config", opt.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (overrides QCILAB_OUT_DIR and run.output)");
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_flag("--verify", opt.verify, "run the embedded oracle cross-checks first");
        sub->callback([&chosen, experiment = experiment] { chosen = experiment; });
    }
    CLI11_PARSE(app, argc, argv);
    try {
        return execute(chosen, opt);
    } catch (const qcilab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "biortho/cli.hpp"

namespace {

int run_command(const std::string& cmd, const std::string& config_path, const biortho::cli::RunOptions& opt) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config " << config_path << "\n";
        return 2;
    }
    biortho::json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
        return 2;
    }
    if (!cfg.contains("command")) cfg["command"] = cmd;
    if (cfg.at("command").get<std::string>() != cmd) {
        std::cerr << "error: config command '" << cfg.at("command").get<std::string>()
                  << "' does not match the invoked subcommand '" << cmd << "'\n";
        return 2;
    }
    try {
        return biortho::cli::run(cfg, opt);
    } catch (const biortho::ConfigInvalid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"biorthogonal exponential toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    unsigned precision = 0;
    int threads = 0;

    for (const std::string name : {"classify", "biortho", "pw", "bounds", "cost", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--precision", precision, "override precision_bits");
        sub->add_option("--threads", threads, "worker threads (sweep)");
    }

    CLI11_PARSE(app, argc, argv);

    biortho::cli::RunOptions opt;
    opt.out_dir = out_dir;
    if (precision > 0) opt.precision_override = precision;
    if (threads > 0) opt.threads_override = threads;

    return run_command(app.get_subcommands().front()->get_name(), config_path, opt);
}

#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "blendimg/commands.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Imaging of small velocity perturbations with blended or stationary noise sources"};
    app.require_subcommand(1);

    blendimg::CommandOptions opt;
    opt.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::uint64_t seed = 0;
    std::string out, data;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", opt.config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "root seed, overrides the config");
        sub->add_option("--out", out, "output directory, overrides the config");
        sub->add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    };

    auto *forward = app.add_subcommand("forward", "simulate one data set and write it with provenance");
    common(forward);
    auto *image = app.add_subcommand("image", "image a data set on the configured grid");
    common(image);
    image->add_option("--method", opt.method, "imaging path")->check(CLI::IsMember({"spectral", "correlation"}));
    image->add_option("--data", data, "data file (default OUT/data.bin)");
    auto *sweep = app.add_subcommand("sweep", "scaling sweep of kernel integrals or ensembles");
    common(sweep);
    sweep->add_flag("--table", opt.table, "reproduce the full blended-source order table");
    auto *stability = app.add_subcommand("stability", "ensemble mean and fluctuation report");
    common(stability);
    auto *verify = app.add_subcommand("verify", "recompute hashes and rerun one stored result");
    common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : blendimg::kExitValidation;
    }

    for (auto *sub : app.get_subcommands()) {
        if (sub->count("--seed")) opt.seed = seed;
        if (sub->count("--out")) opt.out = out;
        if (!data.empty()) opt.data = data;
        return blendimg::run_command(sub->get_name(), opt, std::cerr);
    }
    return blendimg::kExitValidation;
}

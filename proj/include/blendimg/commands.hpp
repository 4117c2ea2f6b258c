#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "blendimg/config.hpp"
#include "blendimg/stats.hpp"

namespace blendimg {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitReproducibility = 3 };

// A rerun disagreed with a stored artifact.
struct ReproducibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    int workers = 1;
    // spectral or correlation
    std::string method = "spectral";
    bool table = false;
    std::optional<std::filesystem::path> data;
};

// Ensemble settings for a validated config; the evaluation points come from
// the config's image grid.
EnsembleConfig make_ensemble_config(const ExperimentConfig &cfg, int workers);

// Source spectra, quadrature and data of realization 0 of the config.
DataMatrix forward_data(const ExperimentConfig &cfg, int workers);

void cmd_forward(const ExperimentConfig &cfg, const std::filesystem::path &out, int workers, std::ostream &log);
void cmd_image(const ExperimentConfig &cfg, const std::filesystem::path &out, const std::filesystem::path &data,
               const std::string &method, int workers, std::ostream &log);
void cmd_sweep(const ExperimentConfig &cfg, const std::filesystem::path &out, bool table, int workers, std::ostream &log);
void cmd_stability(const ExperimentConfig &cfg, const std::filesystem::path &out, int workers, std::ostream &log);
// Throws ReproducibilityError when a stored artifact cannot be reproduced.
void cmd_verify(const ExperimentConfig &cfg, const std::filesystem::path &out, int workers, std::ostream &log);

// Loads the config, applies overrides, dispatches and maps failures to exit codes.
int run_command(const std::string &name, const CommandOptions &opt, std::ostream &log);

}  // namespace blendimg

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blendimg/geometry.hpp"
#include "blendimg/kernels.hpp"
#include "blendimg/signals.hpp"

namespace blendimg {

// Invalid or incomplete configuration; the message names the field and, when
// known, the source line.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArraySpec {
    double radius = 5.0;
    std::size_t n_sources = 1000;
    std::size_t n_receivers = 1000;
};

struct DelaySpec {
    std::string law = "uniform";
    double tau_max = 8.0;
    std::vector<double> t;
    std::vector<double> pdf;

    DelayModel model() const;
};

struct FrequencySpec {
    // "dft" (bins of the record period) or "gauss_legendre"
    std::string grid = "dft";
    std::size_t n_nodes = 33;
    // Record period for the DFT grid; 0 selects a default from the source model.
    double period = 0.0;
};

struct ImageSpec {
    // probe: center plus far set; line, plane, box, points
    std::string type = "probe";
    Point3 from{}, to{};
    Point3 center{};
    Point3 u{1, 0, 0}, v{0, 1, 0};
    double half_extent = 0.5;
    std::size_t n = 0;
    std::vector<Point3> points;
    std::size_t far_directions = 8;
    std::size_t far_offsets = 8;
    double far_radius = 0.5;
};

struct SweepSpec {
    // analytic kernel integrals or ensemble statistics
    std::string mode = "analytic";
    // epsilon, eta, t_tau or duration
    std::string variable = "eta";
    std::vector<double> values;
    std::string location = "center";
    std::string observable = "mean";

    // table mode lattice
    std::vector<double> table_eta = {0.02, 0.04, 0.08, 0.16, 0.32};
    double table_eps_at = 1e-3;
    std::vector<double> table_eps = {1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2};
    double table_eta_at = 0.16;
    std::vector<double> table_t_tau = {4, 8, 16, 32, 64};
};

struct ExperimentConfig {
    double c0 = 1.0;
    ArraySpec array;
    PerturbationKind kind = PerturbationKind::Ball;
    double epsilon = 0.01;
    double alpha = 1.0;
    Point3 center{};
    int quad_level = 3;
    SourceKind source = SourceKind::Blended;
    PulseSpec pulse;
    DelaySpec delays;
    StationaryNoiseModel noise;
    FrequencySpec frequency;
    double dt = 0.0;
    ImageSpec image;
    std::size_t realizations = 100;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    SweepSpec sweep;
    std::string method = "auto";

    // Computed on validation.
    bool sampling_adequate = false;
    std::vector<std::string> warnings;

    double eta() const;
    Perturbation perturbation() const;
    SphereArray make_array() const;
    FrequencyGrid make_grid() const;
    // Record period used for time-domain conversion.
    double record_period() const;
    // Sampling interval resolving the top of the band.
    double sample_interval() const;
    std::vector<Point3> image_points() const;
    IntegrationMethod integration_method() const;
    KernelModel kernel_model() const;

    // Throws ValidationError; fills sampling_adequate and warnings.
    void validate();

    // Canonical JSON (sorted keys, shortest round-trip doubles).
    std::string canonical_json() const;
    // Same, restricted to the fields that determine a data set.
    std::string data_json() const;
    std::string hash() const;
    std::string data_hash() const;
};

ExperimentConfig load_config(const std::filesystem::path &path);
ExperimentConfig parse_config(const std::string &yaml_text, const std::string &origin = "<config>");

std::string sha256_hex(const std::string &bytes);

}  // namespace blendimg

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "blendimg/forward.hpp"
#include "blendimg/geometry.hpp"
#include "blendimg/kernels.hpp"
#include "blendimg/signals.hpp"

namespace blendimg {

// One-pass mean and M2 (sum of squared deviations) per component.
class RunningStats {
public:
    explicit RunningStats(std::size_t dim = 1) : mean_(dim, 0.0), m2_(dim, 0.0) {}

    void push(const std::vector<double> &x);
    void merge(const RunningStats &other);

    std::size_t count() const { return n_; }
    std::size_t dim() const { return mean_.size(); }
    const std::vector<double> &mean() const { return mean_; }
    const std::vector<double> &m2() const { return m2_; }
    // Unbiased sample variance (divides by n - 1).
    std::vector<double> variance() const;

private:
    std::size_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

struct EnsembleStats {
    std::size_t n_realizations = 0;
    std::vector<Point3> points;
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<double> mc_error;

    std::size_t index_of(const Point3 &p) const;
};

struct EnsembleConfig {
    SphereArray array;
    Perturbation pert;
    QuadratureRule quad;
    SourceKind source = SourceKind::Blended;
    PulseSpec pulse;
    DelayModel delays = DelayModel::uniform(1.0);
    StationaryNoiseModel noise;
    FrequencyGrid grid;
    std::vector<Point3> points;
    double c0 = 1.0;
    int workers = 1;
    // Every realization reuses the root seed (degenerate ensemble).
    bool repeat_root_seed = false;
};

// Source spectra of realization `index` under root seed `seed`.
SourceSpectra realization_sources(const EnsembleConfig &cfg, std::uint64_t seed, std::size_t index);
// Image of one realization at the configured points.
std::vector<double> realization_image(const EnsembleConfig &cfg, std::uint64_t seed, std::size_t index);

// Realizations are accumulated in fixed blocks merged in a fixed binary tree,
// so the result does not depend on the worker count.
EnsembleStats run_ensemble(const EnsembleConfig &cfg, std::size_t n_realizations, std::uint64_t seed);

struct ScalingFit {
    std::string variable;
    std::vector<std::pair<double, double>> samples;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least squares on (log value, log observable).
ScalingFit fit_scaling(const std::vector<std::pair<double, double>> &samples, const std::string &variable = "x");

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit fit_linear(const std::vector<double> &x, const std::vector<double> &y);

struct StabilityInputs {
    Point3 center;
    std::vector<Point3> far;
    double eps = 0.0;
    double eta = 0.0;
    // T_τ for blended sources, T for stationary ones.
    double time_scale = 1.0;
};

struct StabilityCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string rule;
};

struct StabilityReport {
    AsymptoticPrediction prediction;
    std::size_t n_realizations = 0;
    double center_mean = 0.0, center_std = 0.0;
    double far_mean = 0.0, far_std = 0.0;
    double mean_contrast = 0.0;
    double typical_contrast = 0.0;
    std::vector<StabilityCheck> checks;

    bool all_pass() const;
    std::string to_json() const;
    std::string to_text() const;
};

StabilityReport stability_report(const EnsembleStats &stats, const AsymptoticPrediction &pred, const StabilityInputs &in);

}  // namespace blendimg

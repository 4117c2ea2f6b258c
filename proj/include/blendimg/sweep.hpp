#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blendimg/kernels.hpp"
#include "blendimg/stats.hpp"

namespace blendimg {

// Far set used by kernel sweeps. One direction suffices for the analytic
// integrals: every support is symmetric under rotation about its axis.
struct FarSpec {
    std::size_t directions = 1;
    std::size_t offsets = 8;
    double radius = 0.5;
};

struct SweepPoint {
    PerturbationKind kind = PerturbationKind::Ball;
    Location location = Location::Center;
    double eps = 0.01;
    double eta = 0.1;
};

// Monochromatic kernel integrals at one lattice point. At the far location I1
// is the max of |I1| over the far set and J1, J2 are taken where J1 + J2 peaks.
struct KernelSample {
    double I1 = 0.0;
    double J1 = 0.0;
    double J2 = 0.0;
    double J1_error = 0.0;
    std::string method;
    std::string error;

    bool ok() const { return error.empty(); }
    double mean() const { return I1; }
    // sqrt((J1 + J2) / T_τ)
    double std_at(double t_tau) const;
};

KernelSample evaluate_kernels(const SweepPoint &p, const IntegralOptions &opt, const FarSpec &far = {});

// Per-point results stored as small JSON files named by a hash of the point
// and the integration settings.
class SweepCache {
public:
    explicit SweepCache(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}

    std::string key(const SweepPoint &p, const IntegralOptions &opt, const FarSpec &far) const;
    std::optional<KernelSample> load(const std::string &key) const;
    void store(const std::string &key, const KernelSample &s) const;
    bool enabled() const { return !dir_.empty(); }

private:
    std::filesystem::path dir_;
};

// Evaluates every point, reusing cached ones; failures are recorded per point.
std::vector<KernelSample> evaluate_lattice(const std::vector<SweepPoint> &pts, const IntegralOptions &opt,
                                           const FarSpec &far, const SweepCache &cache, int workers,
                                           std::size_t *cache_hits = nullptr);

enum class Observable { Mean, Std };

std::string to_string(Observable o);

struct SweepRow {
    std::string variable;
    Observable observable = Observable::Mean;
    SweepPoint point;
    double t_tau = 1.0;
    KernelSample sample;
    double value = 0.0;
    double predicted_order = 0.0;
    double fitted_slope = 0.0;
};

struct ExponentCheck {
    std::string variable;
    double predicted = 0.0;
    double fitted = 0.0;
    double r2 = 0.0;
    bool pass = false;
    std::string error;
};

struct TableRow {
    PerturbationKind kind = PerturbationKind::Ball;
    Location location = Location::Center;
    Observable observable = Observable::Mean;
    Relation relation = Relation::Equivalent;
    std::string predicted;
    std::vector<ExponentCheck> checks;

    bool pass() const;
};

struct TableLattice {
    std::vector<double> eta = {0.02, 0.04, 0.08, 0.16, 0.32};
    double eps_at = 1e-3;
    std::vector<double> eps = {1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2};
    double eta_at = 0.16;
    std::vector<double> t_tau = {4, 8, 16, 32, 64};
};

struct TableResult {
    std::vector<SweepRow> rows;
    std::vector<TableRow> table;

    bool all_pass() const;
};

// Fits the exponent of an observable along one sweep variable. For ε sweeps
// the predicted |ln ε| power is divided out first.
ExponentCheck check_exponent(const std::vector<SweepRow> &rows, const std::string &variable, double predicted,
                             double log_eps_power, Relation rel);

// All twelve (kind × location × {mean, std}) rows of the blended-source table.
TableResult reproduce_table(const TableLattice &lat, const IntegralOptions &opt, const FarSpec &far,
                            const SweepCache &cache, int workers);

// Exponent tolerance on each variable.
inline constexpr double kExponentTolerance = 0.3;

void write_sweep_csv(const std::vector<SweepRow> &rows, const std::filesystem::path &path);
std::string table_json(const TableResult &t);
std::string table_text(const TableResult &t);

// %.17g
std::string format_double(double v);

}  // namespace blendimg

#pragma once

#include <cstdint>
#include <string>

#include "blendimg/geometry.hpp"
#include "blendimg/signals.hpp"

namespace blendimg {

enum class SourceKind { Blended, Stationary };

std::string to_string(SourceKind k);
SourceKind parse_source_kind(const std::string &s);

struct KernelModel {
    SourceKind source_kind = SourceKind::Blended;
    PulseSpec pulse;
    StationaryNoiseModel noise;
    double T_tau = 1.0;
    FrequencyGrid grid;
    // ρ_s·ρ_r of a discrete array; 1 reproduces the continuum constants.
    double density_factor = 1.0;

    static KernelModel blended(const PulseSpec &p, double T_tau, FrequencyGrid grid);
    static KernelModel stationary(const StationaryNoiseModel &m, FrequencyGrid grid);

    void validate() const;
    // |f̂(ω)|² for blended sources, T·F̂(ω) for stationary ones.
    double spectral_weight(double omega) const;
};

// (1/2⁵π³) ∫_ℝ ω⁴ W(ω) sinc²(ω|x - x'|/c0) dω on the model's band grid.
double mean_kernel(const KernelModel &m, const Point3 &x, const Point3 &xp, double c0 = 1.0);

// (1/2πT_τ) ∫_ℝ |f̂|⁴ ω⁸ (H1 + H2) dω, or (T/2π) ∫ |F̂|² ω⁸ (H1 + H2) dω.
double covariance_kernel(const KernelModel &m, const Point3 &x, const Point3 &xp, const Point3 &xpp, double c0 = 1.0);

enum class IntegrationMethod { Auto, Product, Axisymmetric, QuasiMonteCarlo };

std::string to_string(IntegrationMethod m);

struct IntegralOptions {
    // level + 1 Gauss–Legendre nodes per panel, panels no longer than η.
    int level = 3;
    IntegrationMethod method = IntegrationMethod::Auto;
    std::size_t qmc_points = std::size_t{1} << 18;
    std::uint64_t qmc_seed = 0x5eed;
};

// ∫ sinc²(|x - x'|/η) δc⁻²(x') dx'.
double i1_integral(const Perturbation &pert, const Point3 &x, double eta, int quad_level);
double i1_integral(const Perturbation &pert, const Point3 &x, double eta, const IntegralOptions &opt);

// 2πεη²(1 - sinc(2ε/η)).
double i1_closed_form_ball_center(double eps, double eta);

struct I2Result {
    double J1 = 0.0;
    double J2 = 0.0;
    // Two-level refinement estimate of the J1 error (quasi-Monte Carlo only).
    double J1_error = 0.0;
    IntegrationMethod method = IntegrationMethod::Product;
};

// J1 = ∬ H1 δc⁻² δc⁻², J2 = ∬ H2 δc⁻² δc⁻², both accumulated on one rule.
I2Result i2_integral(const Perturbation &pert, const Point3 &x, double eta, int quad_level);
I2Result i2_integral(const Perturbation &pert, const Point3 &x, double eta, const IntegralOptions &opt);

// True when x lies on the symmetry axis of the support (any x for the Ball).
bool on_symmetry_axis(const Perturbation &pert, const Point3 &x);

// Band-integrated ensemble mean of the image at x, continuum kernel.
double expected_image(const KernelModel &m, const Perturbation &pert, const Point3 &x, const IntegralOptions &opt,
                      double c0 = 1.0);
// Band-integrated variance of the image at x, continuum kernel.
double image_variance(const KernelModel &m, const Perturbation &pert, const Point3 &x, const IntegralOptions &opt,
                      double c0 = 1.0);

enum class Location { Center, Far };
enum class Relation { Equivalent, UpperBound };

std::string to_string(Location l);
std::string to_string(Relation r);

// Exponents of ε, η, |ln ε| and of the time scale (T_τ or T).
struct Monomial {
    double eps = 0.0;
    double eta = 0.0;
    double log_eps = 0.0;
    double time = 0.0;

    std::string str(SourceKind source) const;
};

struct AsymptoticPrediction {
    PerturbationKind kind = PerturbationKind::Ball;
    Location location = Location::Center;
    SourceKind source = SourceKind::Blended;
    Relation mean_relation = Relation::Equivalent;
    Relation std_relation = Relation::Equivalent;
    Monomial mean;
    Monomial std;
};

AsymptoticPrediction predicted_orders(PerturbationKind kind, Location loc, SourceKind source);

}  // namespace blendimg

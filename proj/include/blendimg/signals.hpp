#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace blendimg {

using cplx = std::complex<double>;

// Gaussian-modulated cosine f(t) = cos(omega0 t) exp(-b² t² / 2).
struct PulseSpec {
    double omega0 = 1.0;
    double bandwidth = 0.25;

    void validate() const;
};

// f̂(ω) = ∫ f(t) e^{iωt} dt.
cplx pulse_spectrum(const PulseSpec &p, double omega);
double pulse_signal(const PulseSpec &p, double t);

class DelayModel {
public:
    enum class Law { Uniform, Tabulated };

    static DelayModel uniform(double tau_max);
    // Piecewise-linear density through (t[i], pdf[i]); t strictly increasing.
    static DelayModel tabulated(std::vector<double> t, std::vector<double> pdf);

    Law law() const { return law_; }
    double tau_max() const;
    double pdf(double t) const;
    double draw(std::mt19937_64 &rng) const;

    const std::vector<double> &nodes() const { return t_; }
    const std::vector<double> &density() const { return p_; }

private:
    Law law_ = Law::Uniform;
    double tau_max_ = 0.0;
    std::vector<double> t_, p_, cdf_;
};

// (∫ p_τ² dt)^{-1}.
double t_tau(const DelayModel &d);
std::vector<double> sample_delays(const DelayModel &d, std::size_t n_sources, std::uint64_t seed);

enum class SpectrumShape { Gaussian, FlatBand };

std::string to_string(SpectrumShape s);
SpectrumShape parse_spectrum_shape(const std::string &s);

// Power spectrum F̂ centred on ±omega0 with width b, over a record of duration T.
struct StationaryNoiseModel {
    SpectrumShape shape = SpectrumShape::Gaussian;
    double omega0 = 1.0;
    double bandwidth = 0.25;
    double duration = 1.0;

    void validate() const;
    double spectrum(double omega) const;
    // F(t) = (1/2π) ∫ F̂(ω) e^{-iωt} dω.
    double autocorrelation(double t) const;
};

struct TimeSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> samples;

    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

// Spectral synthesis on [-T/2, T/2) with ceil(T/dt) samples (dt shrunk so the
// record is exactly periodic).
TimeSeries synthesize_stationary(const StationaryNoiseModel &m, double dt, std::uint64_t seed);

struct FrequencyGrid {
    std::vector<double> omegas;
    std::vector<double> weights;
    // Record length when the nodes are DFT bins k·2π/period; zero otherwise.
    double period = 0.0;
    std::vector<long> bins;

    static FrequencyGrid gauss_legendre(double omega0, double b, std::size_t n = 33);
    static FrequencyGrid dft_band(double omega0, double b, double T);

    std::size_t size() const { return omegas.size(); }
    bool dft_aligned() const { return period > 0.0; }
    double step() const;
    void validate() const;
    bool covers(double lo, double hi) const;
};

// Stream seed for item `index` under root seed `root`.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

// Complex Gaussian amplitudes with E|n̂(ω_j)|² = T·F̂(ω_j) on a DFT-aligned grid.
std::vector<cplx> stationary_amplitudes(const StationaryNoiseModel &m, const FrequencyGrid &grid,
                                        std::mt19937_64 &rng);

}  // namespace blendimg

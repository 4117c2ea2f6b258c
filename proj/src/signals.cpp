#include "blendimg/signals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blendimg/quadrature.hpp"
#include "fft.hpp"

namespace blendimg {

void PulseSpec::validate() const {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw std::invalid_argument("pulse omega0 must be positive");
    if (!(bandwidth > 0.0) || !(bandwidth < omega0)) throw std::invalid_argument("pulse bandwidth must satisfy 0 < b < omega0");
}

cplx pulse_spectrum(const PulseSpec &p, double omega) {
    const double b = p.bandwidth;
    const double c = std::sqrt(2.0 * M_PI) / (2.0 * b);
    const double dm = (omega - p.omega0) / b;
    const double dp = (omega + p.omega0) / b;
    return {c * (std::exp(-0.5 * dm * dm) + std::exp(-0.5 * dp * dp)), 0.0};
}

double pulse_signal(const PulseSpec &p, double t) {
    return std::cos(p.omega0 * t) * std::exp(-0.5 * p.bandwidth * p.bandwidth * t * t);
}

DelayModel DelayModel::uniform(double tau_max) {
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw std::invalid_argument("uniform delay law needs tau_max > 0");
    DelayModel d;
    d.law_ = Law::Uniform;
    d.tau_max_ = tau_max;
    return d;
}

DelayModel DelayModel::tabulated(std::vector<double> t, std::vector<double> pdf) {
    if (t.size() < 2 || t.size() != pdf.size()) throw std::invalid_argument("tabulated delay law needs matching t and pdf of length >= 2");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(pdf[i])) throw std::invalid_argument("tabulated delay law: non-finite entry");
        if (pdf[i] < 0.0) throw std::invalid_argument("tabulated delay law: negative density");
        if (i > 0 && !(t[i] > t[i - 1])) throw std::invalid_argument("tabulated delay law: times must increase strictly");
    }
    DelayModel d;
    d.law_ = Law::Tabulated;
    d.cdf_.assign(t.size(), 0.0);
    double mean = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double h = t[i] - t[i - 1];
        d.cdf_[i] = d.cdf_[i - 1] + 0.5 * h * (pdf[i - 1] + pdf[i]);
        // exact first moment of the linear interpolant on the segment
        mean += h * (pdf[i - 1] * (2.0 * t[i - 1] + t[i]) + pdf[i] * (t[i - 1] + 2.0 * t[i])) / 6.0;
    }
    const double total = d.cdf_.back();
    if (std::abs(total - 1.0) > 1e-8) throw std::invalid_argument("tabulated delay law: density does not integrate to 1");
    d.tau_max_ = std::max(std::abs(t.front()), std::abs(t.back()));
    if (std::abs(mean) > 1e-6 * d.tau_max_) throw std::invalid_argument("tabulated delay law: density must have zero mean");
    d.t_ = std::move(t);
    d.p_ = std::move(pdf);
    return d;
}

double DelayModel::tau_max() const { return tau_max_; }

double DelayModel::pdf(double t) const {
    if (law_ == Law::Uniform) return std::abs(t) <= tau_max_ ? 0.5 / tau_max_ : 0.0;
    if (t < t_.front() || t > t_.back()) return 0.0;
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = it == t_.end() ? t_.size() - 1 : static_cast<std::size_t>(it - t_.begin());
    const double s = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
    return p_[i - 1] + s * (p_[i] - p_[i - 1]);
}

double DelayModel::draw(std::mt19937_64 &rng) const {
    if (law_ == Law::Uniform) return std::uniform_real_distribution<double>(-tau_max_, tau_max_)(rng);
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
    if (i == 0) i = 1;
    const double h = t_[i] - t_[i - 1];
    const double p0 = p_[i - 1];
    const double a = (p_[i] - p0) / (2.0 * h);
    const double rem = u - cdf_[i - 1];
    const double disc = std::max(0.0, p0 * p0 + 4.0 * a * rem);
    const double denom = p0 + std::sqrt(disc);
    const double s = denom > 0.0 ? 2.0 * rem / denom : 0.0;
    return t_[i - 1] + std::clamp(s, 0.0, h);
}

double t_tau(const DelayModel &d) {
    if (d.law() == DelayModel::Law::Uniform) return 2.0 * d.tau_max();
    const auto &t = d.nodes();
    const auto &p = d.density();
    double sq = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double h = t[i] - t[i - 1];
        sq += h * (p[i - 1] * p[i - 1] + p[i - 1] * p[i] + p[i] * p[i]) / 3.0;
    }
    if (!(sq > 0.0)) throw std::invalid_argument("t_tau: density has zero square integral");
    return 1.0 / sq;
}

std::vector<double> sample_delays(const DelayModel &d, std::size_t n_sources, std::uint64_t seed) {
    if (n_sources == 0) throw std::invalid_argument("sample_delays: need at least one source");
    std::mt19937_64 rng(seed);
    std::vector<double> out(n_sources);
    for (auto &v : out) v = d.draw(rng);
    return out;
}

std::string to_string(SpectrumShape s) { return s == SpectrumShape::Gaussian ? "gaussian" : "flat"; }

SpectrumShape parse_spectrum_shape(const std::string &s) {
    if (s == "gaussian") return SpectrumShape::Gaussian;
    if (s == "flat" || s == "flat_band") return SpectrumShape::FlatBand;
    throw std::invalid_argument("unknown spectrum shape '" + s + "'");
}

void StationaryNoiseModel::validate() const {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw std::invalid_argument("noise omega0 must be positive");
    if (!(bandwidth > 0.0) || !(bandwidth < omega0)) throw std::invalid_argument("noise bandwidth must satisfy 0 < b < omega0");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw std::invalid_argument("noise duration T must be positive");
}

double StationaryNoiseModel::spectrum(double omega) const {
    const double d = std::abs(omega) - omega0;
    if (shape == SpectrumShape::Gaussian) return std::exp(-(d * d) / (bandwidth * bandwidth));
    return std::abs(d) <= bandwidth ? 1.0 : 0.0;
}

double StationaryNoiseModel::autocorrelation(double t) const {
    double lo, hi;
    if (shape == SpectrumShape::Gaussian) {
        lo = std::max(0.0, omega0 - 8.0 * bandwidth);
        hi = omega0 + 8.0 * bandwidth;
    } else {
        lo = omega0 - bandwidth;
        hi = omega0 + bandwidth;
    }
    const double panel = std::min(bandwidth / 4.0, M_PI / (4.0 * std::abs(t) + 1e-300));
    const Rule1D r = composite_gauss_legendre(lo, hi, 8, panel);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r.w[i] * spectrum(r.x[i]) * std::cos(r.x[i] * t);
    return acc / M_PI;
}

TimeSeries synthesize_stationary(const StationaryNoiseModel &m, double dt, std::uint64_t seed) {
    m.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("synthesize_stationary: dt must be positive");
    const double T = m.duration;
    const auto N = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    if (N < 2) throw std::invalid_argument("synthesize_stationary: record shorter than two samples");
    const double h = T / static_cast<double>(N);
    const double dw = 2.0 * M_PI / T;
    const std::size_t half = N / 2;

    double peak = 0.0;
    for (std::size_t k = 0; k <= half; ++k) {
        const double s = m.spectrum(dw * static_cast<double>(k));
        if (s < 0.0) throw std::invalid_argument("synthesize_stationary: negative power spectrum");
        peak = std::max(peak, s);
    }
    if (m.spectrum(M_PI / h) > 1e-6 * std::max(peak, m.spectrum(m.omega0)))
        throw std::invalid_argument("synthesize_stationary: dt does not resolve the spectrum");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<cplx> Y(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        const double power = T * m.spectrum(dw * static_cast<double>(k));
        cplx X;
        if (k == 0 || (N % 2 == 0 && k == half)) {
            X = {std::sqrt(power) * gauss(rng), 0.0};
        } else {
            const double s = std::sqrt(0.5 * power);
            const double re = gauss(rng);
            const double im = gauss(rng);
            X = {s * re, s * im};
        }
        Y[k] = std::conj(X) * (k % 2 == 0 ? 1.0 : -1.0);
    }
    TimeSeries ts;
    ts.t0 = -0.5 * T;
    ts.dt = h;
    ts.samples = fft::hermitian_synthesis(std::move(Y), N);
    for (auto &v : ts.samples) v /= T;
    return ts;
}

FrequencyGrid FrequencyGrid::gauss_legendre(double omega0, double b, std::size_t n) {
    if (!(b > 0.0) || !(omega0 - 3.0 * b > 0.0)) throw std::invalid_argument("frequency band must lie inside positive frequencies");
    if (n < 2) throw std::invalid_argument("frequency grid needs at least two nodes");
    const Rule1D r = blendimg::gauss_legendre(n, omega0 - 3.0 * b, omega0 + 3.0 * b);
    FrequencyGrid g;
    g.omegas = r.x;
    g.weights = r.w;
    return g;
}

FrequencyGrid FrequencyGrid::dft_band(double omega0, double b, double T) {
    if (!(b > 0.0) || !(omega0 - 3.0 * b > 0.0)) throw std::invalid_argument("frequency band must lie inside positive frequencies");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("frequency grid period must be positive");
    const double dw = 2.0 * M_PI / T;
    const long k_lo = std::max(1L, static_cast<long>(std::floor((omega0 - 3.0 * b) / dw)));
    const long k_hi = static_cast<long>(std::ceil((omega0 + 3.0 * b) / dw));
    FrequencyGrid g;
    g.period = T;
    for (long k = k_lo; k <= k_hi; ++k) {
        g.bins.push_back(k);
        g.omegas.push_back(dw * static_cast<double>(k));
        g.weights.push_back(dw);
    }
    if (g.size() < 2) throw std::invalid_argument("frequency grid needs at least two bins; increase T");
    return g;
}

double FrequencyGrid::step() const { return dft_aligned() ? 2.0 * M_PI / period : 0.0; }

void FrequencyGrid::validate() const {
    if (omegas.empty() || omegas.size() != weights.size()) throw std::invalid_argument("frequency grid: size mismatch");
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (!(omegas[i] > 0.0)) throw std::invalid_argument("frequency grid: nodes must be positive");
        if (i > 0 && !(omegas[i] > omegas[i - 1])) throw std::invalid_argument("frequency grid: nodes must increase strictly");
    }
}

bool FrequencyGrid::covers(double lo, double hi) const {
    if (omegas.empty()) return false;
    if (dft_aligned()) return omegas.front() <= lo + 1e-12 * hi && omegas.back() >= hi - 1e-12 * hi;
    double total = 0.0;
    for (double w : weights) total += w;
    return omegas.front() >= lo - 1e-12 * hi && omegas.back() <= hi + 1e-12 * hi &&
           std::abs(total - (hi - lo)) <= 1e-10 * (hi - lo);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<cplx> stationary_amplitudes(const StationaryNoiseModel &m, const FrequencyGrid &grid, std::mt19937_64 &rng) {
    if (!grid.dft_aligned() || std::abs(grid.period - m.duration) > 1e-12 * m.duration)
        throw std::invalid_argument("stationary sources need a DFT grid with period equal to the record length T");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<cplx> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double s = std::sqrt(0.5 * m.duration * m.spectrum(grid.omegas[j]));
        const double re = gauss(rng);
        const double im = gauss(rng);
        out[j] = {s * re, s * im};
    }
    return out;
}

}  // namespace blendimg

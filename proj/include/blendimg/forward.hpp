#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "blendimg/geometry.hpp"
#include "blendimg/signals.hpp"

namespace blendimg {

// Complex spectra on a frequency grid, one row per sensor (receiver data) or
// per source (source spectra). Only positive frequencies are stored; the
// negative half follows from Hermitian symmetry.
struct DataMatrix {
    FrequencyGrid grid;
    std::size_t rows = 0;
    std::vector<cplx> values;
    // Free-form JSON text describing the realization (delays, seeds, hashes).
    std::string meta;

    DataMatrix() = default;
    DataMatrix(FrequencyGrid g, std::size_t n_rows);

    std::size_t n_freq() const { return grid.size(); }
    cplx &at(std::size_t row, std::size_t j) { return values[row * grid.size() + j]; }
    const cplx &at(std::size_t row, std::size_t j) const { return values[row * grid.size() + j]; }
    cplx *row(std::size_t r) { return values.data() + r * grid.size(); }
    const cplx *row(std::size_t r) const { return values.data() + r * grid.size(); }
};

using SourceSpectra = DataMatrix;

// f̂(ω) e^{iωτ_s}.
cplx blended_source_spectrum(const PulseSpec &p, const std::vector<double> &delays, std::size_t s, double omega);

SourceSpectra blended_sources(const PulseSpec &p, const std::vector<double> &delays, const FrequencyGrid &grid);
SourceSpectra stationary_sources(const StationaryNoiseModel &m, std::size_t n_sources, const FrequencyGrid &grid,
                                 std::uint64_t seed);

// d̂(ω, x_r) = Σ_k w_k ω² Ĝ(ω,x_r,x_k) Σ_s Ĝ(ω,x_k,y_s) n̂_s(ω) δc⁻²(x_k).
DataMatrix born_forward(const Perturbation &pert, const QuadratureRule &quad, const SphereArray &array,
                        const SourceSpectra &src, const FrequencyGrid &grid, double c0 = 1.0, int workers = 1);

// Same map with an arbitrary model value per quadrature node.
DataMatrix born_forward_model(const std::vector<double> &model, const QuadratureRule &quad, const SphereArray &array,
                              const SourceSpectra &src, const FrequencyGrid &grid, double c0 = 1.0, int workers = 1);

// Real samples on t_m = -T/2 + m·dt, one row per sensor.
struct TraceMatrix {
    std::size_t rows = 0;
    std::size_t samples = 0;
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> values;

    double *row(std::size_t r) { return values.data() + r * samples; }
    const double *row(std::size_t r) const { return values.data() + r * samples; }
    double time(std::size_t m) const { return t0 + dt * static_cast<double>(m); }
};

// d(t) = (1/π) Re Σ_j w_j d̂(ω_j) e^{-iω_j t}. With a DFT grid of period T this
// is the exact inverse of from_time_domain. dt is shrunk to T/ceil(T/dt).
TraceMatrix to_time_domain(const DataMatrix &d, double dt, double T);

// d̂(ω_j) = dt Σ_m d(t_m) e^{iω_j t_m}.
DataMatrix from_time_domain(const TraceMatrix &tr, const FrequencyGrid &grid);

void write_data_binary(const DataMatrix &d, const std::filesystem::path &path);
DataMatrix read_data_binary(const std::filesystem::path &path);
void write_data_csv(const DataMatrix &d, const std::filesystem::path &path);

}  // namespace blendimg

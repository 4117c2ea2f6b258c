#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace blendimg::fft {

// out[m] = Σ_k Y_k e^{+2πikm/N} summed over the Hermitian extension of the
// N/2 + 1 half spectrum Y.
std::vector<double> hermitian_synthesis(std::vector<std::complex<double>> half, std::size_t N);

// X_k = Σ_m x_m e^{-2πikm/N}, k = 0..N/2.
std::vector<std::complex<double>> real_analysis(std::vector<double> x);

}  // namespace blendimg::fft

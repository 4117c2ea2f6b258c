#include "fft.hpp"

#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace blendimg::fft {

namespace {
// The FFTW planner is not reentrant.
std::mutex planner_mutex;
}  // namespace

std::vector<double> hermitian_synthesis(std::vector<std::complex<double>> half, std::size_t N) {
    if (N == 0 || half.size() != N / 2 + 1) throw std::invalid_argument("hermitian_synthesis: size mismatch");
    std::vector<double> out(N);
    auto *in = reinterpret_cast<fftw_complex *>(half.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(N), in, out.data(), FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("hermitian_synthesis: FFTW planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        fftw_destroy_plan(plan);
    }
    return out;
}

std::vector<std::complex<double>> real_analysis(std::vector<double> x) {
    const std::size_t N = x.size();
    if (N == 0) throw std::invalid_argument("real_analysis: empty input");
    std::vector<std::complex<double>> out(N / 2 + 1);
    auto *o = reinterpret_cast<fftw_complex *>(out.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(N), x.data(), o, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("real_analysis: FFTW planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace blendimg::fft

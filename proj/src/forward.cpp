#include "blendimg/forward.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "blendimg/greens.hpp"
#include "fft.hpp"
#include "parallel.hpp"

namespace blendimg {

DataMatrix::DataMatrix(FrequencyGrid g, std::size_t n_rows) : grid(std::move(g)), rows(n_rows), values(n_rows * grid.size()) {}

cplx blended_source_spectrum(const PulseSpec &p, const std::vector<double> &delays, std::size_t s, double omega) {
    if (s >= delays.size()) throw std::out_of_range("blended_source_spectrum: source index out of range");
    const double ph = omega * delays[s];
    return pulse_spectrum(p, omega) * cplx(std::cos(ph), std::sin(ph));
}

SourceSpectra blended_sources(const PulseSpec &p, const std::vector<double> &delays, const FrequencyGrid &grid) {
    SourceSpectra src(grid, delays.size());
    for (std::size_t s = 0; s < delays.size(); ++s)
        for (std::size_t j = 0; j < grid.size(); ++j) src.at(s, j) = blended_source_spectrum(p, delays, s, grid.omegas[j]);
    return src;
}

SourceSpectra stationary_sources(const StationaryNoiseModel &m, std::size_t n_sources, const FrequencyGrid &grid,
                                 std::uint64_t seed) {
    m.validate();
    SourceSpectra src(grid, n_sources);
    for (std::size_t s = 0; s < n_sources; ++s) {
        std::mt19937_64 rng(derive_seed(seed, s));
        const auto amp = stationary_amplitudes(m, grid, rng);
        std::copy(amp.begin(), amp.end(), src.row(s));
    }
    return src;
}

namespace {

void check_off_sensors(const std::vector<Point3> &pts, const SphereArray &array, const char *what) {
    const double tol = 1e-6 * array.radius;
    for (const auto &p : pts) {
        if (array.radius - p.norm() >= tol) continue;
        for (const auto *set : {&array.sources, &array.receivers})
            for (const auto &s : *set)
                if (distance(p, s) < tol) throw SingularEvaluation(std::string(what) + " coincides with a sensor");
    }
}

}  // namespace

DataMatrix born_forward_model(const std::vector<double> &model, const QuadratureRule &quad, const SphereArray &array,
                              const SourceSpectra &src, const FrequencyGrid &grid, double c0, int workers) {
    if (model.size() != quad.size()) throw std::invalid_argument("born_forward: model size differs from quadrature size");
    if (src.rows != array.n_sources() || src.n_freq() != grid.size())
        throw std::invalid_argument("born_forward: source spectra do not match array and grid");
    check_off_sensors(quad.nodes, array, "quadrature node");
    const std::size_t nf = grid.size();

    // incident field times model and weight at every active node
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < quad.size(); ++k)
        if (model[k] != 0.0) active.push_back(k);
    std::vector<cplx> field(active.size() * nf, cplx(0.0));
    detail::parallel_for(active.size(), workers, [&](std::size_t a) {
        const std::size_t k = active[a];
        std::vector<cplx> g(nf);
        cplx *u = field.data() + a * nf;
        for (std::size_t s = 0; s < array.n_sources(); ++s) {
            green_row(grid, distance(quad.nodes[k], array.sources[s]), c0, g.data());
            const cplx *n = src.row(s);
            for (std::size_t j = 0; j < nf; ++j) u[j] += g[j] * n[j];
        }
        const double wm = quad.weights[k] * model[k];
        for (std::size_t j = 0; j < nf; ++j) u[j] *= wm * grid.omegas[j] * grid.omegas[j];
    });

    DataMatrix d(grid, array.n_receivers());
    detail::parallel_for(array.n_receivers(), workers, [&](std::size_t r) {
        std::vector<cplx> g(nf);
        cplx *out = d.row(r);
        for (std::size_t a = 0; a < active.size(); ++a) {
            green_row(grid, distance(array.receivers[r], quad.nodes[active[a]]), c0, g.data());
            const cplx *u = field.data() + a * nf;
            for (std::size_t j = 0; j < nf; ++j) out[j] += g[j] * u[j];
        }
    });
    d.meta = src.meta;
    return d;
}

DataMatrix born_forward(const Perturbation &pert, const QuadratureRule &quad, const SphereArray &array,
                        const SourceSpectra &src, const FrequencyGrid &grid, double c0, int workers) {
    std::vector<double> model(quad.size());
    for (std::size_t k = 0; k < quad.size(); ++k) model[k] = indicator(pert, quad.nodes[k]);
    return born_forward_model(model, quad, array, src, grid, c0, workers);
}

namespace {

bool fft_compatible(const FrequencyGrid &grid, double T) {
    return grid.dft_aligned() && std::abs(grid.period - T) <= 1e-12 * T;
}

}  // namespace

TraceMatrix to_time_domain(const DataMatrix &d, double dt, double T) {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("to_time_domain: dt and T must be positive");
    const auto N = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    TraceMatrix tr;
    tr.rows = d.rows;
    tr.samples = N;
    tr.dt = T / static_cast<double>(N);
    tr.t0 = -0.5 * T;
    tr.values.assign(d.rows * N, 0.0);
    if (d.n_freq() == 0) return tr;
    if (!(d.grid.omegas.back() * tr.dt < M_PI)) throw std::invalid_argument("to_time_domain: dt aliases the frequency band");

    if (fft_compatible(d.grid, T)) {
        for (std::size_t r = 0; r < d.rows; ++r) {
            std::vector<cplx> Y(N / 2 + 1, cplx(0.0));
            for (std::size_t j = 0; j < d.n_freq(); ++j) {
                const auto k = static_cast<std::size_t>(d.grid.bins[j]);
                Y[k] = std::conj(d.at(r, j)) * (k % 2 == 0 ? 1.0 : -1.0);
            }
            const auto out = fft::hermitian_synthesis(std::move(Y), N);
            for (std::size_t m = 0; m < N; ++m) tr.row(r)[m] = out[m] / T;
        }
        return tr;
    }
    for (std::size_t r = 0; r < d.rows; ++r) {
        for (std::size_t m = 0; m < N; ++m) {
            const double t = tr.time(m);
            double acc = 0.0;
            for (std::size_t j = 0; j < d.n_freq(); ++j) {
                const double ph = -d.grid.omegas[j] * t;
                acc += d.grid.weights[j] * (d.at(r, j) * cplx(std::cos(ph), std::sin(ph))).real();
            }
            tr.row(r)[m] = acc / M_PI;
        }
    }
    return tr;
}

DataMatrix from_time_domain(const TraceMatrix &tr, const FrequencyGrid &grid) {
    DataMatrix d(grid, tr.rows);
    const double T = tr.dt * static_cast<double>(tr.samples);
    if (fft_compatible(grid, T) && std::abs(tr.t0 + 0.5 * T) <= 1e-12 * T) {
        for (std::size_t r = 0; r < tr.rows; ++r) {
            const auto X = fft::real_analysis(std::vector<double>(tr.row(r), tr.row(r) + tr.samples));
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const auto k = static_cast<std::size_t>(grid.bins[j]);
                if (k >= X.size()) throw std::invalid_argument("from_time_domain: frequency above Nyquist");
                d.at(r, j) = tr.dt * std::conj(X[k]) * (k % 2 == 0 ? 1.0 : -1.0);
            }
        }
        return d;
    }
    for (std::size_t r = 0; r < tr.rows; ++r) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            cplx acc = 0.0;
            for (std::size_t m = 0; m < tr.samples; ++m) {
                const double ph = grid.omegas[j] * tr.time(m);
                acc += tr.row(r)[m] * cplx(std::cos(ph), std::sin(ph));
            }
            d.at(r, j) = tr.dt * acc;
        }
    }
    return d;
}

namespace {

constexpr char kMagic[8] = {'B', 'L', 'I', 'M', 'G', 'D', 'M', '1'};

template <class T>
void put(std::ostream &os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char *>(buf), sizeof(T));
}

template <class T>
T get(std::istream &is) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char *>(buf), sizeof(T))) throw std::runtime_error("data file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void write_data_binary(const DataMatrix &d, const std::filesystem::path &path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, 1);
    put<std::uint64_t>(os, d.rows);
    put<std::uint64_t>(os, d.n_freq());
    put<double>(os, d.grid.period);
    for (std::size_t j = 0; j < d.n_freq(); ++j) {
        put<double>(os, d.grid.omegas[j]);
        put<double>(os, d.grid.weights[j]);
        put<std::int64_t>(os, d.grid.bins.empty() ? -1 : d.grid.bins[j]);
    }
    put<std::uint64_t>(os, d.meta.size());
    os.write(d.meta.data(), static_cast<std::streamsize>(d.meta.size()));
    for (const auto &v : d.values) {
        put<float>(os, static_cast<float>(v.real()));
        put<float>(os, static_cast<float>(v.imag()));
    }
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

DataMatrix read_data_binary(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path.string() + " is not a data matrix file");
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("unsupported data file version");
    const auto rows = get<std::uint64_t>(is);
    const auto nf = get<std::uint64_t>(is);
    FrequencyGrid g;
    g.period = get<double>(is);
    for (std::uint64_t j = 0; j < nf; ++j) {
        g.omegas.push_back(get<double>(is));
        g.weights.push_back(get<double>(is));
        const auto bin = get<std::int64_t>(is);
        if (bin >= 0) g.bins.push_back(static_cast<long>(bin));
    }
    if (g.dft_aligned() && g.bins.size() != nf) throw std::runtime_error("data file: inconsistent frequency bins");
    DataMatrix d(g, rows);
    d.meta.resize(get<std::uint64_t>(is));
    if (!is.read(d.meta.data(), static_cast<std::streamsize>(d.meta.size()))) throw std::runtime_error("data file truncated");
    for (auto &v : d.values) {
        const float re = get<float>(is);
        const float im = get<float>(is);
        v = {re, im};
    }
    return d;
}

void write_data_csv(const DataMatrix &d, const std::filesystem::path &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::fprintf(f, "row,omega,re,im\n");
    for (std::size_t r = 0; r < d.rows; ++r)
        for (std::size_t j = 0; j < d.n_freq(); ++j)
            std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", r, d.grid.omegas[j], d.at(r, j).real(), d.at(r, j).imag());
    std::fclose(f);
}

}  // namespace blendimg

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "blendimg/forward.hpp"
#include "blendimg/greens.hpp"

using namespace blendimg;

namespace {

struct Setup {
    SphereArray array = SphereArray::fibonacci(3.0, 20, 25);
    Perturbation pert{PerturbationKind::Ball, 0.1};
    QuadratureRule quad = support_quadrature(pert, 2, 0.1);
    PulseSpec pulse{8.0, 2.0};
    FrequencyGrid grid = FrequencyGrid::gauss_legendre(8.0, 2.0, 9);
    std::vector<double> delays = sample_delays(DelayModel::uniform(2.0), 20, 17);
    SourceSpectra src = blended_sources(pulse, delays, grid);
};

double max_abs(const DataMatrix &d) {
    double m = 0.0;
    for (const auto &v : d.values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("delayed source spectra") {
    const PulseSpec p{5.0, 1.0};
    const double w = 4.3;
    CHECK(blended_source_spectrum(p, {0.0}, 0, w) == pulse_spectrum(p, w));
    const double m = std::abs(pulse_spectrum(p, w));
    for (double tau : {-3.0, 0.7, 11.0}) CHECK(std::abs(blended_source_spectrum(p, {tau}, 0, w)) == doctest::Approx(m).epsilon(1e-14));
    const cplx full = blended_source_spectrum(p, {2.0 * M_PI / w}, 0, w);
    CHECK(std::abs(full - pulse_spectrum(p, w)) < 1e-14 * m);
    CHECK_THROWS_AS(blended_source_spectrum(p, {0.0}, 1, w), std::out_of_range);
}

TEST_CASE("zero amplitude gives zero data") {
    Setup s;
    const Perturbation zero(PerturbationKind::Ball, 0.1, 0.0);
    const DataMatrix d = born_forward(zero, s.quad, s.array, s.src, s.grid);
    CHECK(max_abs(d) == 0.0);
}

TEST_CASE("data are linear in the amplitude and in the model") {
    Setup s;
    const DataMatrix d1 = born_forward(s.pert, s.quad, s.array, s.src, s.grid);
    const DataMatrix d2 = born_forward(Perturbation(PerturbationKind::Ball, 0.1, 2.0), s.quad, s.array, s.src, s.grid);
    for (std::size_t i = 0; i < d1.values.size(); ++i) CHECK(std::abs(d2.values[i] - 2.0 * d1.values[i]) <= 1e-14 * max_abs(d1));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> a(s.quad.size()), b(s.quad.size()), ab(s.quad.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = g(rng);
        b[k] = g(rng);
        ab[k] = a[k] + b[k];
    }
    const DataMatrix da = born_forward_model(a, s.quad, s.array, s.src, s.grid);
    const DataMatrix db = born_forward_model(b, s.quad, s.array, s.src, s.grid);
    const DataMatrix dab = born_forward_model(ab, s.quad, s.array, s.src, s.grid);
    const double scale = max_abs(dab);
    for (std::size_t i = 0; i < dab.values.size(); ++i) CHECK(std::abs(dab.values[i] - da.values[i] - db.values[i]) <= 1e-12 * scale);
}

TEST_CASE("single path unrolled") {
    SphereArray arr;
    arr.radius = 2.0;
    arr.sources = {{0.0, 0.0, 2.0}};
    arr.receivers = {{2.0, 0.0, 0.0}};
    QuadratureRule q;
    q.nodes = {{0.05, -0.02, 0.01}};
    q.weights = {3e-4};
    const FrequencyGrid grid = FrequencyGrid::gauss_legendre(6.0, 1.0, 5);
    const PulseSpec p{6.0, 1.0};
    const SourceSpectra src = blended_sources(p, {0.3}, grid);
    const double alpha = 1.7;
    const DataMatrix d = born_forward_model({alpha}, q, arr, src, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double w = grid.omegas[j];
        const cplx expect = w * w * green_hat(w, arr.receivers[0], q.nodes[0]) * green_hat(w, q.nodes[0], arr.sources[0]) *
                            src.at(0, j) * q.weights[0] * alpha;
        CHECK(std::abs(d.at(0, j) - expect) <= 1e-13 * std::abs(expect));
    }
}

TEST_CASE("swapping a co-located source and receiver leaves the path invariant") {
    const Point3 a{0.0, 0.0, 2.0}, b{0.0, 2.0, 0.0};
    QuadratureRule q;
    q.nodes = {{0.1, 0.2, -0.1}};
    q.weights = {1e-3};
    const FrequencyGrid grid = FrequencyGrid::gauss_legendre(6.0, 1.0, 5);
    const SourceSpectra src = blended_sources({6.0, 1.0}, {0.0}, grid);
    SphereArray ab, ba;
    ab.radius = ba.radius = 2.0;
    ab.sources = {a};
    ab.receivers = {b};
    ba.sources = {b};
    ba.receivers = {a};
    const DataMatrix d1 = born_forward_model({1.0}, q, ab, src, grid);
    const DataMatrix d2 = born_forward_model({1.0}, q, ba, src, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(std::abs(d1.at(0, j) - d2.at(0, j)) <= 1e-15 * std::abs(d1.at(0, j)));
}

TEST_CASE("entries scale as omega squared times the pulse and the two spreading factors") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    const FrequencyGrid grid = FrequencyGrid::gauss_legendre(9.0, 2.0, 7);
    const PulseSpec p{9.0, 2.0};
    const SourceSpectra src = blended_sources(p, {0.0}, grid);
    for (int i = 0; i < 20; ++i) {
        SphereArray arr = SphereArray::fibonacci(2.5, 1, 1);
        QuadratureRule q;
        q.nodes = {{u(rng), u(rng), u(rng)}};
        q.weights = {1.0};
        const DataMatrix d = born_forward_model({1.0}, q, arr, src, grid);
        const double d1 = distance(arr.receivers[0], q.nodes[0]), d2 = distance(q.nodes[0], arr.sources[0]);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double w = grid.omegas[j];
            const double expect = w * w * std::abs(pulse_spectrum(p, w)) / (16.0 * M_PI * M_PI * d1 * d2);
            CHECK(std::abs(d.at(0, j)) == doctest::Approx(expect).epsilon(1e-13));
        }
    }
}

TEST_CASE("quadrature nodes on a sensor are refused") {
    SphereArray arr = SphereArray::fibonacci(1.0, 4, 4);
    QuadratureRule q;
    q.nodes = {arr.sources[2]};
    q.weights = {1.0};
    const FrequencyGrid grid = FrequencyGrid::gauss_legendre(6.0, 1.0, 3);
    const SourceSpectra src = blended_sources({6.0, 1.0}, {0, 0, 0, 0}, grid);
    CHECK_THROWS_AS(born_forward_model({1.0}, q, arr, src, grid), SingularEvaluation);
}

TEST_CASE("zero spectrum gives zero traces") {
    const FrequencyGrid grid = FrequencyGrid::dft_band(5.0, 1.0, 20.0);
    DataMatrix d(grid, 3);
    const TraceMatrix tr = to_time_domain(d, 0.1, 20.0);
    for (double v : tr.values) CHECK(v == 0.0);
}

TEST_CASE("time-domain round trip on the band") {
    const double T = 25.0;
    const FrequencyGrid grid = FrequencyGrid::dft_band(6.0, 1.5, T);
    DataMatrix d(grid, 4);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (auto &v : d.values) v = {g(rng), g(rng)};
    const TraceMatrix tr = to_time_domain(d, 0.05, T);
    CHECK(tr.dt * tr.samples == doctest::Approx(T));
    const DataMatrix back = from_time_domain(tr, grid);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        err = std::max(err, std::abs(back.values[i] - d.values[i]));
        ref = std::max(ref, std::abs(d.values[i]));
    }
    CHECK(err <= 1e-8 * ref);
}

TEST_CASE("a single bin is a sampled cosine") {
    const double T = 10.0;
    const FrequencyGrid grid = FrequencyGrid::dft_band(6.0, 1.5, T);
    DataMatrix d(grid, 1);
    const std::size_t j = 3;
    d.at(0, j) = cplx(2.0, -1.0);
    const TraceMatrix tr = to_time_domain(d, 0.05, T);
    const double w = grid.omegas[j];
    for (std::size_t m = 0; m < tr.samples; ++m) {
        const double t = tr.time(m);
        const double expect = grid.weights[j] / M_PI * (d.at(0, j) * std::exp(cplx(0.0, -w * t))).real();
        CHECK(tr.row(0)[m] == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
    }
    // the direct sum path agrees with the FFT path
    FrequencyGrid loose = grid;
    loose.period = 0.0;
    loose.bins.clear();
    DataMatrix e(loose, 1);
    e.values = d.values;
    const TraceMatrix direct = to_time_domain(e, 0.05, T);
    for (std::size_t m = 0; m < tr.samples; ++m) CHECK(direct.row(0)[m] == doctest::Approx(tr.row(0)[m]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("aliasing sample intervals are refused") {
    const FrequencyGrid grid = FrequencyGrid::dft_band(6.0, 1.5, 10.0);
    DataMatrix d(grid, 1);
    CHECK_THROWS_AS(to_time_domain(d, 0.5, 10.0), std::invalid_argument);
}

TEST_CASE("binary data files round trip") {
    Setup s;
    DataMatrix d = born_forward(s.pert, s.quad, s.array, s.src, s.grid);
    d.meta = R"({"seed":3})";
    const auto path = std::filesystem::temp_directory_path() / "blendimg_forward_test.bin";
    write_data_binary(d, path);
    const DataMatrix back = read_data_binary(path);
    CHECK(back.rows == d.rows);
    CHECK(back.grid.omegas == d.grid.omegas);
    CHECK(back.meta == d.meta);
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        CHECK(back.values[i].real() == static_cast<float>(d.values[i].real()));
        CHECK(back.values[i].imag() == static_cast<float>(d.values[i].imag()));
    }
    std::filesystem::remove(path);
    CHECK_THROWS(read_data_binary(path));
}

}

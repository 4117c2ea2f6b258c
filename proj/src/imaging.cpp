#include "blendimg/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "blendimg/greens.hpp"
#include "fft.hpp"
#include "parallel.hpp"

namespace blendimg {

std::size_t ImageGrid::index_of(const Point3 &p, double tol) const {
    const double scale = std::max(1.0, p.norm());
    for (std::size_t i = 0; i < points.size(); ++i)
        if (distance(points[i], p) <= tol * scale) return i;
    throw std::invalid_argument("image grid does not contain the requested point");
}

void validate_grid(const std::vector<Point3> &pts, const SphereArray &array) {
    std::map<std::tuple<double, double, double>, std::size_t> seen;
    const double tol = 1e-6 * array.radius;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto &p = pts[i];
        if (!p.finite()) throw std::invalid_argument("image grid point is not finite");
        if (!seen.emplace(std::make_tuple(p.x, p.y, p.z), i).second)
            throw std::invalid_argument("image grid points must be distinct");
        if (array.radius - p.norm() >= tol) continue;
        for (const auto *set : {&array.sources, &array.receivers})
            for (const auto &s : *set)
                if (distance(p, s) < tol) throw SingularEvaluation("image grid point coincides with a sensor");
    }
}

ImageGrid apply_adjoint(const DataMatrix &d, const SphereArray &array, const SourceSpectra &src,
                        const std::vector<Point3> &grid_pts, const FrequencyGrid &fgrid, double c0, int workers) {
    if (d.rows != array.n_receivers() || d.n_freq() != fgrid.size())
        throw std::invalid_argument("apply_adjoint: data do not match array and frequency grid");
    if (src.rows != array.n_sources() || src.n_freq() != fgrid.size())
        throw std::invalid_argument("apply_adjoint: source spectra do not match array and frequency grid");
    validate_grid(grid_pts, array);
    const std::size_t nf = fgrid.size();
    std::vector<double> coef(nf);
    for (std::size_t j = 0; j < nf; ++j) coef[j] = fgrid.weights[j] * fgrid.omegas[j] * fgrid.omegas[j] / M_PI;

    ImageGrid img;
    img.points = grid_pts;
    img.values.assign(grid_pts.size(), 0.0);
    detail::parallel_for(grid_pts.size(), workers, [&](std::size_t i) {
        const Point3 &x = grid_pts[i];
        std::vector<cplx> g(nf), u(nf, cplx(0.0)), v(nf, cplx(0.0));
        for (std::size_t s = 0; s < array.n_sources(); ++s) {
            green_row(fgrid, distance(x, array.sources[s]), c0, g.data());
            const cplx *n = src.row(s);
            for (std::size_t j = 0; j < nf; ++j) u[j] += g[j] * n[j];
        }
        for (std::size_t r = 0; r < array.n_receivers(); ++r) {
            green_row(fgrid, distance(x, array.receivers[r]), c0, g.data());
            const cplx *dr = d.row(r);
            for (std::size_t j = 0; j < nf; ++j) v[j] += g[j] * std::conj(dr[j]);
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < nf; ++j) acc += coef[j] * (u[j] * v[j]).real();
        img.values[i] = acc;
    });
    return img;
}

TraceMatrix second_derivative(const TraceMatrix &tr) {
    TraceMatrix out = tr;
    const std::size_t N = tr.samples;
    const double T = tr.dt * static_cast<double>(N);
    for (std::size_t r = 0; r < tr.rows; ++r) {
        auto X = fft::real_analysis(std::vector<double>(tr.row(r), tr.row(r) + N));
        for (std::size_t k = 0; k < X.size(); ++k) {
            const double w = 2.0 * M_PI * static_cast<double>(k) / T;
            X[k] *= (N % 2 == 0 && k == N / 2) ? 0.0 : -w * w;
        }
        const auto y = fft::hermitian_synthesis(std::move(X), N);
        for (std::size_t m = 0; m < N; ++m) out.row(r)[m] = y[m] / static_cast<double>(N);
    }
    return out;
}

namespace {

struct Interpolator {
    int W;
    double beta;
    double inv_i0_beta;

    double operator()(double s) const {
        if (std::abs(s) >= W) return 0.0;
        const double r = s / W;
        const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) * inv_i0_beta;
        return sinc(M_PI * s) * win;
    }
};

// out[m] += amp · x(m + shift) for the periodic sequence x of length N.
void add_shifted(std::vector<double> &out, const double *x, std::size_t N, double shift, double amp,
                 const Interpolator &k) {
    const double fl = std::floor(shift);
    const double f = shift - fl;
    const auto n = static_cast<long long>(N);
    const long long i0 = static_cast<long long>(fl);
    for (int q = -k.W + 1; q <= k.W; ++q) {
        const double c = amp * k(f - q);
        if (c == 0.0) continue;
        const auto start = static_cast<std::size_t>(((i0 + q) % n + n) % n);
        const std::size_t first = N - start;
        for (std::size_t m = 0; m < first; ++m) out[m] += c * x[start + m];
        for (std::size_t m = first; m < N; ++m) out[m] += c * x[m - first];
    }
}

}  // namespace

ImageGrid image_via_wave_correlation(const TraceMatrix &data, const SphereArray &array, const TraceMatrix &src,
                                     const std::vector<Point3> &grid_pts, double c0, const CorrelationOptions &opt) {
    if (data.rows != array.n_receivers() || src.rows != array.n_sources())
        throw std::invalid_argument("image_via_wave_correlation: traces do not match the array");
    if (data.samples != src.samples || std::abs(data.dt - src.dt) > 1e-12 * data.dt ||
        std::abs(data.t0 - src.t0) > 1e-12 * std::abs(data.dt * static_cast<double>(data.samples)))
        throw std::invalid_argument("image_via_wave_correlation: data and source signals use different time grids");
    if (opt.half_width < 2) throw std::invalid_argument("image_via_wave_correlation: interpolator half-width too small");
    validate_grid(grid_pts, array);

    const std::size_t N = data.samples;
    const double dt = data.dt;
    const double T = dt * static_cast<double>(N);
    for (const auto &x : grid_pts) {
        double ds = 0.0, dr = 0.0;
        for (const auto &s : array.sources) ds = std::max(ds, distance(x, s));
        for (const auto &r : array.receivers) dr = std::max(dr, distance(x, r));
        if ((ds + dr) / c0 >= T) throw std::invalid_argument("image_via_wave_correlation: record shorter than the travel times");
    }

    // Kaiser window sized for the band actually present in the traces
    double band = 0.0;
    {
        double total = 0.0;
        std::vector<double> power(N / 2 + 1, 0.0);
        for (std::size_t r = 0; r < data.rows; ++r) {
            const auto X = fft::real_analysis(std::vector<double>(data.row(r), data.row(r) + N));
            for (std::size_t k = 0; k < X.size(); ++k) power[k] += std::norm(X[k]);
        }
        for (double p : power) total += p;
        std::size_t kmax = 0;
        for (std::size_t k = 0; k < power.size(); ++k)
            if (power[k] > 1e-24 * total) kmax = k;
        band = 2.0 * M_PI * static_cast<double>(kmax) / T;
    }
    const int W = opt.half_width;
    const double guard = W * (M_PI - band * dt);
    const double beta = guard > M_PI ? std::sqrt(guard * guard - M_PI * M_PI) : 0.0;
    const Interpolator kern{W, beta, 1.0 / std::cyl_bessel_i(0.0, beta)};

    const TraceMatrix dtt = second_derivative(data);
    ImageGrid img;
    img.points = grid_pts;
    img.values.assign(grid_pts.size(), 0.0);
    detail::parallel_for(grid_pts.size(), opt.workers, [&](std::size_t i) {
        const Point3 &x = grid_pts[i];
        std::vector<double> u(N, 0.0), v(N, 0.0);
        for (std::size_t s = 0; s < array.n_sources(); ++s) {
            const double d = distance(x, array.sources[s]);
            add_shifted(u, src.row(s), N, -d / (c0 * dt), 1.0 / (4.0 * M_PI * d), kern);
        }
        for (std::size_t r = 0; r < array.n_receivers(); ++r) {
            const double d = distance(x, array.receivers[r]);
            add_shifted(v, dtt.row(r), N, d / (c0 * dt), 1.0 / (4.0 * M_PI * d), kern);
        }
        double acc = 0.0;
        for (std::size_t m = 0; m < N; ++m) acc += u[m] * v[m];
        img.values[i] = -dt * acc;
    });
    return img;
}

double contrast(const ImageGrid &img, const Perturbation &pert, const std::vector<Point3> &far) {
    if (far.empty()) throw std::invalid_argument("contrast: far-point set is empty");
    const double centre = std::abs(img.values[img.index_of(pert.center)]);
    double worst = 0.0;
    for (const auto &p : far) worst = std::max(worst, std::abs(img.values[img.index_of(p)]));
    if (worst == 0.0) return centre == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return centre / worst;
}

std::vector<Point3> far_points(const Perturbation &pert, double eta, std::size_t n_directions, std::size_t n_offsets,
                               double radius) {
    if (n_directions == 0 || n_offsets == 0) throw std::invalid_argument("far_points: empty far set");
    std::vector<Point3> out;
    const bool disc = pert.kind == PerturbationKind::Disc;
    const std::size_t nd = disc ? std::min<std::size_t>(n_directions, 2) : n_directions;
    for (std::size_t m = 0; m < n_offsets; ++m) {
        const double r = radius + M_PI * eta * static_cast<double>(m) / static_cast<double>(n_offsets);
        for (std::size_t k = 0; k < nd; ++k) {
            Point3 dir;
            if (disc) {
                dir = {k == 0 ? 1.0 : -1.0, 0.0, 0.0};
            } else {
                const double phi = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(nd);
                dir = {std::cos(phi), std::sin(phi), 0.0};
            }
            out.push_back(pert.center + dir * r);
        }
    }
    return out;
}

std::vector<Point3> line_grid(const Point3 &a, const Point3 &b, std::size_t n) {
    if (n < 2) throw std::invalid_argument("line_grid: need at least two points");
    std::vector<Point3> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * (static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

std::vector<Point3> plane_grid(const Point3 &center, const Point3 &u, const Point3 &v, double half_extent, std::size_t n) {
    if (n < 2) throw std::invalid_argument("plane_grid: need at least two points per side");
    std::vector<Point3> out;
    out.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = -half_extent + 2.0 * half_extent * static_cast<double>(i) / static_cast<double>(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            const double b = -half_extent + 2.0 * half_extent * static_cast<double>(j) / static_cast<double>(n - 1);
            out.push_back(center + u * a + v * b);
        }
    }
    return out;
}

std::vector<Point3> box_grid(const Point3 &center, double half_extent, std::size_t n) {
    if (n < 2) throw std::invalid_argument("box_grid: need at least two points per side");
    std::vector<Point3> out;
    out.reserve(n * n * n);
    auto coord = [&](std::size_t i) {
        return -half_extent + 2.0 * half_extent * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) out.push_back(center + Point3{coord(i), coord(j), coord(k)});
    return out;
}

void write_image_csv(const ImageGrid &img, const std::filesystem::path &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::fprintf(f, "x,y,z,value\n");
    for (std::size_t i = 0; i < img.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", img.points[i].x, img.points[i].y, img.points[i].z, img.values[i]);
    std::fclose(f);
}

void write_image_json(const ImageGrid &img, const std::string &meta_json, const std::filesystem::path &path) {
    nlohmann::json j;
    j["meta"] = meta_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta_json);
    auto &pts = j["points"] = nlohmann::json::array();
    for (std::size_t i = 0; i < img.size(); ++i)
        pts.push_back({{"x", img.points[i].x}, {"y", img.points[i].y}, {"z", img.points[i].z}, {"value", img.values[i]}});
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

}  // namespace blendimg

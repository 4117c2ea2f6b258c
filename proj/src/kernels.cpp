#include "blendimg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/random/sobol.hpp>
#include <gsl/gsl_sf_expint.h>

#include "blendimg/greens.hpp"
#include "blendimg/quadrature.hpp"

namespace blendimg {

std::string to_string(SourceKind k) { return k == SourceKind::Blended ? "blended" : "stationary"; }

SourceKind parse_source_kind(const std::string &s) {
    if (s == "blended") return SourceKind::Blended;
    if (s == "stationary") return SourceKind::Stationary;
    throw std::invalid_argument("unknown source model '" + s + "'");
}

std::string to_string(IntegrationMethod m) {
    switch (m) {
        case IntegrationMethod::Auto: return "auto";
        case IntegrationMethod::Product: return "product";
        case IntegrationMethod::Axisymmetric: return "axisymmetric";
        case IntegrationMethod::QuasiMonteCarlo: return "qmc";
    }
    return "unknown";
}

std::string to_string(Location l) { return l == Location::Center ? "center" : "far"; }
std::string to_string(Relation r) { return r == Relation::Equivalent ? "~=" : "<~"; }

KernelModel KernelModel::blended(const PulseSpec &p, double T_tau, FrequencyGrid grid) {
    KernelModel m;
    m.source_kind = SourceKind::Blended;
    m.pulse = p;
    m.T_tau = T_tau;
    m.grid = std::move(grid);
    m.validate();
    return m;
}

KernelModel KernelModel::stationary(const StationaryNoiseModel &n, FrequencyGrid grid) {
    KernelModel m;
    m.source_kind = SourceKind::Stationary;
    m.noise = n;
    m.grid = std::move(grid);
    m.validate();
    return m;
}

void KernelModel::validate() const {
    grid.validate();
    if (source_kind == SourceKind::Blended) {
        pulse.validate();
        if (!(T_tau > 0.0)) throw std::invalid_argument("kernel model: T_tau must be positive for blended sources");
    } else {
        noise.validate();
    }
}

double KernelModel::spectral_weight(double omega) const {
    if (source_kind == SourceKind::Blended) return std::norm(pulse_spectrum(pulse, omega));
    return noise.duration * noise.spectrum(omega);
}

double mean_kernel(const KernelModel &m, const Point3 &x, const Point3 &xp, double c0) {
    const double d = distance(x, xp);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.grid.size(); ++j) {
        const double w = m.grid.omegas[j];
        const double s = sinc(w * d / c0);
        acc += m.grid.weights[j] * std::pow(w, 4) * m.spectral_weight(w) * s * s;
    }
    // negative frequencies double the one-sided band
    return m.density_factor * 2.0 * acc / (32.0 * M_PI * M_PI * M_PI);
}

double covariance_kernel(const KernelModel &m, const Point3 &x, const Point3 &xp, const Point3 &xpp, double c0) {
    const double d1 = distance(x, xp), d2 = distance(x, xpp), d3 = distance(xp, xpp);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.grid.size(); ++j) {
        const double w = m.grid.omegas[j];
        const double s1 = sinc(w * d1 / c0), s2 = sinc(w * d2 / c0), s3 = sinc(w * d3 / c0);
        double weight;
        if (m.source_kind == SourceKind::Blended) {
            const double f2 = std::norm(pulse_spectrum(m.pulse, w));
            weight = f2 * f2;
        } else {
            const double F = m.noise.spectrum(w);
            weight = F * F;
        }
        acc += m.grid.weights[j] * weight * std::pow(w, 8) * (s1 * s2 * s3 + s1 * s1 * s2 * s2);
    }
    const double pre = m.source_kind == SourceKind::Blended ? 1.0 / (2.0 * M_PI * m.T_tau) : m.noise.duration / (2.0 * M_PI);
    return m.density_factor * m.density_factor * pre * 2.0 * acc;
}

namespace {

// Cin(z) = ∫_0^z (1 - cos t)/t dt.
double cin(double z) {
    z = std::abs(z);
    if (z < 2.0) {
        const double z2 = z * z;
        double term = z2 / 2.0;  // z^{2k}/(2k)! at k = 1
        double acc = 0.0;
        for (int k = 1; k < 30; ++k) {
            const double add = term / (2.0 * k);
            acc += (k % 2 == 1) ? add : -add;
            if (add < 1e-18 * acc) break;
            term *= z2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        }
        return acc;
    }
    return std::numbers::egamma + std::log(z) - gsl_sf_Ci(z);
}

double sinc_eta(double d, double eta) { return sinc(d / eta); }

// Axis of revolution of the support and the axial coordinate of x.
struct AxisFrame {
    Point3 e;
    double xi = 0.0;
};

AxisFrame axis_frame(const Perturbation &p, const Point3 &x) {
    const Point3 d = x - p.center;
    switch (p.kind) {
        case PerturbationKind::Ball: {
            const double n = d.norm();
            if (n == 0.0) return {{0.0, 0.0, 1.0}, 0.0};
            return {d * (1.0 / n), n};
        }
        case PerturbationKind::Cylinder: return {{0.0, 0.0, 1.0}, d.z};
        case PerturbationKind::Disc: return {{1.0, 0.0, 0.0}, d.x};
    }
    return {};
}

void check_resolution(const QuadratureRule &rule, double eta) {
    if (rule.max_spacing > eta / 3.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "quadrature spacing " << rule.max_spacing << " exceeds eta/3 = " << eta / 3.0;
        throw ResolutionError(os.str());
    }
}

double i1_product(const Perturbation &pert, const Point3 &x, double eta, int level) {
    const QuadratureRule rule = support_quadrature(pert, level, eta);
    check_resolution(rule, eta);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double s = sinc_eta(distance(x, rule.nodes[k]), eta);
        acc += rule.weights[k] * s * s;
    }
    return pert.alpha * acc;
}

// Radial integral over full cross-sections in closed form, axial integral by
// composite Gauss–Legendre.
double i1_axisymmetric(const Perturbation &pert, const Point3 &x, double eta, int level) {
    if (!on_symmetry_axis(pert, x)) throw std::invalid_argument("i1_integral: point is off the symmetry axis");
    const AxisFrame f = axis_frame(pert, x);
    const std::size_t q = static_cast<std::size_t>(level) + 1;
    auto slab = [&](double a, double rho_max) {
        const double s1 = std::abs(f.xi - a);
        const double s2 = std::hypot(s1, rho_max);
        return M_PI * eta * eta * (cin(2.0 * s2 / eta) - cin(2.0 * s1 / eta));
    };
    double acc = 0.0;
    switch (pert.kind) {
        case PerturbationKind::Ball: {
            const double eps = pert.epsilon;
            const Rule1D th = composite_gauss_legendre(-0.5 * M_PI, 0.5 * M_PI, q, eta / eps);
            for (std::size_t i = 0; i < th.size(); ++i) {
                const double c = std::cos(th.x[i]);
                acc += th.w[i] * eps * c * slab(eps * std::sin(th.x[i]), eps * c);
            }
            break;
        }
        case PerturbationKind::Cylinder: {
            const double h = Perturbation::kCylinderHalfLength;
            const Rule1D a = composite_gauss_legendre(-h, h, q, eta);
            for (std::size_t i = 0; i < a.size(); ++i) acc += a.w[i] * slab(a.x[i], pert.epsilon);
            break;
        }
        case PerturbationKind::Disc: {
            const Rule1D a = composite_gauss_legendre(-pert.epsilon, pert.epsilon, q, eta);
            for (std::size_t i = 0; i < a.size(); ++i) acc += a.w[i] * slab(a.x[i], Perturbation::kDiscRadius);
            break;
        }
    }
    return pert.alpha * acc;
}

I2Result i2_product(const Perturbation &pert, const Point3 &x, double eta, int level) {
    const QuadratureRule rule = support_quadrature(pert, level, eta);
    check_resolution(rule, eta);
    const std::size_t n = rule.size();
    std::vector<double> P(n), Q(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = sinc_eta(distance(x, rule.nodes[k]), eta);
        P[k] = pert.alpha * rule.weights[k] * s;
        Q[k] = P[k] * s;
    }
    double j1 = 0.0, j2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Point3 &xk = rule.nodes[k];
        double r1 = 0.0, r2 = 0.0;
        for (std::size_t l = k + 1; l < n; ++l) {
            r1 += P[l] * sinc_eta(distance(xk, rule.nodes[l]), eta);
            r2 += Q[l];
        }
        j1 += P[k] * (P[k] + 2.0 * r1);
        j2 += Q[k] * (Q[k] + 2.0 * r2);
    }
    return {j1, j2, 0.0, IntegrationMethod::Product};
}

// Fix the azimuth of x', integrate the relative azimuth in closed loop.
I2Result i2_axisymmetric(const Perturbation &pert, const Point3 &x, double eta, int level) {
    if (pert.kind == PerturbationKind::Ball)
        throw std::invalid_argument("i2_integral: the axisymmetric rule covers the cylinder and the disc");
    if (!on_symmetry_axis(pert, x)) throw std::invalid_argument("i2_integral: point is off the symmetry axis");
    const AxisFrame f = axis_frame(pert, x);
    const std::size_t q = static_cast<std::size_t>(level) + 1;
    double a_lo, a_hi, rho_max;
    if (pert.kind == PerturbationKind::Cylinder) {
        a_lo = -Perturbation::kCylinderHalfLength;
        a_hi = Perturbation::kCylinderHalfLength;
        rho_max = pert.epsilon;
    } else {
        a_lo = -pert.epsilon;
        a_hi = pert.epsilon;
        rho_max = Perturbation::kDiscRadius;
    }
    const Rule1D a = composite_gauss_legendre(a_lo, a_hi, q, eta);
    const Rule1D rho = composite_gauss_legendre(0.0, rho_max, q, eta);
    const Rule1D phi = composite_gauss_legendre(0.0, M_PI, q, eta / rho_max);
    std::vector<double> cphi(phi.size());
    for (std::size_t m = 0; m < phi.size(); ++m) cphi[m] = std::cos(phi.x[m]);

    const std::size_t n = a.size() * rho.size();
    std::vector<double> A(n), R(n), P(n), Q(n);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < rho.size(); ++k) {
            const std::size_t idx = i * rho.size() + k;
            const double s = sinc_eta(std::hypot(f.xi - a.x[i], rho.x[k]), eta);
            A[idx] = a.x[i];
            R[idx] = rho.x[k];
            P[idx] = pert.alpha * a.w[i] * rho.w[k] * rho.x[k] * s;
            Q[idx] = P[idx] * s;
        }
    }
    double phi_total = 0.0;
    for (double w : phi.w) phi_total += w;
    auto ring = [&](std::size_t u, std::size_t v) {
        const double da = A[u] - A[v];
        const double base = da * da + R[u] * R[u] + R[v] * R[v];
        const double cross = 2.0 * R[u] * R[v];
        double acc = 0.0;
        for (std::size_t m = 0; m < phi.size(); ++m)
            acc += phi.w[m] * sinc_eta(std::sqrt(std::max(0.0, base - cross * cphi[m])), eta);
        return acc;
    };
    double j1 = 0.0, j2 = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        double r1 = 0.0, r2 = 0.0;
        for (std::size_t v = u + 1; v < n; ++v) {
            r1 += P[v] * ring(u, v);
            r2 += Q[v];
        }
        j1 += P[u] * (P[u] * ring(u, u) + 2.0 * r1);
        j2 += Q[u] * (Q[u] + 2.0 * r2);
    }
    // outer azimuth 2π, relative azimuth folded onto [0, π]
    const double fold = 2.0 * M_PI * 2.0;
    return {fold * j1, fold * phi_total * j2, 0.0, IntegrationMethod::Axisymmetric};
}

Point3 map_unit_cube(const Perturbation &p, double u1, double u2, double u3) {
    const double eps = p.epsilon;
    switch (p.kind) {
        case PerturbationKind::Ball: {
            const double r = eps * std::cbrt(u1);
            const double mu = 2.0 * u2 - 1.0;
            const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            const double ph = 2.0 * M_PI * u3;
            return p.center + Point3{r * st * std::cos(ph), r * st * std::sin(ph), r * mu};
        }
        case PerturbationKind::Cylinder: {
            const double r = eps * std::sqrt(u1);
            const double ph = 2.0 * M_PI * u2;
            return p.center + Point3{r * std::cos(ph), r * std::sin(ph),
                                     Perturbation::kCylinderHalfLength * (2.0 * u3 - 1.0)};
        }
        case PerturbationKind::Disc: {
            const double r = Perturbation::kDiscRadius * std::sqrt(u2);
            const double ph = 2.0 * M_PI * u3;
            return p.center + Point3{eps * (2.0 * u1 - 1.0), r * std::cos(ph), r * std::sin(ph)};
        }
    }
    return p.center;
}

// Randomly shifted Sobol points; the error estimate compares the first half
// of the sequence with the whole.
I2Result i2_qmc(const Perturbation &pert, const Point3 &x, double eta, std::size_t n_points, std::uint64_t seed) {
    if (n_points < 2) throw std::invalid_argument("i2_integral: quasi-Monte Carlo needs at least two points");
    boost::random::sobol gen(6);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double shift[6];
    for (double &s : shift) s = uni(rng);
    const double scale = 0x1p-64;
    const double vol = pert.support_volume();
    const std::size_t half = n_points / 2;
    double s1 = 0.0, s2 = 0.0, s1_half = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        double u[6];
        for (int d = 0; d < 6; ++d) {
            const double v = static_cast<double>(gen()) * scale + shift[d];
            u[d] = v - std::floor(v);
        }
        const Point3 p1 = map_unit_cube(pert, u[0], u[1], u[2]);
        const Point3 p2 = map_unit_cube(pert, u[3], u[4], u[5]);
        const double a = sinc_eta(distance(x, p1), eta);
        const double b = sinc_eta(distance(x, p2), eta);
        s1 += a * b * sinc_eta(distance(p1, p2), eta);
        s2 += a * a * b * b;
        if (i + 1 == half) s1_half = s1;
    }
    const double norm = pert.alpha * pert.alpha * vol * vol;
    I2Result r;
    r.J1 = norm * s1 / static_cast<double>(n_points);
    r.J2 = norm * s2 / static_cast<double>(n_points);
    r.J1_error = std::abs(r.J1 - norm * s1_half / static_cast<double>(half));
    r.method = IntegrationMethod::QuasiMonteCarlo;
    return r;
}

double i1_qmc(const Perturbation &pert, const Point3 &x, double eta, std::size_t n_points, std::uint64_t seed) {
    if (n_points < 1) throw std::invalid_argument("i1_integral: quasi-Monte Carlo needs at least one point");
    boost::random::sobol gen(3);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double shift[3];
    for (double &s : shift) s = uni(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        double u[3];
        for (int d = 0; d < 3; ++d) {
            const double v = static_cast<double>(gen()) * 0x1p-64 + shift[d];
            u[d] = v - std::floor(v);
        }
        const double s = sinc_eta(distance(x, map_unit_cube(pert, u[0], u[1], u[2])), eta);
        acc += s * s;
    }
    return pert.alpha * pert.support_volume() * acc / static_cast<double>(n_points);
}

}  // namespace

bool on_symmetry_axis(const Perturbation &pert, const Point3 &x) {
    const Point3 d = x - pert.center;
    const double tol = 1e-12 * std::max(1.0, d.norm());
    switch (pert.kind) {
        case PerturbationKind::Ball: return true;
        case PerturbationKind::Cylinder: return std::hypot(d.x, d.y) <= tol;
        case PerturbationKind::Disc: return std::hypot(d.y, d.z) <= tol;
    }
    return false;
}

double i1_integral(const Perturbation &pert, const Point3 &x, double eta, int quad_level) {
    IntegralOptions opt;
    opt.level = quad_level;
    return i1_integral(pert, x, eta, opt);
}

double i1_integral(const Perturbation &pert, const Point3 &x, double eta, const IntegralOptions &opt) {
    if (!(eta > 0.0)) throw std::invalid_argument("i1_integral: eta must be positive");
    if (opt.level < 1) throw std::invalid_argument("i1_integral: level must be at least 1");
    IntegrationMethod m = opt.method;
    if (m == IntegrationMethod::Auto)
        m = (pert.kind != PerturbationKind::Ball && on_symmetry_axis(pert, x)) ? IntegrationMethod::Axisymmetric
                                                                                : IntegrationMethod::Product;
    switch (m) {
        case IntegrationMethod::Axisymmetric: return i1_axisymmetric(pert, x, eta, opt.level);
        case IntegrationMethod::QuasiMonteCarlo: return i1_qmc(pert, x, eta, opt.qmc_points, opt.qmc_seed);
        default: return i1_product(pert, x, eta, opt.level);
    }
}

double i1_closed_form_ball_center(double eps, double eta) {
    if (!(eps > 0.0) || !(eta > 0.0)) throw std::invalid_argument("i1_closed_form_ball_center: eps and eta must be positive");
    const double r = eps / eta;
    if (r < 1e-3) {
        // Taylor form avoids cancellation in 1 - sinc
        const double r2 = r * r;
        return 4.0 / 3.0 * M_PI * eps * eps * eps * (1.0 - r2 / 5.0 + 2.0 * r2 * r2 / 105.0);
    }
    return 2.0 * M_PI * eps * eta * eta * (1.0 - sinc(2.0 * r));
}

I2Result i2_integral(const Perturbation &pert, const Point3 &x, double eta, int quad_level) {
    IntegralOptions opt;
    opt.level = quad_level;
    return i2_integral(pert, x, eta, opt);
}

I2Result i2_integral(const Perturbation &pert, const Point3 &x, double eta, const IntegralOptions &opt) {
    if (!(eta > 0.0)) throw std::invalid_argument("i2_integral: eta must be positive");
    if (opt.level < 1) throw std::invalid_argument("i2_integral: level must be at least 1");
    IntegrationMethod m = opt.method;
    if (m == IntegrationMethod::Auto) {
        if (pert.kind == PerturbationKind::Ball) m = IntegrationMethod::Product;
        else if (on_symmetry_axis(pert, x)) m = IntegrationMethod::Axisymmetric;
        else if (pert.kind == PerturbationKind::Cylinder) m = IntegrationMethod::Product;
        else m = IntegrationMethod::QuasiMonteCarlo;
    }
    switch (m) {
        case IntegrationMethod::Axisymmetric: return i2_axisymmetric(pert, x, eta, opt.level);
        case IntegrationMethod::QuasiMonteCarlo: return i2_qmc(pert, x, eta, opt.qmc_points, opt.qmc_seed);
        default: return i2_product(pert, x, eta, opt.level);
    }
}

double expected_image(const KernelModel &m, const Perturbation &pert, const Point3 &x, const IntegralOptions &opt,
                      double c0) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.grid.size(); ++j) {
        const double w = m.grid.omegas[j];
        acc += m.grid.weights[j] * std::pow(w, 4) * m.spectral_weight(w) * i1_integral(pert, x, c0 / w, opt);
    }
    return m.density_factor * 2.0 * acc / (32.0 * M_PI * M_PI * M_PI);
}

double image_variance(const KernelModel &m, const Perturbation &pert, const Point3 &x, const IntegralOptions &opt,
                      double c0) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.grid.size(); ++j) {
        const double w = m.grid.omegas[j];
        double weight;
        if (m.source_kind == SourceKind::Blended) {
            const double f2 = std::norm(pulse_spectrum(m.pulse, w));
            weight = f2 * f2;
        } else {
            const double F = m.noise.spectrum(w);
            weight = F * F;
        }
        const I2Result r = i2_integral(pert, x, c0 / w, opt);
        acc += m.grid.weights[j] * weight * std::pow(w, 8) * (r.J1 + r.J2);
    }
    const double pre = m.source_kind == SourceKind::Blended ? 1.0 / (2.0 * M_PI * m.T_tau) : m.noise.duration / (2.0 * M_PI);
    // the covariance display omits the four 1/4π kernel factors
    const double k4 = std::pow(4.0 * M_PI, -4);
    return m.density_factor * m.density_factor * k4 * pre * 2.0 * acc;
}

std::string Monomial::str(SourceKind source) const {
    std::ostringstream os;
    auto term = [&](const char *name, double p) {
        if (p == 0.0) return;
        if (os.tellp() > 0) os << ' ';
        os << name;
        if (p != 1.0) os << '^' << p;
    };
    term("eps", eps);
    term("eta", eta);
    term("|ln eps|", log_eps);
    term(source == SourceKind::Blended ? "T_tau" : "T", time);
    const std::string s = os.str();
    return s.empty() ? "1" : s;
}

AsymptoticPrediction predicted_orders(PerturbationKind kind, Location loc, SourceKind source) {
    AsymptoticPrediction p;
    p.kind = kind;
    p.location = loc;
    p.source = source;
    const bool centre = loc == Location::Center;
    p.mean_relation = centre ? Relation::Equivalent : Relation::UpperBound;
    p.std_relation = p.mean_relation;
    switch (kind) {
        case PerturbationKind::Ball:
            p.mean = centre ? Monomial{3, 0, 0, 0} : Monomial{3, 2, 0, 0};
            p.std = centre ? Monomial{3, 0, 0, 0} : Monomial{3, 1, 0, 0};
            break;
        case PerturbationKind::Cylinder:
            p.mean = centre ? Monomial{1, 2, 0, 0} : Monomial{2, 2, 0, 0};
            p.std = centre ? Monomial{1, 2, 0, 0} : Monomial{2, 1, 0, 0};
            break;
        case PerturbationKind::Disc:
            p.mean = centre ? Monomial{1, 2, 1, 0} : Monomial{1, 2, 0, 0};
            p.std = centre ? Monomial{1, 2, 1, 0} : Monomial{1, 2, 0, 0};
            break;
    }
    if (source == SourceKind::Blended) {
        p.std.time = -0.5;
    } else {
        p.mean.time = 1.0;
        p.std.time = 0.5;
    }
    return p;
}

}  // namespace blendimg

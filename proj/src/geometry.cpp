#include "blendimg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "blendimg/quadrature.hpp"

namespace blendimg {

std::vector<Point3> fibonacci_sphere(std::size_t n, double R) {
    if (n == 0) throw std::invalid_argument("fibonacci_sphere: n must be at least 1");
    if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("fibonacci_sphere: radius must be positive");
    const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
    std::vector<Point3> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        Point3 u{rho * std::cos(phi), rho * std::sin(phi), z};
        const double s = R / u.norm();
        pts[i] = u * s;
    }
    return pts;
}

SphereArray SphereArray::fibonacci(double R, std::size_t n_sources, std::size_t n_receivers) {
    SphereArray a;
    a.radius = R;
    a.sources = fibonacci_sphere(n_sources, R);
    a.receivers = fibonacci_sphere(n_receivers, R);
    for (auto &p : a.receivers) p = Point3{p.x, -p.z, p.y};
    return a;
}

double SphereArray::source_density() const { return static_cast<double>(sources.size()) / (4.0 * M_PI * radius * radius); }
double SphereArray::receiver_density() const { return static_cast<double>(receivers.size()) / (4.0 * M_PI * radius * radius); }
double SphereArray::source_weight() const { return 1.0 / source_density(); }
double SphereArray::receiver_weight() const { return 1.0 / receiver_density(); }

double SphereArray::max_spacing() const {
    return std::max(max_nearest_neighbour_spacing(sources), max_nearest_neighbour_spacing(receivers));
}

double max_nearest_neighbour_spacing(const std::vector<Point3> &pts) {
    if (pts.size() < 2) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            const Point3 d = pts[i] - pts[j];
            best = std::min(best, d.dot(d));
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

std::string to_string(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::Ball: return "ball";
        case PerturbationKind::Cylinder: return "cylinder";
        case PerturbationKind::Disc: return "disc";
    }
    return "unknown";
}

PerturbationKind parse_perturbation_kind(const std::string &s) {
    std::string t(s);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "ball" || t == "point") return PerturbationKind::Ball;
    if (t == "cylinder" || t == "line") return PerturbationKind::Cylinder;
    if (t == "disc" || t == "disk" || t == "plane") return PerturbationKind::Disc;
    throw std::invalid_argument("unknown perturbation kind '" + s + "'");
}

Perturbation::Perturbation(PerturbationKind k, double eps, double a, Point3 c)
    : kind(k), epsilon(eps), alpha(a), center(c) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("perturbation epsilon must be positive and finite");
    if (!std::isfinite(a)) throw std::invalid_argument("perturbation amplitude must be finite");
    if (!c.finite()) throw std::invalid_argument("perturbation center must be finite");
}

bool Perturbation::contains(const Point3 &x) const {
    const Point3 d = x - center;
    switch (kind) {
        case PerturbationKind::Ball: return d.dot(d) <= epsilon * epsilon;
        case PerturbationKind::Cylinder:
            return d.x * d.x + d.y * d.y <= epsilon * epsilon && std::abs(d.z) <= kCylinderHalfLength;
        case PerturbationKind::Disc:
            return std::abs(d.x) <= epsilon && d.y * d.y + d.z * d.z <= kDiscRadius * kDiscRadius;
    }
    return false;
}

double Perturbation::support_volume() const {
    switch (kind) {
        case PerturbationKind::Ball: return 4.0 / 3.0 * M_PI * epsilon * epsilon * epsilon;
        case PerturbationKind::Cylinder: return M_PI * epsilon * epsilon * 2.0 * kCylinderHalfLength;
        case PerturbationKind::Disc: return 2.0 * epsilon * M_PI * kDiscRadius * kDiscRadius;
    }
    return 0.0;
}

double Perturbation::support_diameter() const {
    switch (kind) {
        case PerturbationKind::Ball: return 2.0 * epsilon;
        case PerturbationKind::Cylinder: return 2.0 * std::hypot(epsilon, kCylinderHalfLength);
        case PerturbationKind::Disc: return 2.0 * std::hypot(epsilon, kDiscRadius);
    }
    return 0.0;
}

double Perturbation::bounding_radius() const { return center.norm() + 0.5 * support_diameter(); }

double indicator(const Perturbation &p, const Point3 &x) { return p.contains(x) ? p.alpha : 0.0; }

double QuadratureRule::weight_sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

namespace {

std::size_t panel_count(double length, double L) {
    if (!std::isfinite(L) || L <= 0.0) return 1;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / L - 1e-12)));
}

}  // namespace

QuadratureRule support_quadrature(const Perturbation &p, int level, double resolve_length) {
    if (level < 1) throw std::invalid_argument("support_quadrature: level must be at least 1");
    const std::size_t q = static_cast<std::size_t>(level) + 1;
    const double eps = p.epsilon;
    QuadratureRule rule;

    switch (p.kind) {
        case PerturbationKind::Ball: {
            const Rule1D r = composite_gauss_legendre(0.0, eps, q, resolve_length);
            const std::size_t n_mu = q * panel_count(M_PI * eps, resolve_length);
            const Rule1D mu = gauss_legendre(n_mu, -1.0, 1.0);
            const std::size_t n_phi = std::max(2 * q, q * panel_count(2.0 * M_PI * eps, resolve_length));
            const Rule1D phi = periodic_rule(n_phi);
            rule.nodes.reserve(r.size() * mu.size() * phi.size());
            rule.weights.reserve(rule.nodes.capacity());
            for (std::size_t i = 0; i < r.size(); ++i) {
                for (std::size_t j = 0; j < mu.size(); ++j) {
                    const double st = std::sqrt(std::max(0.0, 1.0 - mu.x[j] * mu.x[j]));
                    for (std::size_t k = 0; k < phi.size(); ++k) {
                        const Point3 u{st * std::cos(phi.x[k]), st * std::sin(phi.x[k]), mu.x[j]};
                        rule.nodes.push_back(p.center + u * r.x[i]);
                        rule.weights.push_back(r.w[i] * r.x[i] * r.x[i] * mu.w[j] * phi.w[k]);
                    }
                }
            }
            rule.max_spacing = std::max({r.spacing, M_PI * eps / static_cast<double>(n_mu),
                                         2.0 * M_PI * eps / static_cast<double>(n_phi)});
            break;
        }
        case PerturbationKind::Cylinder: {
            const double h = Perturbation::kCylinderHalfLength;
            const Rule1D rho = composite_gauss_legendre(0.0, eps, q, resolve_length);
            const std::size_t n_phi = std::max(2 * q, q * panel_count(2.0 * M_PI * eps, resolve_length));
            const Rule1D phi = periodic_rule(n_phi);
            const Rule1D z = composite_gauss_legendre(-h, h, q, resolve_length);
            rule.nodes.reserve(rho.size() * phi.size() * z.size());
            rule.weights.reserve(rule.nodes.capacity());
            for (std::size_t l = 0; l < z.size(); ++l) {
                for (std::size_t i = 0; i < rho.size(); ++i) {
                    for (std::size_t k = 0; k < phi.size(); ++k) {
                        rule.nodes.push_back(p.center + Point3{rho.x[i] * std::cos(phi.x[k]),
                                                               rho.x[i] * std::sin(phi.x[k]), z.x[l]});
                        rule.weights.push_back(rho.w[i] * rho.x[i] * phi.w[k] * z.w[l]);
                    }
                }
            }
            rule.max_spacing = std::max({rho.spacing, 2.0 * M_PI * eps / static_cast<double>(n_phi), z.spacing});
            break;
        }
        case PerturbationKind::Disc: {
            const double a = Perturbation::kDiscRadius;
            const Rule1D t = composite_gauss_legendre(-eps, eps, q, resolve_length);
            const Rule1D rho = composite_gauss_legendre(0.0, a, q, resolve_length);
            const std::size_t n_phi = std::max(2 * q, q * panel_count(2.0 * M_PI * a, resolve_length));
            const Rule1D phi = periodic_rule(n_phi);
            rule.nodes.reserve(t.size() * rho.size() * phi.size());
            rule.weights.reserve(rule.nodes.capacity());
            for (std::size_t l = 0; l < t.size(); ++l) {
                for (std::size_t i = 0; i < rho.size(); ++i) {
                    for (std::size_t k = 0; k < phi.size(); ++k) {
                        rule.nodes.push_back(p.center + Point3{t.x[l], rho.x[i] * std::cos(phi.x[k]),
                                                               rho.x[i] * std::sin(phi.x[k])});
                        rule.weights.push_back(t.w[l] * rho.w[i] * rho.x[i] * phi.w[k]);
                    }
                }
            }
            rule.max_spacing = std::max({t.spacing, rho.spacing, 2.0 * M_PI * a / static_cast<double>(n_phi)});
            break;
        }
    }
    return rule;
}

}  // namespace blendimg

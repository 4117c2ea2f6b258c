#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace blendimg {

// Thrown when a Green's function would be evaluated at coincident points.
struct SingularEvaluation : std::domain_error {
    using std::domain_error::domain_error;
};

// Thrown when a quadrature rule is too coarse for the oscillation scale.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3 operator+(const Point3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Point3 &) const = default;

    double dot(const Point3 &o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Point3 &a, const Point3 &b) { return (a - b).norm(); }

// n points of the golden-angle spiral on the sphere of radius R.
std::vector<Point3> fibonacci_sphere(std::size_t n, double R);

struct SphereArray {
    double radius = 1.0;
    std::vector<Point3> sources;
    std::vector<Point3> receivers;

    // Sources on the Fibonacci lattice, receivers on the same lattice rotated by
    // a quarter turn about the x axis so the two sets do not coincide.
    static SphereArray fibonacci(double R, std::size_t n_sources, std::size_t n_receivers);

    std::size_t n_sources() const { return sources.size(); }
    std::size_t n_receivers() const { return receivers.size(); }
    double source_density() const;
    double receiver_density() const;
    // Surface weight 4πR²/n attached to each sensor of the set.
    double source_weight() const;
    double receiver_weight() const;
    // Largest nearest-neighbour distance over both sets.
    double max_spacing() const;
    // Sampling is adequate for wavelength 2πη when the spacing is at most πη.
    bool adequate_for(double eta) const { return max_spacing() <= M_PI * eta; }
};

double max_nearest_neighbour_spacing(const std::vector<Point3> &pts);

enum class PerturbationKind { Ball, Cylinder, Disc };

std::string to_string(PerturbationKind k);
PerturbationKind parse_perturbation_kind(const std::string &s);

struct Perturbation {
    // Cylinder half-length and disc radius are fixed to one.
    static constexpr double kCylinderHalfLength = 1.0;
    static constexpr double kDiscRadius = 1.0;

    PerturbationKind kind = PerturbationKind::Ball;
    double epsilon = 0.1;
    double alpha = 1.0;
    Point3 center{};

    Perturbation() = default;
    Perturbation(PerturbationKind k, double eps, double a = 1.0, Point3 c = {});

    bool contains(const Point3 &x) const;
    double support_volume() const;
    double support_diameter() const;
    // Smallest radius of a ball around the origin containing the support.
    double bounding_radius() const;
};

double indicator(const Perturbation &p, const Point3 &x);

struct QuadratureRule {
    std::vector<Point3> nodes;
    std::vector<double> weights;
    // Largest node gap along any direction of the rule, in length units.
    double max_spacing = 0.0;

    std::size_t size() const { return nodes.size(); }
    double weight_sum() const;
};

// Product Gauss–Legendre rule over the support. Each coordinate is split into
// panels no longer than resolve_length, with level + 1 nodes per panel;
// azimuthal directions use the equally spaced rule.
QuadratureRule support_quadrature(const Perturbation &p, int level,
                                  double resolve_length = std::numeric_limits<double>::infinity());

}  // namespace blendimg

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blendimg/forward.hpp"
#include "blendimg/geometry.hpp"
#include "blendimg/signals.hpp"

namespace blendimg {

struct ImageGrid {
    std::vector<Point3> points;
    std::vector<double> values;

    std::size_t size() const { return points.size(); }
    // Index of the grid point within `tol` of p; throws if there is none.
    std::size_t index_of(const Point3 &p, double tol = 1e-9) const;
};

// Throws if points repeat or come within 1e-6·R of a sensor.
void validate_grid(const std::vector<Point3> &pts, const SphereArray &array);

// (1/π) Re Σ_j w_j ω_j² Σ_r Ĝ(ω_j,x,x_r) u(ω_j,x) conj(d̂(ω_j,x_r)),
// u(ω,x) = Σ_s Ĝ(ω,x,y_s) n̂_s(ω): the adjoint of born_forward under the data
// pairing (1/π) Re Σ_j w_j Σ_r d1 conj(d2).
ImageGrid apply_adjoint(const DataMatrix &d, const SphereArray &array, const SourceSpectra &src,
                        const std::vector<Point3> &grid_pts, const FrequencyGrid &fgrid, double c0 = 1.0,
                        int workers = 1);

struct CorrelationOptions {
    // Half-width of the windowed-sinc interpolator, in samples.
    int half_width = 16;
    int workers = 1;
};

// I(x) = -∫ u(t,x) v(t,x) dt with u the retarded source field and v the
// anti-causal back-propagation of ∂²_t d. Traces and source signals must share
// one periodic time grid.
ImageGrid image_via_wave_correlation(const TraceMatrix &data, const SphereArray &array, const TraceMatrix &src,
                                     const std::vector<Point3> &grid_pts, double c0 = 1.0,
                                     const CorrelationOptions &opt = {});

// Second time derivative by spectral differentiation of each periodic trace.
TraceMatrix second_derivative(const TraceMatrix &tr);

// |value at the perturbation center| / max over far points of |value|.
double contrast(const ImageGrid &img, const Perturbation &pert, const std::vector<Point3> &far_points);

// Far evaluation set: n_directions azimuths times n_offsets radial offsets
// 0.5 + πη·m/n_offsets, one sinc² period. Ball and Cylinder use azimuths in
// the xy plane (perpendicular to the cylinder axis); the Disc uses ±x.
std::vector<Point3> far_points(const Perturbation &pert, double eta, std::size_t n_directions = 8,
                               std::size_t n_offsets = 8, double radius = 0.5);

std::vector<Point3> line_grid(const Point3 &a, const Point3 &b, std::size_t n);
// n×n lattice spanning center ± half_extent along unit vectors u and v.
std::vector<Point3> plane_grid(const Point3 &center, const Point3 &u, const Point3 &v, double half_extent, std::size_t n);
std::vector<Point3> box_grid(const Point3 &center, double half_extent, std::size_t n);

void write_image_csv(const ImageGrid &img, const std::filesystem::path &path);
// meta_json must be a JSON object; it is embedded under "meta".
void write_image_json(const ImageGrid &img, const std::string &meta_json, const std::filesystem::path &path);

}  // namespace blendimg

#pragma once

#include <complex>

#include "blendimg/geometry.hpp"
#include "blendimg/signals.hpp"

namespace blendimg {

struct GreensEval {
    double omega = 0.0;
    cplx value;
};

// Ĝ(ω, x1, x2) = exp(iω|x1 - x2|/c0) / (4π|x1 - x2|).
cplx green_hat(double omega, const Point3 &x1, const Point3 &x2, double c0 = 1.0);
GreensEval green_eval(double omega, const Point3 &x1, const Point3 &x2, double c0 = 1.0);

// sin(x)/x with sinc(0) = 1.
double sinc(double x);

// (1/4π) sinc(ω|x - y|/c0).
double sinc_kernel(double omega, const Point3 &x, const Point3 &y, double c0 = 1.0);

struct HkResult {
    cplx lhs;
    cplx rhs;
    // |LHS - RHS| / |RHS|
    double relative = 0.0;
    // |LHS - RHS| / (2ω/(4πc0)), the modulus of RHS at x = y
    double peak_relative = 0.0;
};

// (2iω/c0) Σ_r (4πR²/n) conj(Ĝ(ω,x_r,x)) Ĝ(ω,x_r,y) against 2i Im Ĝ(ω,x,y),
// summed over the receivers of the array.
HkResult hk_identity_check(const SphereArray &array, double omega, const Point3 &x, const Point3 &y, double c0 = 1.0);

// out[j] = Ĝ(ω_j) at separation `dist` for every node of the grid.
void green_row(const FrequencyGrid &grid, double dist, double c0, cplx *out);

}  // namespace blendimg

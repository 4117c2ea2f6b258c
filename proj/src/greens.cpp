#include "blendimg/greens.hpp"

#include <cmath>
#include <string>

namespace blendimg {

cplx green_hat(double omega, const Point3 &x1, const Point3 &x2, double c0) {
    const double d = distance(x1, x2);
    if (!(d > 0.0)) throw SingularEvaluation("green_hat: coincident points");
    const double ph = omega * d / c0;
    const double a = 1.0 / (4.0 * M_PI * d);
    return {a * std::cos(ph), a * std::sin(ph)};
}

GreensEval green_eval(double omega, const Point3 &x1, const Point3 &x2, double c0) {
    return {omega, green_hat(omega, x1, x2, c0)};
}

double sinc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
    }
    return std::sin(x) / x;
}

double sinc_kernel(double omega, const Point3 &x, const Point3 &y, double c0) {
    return sinc(omega * distance(x, y) / c0) / (4.0 * M_PI);
}

HkResult hk_identity_check(const SphereArray &array, double omega, const Point3 &x, const Point3 &y, double c0) {
    const double w = array.receiver_weight();
    cplx acc = 0.0;
    for (const auto &r : array.receivers) acc += std::conj(green_hat(omega, r, x, c0)) * green_hat(omega, r, y, c0);
    HkResult out;
    out.lhs = cplx(0.0, 2.0 * omega / c0) * w * acc;
    const double peak = 2.0 * omega / (4.0 * M_PI * c0);
    out.rhs = cplx(0.0, peak * sinc(omega * distance(x, y) / c0));
    const double err = std::abs(out.lhs - out.rhs);
    out.relative = err / std::abs(out.rhs);
    out.peak_relative = err / peak;
    return out;
}

void green_row(const FrequencyGrid &grid, double dist, double c0, cplx *out) {
    if (!(dist > 0.0)) throw SingularEvaluation("green_row: coincident points");
    const double a = 1.0 / (4.0 * M_PI * dist);
    const double tau = dist / c0;
    const std::size_t n = grid.size();
    if (!grid.dft_aligned()) {
        for (std::size_t j = 0; j < n; ++j) {
            const double ph = grid.omegas[j] * tau;
            out[j] = {a * std::cos(ph), a * std::sin(ph)};
        }
        return;
    }
    // phase recurrence along the uniform grid, re-anchored every 32 steps
    const double dw = grid.step();
    const cplx step(std::cos(dw * tau), std::sin(dw * tau));
    cplx cur;
    for (std::size_t j = 0; j < n; ++j) {
        if (j % 32 == 0) {
            const double ph = grid.omegas[j] * tau;
            cur = {a * std::cos(ph), a * std::sin(ph)};
        } else {
            cur *= step;
        }
        out[j] = cur;
    }
}

}  // namespace blendimg

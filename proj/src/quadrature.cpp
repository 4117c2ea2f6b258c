#include "blendimg/quadrature.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include <gsl/gsl_integration.h>

namespace blendimg {

namespace {
struct TableDeleter {
    void operator()(gsl_integration_glfixed_table *t) const { gsl_integration_glfixed_table_free(t); }
};
}  // namespace

Rule1D gauss_legendre(std::size_t n, double a, double b) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
    std::unique_ptr<gsl_integration_glfixed_table, TableDeleter> table(gsl_integration_glfixed_table_alloc(n));
    if (!table) throw std::runtime_error("gauss_legendre: table allocation failed");
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_integration_glfixed_point(a, b, i, &r.x[i], &r.w[i], table.get());
    }
    r.spacing = std::abs(b - a) / static_cast<double>(n);
    return r;
}

Rule1D composite_gauss_legendre(double a, double b, std::size_t nodes_per_panel, double max_panel) {
    if (nodes_per_panel == 0) throw std::invalid_argument("composite_gauss_legendre: empty panel");
    if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: empty interval");
    std::size_t panels = 1;
    if (std::isfinite(max_panel) && max_panel > 0.0) {
        panels = static_cast<std::size_t>(std::ceil((b - a) / max_panel - 1e-12));
        if (panels == 0) panels = 1;
    }
    const Rule1D ref = gauss_legendre(nodes_per_panel, 0.0, 1.0);
    const double h = (b - a) / static_cast<double>(panels);
    Rule1D r;
    r.x.reserve(panels * nodes_per_panel);
    r.w.reserve(panels * nodes_per_panel);
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        for (std::size_t i = 0; i < nodes_per_panel; ++i) {
            r.x.push_back(lo + h * ref.x[i]);
            r.w.push_back(h * ref.w[i]);
        }
    }
    r.spacing = h / static_cast<double>(nodes_per_panel);
    return r;
}

Rule1D periodic_rule(std::size_t n) {
    if (n == 0) throw std::invalid_argument("periodic_rule: n must be positive");
    Rule1D r;
    r.x.resize(n);
    r.w.assign(n, 2.0 * M_PI / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) r.x[i] = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    r.spacing = 2.0 * M_PI / static_cast<double>(n);
    return r;
}

}  // namespace blendimg

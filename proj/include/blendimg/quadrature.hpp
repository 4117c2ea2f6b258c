#pragma once

#include <cstddef>
#include <vector>

namespace blendimg {

struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
    // Largest average spacing of the panels (panel length / nodes per panel).
    double spacing = 0.0;

    std::size_t size() const { return x.size(); }
};

// n-point Gauss–Legendre rule on [a, b].
Rule1D gauss_legendre(std::size_t n, double a, double b);

// Composite Gauss–Legendre: ceil((b - a) / max_panel) equal panels with
// nodes_per_panel nodes each (at least one panel).
Rule1D composite_gauss_legendre(double a, double b, std::size_t nodes_per_panel, double max_panel);

// Equally spaced periodic rule on [0, 2π) with n nodes, weights 2π/n.
Rule1D periodic_rule(std::size_t n);

}  // namespace blendimg

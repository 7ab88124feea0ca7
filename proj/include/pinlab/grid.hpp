#pragma once

#include <span>
#include <vector>

namespace pinlab {

// Uniform quadrature grid on [x_min, x_max] with trapezoid weights.
// Nodes are strictly increasing with spacing h = (x_max - x_min)/(n - 1);
// weights are h at interior nodes and h/2 at the two ends, so they sum to
// the span.
struct Grid {
    double x_min = 0.0;
    double x_max = 0.0;
    int n = 0;
    std::vector<double> x;
    std::vector<double> w;

    static Grid uniform(double x_min, double x_max, int n);

    // Symmetric grid [-half_width, half_width] with an exact node at 0
    // (n is forced odd).
    static Grid symmetric(double half_width, int n);

    double spacing() const { return (x_max - x_min) / (n - 1); }
    double span() const { return x_max - x_min; }

    // Index of the node equal to `value` up to spacing*1e-9, or -1.
    int index_of(double value) const;

    // True if every node has an exact mirror image -x on the grid.
    bool is_symmetric() const;

    // Piecewise-linear interpolation of nodal values `f`, clamped outside.
    double interpolate(std::span<const double> f, double xq) const;
};

}  // namespace pinlab

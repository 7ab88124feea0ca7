#include "pinlab/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "pinlab/errors.hpp"

namespace pinlab {

Grid Grid::uniform(double x_min, double x_max, int n) {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw ConfigError("grid: need finite x_min < x_max");
    if (n < 2) throw ConfigError("grid: need at least 2 nodes");
    Grid g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n = n;
    const double h = (x_max - x_min) / (n - 1);
    g.x.resize(n);
    g.w.assign(n, h);
    for (int i = 0; i < n; ++i) g.x[i] = x_min + i * h;
    g.x.back() = x_max;
    g.w.front() = 0.5 * h;
    g.w.back() = 0.5 * h;
    return g;
}

Grid Grid::symmetric(double half_width, int n) {
    if (!(half_width > 0.0)) throw ConfigError("grid: half_width must be positive");
    if (n % 2 == 0) ++n;
    // Build from the half spacing so that 0 is a node bit-exactly.
    const int m = (n - 1) / 2;
    const double h = half_width / m;
    Grid g;
    g.x_min = -half_width;
    g.x_max = half_width;
    g.n = n;
    g.x.resize(n);
    g.w.assign(n, h);
    for (int i = 0; i < n; ++i) g.x[i] = (i - m) * h;
    g.w.front() = 0.5 * h;
    g.w.back() = 0.5 * h;
    return g;
}

int Grid::index_of(double value) const {
    const double h = spacing();
    const double t = (value - x_min) / h;
    const int i = static_cast<int>(std::lround(t));
    if (i < 0 || i >= n) return -1;
    return std::abs(x[i] - value) <= 1e-9 * h ? i : -1;
}

bool Grid::is_symmetric() const {
    for (int i = 0; i < n; ++i)
        if (index_of(-x[i]) < 0) return false;
    return true;
}

double Grid::interpolate(std::span<const double> f, double xq) const {
    if (xq <= x_min) return f[0];
    if (xq >= x_max) return f[n - 1];
    const double h = spacing();
    int i = static_cast<int>((xq - x_min) / h);
    if (i >= n - 1) i = n - 2;
    const double t = (xq - x[i]) / h;
    return (1.0 - t) * f[i] + t * f[i + 1];
}

}  // namespace pinlab

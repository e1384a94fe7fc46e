#include "densfilt/kde.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace densfilt {

namespace {
constexpr double kGaussianKernelL2 = 1.0 / (4.0 * std::numbers::pi);  // integral of K^2
}

double default_bandwidth(int n_samples, double c) {
    if (n_samples < 1) throw std::invalid_argument("default_bandwidth: need samples");
    return c * std::pow(static_cast<double>(n_samples), -1.0 / 6.0);
}

double kbar_constant(const KernelSpec& spec, int n_samples) {
    if (n_samples < 1 || spec.bandwidth <= 0.0)
        throw std::invalid_argument("kbar_constant: need N >= 1 and positive bandwidth");
    return kGaussianKernelL2 / (n_samples * spec.bandwidth * spec.bandwidth);
}

Eigen::VectorXd kernel_signal(const Eigen::Vector2d& x, const KernelSpec& spec,
                              const Grid& grid) {
    if (spec.bandwidth <= 0.0) throw std::invalid_argument("kernel_signal: bandwidth <= 0");
    const double h2 = spec.bandwidth * spec.bandwidth;
    const double scale = 1.0 / (2.0 * std::numbers::pi * h2);
    const double cut2 = spec.cutoff_radius > 0.0
                            ? spec.cutoff_radius * spec.cutoff_radius
                            : std::numeric_limits<double>::infinity();
    Eigen::VectorXd out(grid.size());
    for (int iy = 0; iy < grid.ny; ++iy) {
        double cy = grid.bounds.y_min + (iy + 0.5) * grid.dy;
        double dy2 = (cy - x.y()) * (cy - x.y());
        for (int ix = 0; ix < grid.nx; ++ix) {
            double cx = grid.bounds.x_min + (ix + 0.5) * grid.dx;
            double r2 = (cx - x.x()) * (cx - x.x()) + dy2;
            out[grid.index(ix, iy)] = r2 <= cut2 ? scale * std::exp(-0.5 * r2 / h2) : 0.0;
        }
    }
    return out;
}

Measurement kde_estimate(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                         const KernelSpec& spec, const Grid& grid, double t) {
    const int n = static_cast<int>(positions.rows());
    if (n < 1) throw std::invalid_argument("kde_estimate: empty sample set");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(grid.size());
    for (int i = 0; i < n; ++i)
        sum += kernel_signal(positions.row(i), spec, grid);
    return {sum / n, kbar_constant(spec, n), t};
}

}  // namespace densfilt

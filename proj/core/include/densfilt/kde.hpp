#pragma once

#include "densfilt/grid.hpp"

namespace densfilt {

enum class KernelFamily { gaussian };

struct KernelSpec {
    double bandwidth = 0.1;
    KernelFamily family = KernelFamily::gaussian;
    /// Optional evaluation cutoff radius (0 = evaluate on the full grid).
    /// Useful on large grids; 6*bandwidth keeps the truncation negligible.
    double cutoff_radius = 0.0;
};

/// Scott-type rule for two dimensions, h = c * N^(-1/6).
double default_bandwidth(int n_samples, double c = 0.3);

/// Measurement noise constant for the Gaussian kernel in two dimensions,
/// kbar = (integral of K^2) / (N h^2) with integral K^2 = 1/(4*pi).
double kbar_constant(const KernelSpec& spec, int n_samples);

/// Kernel centered at x, evaluated at all cell centers: one agent's local
/// measurement signal.
Eigen::VectorXd kernel_signal(const Eigen::Vector2d& x, const KernelSpec& spec,
                              const Grid& grid);

struct Measurement {
    Eigen::VectorXd field;
    double kbar = 0.0;
    double t = 0.0;
};

/// Kernel density estimate over the grid: the exact elementwise average of
/// the per-sample kernel signals, with kbar attached.
Measurement kde_estimate(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                         const KernelSpec& spec, const Grid& grid, double t = 0.0);

}  // namespace densfilt

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>

namespace densfilt {

/// Axis-aligned rectangular domain.
struct Box {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;

    bool contains(const Eigen::Vector2d& p) const {
        return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
    }
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

/// Uniform cell-centered grid over a rectangular domain.
/// Cells are indexed by (ix, iy) with the flat index iy*nx + ix.
struct Grid {
    int nx = 0, ny = 0;
    Box bounds;
    double dx = 0.0, dy = 0.0;

    int size() const { return nx * ny; }
    double cell_area() const { return dx * dy; }
    int index(int ix, int iy) const { return iy * nx + ix; }
    Eigen::Vector2d center(int ix, int iy) const {
        return {bounds.x_min + (ix + 0.5) * dx, bounds.y_min + (iy + 0.5) * dy};
    }
    Eigen::Vector2d center(int flat) const { return center(flat % nx, flat / nx); }

    bool same_layout(const Grid& other) const {
        return nx == other.nx && ny == other.ny &&
               bounds.x_min == other.bounds.x_min && bounds.x_max == other.bounds.x_max &&
               bounds.y_min == other.bounds.y_min && bounds.y_max == other.bounds.y_max;
    }
};

/// Builds a grid; throws std::invalid_argument for cell counts < 3 or
/// degenerate bounds.
Grid make_grid(int nx, int ny, const Box& bounds = {});

/// Grid function holding density values (probability per unit area) at cell
/// centers.
struct DensityField {
    Grid grid;
    Eigen::VectorXd values;
};

DensityField uniform_density(const Grid& grid);

/// Velocity field plus the scalar noise coefficient of the underlying SDE.
/// The diffusion tensor entering the density dynamics is (diffusion^2 / 2) I.
struct DriftField {
    std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)> velocity;
    double diffusion = 0.0;
};

DriftField zero_drift(double diffusion = 0.0);

/// Discretized density generator A(t), so that dp/dt = A p.
/// Assembled in conservative finite-volume form: column sums vanish.
struct SparseOperator {
    Eigen::SparseMatrix<double> matrix;
    double t = 0.0;
};

/// Assembles the advection-diffusion generator on the grid with zero-flux
/// (reflecting) walls. Advective face fluxes are first-order upwind, diffusive
/// fluxes are central. Throws if the drift evaluates non-finite, naming the
/// offending cell.
SparseOperator assemble_fp_operator(const Grid& grid, const DriftField& drift, double t);

/// Largest explicit-Euler step that keeps the update positivity-preserving,
/// 1 / max_i |A_ii| (infinite for a zero operator).
double stable_dt(const SparseOperator& op);

/// Maximum absolute column sum; zero up to roundoff for a conservative
/// assembly.
double max_column_sum(const SparseOperator& op);

struct StepStats {
    long clamped_cells = 0;
};

/// One explicit Euler step of dp/dt = A(t) p. Throws if dt exceeds the
/// stability bound (the message carries the largest stable dt). Values in
/// [-1e-12, 0) are clamped to zero and counted; anything below -1e-12 is an
/// error.
DensityField step_density(const DensityField& p, const DriftField& drift, double t,
                          double dt, StepStats* stats = nullptr);

/// Advances by dt using as many internal Euler substeps as the stability
/// bound requires, reassembling the operator at each substep time.
DensityField advance_density(const DensityField& p, const DriftField& drift, double t,
                             double dt, StepStats* stats = nullptr);

double mass(const DensityField& p);
double l2_norm(const DensityField& p);
double l2_distance(const DensityField& p, const DensityField& q);

/// Writes `density_<label>_<step>.txt`: one row of space-separated values per
/// grid row.
void write_density_snapshot(const DensityField& p, const std::string& dir,
                            const std::string& label, int step);

}  // namespace densfilt

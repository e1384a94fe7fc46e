#include "densfilt/grid.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace densfilt {

Grid make_grid(int nx, int ny, const Box& bounds) {
    if (nx < 3 || ny < 3)
        throw std::invalid_argument("make_grid: need at least 3 cells per axis");
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min))
        throw std::invalid_argument("make_grid: degenerate domain bounds");
    Grid g;
    g.nx = nx;
    g.ny = ny;
    g.bounds = bounds;
    g.dx = bounds.width() / nx;
    g.dy = bounds.height() / ny;
    return g;
}

DensityField uniform_density(const Grid& grid) {
    double area = grid.bounds.width() * grid.bounds.height();
    return {grid, Eigen::VectorXd::Constant(grid.size(), 1.0 / area)};
}

DriftField zero_drift(double diffusion) {
    return {[](const Eigen::Vector2d&, double) { return Eigen::Vector2d::Zero().eval(); },
            diffusion};
}

SparseOperator assemble_fp_operator(const Grid& grid, const DriftField& drift, double t) {
    const double dc = 0.5 * drift.diffusion * drift.diffusion;
    const int n = grid.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);

    auto check_finite = [&](const Eigen::Vector2d& v, int ix, int iy) {
        if (!v.allFinite())
            throw std::runtime_error("assemble_fp_operator: non-finite drift near cell (" +
                                     std::to_string(ix) + "," + std::to_string(iy) + ")");
    };

    // Interior faces only; boundary faces carry zero total flux. Each face
    // flux enters the two adjacent rows with opposite sign, so column sums
    // vanish by construction.
    auto add_face = [&](int lo, int hi, double v_face, double width) {
        double c_lo = std::max(v_face, 0.0) + dc / width;   // coefficient of p_lo in the flux
        double c_hi = std::min(v_face, 0.0) - dc / width;   // coefficient of p_hi
        trip.emplace_back(lo, lo, -c_lo / width);
        trip.emplace_back(lo, hi, -c_hi / width);
        trip.emplace_back(hi, lo, c_lo / width);
        trip.emplace_back(hi, hi, c_hi / width);
    };

    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix + 1 < grid.nx; ++ix) {
            Eigen::Vector2d face{grid.bounds.x_min + (ix + 1) * grid.dx,
                                 grid.bounds.y_min + (iy + 0.5) * grid.dy};
            Eigen::Vector2d v = drift.velocity(face, t);
            check_finite(v, ix, iy);
            add_face(grid.index(ix, iy), grid.index(ix + 1, iy), v.x(), grid.dx);
        }
    }
    for (int iy = 0; iy + 1 < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            Eigen::Vector2d face{grid.bounds.x_min + (ix + 0.5) * grid.dx,
                                 grid.bounds.y_min + (iy + 1) * grid.dy};
            Eigen::Vector2d v = drift.velocity(face, t);
            check_finite(v, ix, iy);
            add_face(grid.index(ix, iy), grid.index(ix, iy + 1), v.y(), grid.dy);
        }
    }

    SparseOperator op;
    op.t = t;
    op.matrix.resize(n, n);
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    return op;
}

double stable_dt(const SparseOperator& op) {
    double max_diag = 0.0;
    for (int i = 0; i < op.matrix.rows(); ++i)
        max_diag = std::max(max_diag, std::abs(op.matrix.coeff(i, i)));
    if (max_diag == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / max_diag;
}

double max_column_sum(const SparseOperator& op) {
    Eigen::VectorXd sums = Eigen::RowVectorXd::Ones(op.matrix.rows()) * op.matrix;
    return sums.cwiseAbs().maxCoeff();
}

namespace {

DensityField euler_step(const DensityField& p, const SparseOperator& op, double dt,
                        StepStats* stats) {
    double bound = stable_dt(op);
    if (dt > bound) {
        char msg[128];
        std::snprintf(msg, sizeof msg,
                      "step_density: dt=%g violates the stability bound, largest stable dt=%g",
                      dt, bound);
        throw std::runtime_error(msg);
    }
    DensityField out{p.grid, p.values + dt * (op.matrix * p.values)};
    for (int i = 0; i < out.values.size(); ++i) {
        double v = out.values[i];
        if (v < -1e-12)
            throw std::runtime_error("step_density: negative density " + std::to_string(v) +
                                     " at cell " + std::to_string(i));
        if (v < 0.0) {
            out.values[i] = 0.0;
            if (stats) ++stats->clamped_cells;
        }
    }
    return out;
}

}  // namespace

DensityField step_density(const DensityField& p, const DriftField& drift, double t,
                          double dt, StepStats* stats) {
    if (dt <= 0.0) throw std::invalid_argument("step_density: dt must be positive");
    return euler_step(p, assemble_fp_operator(p.grid, drift, t), dt, stats);
}

DensityField advance_density(const DensityField& p, const DriftField& drift, double t,
                             double dt, StepStats* stats) {
    if (dt <= 0.0) throw std::invalid_argument("advance_density: dt must be positive");
    double bound = stable_dt(assemble_fp_operator(p.grid, drift, t));
    int substeps = 1;
    if (std::isfinite(bound)) substeps = std::max(1, (int)std::ceil(dt / (0.95 * bound)));
    double h = dt / substeps;
    DensityField cur = p;
    for (int k = 0; k < substeps; ++k)
        cur = step_density(cur, drift, t + k * h, h, stats);
    return cur;
}

double mass(const DensityField& p) { return p.values.sum() * p.grid.cell_area(); }

double l2_norm(const DensityField& p) {
    return std::sqrt(p.values.squaredNorm() * p.grid.cell_area());
}

double l2_distance(const DensityField& p, const DensityField& q) {
    if (!p.grid.same_layout(q.grid))
        throw std::invalid_argument("l2_distance: grid mismatch");
    return std::sqrt((p.values - q.values).squaredNorm() * p.grid.cell_area());
}

void write_density_snapshot(const DensityField& p, const std::string& dir,
                            const std::string& label, int step) {
    std::filesystem::create_directories(dir);
    std::string path = dir + "/density_" + label + "_" + std::to_string(step) + ".txt";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[32];
    for (int iy = 0; iy < p.grid.ny; ++iy) {
        for (int ix = 0; ix < p.grid.nx; ++ix) {
            std::snprintf(buf, sizeof buf, "%.17g", p.values[p.grid.index(ix, iy)]);
            out << buf << (ix + 1 < p.grid.nx ? " " : "\n");
        }
    }
}

}  // namespace densfilt

#include "densfilt/filter.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace densfilt {

namespace {

Eigen::VectorXd floored_noise(const Measurement& y, double floor) {
    return (y.kbar * y.field.array()).cwiseMax(floor).matrix();
}

void check_measurement(const FilterState& s, const Measurement& y) {
    if (y.field.size() != s.p_hat.size())
        throw std::invalid_argument("filter: measurement size mismatch for " + s.label);
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Lyapunov part of the Riccati flow as a congruence,
//   cov <- (I + h A) cov (I + h A)',
// first-order consistent with d cov = A cov + cov A' and positive
// semidefinite by construction (the plain Euler update is not: it drops the
// h^2 A cov A' term and can push cov indefinite, which the damping solve
// below cannot absorb).
void lyapunov_substep(FilterState& s, const SparseOperator& op, double h) {
    const int n = static_cast<int>(s.p_hat.size());
    Eigen::SparseMatrix<double> b(n, n);
    b.setIdentity();
    b += h * op.matrix;
    Eigen::MatrixXd tmp = b * s.cov;
    s.cov.noalias() = tmp * b.transpose();
}

// Quadratic Riccati damping, semi-implicit:
//   cov <- cov - dt cov (R + dt cov)^-1 cov.
// Solves d cov = -cov R^-1 cov exactly in the scalar case and is
// unconditionally stable where the noise floor makes R tiny.
void damp_covariance(FilterState& s, double dt) {
    const int n = static_cast<int>(s.p_hat.size());
    Eigen::MatrixXd denom = Eigen::MatrixXd(s.noise.asDiagonal());
    denom += dt * s.cov;
    int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, denom.data(), n);
    if (info != 0)
        throw std::runtime_error("filter(" + s.label +
                                 "): covariance update lost positive definiteness");
    Eigen::MatrixXd w = s.cov;
    cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit, n, n, 1.0,
                denom.data(), n, w.data(), n);
    Eigen::MatrixXd quad(n, n);
    cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, n, n, 1.0, w.data(), n, 0.0,
                quad.data(), n);
    quad.triangularView<Eigen::StrictlyUpper>() = quad.transpose();
    s.cov -= dt * quad;
    s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
}

}  // namespace

FilterState init_filter(const Measurement& y0, const Grid& grid, std::string label,
                        double floor) {
    if (y0.field.size() != grid.size())
        throw std::invalid_argument("init_filter: measurement does not match grid");
    FilterState s;
    s.p_hat = y0.field;
    s.noise = floored_noise(y0, floor);
    s.cov = s.noise.asDiagonal();
    s.t = y0.t;
    s.label = std::move(label);
    s.floor = floor;
    return s;
}

FilterState init_filter_flat_gaussian(const Eigen::Vector2d& x0, double sigma,
                                      const Measurement& y0, const Grid& grid,
                                      std::string label, double floor) {
    if (sigma <= 0.0) throw std::invalid_argument("init_filter_flat_gaussian: sigma <= 0");
    FilterState s = init_filter(y0, grid, std::move(label), floor);
    Eigen::VectorXd bump(grid.size());
    for (int i = 0; i < grid.size(); ++i)
        bump[i] = std::exp(-0.5 * (grid.center(i) - x0).squaredNorm() / (sigma * sigma));
    s.p_hat = bump / (bump.sum() * grid.cell_area());
    return s;
}

Eigen::VectorXd apply_gain(const FilterState& s, const Eigen::VectorXd& v) {
    if ((s.noise.array() < s.floor).any())
        throw std::logic_error("apply_gain: noise floor violated for " + s.label);
    return s.cov * v.cwiseQuotient(s.noise);
}

double filter_stable_dt(const FilterState& s, const SparseOperator& op) {
    double rate = 1.0 / stable_dt(op);  // max |A_ii|
    rate += (s.cov.diagonal().cwiseQuotient(s.noise)).maxCoeff();
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / rate;
}

void filter_step(FilterState& s, const SparseOperator& op, const Measurement& y, double dt) {
    check_measurement(s, y);
    if (dt <= 0.0) throw std::invalid_argument("filter_step: dt must be positive");
    double bound = filter_stable_dt(s, op);
    if (dt > bound) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "filter_step(%s): dt=%g violates the stability bound, largest stable "
                      "dt=%g",
                      s.label.c_str(), dt, bound);
        throw std::runtime_error(msg);
    }

    // estimate: d p_hat = A p_hat + L (y - p_hat)
    Eigen::VectorXd correction = apply_gain(s, y.field - s.p_hat);
    s.p_hat += dt * (op.matrix * s.p_hat + correction);

    // Riccati flow: d cov = A cov + cov A' - cov R^-1 cov; PSD-preserving
    // Lyapunov part, semi-implicit quadratic damping.
    lyapunov_substep(s, op, dt);
    damp_covariance(s, dt);

    s.noise = floored_noise(y, s.floor);
    s.t += dt;

    if (!s.p_hat.allFinite() || !s.cov.diagonal().allFinite())
        throw std::runtime_error("filter_step(" + s.label + "): non-finite state at t=" +
                                 std::to_string(s.t));
}

void filter_advance(FilterState& s, const SparseOperator& op, const Measurement& y, double dt) {
    check_measurement(s, y);
    if (dt <= 0.0) throw std::invalid_argument("filter_advance: dt must be positive");
    const double t0 = s.t;
    s.noise = floored_noise(y, s.floor);

    // First-order split: the estimate and the Lyapunov part of the covariance
    // are substepped under the explicit bound; the quadratic damping is
    // unconditionally stable and applied once over the whole interval.
    double remaining = dt;
    int guard = 0;
    while (remaining > 1e-15 * dt) {
        double h = std::min(remaining, 0.9 * filter_stable_dt(s, op));
        Eigen::VectorXd correction = apply_gain(s, y.field - s.p_hat);
        s.p_hat += h * (op.matrix * s.p_hat + correction);
        lyapunov_substep(s, op, h);
        remaining -= h;
        if (++guard > 10000)
            throw std::runtime_error("filter_advance(" + s.label +
                                     "): stability bound forces more than 10000 substeps");
    }
    damp_covariance(s, dt);
    s.t = t0 + dt;

    if (!s.p_hat.allFinite() || !s.cov.diagonal().allFinite())
        throw std::runtime_error("filter_advance(" + s.label + "): non-finite state at t=" +
                                 std::to_string(s.t));
}

double gain_distance(const FilterState& a, const FilterState& b, int max_iters, double tol,
                     Eigen::VectorXd* warm_start) {
    if (a.p_hat.size() != b.p_hat.size())
        throw std::invalid_argument("gain_distance: size mismatch");
    const int n = static_cast<int>(a.p_hat.size());

    auto fwd = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return a.cov * v.cwiseQuotient(a.noise) - b.cov * v.cwiseQuotient(b.noise);
    };
    auto adj = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        return (a.cov * w).cwiseQuotient(a.noise) - (b.cov * w).cwiseQuotient(b.noise);
    };

    Eigen::VectorXd v;
    if (warm_start && warm_start->size() == n && warm_start->norm() > 0.0) {
        v = *warm_start / warm_start->norm();
    } else {
        v.resize(n);
        for (int i = 0; i < n; ++i)
            v[i] = (double)(mix64(0x243F6A8885A308D3ull + i) >> 11) * 0x1.0p-53 - 0.5;
        v.normalize();
    }

    double sigma = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd u = adj(fwd(v));
        double rayleigh = v.dot(u);
        double next = rayleigh > 0.0 ? std::sqrt(rayleigh) : 0.0;
        double nrm = u.norm();
        if (nrm == 0.0) {
            sigma = 0.0;
            break;
        }
        v = u / nrm;
        if (std::abs(next - sigma) <= tol * std::max(next, 1.0)) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    if (warm_start) *warm_start = v;
    return sigma;
}

}  // namespace densfilt

#pragma once

#include <string>

#include "densfilt/grid.hpp"
#include "densfilt/kde.hpp"

namespace densfilt {

/// Noise floor applied to the diagonal noise covariance, 1e-6 times the
/// uniform density value on the unit square.
inline constexpr double kNoiseFloor = 1e-6;

/// Kalman-type density filter state: estimate, Riccati covariance, and the
/// floored diagonal noise model. The same state drives the centralized filter
/// and each agent's local filter; only the measurement differs.
struct FilterState {
    Eigen::VectorXd p_hat;
    Eigen::MatrixXd cov;      // symmetric, re-symmetrized each step
    Eigen::VectorXd noise;    // diagonal of the noise covariance, >= floor
    double t = 0.0;
    std::string label;
    double floor = kNoiseFloor;
};

/// Estimate starts at the measurement; noise = max(kbar * y0, floor) and
/// cov = diag(noise).
FilterState init_filter(const Measurement& y0, const Grid& grid, std::string label,
                        double floor = kNoiseFloor);

/// Same noise/covariance initialization, but the estimate starts as a wide
/// ("flat") Gaussian bump centered at x0, normalized to unit mass over the
/// domain. Used by the local filters.
FilterState init_filter_flat_gaussian(const Eigen::Vector2d& x0, double sigma,
                                      const Measurement& y0, const Grid& grid,
                                      std::string label, double floor = kNoiseFloor);

/// Applies the gain L = cov * diag(noise)^-1 to a vector without
/// materializing L.
Eigen::VectorXd apply_gain(const FilterState& s, const Eigen::VectorXd& v);

/// Explicit-Euler bound for one filter step: covers the generator diagonal
/// and the innovation gain diagonal.
double filter_stable_dt(const FilterState& s, const SparseOperator& op);

/// One Euler step: the estimate follows d p_hat = A p_hat + L (y - p_hat);
/// the covariance follows the Riccati flow d cov = A cov + cov A' -
/// cov R^-1 cov, re-symmetrized; then the noise model is refreshed from the
/// measurement with the floor. Throws on a stability violation or non-finite
/// values.
void filter_step(FilterState& s, const SparseOperator& op, const Measurement& y, double dt);

/// Advances by dt holding the operator and measurement fixed. The estimate
/// and the Lyapunov covariance terms are substepped under the stability
/// bound; the quadratic covariance damping (unconditionally stable) is
/// applied once over the interval, a first-order splitting of the same flow
/// as filter_step.
void filter_advance(FilterState& s, const SparseOperator& op, const Measurement& y, double dt);

/// Operator-norm estimate of L_a - L_b by power iteration (up to max_iters
/// iterations, relative tolerance tol). An optional warm-start vector is
/// updated in place for cheap repeated calls.
double gain_distance(const FilterState& a, const FilterState& b, int max_iters = 50,
                     double tol = 1e-6, Eigen::VectorXd* warm_start = nullptr);

}  // namespace densfilt

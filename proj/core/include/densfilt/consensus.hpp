#pragma once

#include <utility>
#include <vector>

#include "densfilt/grid.hpp"

namespace densfilt {

/// Undirected proximity graph: edge (i,j) iff |X_i - X_j| <= radius, i != j.
struct CommGraph {
    int n_nodes = 0;
    double radius = 0.0;
    double t = 0.0;
    std::vector<std::pair<int, int>> edges;  // i < j
    std::vector<int> degree;
    std::vector<int> component;
    int n_components = 0;

    bool connected() const { return n_components <= 1; }
    int max_degree() const;
};

CommGraph build_graph(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                      double radius, double t = 0.0);

/// L = Deg - Adj; symmetric with zero row sums.
Eigen::SparseMatrix<double> laplacian(const CommGraph& g);

/// Proportional-integral dynamic average consensus, run elementwise over
/// grid-sized signals. Row i of nu is agent i's running estimate of the
/// average input; eta is the integral state.
struct ConsensusState {
    Eigen::MatrixXd nu;   // N x n
    Eigen::MatrixXd eta;  // N x n
    double alpha = 0.2, k_p = 0.4, k_i = 0.04;
    double t = 0.0;
};

/// nu starts at each agent's own signal, eta at zero.
ConsensusState init_consensus(const Eigen::MatrixXd& initial_inputs, double alpha,
                              double k_p, double k_i);

/// Largest explicit-Euler step for the given gains and graph degree,
/// 2 / (alpha + (K_P + K_I) * 2 * deg_max).
double consensus_stable_dt(const ConsensusState& state, const CommGraph& g);

/// One forward-Euler step of the PI estimator. Throws if dt exceeds the
/// stability bound (the message carries the safe dt). Disconnected graphs are
/// handled componentwise by the dynamics themselves.
void pi_step(ConsensusState& state, const CommGraph& g, const Eigen::MatrixXd& inputs,
             double dt);

/// Advances by dt with as many substeps as the stability bound requires,
/// holding the graph and inputs fixed.
void pi_advance(ConsensusState& state, const CommGraph& g, const Eigen::MatrixXd& inputs,
                double dt);

/// Per-agent grid-weighted L2 norm of nu_i minus the exact average input.
Eigen::VectorXd consensus_error(const ConsensusState& state, const Eigen::MatrixXd& inputs,
                                double cell_area);

}  // namespace densfilt

#include "densfilt/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace densfilt {

int CommGraph::max_degree() const {
    return degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
}

CommGraph build_graph(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                      double radius, double t) {
    const int n = static_cast<int>(positions.rows());
    if (n < 1) throw std::invalid_argument("build_graph: need at least one node");
    if (radius <= 0.0) throw std::invalid_argument("build_graph: radius must be positive");

    CommGraph g;
    g.n_nodes = n;
    g.radius = radius;
    g.t = t;
    g.degree.assign(n, 0);
    const double r2 = radius * radius;
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if ((positions.row(i) - positions.row(j)).squaredNorm() <= r2) {
                g.edges.emplace_back(i, j);
                ++g.degree[i];
                ++g.degree[j];
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }
    }

    // component labels via BFS
    g.component.assign(n, -1);
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (g.component[s] >= 0) continue;
        int label = g.n_components++;
        stack.push_back(s);
        g.component[s] = label;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (g.component[v] < 0) {
                    g.component[v] = label;
                    stack.push_back(v);
                }
        }
    }
    return g;
}

Eigen::SparseMatrix<double> laplacian(const CommGraph& g) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * g.edges.size() + g.n_nodes);
    for (auto [i, j] : g.edges) {
        trip.emplace_back(i, j, -1.0);
        trip.emplace_back(j, i, -1.0);
    }
    for (int i = 0; i < g.n_nodes; ++i) trip.emplace_back(i, i, (double)g.degree[i]);
    Eigen::SparseMatrix<double> l(g.n_nodes, g.n_nodes);
    l.setFromTriplets(trip.begin(), trip.end());
    return l;
}

ConsensusState init_consensus(const Eigen::MatrixXd& initial_inputs, double alpha,
                              double k_p, double k_i) {
    if (alpha <= 0.0 || k_p <= 0.0 || k_i <= 0.0)
        throw std::invalid_argument("init_consensus: gains must be positive");
    ConsensusState s;
    s.nu = initial_inputs;
    s.eta = Eigen::MatrixXd::Zero(initial_inputs.rows(), initial_inputs.cols());
    s.alpha = alpha;
    s.k_p = k_p;
    s.k_i = k_i;
    return s;
}

double consensus_stable_dt(const ConsensusState& state, const CommGraph& g) {
    return 2.0 / (state.alpha + (state.k_p + state.k_i) * 2.0 * g.max_degree());
}

void pi_step(ConsensusState& state, const CommGraph& g, const Eigen::MatrixXd& inputs,
             double dt) {
    if (dt <= 0.0) throw std::invalid_argument("pi_step: dt must be positive");
    if (state.nu.rows() != g.n_nodes || inputs.rows() != state.nu.rows() ||
        inputs.cols() != state.nu.cols())
        throw std::invalid_argument("pi_step: shape mismatch");
    double bound = consensus_stable_dt(state, g);
    if (dt >= bound) {
        char msg[128];
        std::snprintf(msg, sizeof msg,
                      "pi_step: dt=%g violates the stability bound, safe dt < %g", dt, bound);
        throw std::runtime_error(msg);
    }
    Eigen::SparseMatrix<double> l = laplacian(g);
    Eigen::MatrixXd l_nu = l * state.nu;
    Eigen::MatrixXd l_eta = l * state.eta;
    state.nu += dt * (-state.k_p * l_nu + state.k_i * l_eta - state.alpha * (state.nu - inputs));
    state.eta += dt * (-state.k_i * l_nu);
    state.t += dt;
}

void pi_advance(ConsensusState& state, const CommGraph& g, const Eigen::MatrixXd& inputs,
                double dt) {
    double bound = consensus_stable_dt(state, g);
    int substeps = std::max(1, (int)std::ceil(dt / (0.9 * bound)));
    for (int k = 0; k < substeps; ++k) pi_step(state, g, inputs, dt / substeps);
}

Eigen::VectorXd consensus_error(const ConsensusState& state, const Eigen::MatrixXd& inputs,
                                double cell_area) {
    if (inputs.rows() != state.nu.rows() || inputs.cols() != state.nu.cols())
        throw std::invalid_argument("consensus_error: shape mismatch");
    Eigen::RowVectorXd avg = inputs.colwise().mean();
    Eigen::VectorXd err(state.nu.rows());
    for (int i = 0; i < state.nu.rows(); ++i)
        err[i] = std::sqrt((state.nu.row(i) - avg).squaredNorm() * cell_area);
    return err;
}

}  // namespace densfilt

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "densfilt/grid.hpp"

namespace densfilt {

/// Isotropic Gaussian mixture component with a time-varying mean.
struct GaussianComponent {
    double weight = 1.0;
    std::function<Eigen::Vector2d(double)> mean;
    double variance = 0.02;  // per axis
};

struct MixturePdf {
    std::vector<GaussianComponent> components;
};

/// Two equal-weight components with common covariance diag(0.02, 0.02) whose
/// means counter-rotate on a circle of radius 0.3 about (0.5, 0.5) at
/// 0.04 rad/s.
MixturePdf spinning_mixture();

double eval_pdf(const MixturePdf& f, const Eigen::Vector2d& x, double t);
Eigen::Vector2d eval_grad_log(const MixturePdf& f, const Eigen::Vector2d& x, double t);

/// Drift v(x,t) = D * grad log f(x,t) with SDE noise coefficient D.
DriftField mixture_drift(MixturePdf f, double diffusion);

/// Positions of N agents plus one deterministic random stream per agent, so
/// trajectories do not depend on iteration order.
struct AgentEnsemble {
    Eigen::Matrix<double, Eigen::Dynamic, 2> positions;
    std::vector<std::uint64_t> streams;
    double t = 0.0;

    int size() const { return static_cast<int>(positions.rows()); }
};

/// N agents uniformly distributed over the box.
AgentEnsemble uniform_ensemble(int n_agents, const Box& domain, std::uint64_t seed);

/// One Euler-Maruyama step, X += v(X,t) dt + D sqrt(dt) xi, followed by
/// specular reflection at the walls. Throws on a non-finite position, naming
/// the agent.
void step_sde(AgentEnsemble& ens, const DriftField& drift, const Box& domain, double dt);

}  // namespace densfilt

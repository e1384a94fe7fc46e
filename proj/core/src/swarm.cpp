#include "densfilt/swarm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace densfilt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// splitmix64; each agent advances its own state word.
std::uint64_t next_u64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double next_unit(std::uint64_t& state) {
    // in (0, 1]
    return ((next_u64(state) >> 11) + 1) * 0x1.0p-53;
}

Eigen::Vector2d next_normal_pair(std::uint64_t& state) {
    double u1 = next_unit(state);
    double u2 = next_unit(state);
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

std::uint64_t agent_stream(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (id + 1));
    next_u64(s);  // decorrelate nearby ids
    return s;
}

double reflect_coord(double v, double lo, double hi) {
    while (v < lo || v > hi) {
        if (v < lo) v = 2 * lo - v;
        if (v > hi) v = 2 * hi - v;
    }
    return v;
}

}  // namespace

MixturePdf spinning_mixture() {
    auto mean_at = [](double phase) {
        return [phase](double t) {
            return Eigen::Vector2d{0.5 + 0.3 * std::cos(0.04 * t + phase),
                                   0.5 + 0.3 * std::sin(0.04 * t + phase)};
        };
    };
    MixturePdf f;
    f.components.push_back({0.5, mean_at(0.0), 0.02});
    f.components.push_back({0.5, mean_at(std::numbers::pi), 0.02});
    return f;
}

double eval_pdf(const MixturePdf& f, const Eigen::Vector2d& x, double t) {
    double v = 0.0;
    for (const auto& c : f.components) {
        Eigen::Vector2d d = x - c.mean(t);
        v += c.weight / (kTwoPi * c.variance) * std::exp(-0.5 * d.squaredNorm() / c.variance);
    }
    return v;
}

Eigen::Vector2d eval_grad_log(const MixturePdf& f, const Eigen::Vector2d& x, double t) {
    double val = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    for (const auto& c : f.components) {
        Eigen::Vector2d d = x - c.mean(t);
        double g = c.weight / (kTwoPi * c.variance) * std::exp(-0.5 * d.squaredNorm() / c.variance);
        val += g;
        grad += g * (-d / c.variance);
    }
    return grad / val;
}

DriftField mixture_drift(MixturePdf f, double diffusion) {
    return {[f = std::move(f), diffusion](const Eigen::Vector2d& x, double t) {
                return (diffusion * eval_grad_log(f, x, t)).eval();
            },
            diffusion};
}

AgentEnsemble uniform_ensemble(int n_agents, const Box& domain, std::uint64_t seed) {
    if (n_agents < 1) throw std::invalid_argument("uniform_ensemble: need at least one agent");
    AgentEnsemble ens;
    ens.positions.resize(n_agents, 2);
    ens.streams.resize(n_agents);
    for (int i = 0; i < n_agents; ++i) {
        ens.streams[i] = agent_stream(seed, static_cast<std::uint64_t>(i));
        ens.positions(i, 0) = domain.x_min + domain.width() * next_unit(ens.streams[i]);
        ens.positions(i, 1) = domain.y_min + domain.height() * next_unit(ens.streams[i]);
    }
    return ens;
}

void step_sde(AgentEnsemble& ens, const DriftField& drift, const Box& domain, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("step_sde: dt must be positive");
    const double noise = drift.diffusion * std::sqrt(dt);
    for (int i = 0; i < ens.size(); ++i) {
        Eigen::Vector2d x = ens.positions.row(i);
        Eigen::Vector2d xi = next_normal_pair(ens.streams[i]);
        x += drift.velocity(x, ens.t) * dt + noise * xi;
        if (!x.allFinite())
            throw std::runtime_error("step_sde: non-finite position for agent " +
                                     std::to_string(i) + " at t=" + std::to_string(ens.t));
        x.x() = reflect_coord(x.x(), domain.x_min, domain.x_max);
        x.y() = reflect_coord(x.y(), domain.y_min, domain.y_max);
        ens.positions.row(i) = x;
    }
    ens.t += dt;
}

}  // namespace densfilt

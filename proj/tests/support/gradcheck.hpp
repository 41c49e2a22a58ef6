#pragma once
// Finite-difference oracle for the actor and critic losses. Builds random
// small nets, computes analytic gradients the same way training does, and
// compares every parameter against central differences.

#include <cmath>
#include <vector>

#include "ars/net.hpp"
#include "ars/rng.hpp"

namespace ars::gradcheck {

struct CriticSample {
    std::vector<double> input;
    double target = 0.0;
    double weight = 1.0;
};

inline double critic_loss(const Net& critic, const std::vector<CriticSample>& batch) {
    double loss = 0.0;
    for (const CriticSample& s : batch) {
        const double q = critic.forward(s.input)[0];
        const double td = q - s.target;
        loss += s.weight * td * td / batch.size();
    }
    return loss;
}

inline NetGrads critic_loss_grads(const Net& critic, const std::vector<CriticSample>& batch) {
    NetGrads grads = critic.zero_grads();
    for (const CriticSample& s : batch) {
        ForwardTrace trace;
        const double q = critic.forward(s.input, trace)[0];
        std::vector<double> dq{2.0 * s.weight * (q - s.target) / batch.size()};
        critic.backward(trace, dq, grads);
    }
    return grads;
}

struct ActorSample {
    std::vector<double> obs;
    std::vector<std::uint8_t> mask;
    std::vector<double> q_values; // per action; only unmasked entries used
    double weight = 1.0;
};

inline double actor_loss(const Net& actor, const std::vector<ActorSample>& batch) {
    double loss = 0.0;
    for (const ActorSample& s : batch) {
        const auto p = masked_softmax(actor.forward(s.obs), s.mask);
        double expected = 0.0;
        for (std::size_t u = 0; u < p.size(); ++u)
            if (s.mask[u]) expected += p[u] * s.q_values[u];
        loss -= s.weight * expected / batch.size();
    }
    return loss;
}

inline NetGrads actor_loss_grads(const Net& actor, const std::vector<ActorSample>& batch) {
    NetGrads grads = actor.zero_grads();
    for (const ActorSample& s : batch) {
        ForwardTrace trace;
        const auto logits = actor.forward(s.obs, trace);
        const auto p = masked_softmax(logits, s.mask);
        std::vector<double> dp(p.size(), 0.0);
        for (std::size_t u = 0; u < p.size(); ++u)
            if (s.mask[u]) dp[u] = -s.weight * s.q_values[u] / batch.size();
        const auto dlogits = masked_softmax_backward(p, s.mask, dp);
        actor.backward(trace, dlogits, grads);
    }
    return grads;
}

// max relative error across all parameters, central differences with step h
template <typename LossFn>
double max_rel_error(Net& net, const NetGrads& analytic, LossFn&& loss, double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
        auto check = [&](std::vector<double>& params, const std::vector<double>& grad) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double saved = params[i];
                params[i] = saved + h;
                const double up = loss();
                params[i] = saved - h;
                const double down = loss();
                params[i] = saved;
                const double fd = (up - down) / (2.0 * h);
                const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1.0});
                worst = std::max(worst, std::abs(fd - grad[i]) / denom);
            }
        };
        check(net.layers()[li].w, analytic.w[li]);
        check(net.layers()[li].b, analytic.b[li]);
    }
    return worst;
}

// One randomized draw of (shape, input); returns the worst relative error over
// both the critic loss and the actor loss.
inline double run_draw(RngStream& rng) {
    const std::size_t obs_dim = 3 + rng.uniform_index(26);     // up to 28
    const std::size_t hidden = 4 + rng.uniform_index(61);      // up to 64
    const std::size_t actions = 2 + rng.uniform_index(5);      // 2..6
    const std::size_t batch = 1 + rng.uniform_index(3);

    Net critic({obs_dim + actions, hidden, 1}, Activation::tanh_fn);
    critic.init_params(rng);
    std::vector<CriticSample> cbatch(batch);
    for (auto& s : cbatch) {
        s.input.resize(obs_dim + actions);
        for (double& v : s.input) v = rng.uniform(-1.0, 1.0);
        s.target = rng.uniform(-1.0, 1.0);
        s.weight = rng.uniform(0.2, 1.0);
    }
    const NetGrads cgrads = critic_loss_grads(critic, cbatch);
    double worst =
        max_rel_error(critic, cgrads, [&]() { return critic_loss(critic, cbatch); });

    Net actor({obs_dim, hidden, actions}, Activation::tanh_fn);
    actor.init_params(rng);
    std::vector<ActorSample> abatch(batch);
    for (auto& s : abatch) {
        s.obs.resize(obs_dim);
        for (double& v : s.obs) v = rng.uniform(-1.0, 1.0);
        s.mask.assign(actions, 0);
        std::size_t open = 0;
        for (auto& m : s.mask)
            if (rng.uniform() < 0.6) {
                m = 1;
                ++open;
            }
        if (open == 0) s.mask[actions - 1] = 1;
        s.q_values.resize(actions);
        for (double& q : s.q_values) q = rng.uniform(-2.0, 2.0);
        s.weight = rng.uniform(0.2, 1.0);
    }
    const NetGrads agrads = actor_loss_grads(actor, abatch);
    worst = std::max(
        worst, max_rel_error(actor, agrads, [&]() { return actor_loss(actor, abatch); }));
    return worst;
}

} // namespace ars::gradcheck

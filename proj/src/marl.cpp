#include "ars/marl.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ars {

void validate(const MarlConfig& cfg) {
    if (!(cfg.actor_lr > 0.0)) throw ConfigError("marl.actor_lr", "learning rate must be positive");
    if (!(cfg.critic_lr > 0.0)) throw ConfigError("marl.critic_lr", "learning rate must be positive");
    if (!(cfg.gamma > 0.0) || cfg.gamma > 1.0)
        throw ConfigError("marl.gamma", "discount must lie in (0,1]");
    if (!(cfg.tau > 0.0) || cfg.tau > 1.0)
        throw ConfigError("marl.tau", "soft-update parameter must lie in (0,1]");
    if (cfg.rider_slots == 0) throw ConfigError("marl.rider_slots", "need at least one slot");
    if (cfg.joint_agents == 0) throw ConfigError("marl.joint_agents", "need at least one agent");
    if (cfg.batch == 0) throw ConfigError("marl.batch", "batch size must be positive");
    if (cfg.buffer < cfg.batch)
        throw ConfigError("marl.buffer", "buffer must hold at least one batch");
    if (!(cfg.priority_exponent >= 0.0))
        throw ConfigError("marl.priority_exponent", "exponent must be nonnegative");
}

std::vector<double> build_observation(const GridWorld& g, CellCoord pos, bool is_driver,
                                      const std::vector<int>& rider_count_by_cell) {
    if (!g.in_bounds(pos)) throw InputError("build_observation: position out of bounds");
    if (rider_count_by_cell.size() != static_cast<std::size_t>(g.cell_count()))
        throw ContractViolation("build_observation: rider count grid size mismatch");

    std::vector<double> obs;
    obs.reserve(kObsDim);
    obs.push_back(g.width() > 1 ? static_cast<double>(pos.x) / (g.width() - 1) : 0.0);
    obs.push_back(g.height() > 1 ? static_cast<double>(pos.y) / (g.height() - 1) : 0.0);
    obs.push_back(is_driver ? 1.0 : 0.0);
    for (int dy = -kPerceptionRadius; dy <= kPerceptionRadius; ++dy) {
        for (int dx = -kPerceptionRadius; dx <= kPerceptionRadius; ++dx) {
            const CellCoord c{pos.x + dx, pos.y + dy};
            if (!g.in_bounds(c)) {
                obs.push_back(-1.0);
            } else {
                obs.push_back(static_cast<double>(rider_count_by_cell[g.cell_index(c)]));
            }
        }
    }
    return obs;
}

std::vector<std::uint8_t> action_mask(const std::vector<int>& slot_to_rider,
                                      const std::vector<int>& feasible_ids,
                                      std::size_t rider_slots) {
    std::vector<std::uint8_t> mask(rider_slots + 1, 0);
    for (std::size_t u = 0; u < rider_slots && u < slot_to_rider.size(); ++u) {
        const int rider = slot_to_rider[u];
        if (rider < 0) continue;
        if (std::find(feasible_ids.begin(), feasible_ids.end(), rider) != feasible_ids.end())
            mask[u] = 1;
    }
    mask[rider_slots] = 1; // decline is always legal
    return mask;
}

double decision_reward(double rider_solo_km, double detour_km, double theta_km,
                       double delta_s, double max_detour_km, const MarlConfig& cfg) {
    if (detour_km < 0.0) throw ContractViolation("decision_reward: negative detour");
    const double w = detour_km <= theta_km ? 1.0 : 1.5;
    const double scale = cfg.reward_raw_km ? 1.0 : 1.0 / max_detour_km;
    return cfg.alpha_r * rider_solo_km * scale -
           (1.0 - cfg.alpha_r) * w * detour_km * scale + delta_s;
}

PolicyBundle::PolicyBundle(const MarlConfig& cfg, std::size_t n_agents, RngStream& rng) {
    const std::size_t n_nets = cfg.per_agent_nets ? std::max<std::size_t>(1, n_agents) : 1;
    std::vector<std::size_t> actor_sizes{kObsDim};
    for (std::size_t h : cfg.actor_hidden) actor_sizes.push_back(h);
    actor_sizes.push_back(cfg.actions());
    std::vector<std::size_t> critic_sizes{cfg.critic_input()};
    for (std::size_t h : cfg.critic_hidden) critic_sizes.push_back(h);
    critic_sizes.push_back(1);

    for (std::size_t i = 0; i < n_nets; ++i) {
        Net a(actor_sizes, Activation::tanh_fn);
        a.init_params(rng);
        Net c(critic_sizes, Activation::tanh_fn);
        c.init_params(rng);
        target_actors_.push_back(a);
        target_critics_.push_back(c);
        actors_.push_back(std::move(a));
        critics_.push_back(std::move(c));
    }
}

std::size_t PolicyBundle::net_index(int agent_id) const {
    if (actors_.empty()) throw StateError("PolicyBundle: empty bundle");
    if (actors_.size() == 1) return 0;
    return static_cast<std::size_t>(agent_id < 0 ? 0 : agent_id) % actors_.size();
}

void PolicyBundle::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint: " + path);
    out.write("ARSBDL01", 8);
    const std::uint64_t n = actors_.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    for (std::size_t i = 0; i < actors_.size(); ++i) {
        save_net(out, actors_[i]);
        save_net(out, critics_[i]);
        save_net(out, target_actors_[i]);
        save_net(out, target_critics_[i]);
    }
}

PolicyBundle PolicyBundle::load(const std::string& path, const MarlConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "ARSBDL01")
        throw InputError("not a policy checkpoint (bad magic): " + path);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in || n == 0 || n > 4096) throw InputError("checkpoint net count out of range");

    PolicyBundle b;
    for (std::uint64_t i = 0; i < n; ++i) {
        b.actors_.push_back(load_net(in));
        b.critics_.push_back(load_net(in));
        b.target_actors_.push_back(load_net(in));
        b.target_critics_.push_back(load_net(in));
    }
    if (b.actors_.front().input_size() != kObsDim ||
        b.actors_.front().output_size() != cfg.actions() ||
        b.critics_.front().input_size() != cfg.critic_input())
        throw InputError("checkpoint shapes do not match the marl configuration");
    return b;
}

void PolicyBundle::soft_update_targets(double tau) {
    for (std::size_t i = 0; i < actors_.size(); ++i) {
        soft_update(target_actors_[i], actors_[i], tau);
        soft_update(target_critics_[i], critics_[i], tau);
    }
}

bool PolicyBundle::finite() const {
    for (const Net& n : actors_)
        if (!n.finite()) return false;
    for (const Net& n : critics_)
        if (!n.finite()) return false;
    for (const Net& n : target_actors_)
        if (!n.finite()) return false;
    for (const Net& n : target_critics_)
        if (!n.finite()) return false;
    return true;
}

int select_action(const Net& actor, const std::vector<double>& obs,
                  const std::vector<std::uint8_t>& mask, double explore_rate,
                  RngStream& rng) {
    bool any = false;
    for (std::uint8_t m : mask) any = any || m;
    if (!any) throw ContractViolation("select_action: all actions masked");

    if (explore_rate > 0.0 && rng.uniform() < explore_rate) {
        std::vector<int> open;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) open.push_back(static_cast<int>(i));
        return open[rng.uniform_index(open.size())];
    }

    const std::vector<double> p = masked_softmax(actor.forward(obs), mask);
    double u = rng.uniform();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!mask[i]) continue;
        if (u < p[i]) return static_cast<int>(i);
        u -= p[i];
    }
    // numeric tail: fall back to the last unmasked entry
    for (std::size_t i = p.size(); i-- > 0;)
        if (mask[i]) return static_cast<int>(i);
    throw InternalError("select_action: unreachable");
}

void MarlBuffer::push(GroupTransition t) {
    if (t.group_ids.empty() || t.entry.obs.size() != t.group_ids.size() * kObsDim ||
        t.entry.act.size() != t.group_ids.size() ||
        t.entry.next_obs.size() != t.entry.obs.size() ||
        t.cur_mask.size() != t.entry.next_mask.size())
        throw ContractViolation("MarlBuffer::push: transition shapes inconsistent");
    const std::size_t cap = buffer.capacity();
    if (cur_masks.size() < cap) {
        cur_masks.resize(cap);
        group_ids.resize(cap);
    }
    cur_masks[head] = std::move(t.cur_mask);
    group_ids[head] = std::move(t.group_ids);
    buffer.push(std::move(t.entry));
    head = (head + 1) % cap;
}

namespace {

// Critic input: [obs slot 0..J-1 | action rep slot 0..J-1]. Pads stay zero.
std::vector<double> critic_input(const MarlConfig& cfg, const std::vector<double>& obs,
                                 const std::vector<std::vector<double>>& action_reps) {
    const std::size_t J = cfg.joint_agents;
    const std::size_t A = cfg.actions();
    std::vector<double> x(cfg.critic_input(), 0.0);
    std::copy(obs.begin(), obs.end(), x.begin());
    for (std::size_t k = 0; k < J; ++k) {
        if (action_reps[k].empty()) continue;
        std::copy(action_reps[k].begin(), action_reps[k].end(),
                  x.begin() + J * kObsDim + k * A);
    }
    return x;
}

std::vector<double> onehot(std::size_t actions, int index) {
    std::vector<double> v(actions, 0.0);
    if (index >= 0 && static_cast<std::size_t>(index) < actions) v[index] = 1.0;
    return v;
}

} // namespace

TrainLosses train_step(PolicyBundle& bundle, MarlBuffer& mbuf, const MarlConfig& cfg,
                       RngStream& rng) {
    const std::size_t J = cfg.joint_agents;
    const std::size_t A = cfg.actions();
    const auto sample = mbuf.buffer.sample(cfg.batch, rng);
    const double batch_inv = 1.0 / static_cast<double>(cfg.batch);

    // snapshot for rollback
    std::vector<Net> snapshot_critics = bundle.critics();
    std::vector<Net> snapshot_actors = bundle.actors();
    std::vector<Net> snapshot_tc = bundle.target_critics();
    std::vector<Net> snapshot_ta = bundle.target_actors();

    TrainLosses losses;

    // ---- critic update: weighted MSE of TD error vs target networks ----
    std::vector<NetGrads> critic_grads;
    for (Net& c : bundle.critics()) critic_grads.push_back(c.zero_grads());
    std::vector<double> td(sample.entries.size(), 0.0);

    for (std::size_t b = 0; b < sample.entries.size(); ++b) {
        const ReplayEntry& e = *sample.entries[b];
        const auto& gids = mbuf.group_ids[sample.indices[b]];
        const int ego = gids.empty() ? -1 : gids[0];
        const std::size_t ni = bundle.net_index(ego);

        double target_q = 0.0;
        if (!e.done) {
            std::vector<std::vector<double>> next_reps(J);
            for (std::size_t k = 0; k < J; ++k) {
                if (gids[k] < 0) continue; // pad
                std::vector<double> nobs(e.next_obs.begin() + k * kObsDim,
                                          e.next_obs.begin() + (k + 1) * kObsDim);
                std::vector<std::uint8_t> nmask(e.next_mask.begin() + k * A,
                                                 e.next_mask.begin() + (k + 1) * A);
                const Net& ta = bundle.target_actor(gids[k]);
                next_reps[k] = masked_softmax(ta.forward(nobs), nmask);
            }
            const auto x = critic_input(cfg, e.next_obs, next_reps);
            target_q = bundle.target_critic(ego).forward(x)[0];
        }
        const double y = e.reward + cfg.gamma * (e.done ? 0.0 : target_q);

        std::vector<std::vector<double>> reps(J);
        for (std::size_t k = 0; k < J; ++k)
            if (gids[k] >= 0) reps[k] = onehot(A, e.act[k]);
        const auto x = critic_input(cfg, e.obs, reps);
        ForwardTrace trace;
        const double q = bundle.critics()[ni].forward(x, trace)[0];
        td[b] = q - y;
        losses.critic_loss += sample.weights[b] * td[b] * td[b] * batch_inv;

        std::vector<double> dq{2.0 * sample.weights[b] * td[b] * batch_inv};
        bundle.critics()[ni].backward(trace, dq, critic_grads[ni]);
    }
    for (std::size_t ni = 0; ni < bundle.critics().size(); ++ni)
        bundle.critics()[ni].sgd_step(critic_grads[ni], cfg.critic_lr);

    if (!std::isfinite(losses.critic_loss)) {
        bundle.critics() = std::move(snapshot_critics);
        bundle.actors() = std::move(snapshot_actors);
        bundle.target_critics() = std::move(snapshot_tc);
        bundle.target_actors() = std::move(snapshot_ta);
        throw NumericError("train_step: non-finite critic loss; rolled back");
    }

    for (std::size_t b = 0; b < sample.indices.size(); ++b)
        mbuf.buffer.update_priority(sample.indices[b], std::abs(td[b]) + 1e-3);

    // ---- actor update: exact expected critic value under the masked policy ----
    std::vector<NetGrads> actor_grads;
    for (Net& a : bundle.actors()) actor_grads.push_back(a.zero_grads());

    for (std::size_t b = 0; b < sample.entries.size(); ++b) {
        const ReplayEntry& e = *sample.entries[b];
        const auto& gids = mbuf.group_ids[sample.indices[b]];
        const auto& cmask = mbuf.cur_masks[sample.indices[b]];
        const int ego = gids.empty() ? -1 : gids[0];
        const std::size_t ni = bundle.net_index(ego);

        std::vector<double> ego_obs(e.obs.begin(), e.obs.begin() + kObsDim);
        std::vector<std::uint8_t> ego_mask(cmask.begin(), cmask.begin() + A);

        ForwardTrace atrace;
        const auto logits = bundle.actors()[ni].forward(ego_obs, atrace);
        const auto p = masked_softmax(logits, ego_mask);

        // Q for each unmasked ego action, other slots fixed from the batch.
        std::vector<std::vector<double>> reps(J);
        for (std::size_t k = 1; k < J; ++k)
            if (gids[k] >= 0) reps[k] = onehot(A, e.act[k]);

        std::vector<double> dp(A, 0.0);
        double expected_q = 0.0;
        for (std::size_t u = 0; u < A; ++u) {
            if (!ego_mask[u]) continue;
            reps[0] = onehot(A, static_cast<int>(u));
            const auto x = critic_input(cfg, e.obs, reps);
            const double qv = bundle.critics()[ni].forward(x)[0];
            expected_q += p[u] * qv;
            dp[u] = -sample.weights[b] * qv * batch_inv;
        }
        losses.actor_loss -= sample.weights[b] * expected_q * batch_inv;

        const auto dlogits = masked_softmax_backward(p, ego_mask, dp);
        bundle.actors()[ni].backward(atrace, dlogits, actor_grads[ni]);
    }
    for (std::size_t ni = 0; ni < bundle.actors().size(); ++ni)
        bundle.actors()[ni].sgd_step(actor_grads[ni], cfg.actor_lr);

    bundle.soft_update_targets(cfg.tau);

    if (!bundle.finite() || !std::isfinite(losses.actor_loss)) {
        bundle.critics() = std::move(snapshot_critics);
        bundle.actors() = std::move(snapshot_actors);
        bundle.target_critics() = std::move(snapshot_tc);
        bundle.target_actors() = std::move(snapshot_ta);
        throw NumericError("train_step: non-finite parameter after step; rolled back");
    }
    return losses;
}

} // namespace ars

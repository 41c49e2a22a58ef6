#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "ars/economy.hpp"
#include "ars/grid.hpp"
#include "ars/net.hpp"
#include "ars/replay.hpp"
#include "ars/rng.hpp"

namespace ars {

inline constexpr std::size_t kObsDim = 28; // x, y, role, 5x5 perception field
inline constexpr int kPerceptionRadius = 2;

struct MarlConfig {
    std::size_t rider_slots = 64;   // actions 0..slots-1 pick a slot, slots = decline
    std::size_t joint_agents = 4;   // ego plus nearest co-deciding drivers
    double pickup_radius_cells = 3.0;
    double alpha_r = 0.5;
    bool reward_raw_km = false;     // false: distance terms normalized by max_detour
    double actor_lr = 0.001;
    double critic_lr = 0.01;
    double gamma = 0.95;
    double tau = 0.01;
    std::size_t batch = 32;
    std::size_t buffer = 50000;
    double priority_exponent = 0.6;
    double explore_start = 1.0;
    double explore_end = 0.05;
    int train_episodes = 300;
    int steps_per_episode = 48;
    std::vector<std::size_t> actor_hidden = {64, 64};
    std::vector<std::size_t> critic_hidden = {128, 64};
    bool per_agent_nets = false;

    std::size_t actions() const { return rider_slots + 1; }
    std::size_t critic_input() const { return joint_agents * (kObsDim + actions()); }
};

void validate(const MarlConfig& cfg);

// 28 reals: x,y scaled to [0,1]; role bit; 5x5 rider-presence counts centered
// on the agent, out-of-bounds cells encoded -1. `rider_count_by_cell` holds
// waiting (unserved, uncommitted) riders per cell index.
std::vector<double> build_observation(const GridWorld& g, CellCoord pos, bool is_driver,
                                      const std::vector<int>& rider_count_by_cell);

// Action mask over slots+1 entries: slot u is selectable iff a rider is bound
// to it and appears in `feasible_ids`; the decline entry is always true.
std::vector<std::uint8_t> action_mask(const std::vector<int>& slot_to_rider,
                                      const std::vector<int>& feasible_ids,
                                      std::size_t rider_slots);

// Decision reward: alpha_r * d_solo - (1-alpha_r) * w * detour + delta_s with
// w = 1 below the threshold theta, 1.5 above. Distance terms are divided by
// max_detour unless raw mode is on. Declining yields 0 (caller side).
double decision_reward(double rider_solo_km, double detour_km, double theta_km,
                       double delta_s, double max_detour_km, const MarlConfig& cfg);

// Actor/critic pair with target copies; one shared set by default, per-agent
// sets behind the flag.
class PolicyBundle {
public:
    PolicyBundle() = default;
    PolicyBundle(const MarlConfig& cfg, std::size_t n_agents, RngStream& rng);

    std::size_t net_count() const { return actors_.size(); }
    std::size_t net_index(int agent_id) const;

    Net& actor(int agent_id) { return actors_[net_index(agent_id)]; }
    const Net& actor(int agent_id) const { return actors_[net_index(agent_id)]; }
    Net& critic(int agent_id) { return critics_[net_index(agent_id)]; }
    Net& target_actor(int agent_id) { return target_actors_[net_index(agent_id)]; }
    const Net& target_actor(int agent_id) const { return target_actors_[net_index(agent_id)]; }
    Net& target_critic(int agent_id) { return target_critics_[net_index(agent_id)]; }

    void save(const std::string& path) const;
    static PolicyBundle load(const std::string& path, const MarlConfig& cfg);

    void soft_update_targets(double tau);
    bool finite() const;

    std::vector<Net>& actors() { return actors_; }
    std::vector<Net>& critics() { return critics_; }
    std::vector<Net>& target_actors() { return target_actors_; }
    std::vector<Net>& target_critics() { return target_critics_; }

private:
    std::vector<Net> actors_, critics_, target_actors_, target_critics_;
};

// Samples from the masked policy; with probability explore_rate samples
// uniformly over unmasked actions instead.
int select_action(const Net& actor, const std::vector<double>& obs,
                  const std::vector<std::uint8_t>& mask, double explore_rate,
                  RngStream& rng);

struct TrainLosses {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
};

// Group transition pushed by the environment. Ego is slot 0; `group_ids`
// carries the agent ids backing each slot (-1 for pads) so per-agent mode can
// route nets.
struct GroupTransition {
    std::vector<int> group_ids;
    ReplayEntry entry;
    std::vector<std::uint8_t> cur_mask; // J * actions, ego mask in slice 0
};

// Extended entry stored in the buffer (current masks ride along).
struct MarlBuffer {
    explicit MarlBuffer(const MarlConfig& cfg)
        : buffer(cfg.buffer, cfg.priority_exponent) {}
    ReplayBuffer buffer;
    std::vector<std::vector<std::uint8_t>> cur_masks; // parallel to ring slots
    std::vector<std::vector<int>> group_ids;          // parallel to ring slots
    std::size_t head = 0;

    void push(GroupTransition t);
};

// One prioritized batch: critic step, exact-expectation actor step, priority
// refresh, soft target update. Rolls back and throws NumericError when a
// parameter goes non-finite.
TrainLosses train_step(PolicyBundle& bundle, MarlBuffer& buffer, const MarlConfig& cfg,
                       RngStream& rng);

} // namespace ars

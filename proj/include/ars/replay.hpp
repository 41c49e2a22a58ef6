#pragma once
#include <cstdint>
#include <vector>

#include "ars/rng.hpp"

namespace ars {

// One joint transition from the deciding agent's point of view: ego slot
// first, then its decision group, flattened row-major. Pads carry zero
// observations and action index -1.
struct ReplayEntry {
    std::vector<double> obs;            // J * obs_dim
    std::vector<int> act;               // J, -1 for pads
    double reward = 0.0;                // ego reward
    std::vector<double> next_obs;       // J * obs_dim
    std::vector<std::uint8_t> next_mask; // J * (actions)
    std::uint8_t done = 0;
};

// Ring buffer with proportional prioritized sampling over a sum tree.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, double priority_exponent);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }

    // New entries receive the maximum current priority.
    void push(ReplayEntry entry);

    struct Sample {
        std::vector<std::size_t> indices;
        std::vector<const ReplayEntry*> entries;
        std::vector<double> weights; // importance weights, normalized by max
    };

    // Draw batch_size entries with probability proportional to
    // priority^exponent. Requires size() >= batch_size.
    Sample sample(std::size_t batch_size, RngStream& rng) const;

    // |TD error| + epsilon after a training step.
    void update_priority(std::size_t index, double priority);

    double priority_of(std::size_t index) const;

private:
    void set_weight(std::size_t index, double weight);
    double total_weight() const { return tree_[1]; }

    std::size_t capacity_;
    std::size_t tree_base_;
    double exponent_;
    std::vector<ReplayEntry> entries_;
    std::vector<double> priorities_;
    std::vector<double> tree_; // binary sum tree over priority^exponent
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    double max_priority_ = 1.0;
};

} // namespace ars

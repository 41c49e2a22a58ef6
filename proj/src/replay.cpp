#include "ars/replay.hpp"
#include "ars/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ars {

ReplayBuffer::ReplayBuffer(std::size_t capacity, double priority_exponent)
    : capacity_(capacity), exponent_(priority_exponent) {
    if (capacity_ == 0) throw ContractViolation("ReplayBuffer: zero capacity");
    tree_base_ = 1;
    while (tree_base_ < capacity_) tree_base_ <<= 1;
    tree_.assign(2 * tree_base_, 0.0);
    entries_.resize(capacity_);
    priorities_.assign(capacity_, 0.0);
}

void ReplayBuffer::set_weight(std::size_t index, double weight) {
    std::size_t node = tree_base_ + index;
    tree_[node] = weight;
    for (node >>= 1; node >= 1; node >>= 1)
        tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

void ReplayBuffer::push(ReplayEntry entry) {
    const std::size_t index = head_;
    entries_[index] = std::move(entry);
    priorities_[index] = max_priority_;
    set_weight(index, std::pow(max_priority_, exponent_));
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

ReplayBuffer::Sample ReplayBuffer::sample(std::size_t batch_size, RngStream& rng) const {
    if (size_ < batch_size)
        throw StateError("ReplayBuffer: cannot sample " + std::to_string(batch_size) +
                         " from buffer of size " + std::to_string(size_));
    Sample s;
    s.indices.reserve(batch_size);
    s.entries.reserve(batch_size);
    s.weights.reserve(batch_size);

    const double total = total_weight();
    if (!(total > 0.0)) throw StateError("ReplayBuffer: zero total priority mass");

    for (std::size_t k = 0; k < batch_size; ++k) {
        double u = rng.uniform() * total;
        std::size_t node = 1;
        while (node < tree_base_) {
            const std::size_t left = 2 * node;
            if (u < tree_[left] || tree_[left + 1] <= 0.0) {
                node = left;
            } else {
                u -= tree_[left];
                node = left + 1;
            }
        }
        std::size_t index = node - tree_base_;
        if (index >= size_) index = size_ - 1; // numeric edge at the tail
        s.indices.push_back(index);
        s.entries.push_back(&entries_[index]);
        const double prob = tree_[tree_base_ + index] / total;
        s.weights.push_back(1.0 / (static_cast<double>(size_) * prob));
    }
    const double wmax = *std::max_element(s.weights.begin(), s.weights.end());
    for (double& w : s.weights) w /= wmax;
    return s;
}

void ReplayBuffer::update_priority(std::size_t index, double priority) {
    if (index >= size_) throw ContractViolation("ReplayBuffer: priority index out of range");
    if (!(priority > 0.0)) throw ContractViolation("ReplayBuffer: priority must be positive");
    priorities_[index] = priority;
    max_priority_ = std::max(max_priority_, priority);
    set_weight(index, std::pow(priority, exponent_));
}

double ReplayBuffer::priority_of(std::size_t index) const {
    if (index >= size_) throw ContractViolation("ReplayBuffer: index out of range");
    return priorities_[index];
}

} // namespace ars

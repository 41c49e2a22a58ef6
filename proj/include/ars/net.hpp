#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "ars/rng.hpp"

namespace ars {

enum class Activation : unsigned char { identity = 0, tanh_fn = 1, relu = 2 };

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation act = Activation::identity;
    std::vector<double> w; // row-major, out x in
    std::vector<double> b; // out
};

// Record of one forward pass, kept for backprop.
struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;  // per layer, before activation
    std::vector<std::vector<double>> post; // per layer, after activation
};

struct NetGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
};

// Small dense MLP. All math routes through the runtime-dispatched kernels.
class Net {
public:
    Net() = default;
    Net(const std::vector<std::size_t>& sizes, Activation hidden_act);

    void init_params(RngStream& rng); // uniform +-1/sqrt(fan_in)
    void zero_params();

    std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
    std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().out; }
    std::size_t param_count() const;

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    std::vector<double> forward(const std::vector<double>& x) const;
    std::vector<double> forward(const std::vector<double>& x, ForwardTrace& trace) const;

    NetGrads zero_grads() const;

    // Accumulates dLoss/dParams into `grads` given dLoss/dOutput; returns
    // dLoss/dInput.
    std::vector<double> backward(const ForwardTrace& trace,
                                 const std::vector<double>& dloss_dout,
                                 NetGrads& grads) const;

    void sgd_step(const NetGrads& grads, double lr);
    bool finite() const;

private:
    std::vector<Layer> layers_;
};

// target <- tau * online + (1 - tau) * target, parameter-wise
void soft_update(Net& target, const Net& online, double tau);

// Masked probability head: softmax over unmasked logits; masked entries are
// exactly zero. Requires at least one unmasked entry.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<std::uint8_t>& mask);

// d(loss)/d(logits) given probabilities p from masked_softmax and upstream
// gradient g = d(loss)/d(p).
std::vector<double> masked_softmax_backward(const std::vector<double>& p,
                                            const std::vector<std::uint8_t>& mask,
                                            const std::vector<double>& g);

// Checkpoint container: versioned binary, bit-exact round-trip.
void save_net(std::ostream& out, const Net& net);
Net load_net(std::istream& in);

} // namespace ars

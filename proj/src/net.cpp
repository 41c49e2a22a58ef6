#include "ars/net.hpp"
#include "ars/errors.hpp"
#include "ars/kernels.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace ars {

namespace {

double activate(double x, Activation a) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::tanh_fn: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

// derivative expressed through the post-activation value
double activate_grad(double post, double pre, Activation a) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::tanh_fn: return 1.0 - post * post;
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

} // namespace

Net::Net(const std::vector<std::size_t>& sizes, Activation hidden_act) {
    if (sizes.size() < 2)
        throw ContractViolation("Net: need at least input and output sizes");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        Layer l;
        l.in = sizes[i];
        l.out = sizes[i + 1];
        l.act = (i + 2 == sizes.size()) ? Activation::identity : hidden_act;
        l.w.assign(l.in * l.out, 0.0);
        l.b.assign(l.out, 0.0);
        layers_.push_back(std::move(l));
    }
}

void Net::init_params(RngStream& rng) {
    for (Layer& l : layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        for (double& v : l.w) v = rng.uniform(-bound, bound);
        for (double& v : l.b) v = rng.uniform(-bound, bound);
    }
}

void Net::zero_params() {
    for (Layer& l : layers_) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

std::size_t Net::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> Net::forward(const std::vector<double>& x) const {
    ForwardTrace trace;
    return forward(x, trace);
}

std::vector<double> Net::forward(const std::vector<double>& x, ForwardTrace& trace) const {
    if (layers_.empty()) throw ContractViolation("Net::forward on empty net");
    if (x.size() != layers_.front().in)
        throw InputError("Net::forward: input length " + std::to_string(x.size()) +
                         " does not match first layer " + std::to_string(layers_.front().in));
    const auto& k = kernels::active();
    trace.input = x;
    trace.pre.clear();
    trace.post.clear();
    const std::vector<double>* cur = &trace.input;
    for (const Layer& l : layers_) {
        std::vector<double> pre(l.out);
        k.affine(pre.data(), l.w.data(), l.b.data(), cur->data(), l.out, l.in);
        std::vector<double> post(l.out);
        for (std::size_t i = 0; i < l.out; ++i) post[i] = activate(pre[i], l.act);
        trace.pre.push_back(std::move(pre));
        trace.post.push_back(std::move(post));
        cur = &trace.post.back();
    }
    return trace.post.back();
}

NetGrads Net::zero_grads() const {
    NetGrads g;
    for (const Layer& l : layers_) {
        g.w.emplace_back(l.w.size(), 0.0);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

std::vector<double> Net::backward(const ForwardTrace& trace,
                                  const std::vector<double>& dloss_dout,
                                  NetGrads& grads) const {
    if (trace.post.size() != layers_.size())
        throw ContractViolation("Net::backward: trace does not match net");
    const auto& k = kernels::active();

    std::vector<double> delta = dloss_dout;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& l = layers_[li];
        if (delta.size() != l.out)
            throw ContractViolation("Net::backward: gradient length mismatch");
        for (std::size_t i = 0; i < l.out; ++i)
            delta[i] *= activate_grad(trace.post[li][i], trace.pre[li][i], l.act);

        const std::vector<double>& below =
            (li == 0) ? trace.input : trace.post[li - 1];
        k.rank1_acc(grads.w[li].data(), delta.data(), below.data(), l.out, l.in);
        for (std::size_t i = 0; i < l.out; ++i) grads.b[li][i] += delta[i];

        std::vector<double> next(l.in, 0.0);
        k.matvec_t_acc(next.data(), l.w.data(), delta.data(), l.out, l.in);
        delta = std::move(next);
    }
    return delta;
}

void Net::sgd_step(const NetGrads& grads, double lr) {
    const auto& k = kernels::active();
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        k.axpy(layers_[li].w.data(), -lr, grads.w[li].data(), layers_[li].w.size());
        k.axpy(layers_[li].b.data(), -lr, grads.b[li].data(), layers_[li].b.size());
    }
}

bool Net::finite() const {
    for (const Layer& l : layers_) {
        for (double v : l.w)
            if (!std::isfinite(v)) return false;
        for (double v : l.b)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

void soft_update(Net& target, const Net& online, double tau) {
    if (target.layers().size() != online.layers().size())
        throw ContractViolation("soft_update: mismatched nets");
    const auto& k = kernels::active();
    for (std::size_t li = 0; li < target.layers().size(); ++li) {
        Layer& t = target.layers()[li];
        const Layer& o = online.layers()[li];
        if (t.w.size() != o.w.size() || t.b.size() != o.b.size())
            throw ContractViolation("soft_update: mismatched layer shapes");
        k.blend(t.w.data(), 1.0 - tau, tau, o.w.data(), t.w.size());
        k.blend(t.b.data(), 1.0 - tau, tau, o.b.data(), t.b.size());
    }
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<std::uint8_t>& mask) {
    if (logits.size() != mask.size())
        throw ContractViolation("masked_softmax: logits/mask length mismatch");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
    if (max_logit == -std::numeric_limits<double>::infinity())
        throw ContractViolation("masked_softmax: all actions masked");

    std::vector<double> p(logits.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!mask[i]) continue;
        p[i] = std::exp(logits[i] - max_logit);
        sum += p[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i]) p[i] /= sum;
    return p;
}

std::vector<double> masked_softmax_backward(const std::vector<double>& p,
                                            const std::vector<std::uint8_t>& mask,
                                            const std::vector<double>& g) {
    if (p.size() != mask.size() || p.size() != g.size())
        throw ContractViolation("masked_softmax_backward: length mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (mask[i]) dot += p[i] * g[i];
    std::vector<double> out(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (mask[i]) out[i] = p[i] * (g[i] - dot);
    return out;
}

namespace {
constexpr char kMagic[8] = {'A', 'R', 'S', 'N', 'E', 'T', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw InputError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        write_u64(out, bits);
    }
}

void read_doubles(std::istream& in, std::vector<double>& v) {
    for (double& d : v) {
        const std::uint64_t bits = read_u64(in);
        std::memcpy(&d, &bits, 8);
    }
}
} // namespace

void save_net(std::ostream& out, const Net& net) {
    out.write(kMagic, 8);
    write_u64(out, net.layers().size());
    for (const Layer& l : net.layers()) {
        write_u64(out, l.in);
        write_u64(out, l.out);
        write_u64(out, static_cast<std::uint64_t>(l.act));
        write_doubles(out, l.w);
        write_doubles(out, l.b);
    }
}

Net load_net(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw InputError("not a network checkpoint (bad magic)");
    const std::uint64_t n_layers = read_u64(in);
    if (n_layers == 0 || n_layers > 64) throw InputError("checkpoint layer count out of range");
    Net net;
    for (std::uint64_t i = 0; i < n_layers; ++i) {
        Layer l;
        l.in = read_u64(in);
        l.out = read_u64(in);
        const std::uint64_t act = read_u64(in);
        if (l.in == 0 || l.out == 0 || l.in > (1u << 20) || l.out > (1u << 20) || act > 2)
            throw InputError("checkpoint layer header out of range");
        l.act = static_cast<Activation>(act);
        l.w.resize(l.in * l.out);
        l.b.resize(l.out);
        read_doubles(in, l.w);
        read_doubles(in, l.b);
        net.layers().push_back(std::move(l));
    }
    return net;
}

} // namespace ars

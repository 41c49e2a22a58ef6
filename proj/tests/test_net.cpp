#include <doctest.h>

#include <sstream>

#include "ars/errors.hpp"
#include "ars/net.hpp"
#include "support/gradcheck.hpp"

using namespace ars;

TEST_CASE("masked softmax contracts") {
    SUBCASE("zero logits over three unmasked entries are uniform") {
        std::vector<double> logits(4, 0.0);
        std::vector<std::uint8_t> mask{1, 1, 0, 1};
        const auto p = masked_softmax(logits, mask);
        CHECK(p[0] == doctest::Approx(1.0 / 3));
        CHECK(p[1] == doctest::Approx(1.0 / 3));
        CHECK(p[2] == 0.0);
        CHECK(p[3] == doctest::Approx(1.0 / 3));
    }
    SUBCASE("masked entries are exactly zero and the rest renormalize") {
        std::vector<double> logits{2.0, -1.0, 0.5, 0.0};
        std::vector<std::uint8_t> mask{1, 0, 1, 0};
        const auto p = masked_softmax(logits, mask);
        CHECK(p[1] == 0.0);
        CHECK(p[3] == 0.0);
        CHECK(p[0] + p[2] == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("probability vectors are valid on random draws") {
        RngStream rng(1);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng.uniform_index(30);
            std::vector<double> logits(n);
            for (double& v : logits) v = rng.uniform(-30.0, 30.0);
            std::vector<std::uint8_t> mask(n, 0);
            mask[rng.uniform_index(n)] = 1;
            for (auto& m : mask)
                if (rng.uniform() < 0.5) m = 1;
            const auto p = masked_softmax(logits, mask);
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(p[i] >= 0.0);
                if (!mask[i]) CHECK(p[i] == 0.0);
                sum += p[i];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("all-masked input is a contract violation") {
        CHECK_THROWS_AS(masked_softmax({0.0, 0.0}, {0, 0}), ContractViolation);
    }
}

TEST_CASE("forward: identity-like single layer reproduces its input") {
    Net net({3, 3}, Activation::identity);
    net.zero_params();
    for (std::size_t i = 0; i < 3; ++i) net.layers()[0].w[i * 3 + i] = 1.0;
    const std::vector<double> x{0.3, -1.2, 4.0};
    CHECK(net.forward(x) == x);
    CHECK_THROWS_AS(net.forward({1.0, 2.0}), InputError);
}

TEST_CASE("zero nets with zero targets produce zero critic gradients") {
    Net critic({4, 4, 1}, Activation::tanh_fn);
    critic.zero_params();
    std::vector<gradcheck::CriticSample> batch(2);
    for (auto& s : batch) {
        s.input.assign(4, 0.5);
        s.target = 0.0; // r = 0 and gamma = 0
    }
    const NetGrads grads = gradcheck::critic_loss_grads(critic, batch);
    for (const auto& layer : grads.w)
        for (double v : layer) CHECK(v == 0.0);
    for (const auto& layer : grads.b)
        for (double v : layer) CHECK(v == 0.0);
}

// Acceptance criterion: 50 random (shape, input) draws, both losses, max
// relative error below 1e-4 against central finite differences.
TEST_CASE("analytic gradients match finite differences over 50 draws") {
    RngStream rng(20240801);
    double worst = 0.0;
    for (int draw = 0; draw < 50; ++draw)
        worst = std::max(worst, gradcheck::run_draw(rng));
    CHECK(worst < 1e-4);
}

TEST_CASE("soft update is a convex combination") {
    RngStream rng(5);
    Net online({4, 8, 2}, Activation::tanh_fn);
    online.init_params(rng);
    Net target = online;
    Net modified({4, 8, 2}, Activation::tanh_fn);
    modified.init_params(rng);
    target = modified;

    Net before = target;
    soft_update(target, online, 0.25);
    for (std::size_t li = 0; li < target.layers().size(); ++li)
        for (std::size_t i = 0; i < target.layers()[li].w.size(); ++i) {
            const double lo = std::min(before.layers()[li].w[i], online.layers()[li].w[i]);
            const double hi = std::max(before.layers()[li].w[i], online.layers()[li].w[i]);
            CHECK(target.layers()[li].w[i] >= lo - 1e-15);
            CHECK(target.layers()[li].w[i] <= hi + 1e-15);
        }

    soft_update(target, online, 1.0);
    CHECK(target.layers()[0].w == online.layers()[0].w);

    Net frozen = target;
    soft_update(target, modified, 0.0);
    CHECK(target.layers()[0].w == frozen.layers()[0].w);
}

TEST_CASE("network checkpoint round-trips bit-exactly") {
    RngStream rng(7);
    Net net({5, 16, 3}, Activation::relu);
    net.init_params(rng);
    std::stringstream buf;
    save_net(buf, net);
    const Net loaded = load_net(buf);
    REQUIRE(loaded.layers().size() == net.layers().size());
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
        CHECK(loaded.layers()[li].w == net.layers()[li].w);
        CHECK(loaded.layers()[li].b == net.layers()[li].b);
        CHECK(loaded.layers()[li].act == net.layers()[li].act);
    }

    std::stringstream bad("garbage");
    CHECK_THROWS_AS(load_net(bad), InputError);
}

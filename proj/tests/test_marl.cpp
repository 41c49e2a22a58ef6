#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ars/errors.hpp"
#include "ars/marl.hpp"

using namespace ars;

namespace {
MarlConfig tiny_cfg() {
    MarlConfig cfg;
    cfg.rider_slots = 4;
    cfg.joint_agents = 2;
    cfg.actor_hidden = {8, 8};
    cfg.critic_hidden = {16, 8};
    cfg.batch = 4;
    cfg.buffer = 64;
    return cfg;
}

GroupTransition make_transition(const MarlConfig& cfg, RngStream& rng, double reward,
                                bool done = false) {
    const std::size_t J = cfg.joint_agents;
    const std::size_t A = cfg.actions();
    GroupTransition t;
    t.group_ids = {0, 1};
    t.entry.obs.resize(J * kObsDim);
    t.entry.next_obs.resize(J * kObsDim);
    for (double& v : t.entry.obs) v = rng.uniform(-1.0, 1.0);
    for (double& v : t.entry.next_obs) v = rng.uniform(-1.0, 1.0);
    t.entry.act = {static_cast<int>(rng.uniform_index(A)),
                   static_cast<int>(rng.uniform_index(A))};
    t.entry.reward = reward;
    t.entry.done = done ? 1 : 0;
    t.cur_mask.assign(J * A, 1);
    t.entry.next_mask.assign(J * A, 1);
    return t;
}
} // namespace

TEST_CASE("observation layout: empty field, corners, stacking") {
    GridWorld g(15, 15, 0.28);
    std::vector<int> counts(g.cell_count(), 0);

    SUBCASE("no riders anywhere: all in-bounds entries zero") {
        const auto obs = build_observation(g, {7, 7}, true, counts);
        REQUIRE(obs.size() == kObsDim);
        CHECK(obs[0] == doctest::Approx(0.5));
        CHECK(obs[1] == doctest::Approx(0.5));
        CHECK(obs[2] == 1.0);
        for (std::size_t i = 3; i < obs.size(); ++i) CHECK(obs[i] == 0.0);
    }
    SUBCASE("corner agent sees 16 out-of-bounds cells") {
        const auto obs = build_observation(g, {0, 0}, false, counts);
        int oob = 0;
        for (std::size_t i = 3; i < obs.size(); ++i)
            if (obs[i] == -1.0) ++oob;
        CHECK(oob == 16);
        CHECK(obs[2] == 0.0);
    }
    SUBCASE("two riders in one adjacent cell count as 2") {
        counts[g.cell_index({8, 7})] = 2;
        const auto obs = build_observation(g, {7, 7}, true, counts);
        // perception row dy=0, dx=+1 -> index 3 + (2*5 + 3)
        CHECK(obs[3 + 13] == 2.0);
    }
}

TEST_CASE("action mask: binding and decline") {
    std::vector<int> binding{10, 11, -1, 13};
    SUBCASE("no feasible riders leaves only decline") {
        const auto mask = action_mask(binding, {}, 4);
        CHECK(mask == std::vector<std::uint8_t>{0, 0, 0, 0, 1});
    }
    SUBCASE("feasible ids map onto their slots") {
        const auto mask = action_mask(binding, {13, 10}, 4);
        CHECK(mask == std::vector<std::uint8_t>{1, 0, 0, 1, 1});
    }
}

TEST_CASE("decision reward: raw-kilometer mode evaluates the formula directly") {
    MarlConfig cfg = tiny_cfg();
    cfg.reward_raw_km = true;
    cfg.alpha_r = 0.5;
    const double max_detour = 8.0;
    const double theta = 0.15 * max_detour; // 1.2

    // zero detour: both penalty terms vanish
    CHECK(decision_reward(2.0, 0.0, theta, 0.05, max_detour, cfg) ==
          doctest::Approx(0.5 * 2.0 + 0.05));
    // detour 1.5*theta trips the w = 1.5 penalty
    const double detour = 1.5 * theta;
    CHECK(decision_reward(2.0, detour, theta, 0.03, max_detour, cfg) ==
          doctest::Approx(0.5 * 2.0 - 0.5 * 1.5 * detour + 0.03));
    // just below the threshold w stays 1
    CHECK(decision_reward(2.0, theta, theta, 0.0, max_detour, cfg) ==
          doctest::Approx(0.5 * 2.0 - 0.5 * theta));
}

TEST_CASE("decision reward: normalized mode divides the distance terms") {
    MarlConfig cfg = tiny_cfg();
    cfg.alpha_r = 0.5;
    const double max_detour = 8.0;
    CHECK(decision_reward(2.0, 1.8, 1.2, 0.03, max_detour, cfg) ==
          doctest::Approx(0.5 * 2.0 / 8.0 - 0.5 * 1.5 * 1.8 / 8.0 + 0.03));
}

TEST_CASE("replay buffer") {
    RngStream rng(3);
    SUBCASE("exponent 0 samples uniformly with equal weights") {
        ReplayBuffer buf(8, 0.0);
        for (int i = 0; i < 8; ++i) {
            ReplayEntry e;
            e.reward = i;
            buf.push(std::move(e));
        }
        buf.update_priority(0, 100.0);
        const auto s = buf.sample(4, rng);
        for (double w : s.weights) CHECK(w == doctest::Approx(1.0));
    }
    SUBCASE("capacity-1 ring keeps only the newer entry") {
        ReplayBuffer buf(1, 0.6);
        ReplayEntry a;
        a.reward = 1.0;
        ReplayEntry b;
        b.reward = 2.0;
        buf.push(std::move(a));
        buf.push(std::move(b));
        CHECK(buf.size() == 1);
        const auto s = buf.sample(1, rng);
        CHECK(s.entries[0]->reward == 2.0);
    }
    SUBCASE("priorities 3:1 with exponent 1 draw at a 3:1 ratio") {
        ReplayBuffer buf(2, 1.0);
        buf.push(ReplayEntry{});
        buf.push(ReplayEntry{});
        buf.update_priority(0, 3.0);
        buf.update_priority(1, 1.0);
        int first = 0;
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            const auto s = buf.sample(1, rng);
            if (s.indices[0] == 0) ++first;
        }
        const double freq = static_cast<double>(first) / draws;
        const double sigma = std::sqrt(0.75 * 0.25 / draws);
        CHECK(std::abs(freq - 0.75) <= 3.0 * sigma);
    }
    SUBCASE("sampling an undersized buffer is a state error") {
        ReplayBuffer buf(8, 0.6);
        buf.push(ReplayEntry{});
        CHECK_THROWS_AS(buf.sample(2, rng), StateError);
    }
}

TEST_CASE("select_action") {
    MarlConfig cfg = tiny_cfg();
    RngStream init(1);
    Net actor({kObsDim, 8, cfg.actions()}, Activation::tanh_fn);
    actor.init_params(init);
    std::vector<double> obs(kObsDim, 0.1);

    SUBCASE("decline-only mask always declines") {
        std::vector<std::uint8_t> mask(cfg.actions(), 0);
        mask[cfg.actions() - 1] = 1;
        RngStream rng(2);
        for (int i = 0; i < 100; ++i)
            CHECK(select_action(actor, obs, mask, 0.0, rng) ==
                  static_cast<int>(cfg.actions()) - 1);
    }
    SUBCASE("all-false mask is a contract violation") {
        std::vector<std::uint8_t> mask(cfg.actions(), 0);
        RngStream rng(2);
        CHECK_THROWS_AS(select_action(actor, obs, mask, 0.0, rng), ContractViolation);
    }
    SUBCASE("uniform probabilities give near-uniform frequencies") {
        Net zero({kObsDim, cfg.actions()}, Activation::identity);
        zero.zero_params();
        std::vector<std::uint8_t> mask{1, 1, 1, 1, 0};
        RngStream rng(7);
        std::vector<int> histo(cfg.actions(), 0);
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) ++histo[select_action(zero, obs, mask, 0.0, rng)];
        const double sigma = std::sqrt(0.25 * 0.75 / draws);
        for (int u = 0; u < 4; ++u)
            CHECK(std::abs(histo[u] / static_cast<double>(draws) - 0.25) <= 3.0 * sigma);
        CHECK(histo[4] == 0); // masked entry never selected
    }
    SUBCASE("masked action never selected under exploration either") {
        std::vector<std::uint8_t> mask{1, 0, 1, 0, 1};
        RngStream rng(9);
        for (int i = 0; i < 10000; ++i) {
            const int u = select_action(actor, obs, mask, 0.7, rng);
            CHECK(mask[u] == 1);
        }
    }
}

TEST_CASE("train_step: soft update boundaries and convergence smoke") {
    MarlConfig cfg = tiny_cfg();
    RngStream init(11);
    PolicyBundle bundle(cfg, 2, init);
    MarlBuffer buf(cfg);
    RngStream data(5);
    for (int i = 0; i < 8; ++i) buf.push(make_transition(cfg, data, i % 2 ? 1.0 : -1.0));

    SUBCASE("tau = 1 copies online into target") {
        MarlConfig c1 = cfg;
        c1.tau = 1.0;
        RngStream rng(1);
        train_step(bundle, buf, c1, rng);
        CHECK(bundle.target_actors()[0].layers()[0].w == bundle.actors()[0].layers()[0].w);
        CHECK(bundle.target_critics()[0].layers()[0].w == bundle.critics()[0].layers()[0].w);
    }
    SUBCASE("tau = 0 is rejected by validation") {
        MarlConfig c0 = cfg;
        c0.tau = 0.0;
        CHECK_THROWS_AS(validate(c0), ConfigError);
        // soft_update itself honors tau = 0 exactly
        Net target = bundle.target_actors()[0];
        const Net before = target;
        soft_update(target, bundle.actors()[0], 0.0);
        CHECK(target.layers()[0].w == before.layers()[0].w);
    }
    SUBCASE("critic loss decreases on a fixed batch over 50 steps") {
        // 2-agent toy problem: fixed 4-entry buffer, uniform priorities
        MarlConfig c = cfg;
        c.buffer = 4;
        c.batch = 4;
        c.priority_exponent = 0.0;
        c.gamma = 0.0;
        MarlBuffer fixed(c);
        RngStream d2(99);
        for (int i = 0; i < 4; ++i) fixed.push(make_transition(c, d2, i - 1.5, true));
        RngStream t1(3);
        PolicyBundle b2(c, 2, t1);
        RngStream rng(4);
        const double first = train_step(b2, fixed, c, rng).critic_loss;
        double last = first;
        for (int i = 0; i < 49; ++i) last = train_step(b2, fixed, c, rng).critic_loss;
        CHECK(last < first);
    }
}

TEST_CASE("policy bundle checkpoint round-trips bit-exactly") {
    namespace fs = std::filesystem;
    MarlConfig cfg = tiny_cfg();
    RngStream init(21);
    PolicyBundle bundle(cfg, 2, init);

    const auto dir = fs::temp_directory_path() / "ars_marl_test";
    fs::create_directories(dir);
    const std::string path = (dir / "policy.ckpt").string();
    bundle.save(path);
    const PolicyBundle loaded = PolicyBundle::load(path, cfg);
    CHECK(loaded.actor(0).layers()[0].w == bundle.actor(0).layers()[0].w);
    CHECK(loaded.target_actor(0).layers()[1].b == bundle.target_actor(0).layers()[1].b);

    MarlConfig other = cfg;
    other.rider_slots = 9;
    CHECK_THROWS_AS(PolicyBundle::load(path, other), InputError);
    fs::remove_all(dir);
}

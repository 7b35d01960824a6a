#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "replen/agents.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace replen;

namespace {

// exact rational arithmetic oracle for the smoothed target
struct Frac {
    long long num, den;

    static long long gcd(long long a, long long b) { return b == 0 ? a : gcd(b, a % b); }
    static Frac make(long long n, long long d) {
        const long long g = gcd(n < 0 ? -n : n, d);
        return {n / g, d / g};
    }
    Frac operator+(const Frac& o) const { return make(num * o.den + o.num * den, den * o.den); }
    Frac operator/(const Frac& o) const { return make(num * o.den, den * o.num); }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

AgentHyperparams small_hp() {
    AgentHyperparams hp;
    hp.sgd.learning_rate = 0.001;
    hp.sgd.momentum = 0.0;
    hp.sgd.batch_size = 1;
    hp.gamma = 0.0;
    return hp;
}

FeatureVector sample_features() {
    return {0.4, 0.06, 0.02, 0.7, 0.5, 0.8, 0.9, 1.1};
}

} // namespace

TEST_CASE("ActionGrid::uniform") {
    const ActionGrid g = ActionGrid::uniform(21);
    CHECK(g.size() == 21);
    CHECK(g.values.front() == 0.0);
    CHECK(g.values.back() == 1.0);
    CHECK(g.values[1] == doctest::Approx(0.05).epsilon(1e-15));
    g.validate();

    ActionGrid bad;
    bad.values = {0.2, 0.2};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ActionGrid over;
    over.values = {0.5, 1.2};
    CHECK_THROWS_AS(over.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ActionGrid::uniform(1), std::invalid_argument);
}

TEST_CASE("floor_normalize") {
    const auto p = floor_normalize({1.0, 3.0}, 0.0);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));

    const auto uniform = floor_normalize({0.0, 0.0, 0.0}, 0.0);
    for (double v : uniform) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    // the floor keeps zero activations alive
    const auto floored = floor_normalize({0.0, 1.0}, 1.0);
    CHECK(floored[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(floored[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("greedy index is invariant to positive scaling of activations") {
    std::mt19937_64 rng(600);
    std::uniform_real_distribution<double> u(0.0, 2.0), scale(0.1, 50.0);
    auto argmax = [](const std::vector<double>& xs) {
        return static_cast<int>(std::max_element(xs.begin(), xs.end()) - xs.begin());
    };
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<double> a(7);
        for (double& v : a) v = u(rng);
        const double c = scale(rng);
        std::vector<double> scaled(a);
        for (double& v : scaled) v *= c;
        CHECK(argmax(floor_normalize(a, 1e-3)) == argmax(floor_normalize(scaled, 1e-3)));
    }
}

TEST_CASE("smoothed_target: zero advantage returns the input distribution") {
    const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
    const auto t = smoothed_target(probs, 1, 0.0, 2.0);
    for (size_t k = 0; k < probs.size(); ++k)
        CHECK(t[k] == doctest::Approx(probs[k]).epsilon(1e-15));
}

TEST_CASE("smoothed_target matches the rational-arithmetic oracle (n=5, j=2, d=0.1, q=2)") {
    const std::vector<double> a(5, 0.2);
    const auto t = smoothed_target(a, 2, 0.1, 2.0);

    // exact fractions: t_k = (1/5 + 1/(20(|2-k|+1))) / sum
    std::array<Frac, 5> raw{};
    Frac sum{0, 1};
    for (int k = 0; k < 5; ++k) {
        const long long dist = std::abs(2 - k) + 1;
        raw[k] = Frac::make(1, 5) + Frac::make(1, 20 * dist);
        sum = sum + raw[k];
    }
    double check_sum = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double expected = (raw[k] / sum).value();
        CHECK(std::fabs(t[k] - expected) < 1e-12);
        CHECK(t[k] >= 0.0);
        check_sum += t[k];
    }
    CHECK(std::fabs(check_sum - 1.0) < 1e-12);
    // the pinned values themselves
    CHECK(t[0] == doctest::Approx(13.0 / 68.0).epsilon(1e-13));
    CHECK(t[1] == doctest::Approx(27.0 / 136.0).epsilon(1e-13));
    CHECK(t[2] == doctest::Approx(15.0 / 68.0).epsilon(1e-13));
}

TEST_CASE("smoothed_target clamps negative entries before renormalizing") {
    // chosen entry 0.5 - 0.8 clamps to 0, neighbour keeps 0.5 - 0.4 = 0.1
    const std::vector<double> probs{0.5, 0.5};
    const auto t = smoothed_target(probs, 0, -0.8, 1.0);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == doctest::Approx(1.0).epsilon(1e-15));

    // everything clamped away: uniform fallback
    const auto u = smoothed_target({0.5, 0.5}, 0, -10.0, 0.1);
    CHECK(u[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(u[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("smoothed_target is a distribution for random inputs") {
    std::mt19937_64 rng(601);
    std::uniform_real_distribution<double> u(0.0, 1.0), d(-2.0, 2.0);
    for (int iter = 0; iter < 2000; ++iter) {
        const int n = 1 + static_cast<int>(rng() % 30);
        std::vector<double> probs(n);
        double sum = 0.0;
        for (double& v : probs) sum += v = u(rng) + 1e-9;
        for (double& v : probs) v /= sum;
        const auto t = smoothed_target(probs, static_cast<int>(rng() % n), d(rng), 2.0);
        double tsum = 0.0;
        for (double v : t) {
            CHECK(v >= 0.0);
            tsum += v;
        }
        CHECK(std::fabs(tsum - 1.0) < 1e-12);
    }
}

TEST_CASE("td0_advantage") {
    CHECK(td0_advantage(0.45, 0.0, 0.0, 0.99, false) == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(td0_advantage(0.7, 0.5, 0.6, 0.0, false) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(td0_advantage(0.7, 0.5, 0.6, 0.99, false) == doctest::Approx(0.794).epsilon(1e-12));
    CHECK(td0_advantage(0.7, 0.5, 0.6, 0.99, true) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("dqn_smoothed_targets pins the chosen entry to the TD target") {
    // gamma=0, reward 1, Q=(0,0,0), j=1: delta=1, chosen-entry target 1
    const auto t = dqn_smoothed_targets({0.0, 0.0, 0.0}, 1, 1.0, 2.0);
    CHECK(t[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t[0] == doctest::Approx(0.25).epsilon(1e-15)); // 0 + 1/(2*2)
    CHECK(t[2] == doctest::Approx(0.25).epsilon(1e-15));

    const auto t2 = dqn_smoothed_targets({0.3, -0.1, 0.2, 0.0}, 0, 0.7, 2.0);
    CHECK(t2[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(t2[1] == doctest::Approx(-0.1 + 0.4 / 4.0).epsilon(1e-15));
    CHECK(t2[2] == doctest::Approx(0.2 + 0.4 / 6.0).epsilon(1e-15));
    CHECK(t2[3] == doctest::Approx(0.0 + 0.4 / 8.0).epsilon(1e-15));
}

TEST_CASE("experience buffer holds exactly one sweep") {
    ExperienceBuffer buf(3, 4);
    CHECK(buf.capacity() == 12);
    Experience e;
    for (int k = 0; k < 12; ++k) {
        CHECK_FALSE(buf.full());
        buf.store(e);
    }
    CHECK(buf.full());
    CHECK_THROWS_AS(buf.store(e), std::logic_error);
    const auto samples = buf.drain();
    CHECK(samples.size() == 12);
    CHECK(buf.size() == 0);
}

TEST_CASE("a2c_mod act: sampling frequencies match the policy distribution") {
    AgentHyperparams hp;
    A2CModAgent agent(ActionGrid::uniform(5), hp, 9001);
    const FeatureVector f = sample_features();
    const auto probs = agent.policy(f);

    std::mt19937_64 rng(31337);
    std::array<long, 5> counts{};
    const long draws = 100000;
    for (long k = 0; k < draws; ++k) ++counts[agent.act(f, true, rng).index];
    for (int j = 0; j < 5; ++j) {
        const double expect = draws * probs[j];
        const double sigma = std::sqrt(draws * probs[j] * (1.0 - probs[j]));
        CHECK(std::fabs(counts[j] - expect) <= 3.0 * sigma + 1.0);
    }

    // greedy act picks the argmax and never consumes randomness
    std::mt19937_64 a(5), b(5);
    const ActionChoice g1 = agent.act(f, false, a);
    (void)agent.act(f, false, a);
    CHECK(a() == b());
    CHECK(g1.index ==
          static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
    CHECK(g1.quantity == agent.grid().values[g1.index]);
}

TEST_CASE("a2c_mod: zero-advantage sweep leaves both nets untouched") {
    AgentHyperparams hp;
    A2CModAgent agent(ActionGrid::uniform(5), hp, 77);
    const FeatureVector f = sample_features();
    const double v = agent.state_value(f);

    // terminal sample with reward == V(s): TD target == V(s), delta == 0
    std::vector<Experience> samples(8, Experience{f, 2, v, f, true});
    const auto actor_before = agent.actor().save();
    const auto critic_before = agent.critic().save();
    std::mt19937_64 rng(1);
    agent.train_sweep(samples, rng);
    const auto actor_after = agent.actor().save();
    CHECK(actor_after == actor_before);
    CHECK(agent.critic().save() == critic_before);
}

TEST_CASE("a2c_mod: critic moves toward its target on a single sample") {
    AgentHyperparams hp = small_hp();
    A2CModAgent agent(ActionGrid::uniform(5), hp, 13);
    const FeatureVector f = sample_features();
    const double v0 = agent.state_value(f);
    const double reward = 0.9; // gamma = 0 -> target = 0.9
    std::vector<Experience> samples{{f, 1, reward, f, false}};
    std::mt19937_64 rng(2);
    agent.train_sweep(samples, rng);
    const double v1 = agent.state_value(f);
    CHECK(std::fabs(v1 - reward) < std::fabs(v0 - reward));
}

TEST_CASE("a2c_cat: advantage sign moves the chosen probability") {
    std::mt19937_64 rng(3);
    AgentHyperparams hp = small_hp();
    A2CCatAgent up(ActionGrid::uniform(5), hp, 21);
    const FeatureVector f = sample_features();
    const int j = 3;

    const double before = up.policy(f)[j];
    const double v = up.state_value(f);
    std::vector<Experience> pos{{f, j, v + 1.0, f, true}}; // delta = +1
    up.train_sweep(pos, rng);
    CHECK(up.policy(f)[j] > before);

    A2CCatAgent down(ActionGrid::uniform(5), hp, 21);
    const double before2 = down.policy(f)[j];
    const double v2 = down.state_value(f);
    std::vector<Experience> neg{{f, j, v2 - 1.0, f, true}}; // delta = -1
    down.train_sweep(neg, rng);
    CHECK(down.policy(f)[j] < before2);
}

TEST_CASE("dqn: epsilon=1 exploration is uniform within 3 sigma") {
    AgentHyperparams hp;
    hp.epsilon_start = 1.0;
    DqnAgent agent(ActionGrid::uniform(5), hp, 55);
    const FeatureVector f = sample_features();
    std::mt19937_64 rng(99);
    std::array<long, 5> counts{};
    const long draws = 100000;
    for (long k = 0; k < draws; ++k) ++counts[agent.act(f, true, rng).index];
    const double expect = draws / 5.0;
    const double sigma = std::sqrt(draws * 0.2 * 0.8);
    for (long c : counts) CHECK(std::fabs(c - expect) <= 3.0 * sigma);
}

TEST_CASE("dqn: target net syncs bit-exactly every K sweeps") {
    AgentHyperparams hp;
    hp.target_sync_sweeps = 3;
    hp.gamma = 0.5;
    DqnAgent agent(ActionGrid::uniform(5), hp, 60);
    CHECK(agent.online().save() == agent.target().save()); // synced at construction

    const FeatureVector f = sample_features();
    std::vector<Experience> samples(4, Experience{f, 2, 0.4, f, false});
    std::mt19937_64 rng(7);
    agent.train_sweep(samples, rng);
    CHECK(agent.online().save() != agent.target().save());
    agent.train_sweep(samples, rng);
    CHECK(agent.online().save() != agent.target().save());
    agent.train_sweep(samples, rng); // third sweep triggers the sync
    CHECK(agent.online().save() == agent.target().save());
}

TEST_CASE("dqn: epsilon anneals linearly across episodes") {
    AgentHyperparams hp;
    hp.epsilon_start = 1.0;
    hp.epsilon_end = 0.05;
    hp.epsilon_episodes = 100;
    DqnAgent agent(ActionGrid::uniform(5), hp, 61);
    agent.begin_episode(0);
    CHECK(agent.epsilon() == doctest::Approx(1.0));
    agent.begin_episode(50);
    CHECK(agent.epsilon() == doctest::Approx(0.525).epsilon(1e-12));
    agent.begin_episode(100);
    CHECK(agent.epsilon() == doctest::Approx(0.05));
    agent.begin_episode(500);
    CHECK(agent.epsilon() == doctest::Approx(0.05));
}

TEST_CASE("heuristic agent") {
    AgentHyperparams hp;
    hp.x_star = 0.5;
    HeuristicAgent agent(ActionGrid::uniform(5), hp);
    std::mt19937_64 rng(1);
    FeatureVector f{};
    f[0] = 0.3; // inventory
    f[1] = 0.2; // forecast
    const ActionChoice c = agent.act(f, true, rng);
    CHECK(c.quantity == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(c.index == -1);
    CHECK_FALSE(agent.trainable());

    f[0] = 0.8;
    f[1] = 0.1;
    CHECK(agent.act(f, true, rng).quantity == doctest::Approx(0.0));

    // vector form
    const auto u = act_heuristic({0.3, 0.5, 0.5}, {0.2, 0.0, 0.3}, {0.5, 0.5, 0.2});
    CHECK(u[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(u[1] == 0.0);
    CHECK(u[2] == 0.0);
}

TEST_CASE("network sizes depend on the grid only") {
    AgentHyperparams hp;
    const ActionGrid g = ActionGrid::uniform(21);
    // 8-42-42-21 actor + 8-4-1 critic
    const size_t actor = 8 * 42 + 42 + 42 * 42 + 42 + 42 * 21 + 21;
    const size_t critic = 8 * 4 + 4 + 4 * 1 + 1;
    A2CModAgent mod(g, hp, 1);
    CHECK(mod.parameter_count() == actor + critic);
    A2CCatAgent cat(g, hp, 2);
    CHECK(cat.parameter_count() == actor + critic);
    DqnAgent dqn(g, hp, 3);
    CHECK(dqn.parameter_count() == 2 * actor);
    HeuristicAgent heur(g, hp);
    CHECK(heur.parameter_count() == 0);

    CHECK_THROWS_AS(make_agent("ddpg", g, hp, 0), std::invalid_argument);
}

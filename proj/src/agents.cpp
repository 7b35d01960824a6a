#include "replen/agents.hpp"
#include "replen/util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace replen {

namespace {

std::vector<double> to_vec(const FeatureVector& f) {
    return std::vector<double>(f.begin(), f.end());
}

double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
    const double u = u01(rng);
    double acc = 0.0;
    for (size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
}

int argmax_lowest(const std::vector<double>& xs) {
    int best = 0;
    for (size_t k = 1; k < xs.size(); ++k)
        if (xs[k] > xs[best]) best = static_cast<int>(k);
    return best;
}

std::vector<double> softmax(const std::vector<double>& z) {
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (size_t k = 0; k < z.size(); ++k) {
        p[k] = std::exp(z[k] - zmax);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

constexpr int kFeatures = kFeatureCount;

// tanh hidden, linear value head: TD targets are unbounded below once the
// capacity penalty bites, so the output neuron cannot saturate
nn::DenseNet make_critic(uint64_t seed) {
    using nn::Activation;
    return nn::DenseNet({kFeatures, 4, 1}, {Activation::Tanh, Activation::Linear}, seed);
}

nn::DenseNet make_actor(int n, nn::Activation out_act, uint64_t seed) {
    using nn::Activation;
    return nn::DenseNet({kFeatures, 2 * n, 2 * n, n}, {Activation::Tanh, Activation::Tanh, out_act},
                        seed);
}

} // namespace

ActionGrid ActionGrid::uniform(int n, double max_value) {
    if (n < 2) throw std::invalid_argument("ActionGrid::uniform: need at least 2 actions");
    if (!(max_value > 0.0 && max_value <= 1.0))
        throw std::invalid_argument("ActionGrid::uniform: max_value outside (0,1]");
    ActionGrid g;
    g.values.resize(n);
    for (int k = 0; k < n; ++k) g.values[k] = max_value * static_cast<double>(k) / (n - 1);
    return g;
}

void ActionGrid::validate() const {
    if (values.empty()) throw std::invalid_argument("ActionGrid: empty");
    if (values.front() < 0.0 || values.back() > 1.0)
        throw std::invalid_argument("ActionGrid: values outside [0,1]");
    for (size_t k = 1; k < values.size(); ++k)
        if (!(values[k] > values[k - 1]))
            throw std::invalid_argument("ActionGrid: values not strictly increasing");
}

void AgentHyperparams::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("hyperparams: gamma");
    if (!(smoothing_q > 0.0)) throw std::invalid_argument("hyperparams: smoothing_q");
    if (alpha < 0.0) throw std::invalid_argument("hyperparams: alpha");
    if (explore_floor < 0.0) throw std::invalid_argument("hyperparams: explore_floor");
    if (train_interval < 1) throw std::invalid_argument("hyperparams: train_interval");
    if (target_sync_sweeps < 1) throw std::invalid_argument("hyperparams: target_sync_sweeps");
    if (!(x_star >= 0.0 && x_star <= 1.0)) throw std::invalid_argument("hyperparams: x_star");
    if (!(demand_scale > 0.0)) throw std::invalid_argument("hyperparams: demand_scale");
    sgd.validate();
}

ExperienceBuffer::ExperienceBuffer(size_t products, int train_interval)
    : capacity_(products * static_cast<size_t>(train_interval)) {
    if (capacity_ == 0) throw std::invalid_argument("ExperienceBuffer: zero capacity");
    items_.reserve(capacity_);
}

void ExperienceBuffer::store(const Experience& e) {
    if (full()) throw std::logic_error("ExperienceBuffer: store past capacity (missed sweep)");
    items_.push_back(e);
}

std::vector<Experience> ExperienceBuffer::drain() {
    std::vector<Experience> out;
    out.swap(items_);
    items_.reserve(capacity_);
    return out;
}

std::vector<double> floor_normalize(const std::vector<double>& activations, double eps) {
    if (activations.empty()) throw std::invalid_argument("floor_normalize: empty");
    std::vector<double> p(activations.size());
    double sum = 0.0;
    for (size_t k = 0; k < p.size(); ++k) sum += activations[k] + eps;
    if (sum <= 0.0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    for (size_t k = 0; k < p.size(); ++k) p[k] = (activations[k] + eps) / sum;
    return p;
}

std::vector<double> smoothed_target(const std::vector<double>& probs, int chosen, double delta,
                                    double q) {
    const int n = static_cast<int>(probs.size());
    if (n < 1) throw std::invalid_argument("smoothed_target: empty distribution");
    if (chosen < 0 || chosen >= n) throw std::invalid_argument("smoothed_target: chosen index");
    if (!(q > 0.0)) throw std::invalid_argument("smoothed_target: q must be positive");

    std::vector<double> t(probs.size());
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dist = static_cast<double>(std::abs(chosen - k) + 1);
        t[k] = std::max(0.0, probs[k] + delta / (q * dist));
        sum += t[k];
    }
    if (sum <= 0.0) {
        std::fill(t.begin(), t.end(), 1.0 / static_cast<double>(n));
        return t;
    }
    for (double& v : t) v /= sum;
    return t;
}

double td0_advantage(double reward, double v_state, double v_next, double gamma, bool terminal) {
    return reward + gamma * v_next * (terminal ? 0.0 : 1.0) - v_state;
}

std::vector<double> dqn_smoothed_targets(const std::vector<double>& q_online, int chosen,
                                         double td_target, double smoothing_q) {
    const int n = static_cast<int>(q_online.size());
    if (chosen < 0 || chosen >= n) throw std::invalid_argument("dqn_smoothed_targets: chosen index");
    if (!(smoothing_q > 0.0)) throw std::invalid_argument("dqn_smoothed_targets: q must be positive");
    const double delta = td_target - q_online[chosen];
    std::vector<double> t(q_online);
    for (int k = 0; k < n; ++k) {
        if (k == chosen) continue;
        const double dist = static_cast<double>(std::abs(chosen - k) + 1);
        t[k] += delta / (smoothing_q * dist);
    }
    t[chosen] = td_target;
    return t;
}

Agent::Agent(ActionGrid grid, AgentHyperparams hp) : grid_(std::move(grid)), hp_(hp) {
    grid_.validate();
    hp_.validate();
}

double Agent::state_value(const FeatureVector&) const {
    return 0.0;
}

void Agent::save_weights(const std::string&) const {}
void Agent::load_weights(const std::string&) {}

// ---------------------------------------------------------------- A2C_mod

A2CModAgent::A2CModAgent(ActionGrid grid, AgentHyperparams hp, uint64_t seed)
    : Agent(std::move(grid), hp),
      actor_(make_actor(grid_.size(), nn::Activation::Relu, mix_seed(seed, 1))),
      critic_(make_critic(mix_seed(seed, 2))) {}

std::vector<double> A2CModAgent::policy(const FeatureVector& f) const {
    return floor_normalize(actor_.forward(to_vec(f)), hp_.explore_floor);
}

ActionChoice A2CModAgent::act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const {
    const auto probs = policy(f);
    const int j = explore ? sample_index(probs, rng) : argmax_lowest(probs);
    return {j, grid_.values[j]};
}

double A2CModAgent::state_value(const FeatureVector& f) const {
    return critic_.forward(to_vec(f))[0];
}

SweepLosses A2CModAgent::train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) {
    std::shuffle(samples.begin(), samples.end(), rng);
    SweepLosses losses;
    size_t batches = 0;
    const size_t batch = static_cast<size_t>(hp_.sgd.batch_size);
    for (size_t start = 0; start < samples.size(); start += batch, ++batches) {
        const size_t end = std::min(samples.size(), start + batch);
        std::vector<std::vector<double>> inputs, critic_targets, actor_targets;
        for (size_t s = start; s < end; ++s) {
            const Experience& e = samples[s];
            auto sv = to_vec(e.state);
            const double v_s = critic_.forward(sv)[0];
            const double v_n = critic_.forward(to_vec(e.next_state))[0];
            const double target = e.reward + hp_.gamma * v_n * (e.terminal ? 0.0 : 1.0);
            const double delta = target - v_s;
            const auto probs = floor_normalize(actor_.forward(sv), hp_.explore_floor);
            actor_targets.push_back(smoothed_target(probs, e.action, delta, hp_.smoothing_q));
            critic_targets.push_back({target});
            inputs.push_back(std::move(sv));
        }
        losses.critic += critic_.train_batch_mse(inputs, critic_targets, hp_.sgd);

        nn::Gradients grads = actor_.zero_gradients();
        double actor_loss = 0.0;
        for (size_t s = 0; s < inputs.size(); ++s) {
            const auto trace = actor_.forward_trace(inputs[s]);
            const auto loss = nn::simplex_mse_loss(actor_targets[s], hp_.explore_floor);
            actor_loss += loss.value(trace.post.back());
            actor_.accumulate_gradients(trace, loss.grad(trace.post.back()), grads);
        }
        grads.scale(1.0 / static_cast<double>(inputs.size()));
        actor_.apply_sgd_step(grads, hp_.sgd);
        losses.actor += actor_loss / static_cast<double>(inputs.size());
    }
    if (batches > 0) {
        losses.actor /= static_cast<double>(batches);
        losses.critic /= static_cast<double>(batches);
    }
    return losses;
}

size_t A2CModAgent::parameter_count() const {
    return actor_.parameter_count() + critic_.parameter_count();
}

void A2CModAgent::save_weights(const std::string& dir) const {
    actor_.save_file(dir + "/actor.bin");
    critic_.save_file(dir + "/critic.bin");
}

void A2CModAgent::load_weights(const std::string& dir) {
    actor_ = nn::DenseNet::load_file(dir + "/actor.bin");
    critic_ = nn::DenseNet::load_file(dir + "/critic.bin");
    if (actor_.output_size() != grid_.size() || actor_.input_size() != kFeatures)
        throw std::runtime_error("checkpoint: actor shape does not match action grid");
}

// ---------------------------------------------------------------- A2C_cat

A2CCatAgent::A2CCatAgent(ActionGrid grid, AgentHyperparams hp, uint64_t seed)
    : Agent(std::move(grid), hp),
      actor_(make_actor(grid_.size(), nn::Activation::Linear, mix_seed(seed, 3))),
      critic_(make_critic(mix_seed(seed, 4))) {}

std::vector<double> A2CCatAgent::policy(const FeatureVector& f) const {
    return softmax(actor_.forward(to_vec(f)));
}

ActionChoice A2CCatAgent::act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const {
    const auto probs = policy(f);
    const int j = explore ? sample_index(probs, rng) : argmax_lowest(probs);
    return {j, grid_.values[j]};
}

double A2CCatAgent::state_value(const FeatureVector& f) const {
    return critic_.forward(to_vec(f))[0];
}

SweepLosses A2CCatAgent::train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) {
    std::shuffle(samples.begin(), samples.end(), rng);
    SweepLosses losses;
    size_t batches = 0;
    const size_t batch = static_cast<size_t>(hp_.sgd.batch_size);
    for (size_t start = 0; start < samples.size(); start += batch, ++batches) {
        const size_t end = std::min(samples.size(), start + batch);
        std::vector<std::vector<double>> inputs, critic_targets;
        std::vector<double> deltas;
        std::vector<int> actions;
        for (size_t s = start; s < end; ++s) {
            const Experience& e = samples[s];
            auto sv = to_vec(e.state);
            const double v_s = critic_.forward(sv)[0];
            const double v_n = critic_.forward(to_vec(e.next_state))[0];
            const double target = e.reward + hp_.gamma * v_n * (e.terminal ? 0.0 : 1.0);
            deltas.push_back(target - v_s);
            actions.push_back(e.action);
            critic_targets.push_back({target});
            inputs.push_back(std::move(sv));
        }
        losses.critic += critic_.train_batch_mse(inputs, critic_targets, hp_.sgd);

        nn::Gradients grads = actor_.zero_gradients();
        double actor_loss = 0.0;
        for (size_t s = 0; s < inputs.size(); ++s) {
            const auto trace = actor_.forward_trace(inputs[s]);
            const auto loss = nn::weighted_cross_entropy_loss(actions[s], deltas[s]);
            actor_loss += loss.value(trace.post.back());
            actor_.accumulate_gradients(trace, loss.grad(trace.post.back()), grads);
        }
        grads.scale(1.0 / static_cast<double>(inputs.size()));
        actor_.apply_sgd_step(grads, hp_.sgd);
        losses.actor += actor_loss / static_cast<double>(inputs.size());
    }
    if (batches > 0) {
        losses.actor /= static_cast<double>(batches);
        losses.critic /= static_cast<double>(batches);
    }
    return losses;
}

size_t A2CCatAgent::parameter_count() const {
    return actor_.parameter_count() + critic_.parameter_count();
}

void A2CCatAgent::save_weights(const std::string& dir) const {
    actor_.save_file(dir + "/actor.bin");
    critic_.save_file(dir + "/critic.bin");
}

void A2CCatAgent::load_weights(const std::string& dir) {
    actor_ = nn::DenseNet::load_file(dir + "/actor.bin");
    critic_ = nn::DenseNet::load_file(dir + "/critic.bin");
    if (actor_.output_size() != grid_.size() || actor_.input_size() != kFeatures)
        throw std::runtime_error("checkpoint: actor shape does not match action grid");
}

// -------------------------------------------------------------------- DQN

DqnAgent::DqnAgent(ActionGrid grid, AgentHyperparams hp, uint64_t seed)
    : Agent(std::move(grid), hp),
      online_(make_actor(grid_.size(), nn::Activation::Linear, mix_seed(seed, 5))),
      target_(make_actor(grid_.size(), nn::Activation::Linear, mix_seed(seed, 5))),
      epsilon_(hp_.epsilon_start) {
    target_.copy_parameters_from(online_);
}

std::vector<double> DqnAgent::q_values(const FeatureVector& f) const {
    return online_.forward(to_vec(f));
}

ActionChoice DqnAgent::act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const {
    if (explore && u01(rng) < epsilon_) {
        const int j = static_cast<int>(rng() % static_cast<uint64_t>(grid_.size()));
        return {j, grid_.values[j]};
    }
    const int j = argmax_lowest(q_values(f));
    return {j, grid_.values[j]};
}

void DqnAgent::begin_episode(int episode) {
    if (episode >= hp_.epsilon_episodes) {
        epsilon_ = hp_.epsilon_end;
        return;
    }
    const double frac = static_cast<double>(episode) / static_cast<double>(hp_.epsilon_episodes);
    epsilon_ = hp_.epsilon_start + (hp_.epsilon_end - hp_.epsilon_start) * frac;
}

double DqnAgent::state_value(const FeatureVector& f) const {
    const auto q = q_values(f);
    return *std::max_element(q.begin(), q.end());
}

SweepLosses DqnAgent::train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) {
    std::shuffle(samples.begin(), samples.end(), rng);
    SweepLosses losses;
    size_t batches = 0;
    const size_t batch = static_cast<size_t>(hp_.sgd.batch_size);
    for (size_t start = 0; start < samples.size(); start += batch, ++batches) {
        const size_t end = std::min(samples.size(), start + batch);
        std::vector<std::vector<double>> inputs, targets;
        for (size_t s = start; s < end; ++s) {
            const Experience& e = samples[s];
            auto sv = to_vec(e.state);
            const auto q = online_.forward(sv);
            const auto q_next = target_.forward(to_vec(e.next_state));
            const double best_next = *std::max_element(q_next.begin(), q_next.end());
            const double td = e.reward + hp_.gamma * best_next * (e.terminal ? 0.0 : 1.0);
            targets.push_back(dqn_smoothed_targets(q, e.action, td, hp_.smoothing_q));
            inputs.push_back(std::move(sv));
        }
        losses.critic += online_.train_batch_mse(inputs, targets, hp_.sgd);
    }
    if (batches > 0) losses.critic /= static_cast<double>(batches);
    ++sweeps_;
    if (sweeps_ % hp_.target_sync_sweeps == 0) sync_target();
    return losses;
}

size_t DqnAgent::parameter_count() const {
    return online_.parameter_count() + target_.parameter_count();
}

void DqnAgent::save_weights(const std::string& dir) const {
    online_.save_file(dir + "/online.bin");
    target_.save_file(dir + "/target.bin");
}

void DqnAgent::load_weights(const std::string& dir) {
    online_ = nn::DenseNet::load_file(dir + "/online.bin");
    target_ = nn::DenseNet::load_file(dir + "/target.bin");
    if (online_.output_size() != grid_.size() || !online_.same_shape(target_))
        throw std::runtime_error("checkpoint: Q-net shape does not match action grid");
}

// -------------------------------------------------------------- heuristic

HeuristicAgent::HeuristicAgent(ActionGrid grid, AgentHyperparams hp)
    : Agent(std::move(grid), hp) {}

ActionChoice HeuristicAgent::act(const FeatureVector& f, bool, std::mt19937_64&) const {
    // f[1] is the scaled forecast; the controller works in raw units
    const double u = std::max(0.0, hp_.x_star + f[1] * hp_.demand_scale - f[0]);
    return {-1, u};
}

ActionVector act_heuristic(const std::vector<double>& levels, const std::vector<double>& w_hat,
                           const std::vector<double>& x_star) {
    if (levels.size() != w_hat.size() || levels.size() != x_star.size())
        throw std::invalid_argument("act_heuristic: size mismatch");
    ActionVector u(levels.size());
    for (size_t i = 0; i < u.size(); ++i)
        u[i] = std::max(0.0, x_star[i] + w_hat[i] - levels[i]);
    return u;
}

std::unique_ptr<Agent> make_agent(const std::string& type, const ActionGrid& grid,
                                  const AgentHyperparams& hp, uint64_t seed) {
    if (type == "a2c_mod") return std::make_unique<A2CModAgent>(grid, hp, seed);
    if (type == "a2c_cat") return std::make_unique<A2CCatAgent>(grid, hp, seed);
    if (type == "dqn") return std::make_unique<DqnAgent>(grid, hp, seed);
    if (type == "heuristic") return std::make_unique<HeuristicAgent>(grid, hp);
    throw std::invalid_argument("unknown agent type: " + type);
}

} // namespace replen

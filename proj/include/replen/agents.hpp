#pragma once

#include "replen/features.hpp"
#include "replen/net.hpp"

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace replen {

/// Quantized replenishment levels shared by all discrete-action agents.
struct ActionGrid {
    std::vector<double> values;

    static ActionGrid uniform(int n, double max_value = 1.0); // n points, 0 .. max inclusive
    int size() const { return static_cast<int>(values.size()); }
    void validate() const;
};

struct AgentHyperparams {
    double gamma = 0.99;        // discount for the TD(0) trace
    double smoothing_q = 2.0;   // divisor of the distance-smoothed increment
    double alpha = 0.5;         // capacity exceedance penalty (mirrors CapacityConfig)
    double explore_floor = 1e-3;
    double epsilon_start = 1.0; // DQN epsilon-greedy schedule
    double epsilon_end = 0.05;
    int epsilon_episodes = 100;
    int target_sync_sweeps = 4;
    int train_interval = 32;    // periods between training sweeps
    double x_star = 0.5;        // heuristic target level
    double demand_scale = 1.0;  // divisor applied to the forecast/sigma features
    nn::SgdConfig sgd;

    void validate() const;
};

struct Experience {
    FeatureVector state{};
    int action = -1;
    double reward = 0.0;
    FeatureVector next_state{};
    bool terminal = false;
};

/// One record per (product, period); capacity = train_interval * products.
class ExperienceBuffer {
public:
    ExperienceBuffer(size_t products, int train_interval);

    void store(const Experience& e);
    bool full() const { return items_.size() >= capacity_; }
    size_t size() const { return items_.size(); }
    size_t capacity() const { return capacity_; }
    std::vector<Experience> drain();

private:
    size_t capacity_;
    std::vector<Experience> items_;
};

/// (a + eps) / sum(a + eps); uniform when the sum degenerates to zero.
std::vector<double> floor_normalize(const std::vector<double>& activations, double eps);

/// Actor target: probs + delta/(q*(|chosen-k|+1)), clamped at zero and
/// renormalized to the simplex (uniform if everything clamps away).
std::vector<double> smoothed_target(const std::vector<double>& probs, int chosen, double delta,
                                    double q);

double td0_advantage(double reward, double v_state, double v_next, double gamma, bool terminal);

/// Q-learning target vector: the chosen entry takes the full TD target, the
/// others their online value plus the distance-smoothed residual fraction.
std::vector<double> dqn_smoothed_targets(const std::vector<double>& q_online, int chosen,
                                         double td_target, double smoothing_q);

struct ActionChoice {
    int index = -1;    // grid index, -1 for the continuous heuristic
    double quantity = 0.0;
};

struct SweepLosses {
    double actor = 0.0;
    double critic = 0.0;
};

/// A policy shared across all products: one weight set, evaluated per product.
class Agent {
public:
    virtual ~Agent() = default;

    virtual std::string type() const = 0;
    virtual ActionChoice act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const = 0;
    virtual bool trainable() const { return true; }
    /// Consumes exactly one buffer's worth of samples (train_interval * p).
    virtual SweepLosses train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) = 0;
    virtual void begin_episode(int episode) { (void)episode; }
    virtual size_t parameter_count() const { return 0; }
    /// Critic/Q estimate of a state, 0 for value-free agents.
    virtual double state_value(const FeatureVector& f) const;
    /// Weight blobs only; the JSON sidecar is written by the harness.
    virtual void save_weights(const std::string& dir) const;
    virtual void load_weights(const std::string& dir);

    const ActionGrid& grid() const { return grid_; }
    const AgentHyperparams& hyperparams() const { return hp_; }

protected:
    Agent(ActionGrid grid, AgentHyperparams hp);

    ActionGrid grid_;
    AgentHyperparams hp_;
};

/// Modified A2C: relu actor trained by MSE against the distance-smoothed
/// target distribution, tanh critic trained on the TD(0) target.
class A2CModAgent : public Agent {
public:
    A2CModAgent(ActionGrid grid, AgentHyperparams hp, uint64_t seed);

    std::string type() const override { return "a2c_mod"; }
    ActionChoice act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const override;
    SweepLosses train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) override;
    size_t parameter_count() const override;
    double state_value(const FeatureVector& f) const override;
    void save_weights(const std::string& dir) const override;
    void load_weights(const std::string& dir) override;

    std::vector<double> policy(const FeatureVector& f) const;
    const nn::DenseNet& actor() const { return actor_; }
    const nn::DenseNet& critic() const { return critic_; }

private:
    nn::DenseNet actor_;
    nn::DenseNet critic_;
};

/// Vanilla A2C: softmax policy trained with advantage-weighted cross-entropy.
class A2CCatAgent : public Agent {
public:
    A2CCatAgent(ActionGrid grid, AgentHyperparams hp, uint64_t seed);

    std::string type() const override { return "a2c_cat"; }
    ActionChoice act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const override;
    SweepLosses train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) override;
    size_t parameter_count() const override;
    double state_value(const FeatureVector& f) const override;
    void save_weights(const std::string& dir) const override;
    void load_weights(const std::string& dir) override;

    std::vector<double> policy(const FeatureVector& f) const;

private:
    nn::DenseNet actor_;
    nn::DenseNet critic_;
};

/// DQN with separate online/target nets; the chosen action targets the full
/// TD value, neighbours get the distance-smoothed fraction of the residual.
class DqnAgent : public Agent {
public:
    DqnAgent(ActionGrid grid, AgentHyperparams hp, uint64_t seed);

    std::string type() const override { return "dqn"; }
    ActionChoice act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const override;
    SweepLosses train_sweep(std::vector<Experience> samples, std::mt19937_64& rng) override;
    void begin_episode(int episode) override;
    size_t parameter_count() const override;
    double state_value(const FeatureVector& f) const override;
    void save_weights(const std::string& dir) const override;
    void load_weights(const std::string& dir) override;

    std::vector<double> q_values(const FeatureVector& f) const;
    double epsilon() const { return epsilon_; }
    void sync_target() { target_.copy_parameters_from(online_); }
    const nn::DenseNet& online() const { return online_; }
    const nn::DenseNet& target() const { return target_; }

private:
    nn::DenseNet online_;
    nn::DenseNet target_;
    double epsilon_;
    long sweeps_ = 0;
};

/// Proportional control toward x*: u = max(0, x* + w_hat - x).
class HeuristicAgent : public Agent {
public:
    HeuristicAgent(ActionGrid grid, AgentHyperparams hp);

    std::string type() const override { return "heuristic"; }
    ActionChoice act(const FeatureVector& f, bool explore, std::mt19937_64& rng) const override;
    bool trainable() const override { return false; }
    SweepLosses train_sweep(std::vector<Experience>, std::mt19937_64&) override { return {}; }
};

/// Desired heuristic action from raw levels and forecasts (Eq. of motion for
/// the proportional controller, before projection).
ActionVector act_heuristic(const std::vector<double>& levels, const std::vector<double>& w_hat,
                           const std::vector<double>& x_star);

std::unique_ptr<Agent> make_agent(const std::string& type, const ActionGrid& grid,
                                  const AgentHyperparams& hp, uint64_t seed);

} // namespace replen

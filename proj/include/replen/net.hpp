#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace replen::nn {

enum class Activation { Tanh, Relu, Linear };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct SgdConfig {
    double learning_rate = 0.025;
    double momentum = 0.8;
    int batch_size = 32;

    void validate() const;
};

/// Parameter gradients mirroring DenseNet's weight/bias shapes.
struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void scale(double s);
    bool finite() const;
};

/// Small dense feed-forward net, 64-bit floats, heavy-ball momentum SGD.
class DenseNet {
public:
    DenseNet() = default;
    /// sizes = {in, h1, ..., out}; acts has one tag per non-input layer.
    DenseNet(std::vector<int> sizes, std::vector<Activation> acts, uint64_t seed);

    std::vector<double> forward(const std::vector<double>& input) const;

    /// Forward pass keeping per-layer pre-activations and activations.
    struct Trace {
        std::vector<std::vector<double>> pre;  // z per layer
        std::vector<std::vector<double>> post; // activation(z) per layer
        std::vector<double> input;
    };
    Trace forward_trace(const std::vector<double>& input) const;

    /// Backpropagates dL/d(output activations) through the trace,
    /// accumulating parameter gradients into `grads`.
    void accumulate_gradients(const Trace& trace, const std::vector<double>& dloss_dout,
                              Gradients& grads) const;

    Gradients zero_gradients() const;

    /// One heavy-ball step: m <- mu*m - lr*g, theta <- theta + m.
    /// Throws on non-finite gradients without touching parameters.
    void apply_sgd_step(const Gradients& grads, const SgdConfig& config);

    /// Momentum-SGD step on mean-squared-error over the batch; per-sample
    /// loss is the sum of squared output errors. Returns pre-update loss.
    double train_batch_mse(const std::vector<std::vector<double>>& inputs,
                           const std::vector<std::vector<double>>& targets,
                           const SgdConfig& config);

    size_t parameter_count() const;
    int input_size() const { return sizes_.empty() ? 0 : sizes_.front(); }
    int output_size() const { return sizes_.empty() ? 0 : sizes_.back(); }
    const std::vector<int>& layer_sizes() const { return sizes_; }
    const std::vector<Activation>& activations() const { return acts_; }

    /// Flat read/write access for the finite-difference harness.
    double get_parameter(size_t flat_index) const;
    void set_parameter(size_t flat_index, double value);

    std::vector<uint8_t> save() const;
    static DenseNet load(const std::vector<uint8_t>& bytes);
    void save_file(const std::string& path) const;
    static DenseNet load_file(const std::string& path);

    bool same_shape(const DenseNet& other) const;
    /// Copies parameters (not momentum) from `other`; shapes must match.
    void copy_parameters_from(const DenseNet& other);

private:
    std::vector<int> sizes_;
    std::vector<Activation> acts_;
    std::vector<std::vector<double>> w_; // [layer][out*in], row-major
    std::vector<std::vector<double>> b_; // [layer][out]
    std::vector<std::vector<double>> mw_, mb_; // momentum buffers

    friend struct NetAccess;
};

/// Loss interface used by the gradient checker: value and d(value)/d(output).
struct OutputLoss {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> grad;
};

OutputLoss mse_loss(std::vector<double> target);

/// -delta * log(max(softmax(z)_j, floor)); gradient delta*(softmax(z) - e_j).
OutputLoss weighted_cross_entropy_loss(int chosen, double delta, double floor = 1e-8);

/// MSE against `target` measured on the floor-normalized output simplex
/// p = (a + eps) / sum(a + eps); the loss used by the smoothed-target actor.
OutputLoss simplex_mse_loss(std::vector<double> target, double eps);

/// Max hybrid relative error |g - g_fd| / max(1e-8, |g| + |g_fd|) between
/// analytic gradients and central finite differences (h = 1e-5).
double gradient_check(DenseNet& net, const std::vector<double>& input, const OutputLoss& loss);

} // namespace replen::nn

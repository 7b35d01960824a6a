#include "replen/net.hpp"
#include "replen/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace replen::nn {

namespace {

constexpr char kMagic[8] = {'R', 'P', 'L', 'N', 'E', 'T', '0', '1'};
constexpr uint32_t kFormatVersion = 1;

double activate(Activation a, double z) {
    switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Linear: return z;
    }
    return z;
}

// derivative in terms of pre-activation z and post value a
double activate_grad(Activation act, double z, double a) {
    switch (act) {
    case Activation::Tanh: return 1.0 - a * a;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Linear: return 1.0;
    }
    return 1.0;
}

template <typename T>
void put(std::vector<uint8_t>& buf, const T& v) {
    const auto* p = reinterpret_cast<const uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<uint8_t>& buf, size_t& off) {
    if (off + sizeof(T) > buf.size()) throw std::runtime_error("weight blob: truncated");
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

} // namespace

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "linear") return Activation::Linear;
    throw std::invalid_argument("unknown activation: " + name);
}

void SgdConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("sgd: learning_rate <= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("sgd: momentum outside [0,1)");
    if (batch_size < 1) throw std::invalid_argument("sgd: batch_size < 1");
}

void Gradients::scale(double s) {
    for (auto& layer : w)
        for (double& g : layer) g *= s;
    for (auto& layer : b)
        for (double& g : layer) g *= s;
}

bool Gradients::finite() const {
    for (const auto& layer : w)
        for (double g : layer)
            if (!std::isfinite(g)) return false;
    for (const auto& layer : b)
        for (double g : layer)
            if (!std::isfinite(g)) return false;
    return true;
}

DenseNet::DenseNet(std::vector<int> sizes, std::vector<Activation> acts, uint64_t seed)
    : sizes_(std::move(sizes)), acts_(std::move(acts)) {
    if (sizes_.size() < 2) throw std::invalid_argument("DenseNet: need at least two layers");
    if (acts_.size() != sizes_.size() - 1)
        throw std::invalid_argument("DenseNet: one activation per non-input layer");
    for (int s : sizes_)
        if (s <= 0) throw std::invalid_argument("DenseNet: non-positive layer size");

    std::mt19937_64 rng(seed);
    const size_t layers = acts_.size();
    w_.resize(layers);
    b_.resize(layers);
    mw_.resize(layers);
    mb_.resize(layers);
    for (size_t l = 0; l < layers; ++l) {
        const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        w_[l].resize(static_cast<size_t>(fan_in) * fan_out);
        for (double& x : w_[l]) x = dist(rng);
        b_[l].assign(fan_out, 0.0);
        mw_[l].assign(w_[l].size(), 0.0);
        mb_[l].assign(fan_out, 0.0);
    }
}

std::vector<double> DenseNet::forward(const std::vector<double>& input) const {
    if (static_cast<int>(input.size()) != input_size())
        throw std::invalid_argument("forward: input size mismatch");
    for (double x : input)
        if (!std::isfinite(x)) throw std::invalid_argument("forward: non-finite input");

    std::vector<double> a = input;
    std::vector<double> z;
    for (size_t l = 0; l < acts_.size(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        z.assign(out, 0.0);
        for (int o = 0; o < out; ++o) {
            double acc = b_[l][o];
            const double* row = w_[l].data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * a[i];
            z[o] = activate(acts_[l], acc);
        }
        a.swap(z);
    }
    return a;
}

DenseNet::Trace DenseNet::forward_trace(const std::vector<double>& input) const {
    if (static_cast<int>(input.size()) != input_size())
        throw std::invalid_argument("forward_trace: input size mismatch");
    Trace t;
    t.input = input;
    t.pre.resize(acts_.size());
    t.post.resize(acts_.size());
    const std::vector<double>* a = &t.input;
    for (size_t l = 0; l < acts_.size(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        t.pre[l].assign(out, 0.0);
        t.post[l].assign(out, 0.0);
        for (int o = 0; o < out; ++o) {
            double acc = b_[l][o];
            const double* row = w_[l].data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * (*a)[i];
            t.pre[l][o] = acc;
            t.post[l][o] = activate(acts_[l], acc);
        }
        a = &t.post[l];
    }
    return t;
}

Gradients DenseNet::zero_gradients() const {
    Gradients g;
    g.w.resize(w_.size());
    g.b.resize(b_.size());
    for (size_t l = 0; l < w_.size(); ++l) {
        g.w[l].assign(w_[l].size(), 0.0);
        g.b[l].assign(b_[l].size(), 0.0);
    }
    return g;
}

void DenseNet::accumulate_gradients(const Trace& trace, const std::vector<double>& dloss_dout,
                                    Gradients& grads) const {
    const size_t layers = acts_.size();
    if (dloss_dout.size() != static_cast<size_t>(output_size()))
        throw std::invalid_argument("accumulate_gradients: output size mismatch");

    // delta for the output layer
    std::vector<double> delta(dloss_dout.size());
    for (size_t o = 0; o < delta.size(); ++o)
        delta[o] = dloss_dout[o] *
                   activate_grad(acts_[layers - 1], trace.pre[layers - 1][o], trace.post[layers - 1][o]);

    for (size_t l = layers; l-- > 0;) {
        const int in = sizes_[l], out = sizes_[l + 1];
        const std::vector<double>& prev = (l == 0) ? trace.input : trace.post[l - 1];
        for (int o = 0; o < out; ++o) {
            double* grow = grads.w[l].data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) grow[i] += delta[o] * prev[i];
            grads.b[l][o] += delta[o];
        }
        if (l == 0) break;
        std::vector<double> next_delta(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double* row = w_[l].data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) next_delta[i] += row[i] * delta[o];
        }
        for (int i = 0; i < in; ++i)
            next_delta[i] *= activate_grad(acts_[l - 1], trace.pre[l - 1][i], trace.post[l - 1][i]);
        delta.swap(next_delta);
    }
}

void DenseNet::apply_sgd_step(const Gradients& grads, const SgdConfig& config) {
    config.validate();
    if (!grads.finite())
        throw std::runtime_error("sgd step aborted: non-finite gradient");
    for (size_t l = 0; l < w_.size(); ++l) {
        for (size_t k = 0; k < w_[l].size(); ++k) {
            mw_[l][k] = config.momentum * mw_[l][k] - config.learning_rate * grads.w[l][k];
            w_[l][k] += mw_[l][k];
        }
        for (size_t k = 0; k < b_[l].size(); ++k) {
            mb_[l][k] = config.momentum * mb_[l][k] - config.learning_rate * grads.b[l][k];
            b_[l][k] += mb_[l][k];
        }
    }
}

double DenseNet::train_batch_mse(const std::vector<std::vector<double>>& inputs,
                                 const std::vector<std::vector<double>>& targets,
                                 const SgdConfig& config) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("train_batch_mse: bad batch");
    Gradients grads = zero_gradients();
    double loss = 0.0;
    for (size_t s = 0; s < inputs.size(); ++s) {
        const Trace t = forward_trace(inputs[s]);
        const std::vector<double>& y = t.post.back();
        if (y.size() != targets[s].size()) throw std::invalid_argument("train_batch_mse: target size");
        std::vector<double> dl(y.size());
        for (size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - targets[s][k];
            loss += e * e;
            dl[k] = 2.0 * e;
        }
        accumulate_gradients(t, dl, grads);
    }
    const double inv_n = 1.0 / static_cast<double>(inputs.size());
    grads.scale(inv_n);
    apply_sgd_step(grads, config);
    return loss * inv_n;
}

size_t DenseNet::parameter_count() const {
    size_t n = 0;
    for (size_t l = 0; l < w_.size(); ++l) n += w_[l].size() + b_[l].size();
    return n;
}

double DenseNet::get_parameter(size_t flat_index) const {
    for (size_t l = 0; l < w_.size(); ++l) {
        if (flat_index < w_[l].size()) return w_[l][flat_index];
        flat_index -= w_[l].size();
        if (flat_index < b_[l].size()) return b_[l][flat_index];
        flat_index -= b_[l].size();
    }
    throw std::out_of_range("get_parameter");
}

void DenseNet::set_parameter(size_t flat_index, double value) {
    for (size_t l = 0; l < w_.size(); ++l) {
        if (flat_index < w_[l].size()) {
            w_[l][flat_index] = value;
            return;
        }
        flat_index -= w_[l].size();
        if (flat_index < b_[l].size()) {
            b_[l][flat_index] = value;
            return;
        }
        flat_index -= b_[l].size();
    }
    throw std::out_of_range("set_parameter");
}

std::vector<uint8_t> DenseNet::save() const {
    std::vector<uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
    put(buf, kFormatVersion);
    put(buf, static_cast<uint32_t>(sizes_.size()));
    for (int s : sizes_) put(buf, static_cast<int32_t>(s));
    for (Activation a : acts_) put(buf, static_cast<uint8_t>(a));
    for (size_t l = 0; l < w_.size(); ++l) {
        for (double x : w_[l]) put(buf, x);
        for (double x : b_[l]) put(buf, x);
    }
    put(buf, fnv1a(buf.data(), buf.size()));
    return buf;
}

DenseNet DenseNet::load(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) + sizeof(uint32_t) * 2 + sizeof(uint64_t))
        throw std::runtime_error("weight blob: truncated");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("weight blob: bad magic");
    const uint64_t stored = [&] {
        size_t off = bytes.size() - sizeof(uint64_t);
        return take<uint64_t>(bytes, off);
    }();
    if (fnv1a(bytes.data(), bytes.size() - sizeof(uint64_t)) != stored)
        throw std::runtime_error("weight blob: checksum mismatch");

    size_t off = sizeof(kMagic);
    const auto version = take<uint32_t>(bytes, off);
    if (version != kFormatVersion) throw std::runtime_error("weight blob: unsupported version");
    const auto n_sizes = take<uint32_t>(bytes, off);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("weight blob: bad layer count");

    DenseNet net;
    net.sizes_.resize(n_sizes);
    for (auto& s : net.sizes_) {
        s = take<int32_t>(bytes, off);
        if (s <= 0) throw std::runtime_error("weight blob: bad layer size");
    }
    net.acts_.resize(n_sizes - 1);
    for (auto& a : net.acts_) {
        const auto tag = take<uint8_t>(bytes, off);
        if (tag > 2) throw std::runtime_error("weight blob: bad activation tag");
        a = static_cast<Activation>(tag);
    }
    net.w_.resize(n_sizes - 1);
    net.b_.resize(n_sizes - 1);
    net.mw_.resize(n_sizes - 1);
    net.mb_.resize(n_sizes - 1);
    for (size_t l = 0; l + 1 < n_sizes; ++l) {
        const size_t nw = static_cast<size_t>(net.sizes_[l]) * net.sizes_[l + 1];
        net.w_[l].resize(nw);
        for (auto& x : net.w_[l]) x = take<double>(bytes, off);
        net.b_[l].resize(net.sizes_[l + 1]);
        for (auto& x : net.b_[l]) x = take<double>(bytes, off);
        net.mw_[l].assign(nw, 0.0);
        net.mb_[l].assign(net.sizes_[l + 1], 0.0);
    }
    if (off != bytes.size() - sizeof(uint64_t))
        throw std::runtime_error("weight blob: payload size mismatch");
    return net;
}

void DenseNet::save_file(const std::string& path) const {
    const auto bytes = save();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DenseNet DenseNet::load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return load(bytes);
}

bool DenseNet::same_shape(const DenseNet& other) const {
    return sizes_ == other.sizes_ && acts_ == other.acts_;
}

void DenseNet::copy_parameters_from(const DenseNet& other) {
    if (!same_shape(other)) throw std::invalid_argument("copy_parameters_from: shape mismatch");
    w_ = other.w_;
    b_ = other.b_;
}

OutputLoss mse_loss(std::vector<double> target) {
    auto t = std::make_shared<std::vector<double>>(std::move(target));
    OutputLoss loss;
    loss.value = [t](const std::vector<double>& y) {
        double acc = 0.0;
        for (size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - (*t)[k];
            acc += e * e;
        }
        return acc;
    };
    loss.grad = [t](const std::vector<double>& y) {
        std::vector<double> g(y.size());
        for (size_t k = 0; k < y.size(); ++k) g[k] = 2.0 * (y[k] - (*t)[k]);
        return g;
    };
    return loss;
}

namespace {
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
} // namespace

OutputLoss weighted_cross_entropy_loss(int chosen, double delta, double floor) {
    OutputLoss loss;
    loss.value = [chosen, delta, floor](const std::vector<double>& z) {
        const auto p = softmax(z);
        return -delta * std::log(std::max(p[chosen], floor));
    };
    loss.grad = [chosen, delta, floor](const std::vector<double>& z) {
        const auto p = softmax(z);
        std::vector<double> g(z.size(), 0.0);
        if (p[chosen] <= floor) return g; // flat region of the floored loss
        for (size_t k = 0; k < z.size(); ++k)
            g[k] = delta * (p[k] - (static_cast<int>(k) == chosen ? 1.0 : 0.0));
        return g;
    };
    return loss;
}

OutputLoss simplex_mse_loss(std::vector<double> target, double eps) {
    auto t = std::make_shared<std::vector<double>>(std::move(target));
    auto normalize = [eps](const std::vector<double>& a) {
        std::vector<double> p(a.size());
        double sum = 0.0;
        for (size_t k = 0; k < a.size(); ++k) sum += a[k] + eps;
        if (sum <= 0.0) {
            std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(a.size()));
            return std::make_pair(p, 0.0);
        }
        for (size_t k = 0; k < a.size(); ++k) p[k] = (a[k] + eps) / sum;
        return std::make_pair(p, sum);
    };
    OutputLoss loss;
    loss.value = [t, normalize](const std::vector<double>& a) {
        const auto [p, sum] = normalize(a);
        double acc = 0.0;
        for (size_t k = 0; k < p.size(); ++k) {
            const double e = p[k] - (*t)[k];
            acc += e * e;
        }
        return acc;
    };
    loss.grad = [t, normalize](const std::vector<double>& a) {
        const auto [p, sum] = normalize(a);
        std::vector<double> g(a.size(), 0.0);
        if (sum <= 0.0) return g; // uniform fallback is locally constant
        double dot = 0.0;
        std::vector<double> dp(a.size());
        for (size_t k = 0; k < a.size(); ++k) {
            dp[k] = 2.0 * (p[k] - (*t)[k]);
            dot += dp[k] * p[k];
        }
        for (size_t k = 0; k < a.size(); ++k) g[k] = (dp[k] - dot) / sum;
        return g;
    };
    return loss;
}

double gradient_check(DenseNet& net, const std::vector<double>& input, const OutputLoss& loss) {
    const double h = 1e-5;

    Gradients analytic = net.zero_gradients();
    const DenseNet::Trace trace = net.forward_trace(input);
    net.accumulate_gradients(trace, loss.grad(trace.post.back()), analytic);

    std::vector<double> flat;
    for (size_t l = 0; l < analytic.w.size(); ++l) {
        flat.insert(flat.end(), analytic.w[l].begin(), analytic.w[l].end());
        flat.insert(flat.end(), analytic.b[l].begin(), analytic.b[l].end());
    }

    double worst = 0.0;
    for (size_t k = 0; k < flat.size(); ++k) {
        const double saved = net.get_parameter(k);
        net.set_parameter(k, saved + h);
        const double lp = loss.value(net.forward(input));
        net.set_parameter(k, saved - h);
        const double lm = loss.value(net.forward(input));
        net.set_parameter(k, saved);
        const double fd = (lp - lm) / (2.0 * h);
        const double err = std::fabs(flat[k] - fd) / std::max(1e-8, std::fabs(flat[k]) + std::fabs(fd));
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace replen::nn

#include "replen/run_config.hpp"
#include "replen/util.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace replen {

namespace {

// sectioned key-value file: [section], key = value, # or ; comments
class KeyValueFile {
public:
    KeyValueFile(const std::string& text, const std::string& name) : name_(name) {
        std::istringstream in(text);
        std::string line, section;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']') fail(lineno, "unterminated section header");
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const size_t eq = t.find('=');
            if (eq == std::string::npos) fail(lineno, "expected key = value");
            const std::string key = trim(t.substr(0, eq));
            if (key.empty()) fail(lineno, "empty key");
            values_[section + "." + key] = trim(t.substr(eq + 1));
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& def) {
        consumed_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? def : it->second;
    }

    double get_double(const std::string& key, double def) {
        consumed_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw std::runtime_error(name_ + ": bad number for " + key);
        }
    }

    long long get_int(const std::string& key, long long def) {
        consumed_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            return std::stoll(it->second);
        } catch (...) {
            throw std::runtime_error(name_ + ": bad integer for " + key);
        }
    }

    bool get_bool(const std::string& key, bool def) {
        consumed_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return def;
        const std::string& v = it->second;
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw std::runtime_error(name_ + ": bad boolean for " + key);
    }

    template <size_t N>
    void get_doubles(const std::string& key, std::array<double, N>& out) {
        consumed_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return;
        const auto parts = split(it->second, ',');
        if (parts.size() != N)
            throw std::runtime_error(name_ + ": " + key + " needs " + std::to_string(N) + " values");
        for (size_t i = 0; i < N; ++i) {
            try {
                out[i] = std::stod(parts[i]);
            } catch (...) {
                throw std::runtime_error(name_ + ": bad number in " + key);
            }
        }
    }

    void reject_unknown_keys() const {
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key))
                throw std::runtime_error(name_ + ": unknown key '" + key + "'");
    }

private:
    [[noreturn]] void fail(size_t lineno, const std::string& why) const {
        throw std::runtime_error(name_ + ":" + std::to_string(lineno) + ": " + why);
    }

    std::string name_;
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

} // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return from_string(buf.str(), path);
}

RunConfig RunConfig::from_string(const std::string& text, const std::string& name) {
    KeyValueFile kv(text, name);
    RunConfig c;
    c.source_text = text;
    c.source_name = name;

    c.agent = kv.get_string("run.agent", c.agent);
    c.episodes = static_cast<int>(kv.get_int("run.episodes", c.episodes));
    c.seed_set = kv.has("run.seed");
    c.seed = static_cast<uint64_t>(kv.get_int("run.seed", 0));
    c.output_dir = kv.get_string("run.output", c.output_dir);
    c.initial_inventory = kv.get_double("run.initial_inventory", c.initial_inventory);
    c.resample_orders = kv.get_bool("run.resample_orders", c.resample_orders);
    c.checkpoint_every = static_cast<int>(kv.get_int("run.checkpoint_every", c.checkpoint_every));

    c.data_source = kv.get_string("data.source", c.data_source);
    c.orders_csv = kv.get_string("data.orders_csv", c.orders_csv);
    c.metadata_csv = kv.get_string("data.metadata_csv", c.metadata_csv);
    c.horizon_days = static_cast<int>(kv.get_int("data.horizon_days", c.horizon_days));
    GeneratorConfig& g = c.generator;
    g.products = static_cast<int>(kv.get_int("data.products", g.products));
    g.days = static_cast<int>(kv.get_int("data.days", g.days));
    g.base_rate_min = kv.get_double("data.base_rate_min", g.base_rate_min);
    g.base_rate_max = kv.get_double("data.base_rate_max", g.base_rate_max);
    kv.get_doubles("data.dow_multipliers", g.dow_multipliers);
    kv.get_doubles("data.tod_multipliers", g.tod_multipliers);
    g.outlier_prob = kv.get_double("data.outlier_prob", g.outlier_prob);
    g.outlier_min = kv.get_double("data.outlier_min", g.outlier_min);
    g.outlier_max = kv.get_double("data.outlier_max", g.outlier_max);
    g.spoilage_min = kv.get_double("data.spoilage_min", g.spoilage_min);
    g.spoilage_max = kv.get_double("data.spoilage_max", g.spoilage_max);
    g.threshold = kv.get_double("data.threshold", g.threshold);
    g.unit_volume_min = kv.get_double("data.unit_volume_min", g.unit_volume_min);
    g.unit_volume_max = kv.get_double("data.unit_volume_max", g.unit_volume_max);
    g.unit_weight_min = kv.get_double("data.unit_weight_min", g.unit_weight_min);
    g.unit_weight_max = kv.get_double("data.unit_weight_max", g.unit_weight_max);
    g.shelf_capacity_min = kv.get_double("data.shelf_capacity_min", g.shelf_capacity_min);
    g.shelf_capacity_max = kv.get_double("data.shelf_capacity_max", g.shelf_capacity_max);

    c.split.train_periods = static_cast<int>(kv.get_int("split.train_periods", c.split.train_periods));
    c.split.test_periods = static_cast<int>(kv.get_int("split.test_periods", c.split.test_periods));

    c.forecast_window = static_cast<int>(kv.get_int("forecast.window", c.forecast_window));

    c.tightness = kv.get_double("capacity.tightness", c.tightness);
    c.v_max_override = kv.get_double("capacity.v_max", 0.0);
    c.c_max_override = kv.get_double("capacity.c_max", 0.0);
    c.alpha = kv.get_double("capacity.alpha", c.alpha);
    c.gamma = kv.get_double("capacity.gamma", c.gamma);

    c.actions = static_cast<int>(kv.get_int("agent.actions", c.actions));
    c.grid_max = kv.get_double("agent.grid_max", c.grid_max);
    AgentHyperparams& h = c.hyper;
    h.smoothing_q = kv.get_double("agent.q", h.smoothing_q);
    h.explore_floor = kv.get_double("agent.explore_floor", h.explore_floor);
    h.epsilon_start = kv.get_double("agent.epsilon_start", h.epsilon_start);
    h.epsilon_end = kv.get_double("agent.epsilon_end", h.epsilon_end);
    h.epsilon_episodes = static_cast<int>(kv.get_int("agent.epsilon_episodes", h.epsilon_episodes));
    h.target_sync_sweeps = static_cast<int>(kv.get_int("agent.target_sync", h.target_sync_sweeps));
    h.train_interval = static_cast<int>(kv.get_int("agent.train_interval", h.train_interval));
    h.x_star = kv.get_double("agent.x_star", h.x_star);
    h.sgd.learning_rate = kv.get_double("agent.learning_rate", h.sgd.learning_rate);
    h.sgd.momentum = kv.get_double("agent.momentum", h.sgd.momentum);
    h.sgd.batch_size = static_cast<int>(kv.get_int("agent.batch_size", h.sgd.batch_size));
    h.gamma = c.gamma;
    h.alpha = c.alpha;

    c.heatmap_resolution = static_cast<int>(kv.get_int("heatmap.resolution", c.heatmap_resolution));

    kv.reject_unknown_keys();
    c.validate();
    return c;
}

uint64_t RunConfig::config_hash() const {
    return fnv1a(source_text);
}

void RunConfig::validate() const {
    if (agent != "a2c_mod" && agent != "a2c_cat" && agent != "dqn" && agent != "heuristic")
        throw std::runtime_error("config: unknown agent '" + agent + "'");
    if (episodes < 1) throw std::runtime_error("config: episodes < 1");
    if (!(initial_inventory >= 0.0 && initial_inventory <= 1.0))
        throw std::runtime_error("config: initial_inventory outside [0,1]");
    if (checkpoint_every < 1) throw std::runtime_error("config: checkpoint_every < 1");
    if (data_source != "synthetic" && data_source != "csv")
        throw std::runtime_error("config: data source must be synthetic or csv");
    if (data_source == "csv" && (orders_csv.empty() || metadata_csv.empty()))
        throw std::runtime_error("config: csv source needs orders_csv and metadata_csv");
    if (resample_orders && data_source != "synthetic")
        throw std::runtime_error("config: resample_orders requires the synthetic source");
    if (forecast_window < 1) throw std::runtime_error("config: forecast window < 1");
    if (actions < 2) throw std::runtime_error("config: need at least 2 actions");
    if (!(grid_max > 0.0 && grid_max <= 1.0))
        throw std::runtime_error("config: grid_max outside (0,1]");
    if (heatmap_resolution < 2) throw std::runtime_error("config: heatmap resolution < 2");
    if (data_source == "synthetic") generator.validate();
    hyper.validate();
}

} // namespace replen

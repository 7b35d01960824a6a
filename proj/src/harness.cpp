#include "replen/harness.hpp"
#include "replen/features.hpp"
#include "replen/util.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace replen {

namespace {

constexpr const char* kCodeVersion = "replen 0.1.0";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct FeatureMeans {
    std::array<double, kFeatureCount> sum{};
    long long count = 0;

    void add(const FeatureVector& f) {
        for (int k = 0; k < kFeatureCount; ++k) sum[k] += f[k];
        ++count;
    }
    std::array<double, kFeatureCount> mean() const {
        std::array<double, kFeatureCount> m{};
        if (count == 0) return m;
        for (int k = 0; k < kFeatureCount; ++k) m[k] = sum[k] / static_cast<double>(count);
        return m;
    }
};

struct RolloutContext {
    const ProductCatalog* catalog;
    const CapacityConfig* capacity;
    FeatureScaler scaler;
};

bool action_feasible(const ActionVector& u, const InventoryState& pre, const ProductCatalog& cat,
                     const CapacityConfig& cap) {
    const double tol = 1e-9;
    double vol = 0.0, wgt = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        if (u[i] < -tol || u[i] > 1.0 + tol) return false;
        if (pre.levels[i] + u[i] > 1.0 + tol) return false;
        vol += cat.unit_volume[i] * u[i];
        wgt += cat.unit_weight[i] * u[i];
    }
    return vol <= cap.v_max * (1.0 + 1e-12) && wgt <= cap.c_max * (1.0 + 1e-12);
}

EpisodeMetrics roll_episode(int episode, Agent& agent, const RolloutContext& ctx,
                            const std::vector<std::vector<double>>& orders, InventoryState state,
                            OrderHistory& history, ExperienceBuffer* buffer, bool explore,
                            std::mt19937_64& rng, FeatureMeans* means, long* violations) {
    const ProductCatalog& catalog = *ctx.catalog;
    const CapacityConfig& capacity = *ctx.capacity;
    const size_t p = catalog.count();
    const double alpha = capacity.alpha;

    EpisodeMetrics m;
    m.episode = episode;
    const size_t periods = orders.size();
    size_t t = 0;
    try {
        auto snapshot = forecast(history, catalog);
        auto features = build_features(state, snapshot, catalog, ctx.scaler);
        for (t = 0; t < periods; ++t) {
            ActionVector u_desired(p);
            std::vector<int> chosen(p);
            for (size_t i = 0; i < p; ++i) {
                const ActionChoice c = agent.act(features[i], explore, rng);
                u_desired[i] = c.quantity;
                chosen[i] = c.index;
                if (means) means->add(features[i]);
            }

            const StepResult res = step(state, u_desired, orders[t], catalog, capacity);
            if (!action_feasible(res.executed, state, catalog, capacity)) ++*violations;

            const double business = system_reward(res.outcome);
            const auto rewards = per_product_rewards(res.outcome, alpha);
            double internal = 0.0, empties = 0.0, waste = 0.0, inv = 0.0;
            for (size_t i = 0; i < p; ++i) {
                internal += rewards[i];
                empties += res.outcome.empty_flags[i] ? 1.0 : 0.0;
                waste += res.outcome.waste[i];
                inv += res.outcome.end_levels[i];
            }
            internal /= static_cast<double>(p);
            const double penalty = alpha * std::max(res.outcome.rho - 1.0, 0.0);
            if (std::fabs(internal - (business - penalty)) > 1e-9)
                throw std::logic_error("per-product / system reward bookkeeping drift");

            history.update(orders[t]);
            const auto next_snapshot = forecast(history, catalog);
            auto next_features = build_features(res.next, next_snapshot, catalog, ctx.scaler);

            if (buffer) {
                for (size_t i = 0; i < p; ++i)
                    buffer->store({features[i], chosen[i], rewards[i], next_features[i], false});
                if (buffer->full()) agent.train_sweep(buffer->drain(), rng);
            }

            m.business_reward += business;
            m.internal_reward += internal;
            m.mean_rho += res.outcome.rho;
            m.stockout_fraction += empties / static_cast<double>(p);
            m.wastage += waste / static_cast<double>(p);
            m.spread += percentile_spread(res.outcome.end_levels);
            m.mean_inventory += inv / static_cast<double>(p);

            state = res.next;
            features = std::move(next_features);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("episode " + std::to_string(episode) + ", period " +
                                 std::to_string(t) + ": " + e.what());
    }
    const double n = static_cast<double>(periods);
    m.business_reward /= n;
    m.internal_reward /= n;
    m.mean_rho /= n;
    m.stockout_fraction /= n;
    m.wastage /= n;
    m.spread /= n;
    m.mean_inventory /= n;
    return m;
}

void write_metrics_header(std::ofstream& f) {
    f << "episode,business_reward,internal_reward,mean_rho,stockout_fraction,wastage,spread,"
         "mean_inventory\n";
}

void write_metrics_row(std::ofstream& f, const EpisodeMetrics& m) {
    f << m.episode << ',' << fmt(m.business_reward) << ',' << fmt(m.internal_reward) << ','
      << fmt(m.mean_rho) << ',' << fmt(m.stockout_fraction) << ',' << fmt(m.wastage) << ','
      << fmt(m.spread) << ',' << fmt(m.mean_inventory) << '\n';
}

void save_checkpoint(const std::string& dir, const Agent& agent, const ProductCatalog& catalog,
                     const std::array<double, kFeatureCount>& means) {
    fs::create_directories(dir);
    agent.save_weights(dir);
    json j;
    j["format_version"] = 1;
    j["type"] = agent.type();
    j["grid"] = agent.grid().values;
    const AgentHyperparams& h = agent.hyperparams();
    j["hyperparams"] = {{"gamma", h.gamma},
                        {"smoothing_q", h.smoothing_q},
                        {"alpha", h.alpha},
                        {"explore_floor", h.explore_floor},
                        {"epsilon_start", h.epsilon_start},
                        {"epsilon_end", h.epsilon_end},
                        {"epsilon_episodes", h.epsilon_episodes},
                        {"target_sync_sweeps", h.target_sync_sweeps},
                        {"train_interval", h.train_interval},
                        {"x_star", h.x_star},
                        {"demand_scale", h.demand_scale},
                        {"learning_rate", h.sgd.learning_rate},
                        {"momentum", h.sgd.momentum},
                        {"batch_size", h.sgd.batch_size}};
    j["sigma"] = catalog.forecast_error_std;
    j["shelf_life"] = catalog.shelf_life;
    j["feature_means"] = means;
    j["products"] = catalog.count();
    j["catalog_fingerprint"] = catalog.fingerprint();
    std::ofstream f(dir + "/agent.json", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + dir + "/agent.json");
    f << j.dump(2) << '\n';
}

std::vector<std::vector<double>> resampled_orders(const RunConfig& config,
                                                  const ProductCatalog& catalog, int episode) {
    GeneratorConfig g = config.generator;
    g.seed = mix_seed(config.seed, 40000 + static_cast<uint64_t>(episode));
    const OrderLog log = generate_orders(g);
    auto all = normalized_orders(log, catalog);
    all.resize(static_cast<size_t>(config.split.train_periods));
    return all;
}

} // namespace

PreparedData prepare_data(const RunConfig& config) {
    PreparedData data;
    OrderLog log;
    if (config.data_source == "synthetic") {
        GeneratorConfig g = config.generator;
        g.seed = config.seed;
        log = generate_orders(g);
        data.catalog = synthesize_catalog(g);
    } else {
        data.catalog = assign_metadata(config.metadata_csv);
        log = ingest_orders_csv(config.orders_csv, config.seed, config.horizon_days);
        log = reindex_log(log, data.catalog);
    }
    auto [train_log, test_log] = split_log(log, config.split);
    data.capacity =
        calibrate_capacity(train_log, data.catalog, config.tightness, config.alpha, config.gamma);
    if (config.v_max_override > 0.0) data.capacity.v_max = config.v_max_override;
    if (config.c_max_override > 0.0) data.capacity.c_max = config.c_max_override;
    data.train_orders = normalized_orders(train_log, data.catalog);
    data.test_orders = normalized_orders(test_log, data.catalog);

    // Freeze sigma_i and l_i from a deterministic heuristic pre-pass over the
    // training split; they act as the empirical product statistics of the
    // feature map and are never recomputed from test data.
    const size_t p = data.catalog.count();
    InventoryState state{std::vector<double>(p, config.initial_inventory), 0};
    OrderHistory history(p, config.forecast_window);
    const std::vector<double> x_star(p, config.hyper.x_star);
    std::vector<std::vector<double>> fc(p), re(p);
    std::vector<double> loss_sum(p, 0.0);
    for (const auto& w : data.train_orders) {
        const auto snap = forecast(history, data.catalog);
        const auto u = act_heuristic(state.levels, snap.w_hat, x_star);
        const StepResult res = step(state, u, w, data.catalog, data.capacity);
        for (size_t i = 0; i < p; ++i) {
            fc[i].push_back(snap.w_hat[i]);
            re[i].push_back(w[i]);
            loss_sum[i] += res.outcome.waste[i];
        }
        history.update(w);
        state = res.next;
    }
    std::vector<double> mean_loss(p);
    for (size_t i = 0; i < p; ++i) {
        data.catalog.forecast_error_std[i] = forecast_error_std(fc[i], re[i]).sigma;
        mean_loss[i] = loss_sum[i] / static_cast<double>(data.train_orders.size());
    }
    data.catalog.shelf_life = shelf_life_statistics(mean_loss);

    double top_mean_demand = 0.0;
    for (size_t i = 0; i < p; ++i) {
        double mean = 0.0;
        for (const auto& w : data.train_orders) mean += w[i];
        top_mean_demand = std::max(top_mean_demand, mean / static_cast<double>(data.train_orders.size()));
    }
    data.demand_scale = top_mean_demand > 0.0 ? top_mean_demand : 1.0;
    return data;
}

RunSummary run_training(const RunConfig& config) {
    if (!config.seed_set) throw std::runtime_error("training requires a seed");
    const PreparedData data = prepare_data(config);
    const size_t p = data.catalog.count();

    RunSummary summary;
    summary.run_dir = config.output_dir;
    fs::create_directories(config.output_dir);
    {
        std::ofstream cfg(config.output_dir + "/config.ini", std::ios::trunc);
        cfg << config.source_text;
    }

    const ActionGrid grid = ActionGrid::uniform(config.actions, config.grid_max);
    AgentHyperparams hyper = config.hyper;
    hyper.demand_scale = data.demand_scale;
    auto agent = make_agent(config.agent, grid, hyper, mix_seed(config.seed, 31));
    std::mt19937_64 rng(mix_seed(config.seed, 32));
    ExperienceBuffer buffer(p, config.hyper.train_interval);
    RolloutContext ctx{&data.catalog, &data.capacity,
                       FeatureScaler::from(data.catalog, data.capacity, data.demand_scale)};
    FeatureMeans means;

    std::ofstream metrics(config.output_dir + "/metrics.csv", std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write metrics.csv in " + config.output_dir);
    write_metrics_header(metrics);

    for (int e = 0; e < config.episodes; ++e) {
        agent->begin_episode(e);
        const std::vector<std::vector<double>>* orders = &data.train_orders;
        std::vector<std::vector<double>> redraw;
        if (config.resample_orders) {
            redraw = resampled_orders(config, data.catalog, e);
            orders = &redraw;
        }
        InventoryState state{std::vector<double>(p, config.initial_inventory), 0};
        OrderHistory history(p, config.forecast_window);
        const EpisodeMetrics m =
            roll_episode(e, *agent, ctx, *orders, std::move(state), history,
                         agent->trainable() ? &buffer : nullptr, /*explore=*/true, rng, &means,
                         &summary.feasibility_violations);
        summary.episodes.push_back(m);
        write_metrics_row(metrics, m);
        metrics.flush();

        if ((e + 1) % config.checkpoint_every == 0 && e + 1 < config.episodes) {
            char name[32];
            std::snprintf(name, sizeof(name), "checkpoint_%06d", e + 1);
            save_checkpoint(config.output_dir + "/" + name, *agent, data.catalog, means.mean());
        }
    }
    summary.final_checkpoint = config.output_dir + "/checkpoint_final";
    save_checkpoint(summary.final_checkpoint, *agent, data.catalog, means.mean());

    json manifest;
    manifest["code_version"] = kCodeVersion;
    manifest["config_file"] = config.source_name;
    manifest["config_hash"] = config.config_hash();
    manifest["seed"] = config.seed;
    manifest["agent"] = config.agent;
    manifest["episodes"] = config.episodes;
    manifest["products"] = p;
    manifest["v_max"] = data.capacity.v_max;
    manifest["c_max"] = data.capacity.c_max;
    manifest["feasibility_violations"] = summary.feasibility_violations;
    manifest["final_checkpoint"] = summary.final_checkpoint;
    std::ofstream mf(config.output_dir + "/manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    return summary;
}

LoadedCheckpoint load_checkpoint(const std::string& dir, const ProductCatalog& catalog) {
    std::ifstream f(dir + "/agent.json");
    if (!f) throw std::runtime_error("cannot open checkpoint " + dir);
    json j;
    f >> j;
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported format version");
    if (j.at("products").get<size_t>() != catalog.count() ||
        j.at("catalog_fingerprint").get<uint64_t>() != catalog.fingerprint())
        throw std::runtime_error("checkpoint does not match the catalog");

    ActionGrid grid;
    grid.values = j.at("grid").get<std::vector<double>>();
    AgentHyperparams h;
    const json& hj = j.at("hyperparams");
    h.gamma = hj.at("gamma").get<double>();
    h.smoothing_q = hj.at("smoothing_q").get<double>();
    h.alpha = hj.at("alpha").get<double>();
    h.explore_floor = hj.at("explore_floor").get<double>();
    h.epsilon_start = hj.at("epsilon_start").get<double>();
    h.epsilon_end = hj.at("epsilon_end").get<double>();
    h.epsilon_episodes = hj.at("epsilon_episodes").get<int>();
    h.target_sync_sweeps = hj.at("target_sync_sweeps").get<int>();
    h.train_interval = hj.at("train_interval").get<int>();
    h.x_star = hj.at("x_star").get<double>();
    h.demand_scale = hj.at("demand_scale").get<double>();
    h.sgd.learning_rate = hj.at("learning_rate").get<double>();
    h.sgd.momentum = hj.at("momentum").get<double>();
    h.sgd.batch_size = hj.at("batch_size").get<int>();

    LoadedCheckpoint out;
    out.agent = make_agent(j.at("type").get<std::string>(), grid, h, 0);
    out.agent->load_weights(dir);
    out.feature_means = j.at("feature_means").get<std::array<double, kFeatureCount>>();
    out.sigma = j.at("sigma").get<std::vector<double>>();
    out.shelf_life = j.at("shelf_life").get<std::vector<double>>();
    if (out.sigma.size() != catalog.count() || out.shelf_life.size() != catalog.count())
        throw std::runtime_error("checkpoint: statistic vectors do not match the catalog");
    return out;
}

EpisodeMetrics run_evaluation(const std::string& checkpoint_dir, const RunConfig& config) {
    PreparedData data = prepare_data(config);
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_dir, data.catalog);
    // the frozen training-time statistics travel with the checkpoint
    data.catalog.forecast_error_std = loaded.sigma;
    data.catalog.shelf_life = loaded.shelf_life;

    const size_t p = data.catalog.count();
    OrderHistory history(p, config.forecast_window);
    const size_t warm =
        std::min(data.train_orders.size(), static_cast<size_t>(config.forecast_window));
    for (size_t t = data.train_orders.size() - warm; t < data.train_orders.size(); ++t)
        history.update(data.train_orders[t]);

    RolloutContext ctx{&data.catalog, &data.capacity,
                       FeatureScaler::from(data.catalog, data.capacity, loaded.agent->hyperparams().demand_scale)};
    InventoryState state{std::vector<double>(p, config.initial_inventory), 0};
    std::mt19937_64 rng(0); // greedy rollout draws nothing
    long violations = 0;
    EpisodeMetrics m = roll_episode(0, *loaded.agent, ctx, data.test_orders, std::move(state),
                                    history, nullptr, /*explore=*/false, rng, nullptr, &violations);
    if (violations != 0) throw std::logic_error("evaluation executed an infeasible action");
    return m;
}

void emit_heatmaps(const std::string& checkpoint_dir, const RunConfig& config, int resolution,
                   const std::string& out_dir) {
    if (resolution < 2) throw std::invalid_argument("heatmap resolution must be at least 2");
    const PreparedData data = prepare_data(config);
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_dir, data.catalog);
    fs::create_directories(out_dir);

    const bool has_value = loaded.agent->type() != "heuristic";
    std::ofstream policy(out_dir + "/policy_heatmap.csv", std::ios::trunc);
    policy << "inventory,forecast,action\n";
    std::ofstream value;
    if (has_value) {
        value.open(out_dir + "/critic_heatmap.csv", std::ios::trunc);
        value << "inventory,forecast,value\n";
    }
    std::mt19937_64 rng(0);
    for (int gx = 0; gx < resolution; ++gx) {
        for (int gy = 0; gy < resolution; ++gy) {
            FeatureVector f = loaded.feature_means;
            f[0] = static_cast<double>(gx) / (resolution - 1);
            f[1] = static_cast<double>(gy) / (resolution - 1);
            const ActionChoice c = loaded.agent->act(f, /*explore=*/false, rng);
            policy << fmt(f[0]) << ',' << fmt(f[1]) << ',' << fmt(c.quantity) << '\n';
            if (has_value)
                value << fmt(f[0]) << ',' << fmt(f[1]) << ','
                      << fmt(loaded.agent->state_value(f)) << '\n';
        }
    }
}

std::vector<EpisodeMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty metrics file");
    std::vector<EpisodeMetrics> out;
    while (std::getline(f, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 8) throw std::runtime_error(path + ": bad metrics row");
        EpisodeMetrics m;
        m.episode = std::stoi(fields[0]);
        m.business_reward = std::stod(fields[1]);
        m.internal_reward = std::stod(fields[2]);
        m.mean_rho = std::stod(fields[3]);
        m.stockout_fraction = std::stod(fields[4]);
        m.wastage = std::stod(fields[5]);
        m.spread = std::stod(fields[6]);
        m.mean_inventory = std::stod(fields[7]);
        out.push_back(m);
    }
    return out;
}

void emit_reward_components(const std::string& run_dir, const std::string& out_csv) {
    const auto rows = read_metrics_csv(run_dir + "/metrics.csv");
    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out_csv);
    f << "episode,business_reward,internal_reward,stockout,wastage,spread,mean_rho\n";
    for (const EpisodeMetrics& m : rows)
        f << m.episode << ',' << fmt(m.business_reward) << ',' << fmt(m.internal_reward) << ','
          << fmt(m.stockout_fraction) << ',' << fmt(m.wastage) << ',' << fmt(m.spread) << ','
          << fmt(m.mean_rho) << '\n';
}

} // namespace replen

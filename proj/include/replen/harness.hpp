#pragma once

#include "replen/agents.hpp"
#include "replen/dynamics.hpp"
#include "replen/forecast.hpp"
#include "replen/run_config.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace replen {

struct EpisodeMetrics {
    int episode = 0;
    double business_reward = 0.0;   // episode mean of the system reward
    double internal_reward = 0.0;   // episode mean of the per-product reward average
    double mean_rho = 0.0;
    double stockout_fraction = 0.0; // mean p_empty / p
    double wastage = 0.0;           // mean sum(waste)/p
    double spread = 0.0;            // mean percentile spread
    double mean_inventory = 0.0;    // mean end-of-period level
};

/// Catalog with frozen empirical stats, calibrated capacity, and the
/// normalized order matrices for both splits.
struct PreparedData {
    ProductCatalog catalog;
    CapacityConfig capacity;
    std::vector<std::vector<double>> train_orders;
    std::vector<std::vector<double>> test_orders;
    double demand_scale = 1.0; // largest per-product mean demand in training
};

/// Builds (or ingests) the order stream, splits it, calibrates capacity, and
/// freezes sigma_i / l_i from a heuristic pre-pass over the training split.
PreparedData prepare_data(const RunConfig& config);

struct RunSummary {
    std::string run_dir;
    std::string final_checkpoint;
    std::vector<EpisodeMetrics> episodes;
    long feasibility_violations = 0;
};

/// Full training run: per-episode rollout + sweep training, metrics CSV,
/// periodic checkpoints, manifest. Deterministic per (config, seed).
RunSummary run_training(const RunConfig& config);

/// Greedy rollout of a checkpoint over the test split, no training, forecast
/// history warmed with the tail of the training split.
EpisodeMetrics run_evaluation(const std::string& checkpoint_dir, const RunConfig& config);

/// Policy (and critic value, for value-bearing agents) over an
/// inventory x forecast grid, other features frozen at training means.
void emit_heatmaps(const std::string& checkpoint_dir, const RunConfig& config, int resolution,
                   const std::string& out_dir);

/// Per-episode reward components CSV derived from a run's metrics.
void emit_reward_components(const std::string& run_dir, const std::string& out_csv);

std::vector<EpisodeMetrics> read_metrics_csv(const std::string& path);

struct LoadedCheckpoint {
    std::unique_ptr<Agent> agent;
    std::array<double, kFeatureCount> feature_means{};
    std::vector<double> sigma;
    std::vector<double> shelf_life;
};

/// Verifies the stored catalog fingerprint and restores the agent with its
/// frozen statistics.
LoadedCheckpoint load_checkpoint(const std::string& dir, const ProductCatalog& catalog);

} // namespace replen

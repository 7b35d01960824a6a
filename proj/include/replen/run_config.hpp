#pragma once

#include "replen/agents.hpp"
#include "replen/orders.hpp"

#include <cstdint>
#include <string>

namespace replen {

/// Whole-run configuration, loaded from a sectioned key-value file.
/// Every field has a default; `seed` must be supplied (file or CLI) before
/// training or generation.
struct RunConfig {
    // [run]
    std::string agent = "a2c_mod";
    int episodes = 600;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir = "runs/out";
    double initial_inventory = 0.5;
    bool resample_orders = false;
    int checkpoint_every = 50;

    // [data]
    std::string data_source = "synthetic"; // synthetic | csv
    std::string orders_csv;
    std::string metadata_csv;
    int horizon_days = 0; // for source-schema ingestion; 0 derives from data
    GeneratorConfig generator;

    // [split]
    SplitConfig split{900, 496};

    // [forecast]
    int forecast_window = 28;

    // [capacity]
    double tightness = 0.9;
    double v_max_override = 0.0; // 0 = calibrate from the training split
    double c_max_override = 0.0;
    double alpha = 0.5;
    double gamma = 0.99;

    // [agent]
    int actions = 21;
    double grid_max = 1.0;
    AgentHyperparams hyper;

    // [heatmap]
    int heatmap_resolution = 11;

    std::string source_text; // verbatim config file contents
    std::string source_name;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text, const std::string& name);

    uint64_t config_hash() const;
    void validate() const;
};

} // namespace replen

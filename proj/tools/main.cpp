#include "replen/harness.hpp"
#include "replen/orders.hpp"
#include "replen/run_config.hpp"
#include "replen/util.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace replen;

RunConfig load_config(const std::string& path, long long seed_flag, const std::string& agent,
                      int episodes, const std::string& output) {
    RunConfig c = path.empty() ? RunConfig::from_string("", "<defaults>") : RunConfig::from_file(path);
    if (seed_flag >= 0) {
        c.seed = static_cast<uint64_t>(seed_flag);
        c.seed_set = true;
    }
    if (!agent.empty()) c.agent = agent;
    if (episodes > 0) c.episodes = episodes;
    if (!output.empty()) c.output_dir = output;
    c.validate();
    return c;
}

void print_metrics(const EpisodeMetrics& m) {
    std::printf("business_reward    %.6f\n", m.business_reward);
    std::printf("internal_reward    %.6f\n", m.internal_reward);
    std::printf("mean_rho           %.6f\n", m.mean_rho);
    std::printf("stockout_fraction  %.6f\n", m.stockout_fraction);
    std::printf("wastage            %.6f\n", m.wastage);
    std::printf("spread             %.6f\n", m.spread);
    std::printf("mean_inventory     %.6f\n", m.mean_inventory);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-product replenishment control: environment, agents, training harness"};
    app.require_subcommand(1);

    std::string config_path, agent, output, checkpoint, orders_out, metadata_out;
    std::string orders_in, metadata_in, run_dir, report_out;
    long long seed = -1;
    int episodes = 0, horizon_days = 0, resolution = 0;

    auto* gen = app.add_subcommand("generate-data", "Write synthetic orders and metadata CSVs");
    gen->add_option("--config", config_path, "Run config file");
    gen->add_option("--seed", seed, "Random seed (required unless set in the config)");
    gen->add_option("--orders-out", orders_out, "Orders CSV path")->required();
    gen->add_option("--metadata-out", metadata_out, "Metadata CSV path")->required();

    auto* ingest = app.add_subcommand("ingest", "Validate an order log against product metadata");
    ingest->add_option("--orders", orders_in, "Orders CSV (either schema)")->required();
    ingest->add_option("--metadata", metadata_in, "Metadata CSV")->required();
    ingest->add_option("--seed", seed, "Seed for source-schema date assignment");
    ingest->add_option("--horizon-days", horizon_days, "Horizon in days (source schema)");
    ingest->add_option("--orders-out", orders_out, "Re-export the canonical timestamped CSV");

    auto* train = app.add_subcommand("train", "Train an agent and write the run directory");
    train->add_option("--config", config_path, "Run config file");
    train->add_option("--seed", seed, "Random seed (required unless set in the config)");
    train->add_option("--agent", agent, "a2c_mod | a2c_cat | dqn | heuristic");
    train->add_option("--episodes", episodes, "Training episode count");
    train->add_option("--output", output, "Run directory");

    auto* eval = app.add_subcommand("evaluate", "Greedy rollout of a checkpoint on the test split");
    eval->add_option("--config", config_path, "Run config file");
    eval->add_option("--seed", seed, "Seed (must match the training run's data seed)");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();

    auto* heat = app.add_subcommand("heatmap", "Policy/critic grids over inventory x forecast");
    heat->add_option("--config", config_path, "Run config file");
    heat->add_option("--seed", seed, "Seed (must match the training run's data seed)");
    heat->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    heat->add_option("--resolution", resolution, "Grid resolution per axis");
    heat->add_option("--out", output, "Output directory (default: checkpoint dir)");

    auto* report = app.add_subcommand("report", "Reward-component CSV from a run directory");
    report->add_option("--run", run_dir, "Run directory")->required();
    report->add_option("--out", report_out, "Components CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            RunConfig c = load_config(config_path, seed, "", 0, "");
            if (!c.seed_set) throw std::runtime_error("generate-data requires --seed");
            GeneratorConfig g = c.generator;
            g.seed = c.seed;
            export_orders_csv(generate_orders(g), orders_out);
            export_metadata_csv(synthesize_catalog(g), metadata_out);
            std::printf("wrote %s and %s\n", orders_out.c_str(), metadata_out.c_str());
        } else if (ingest->parsed()) {
            const ProductCatalog catalog = assign_metadata(metadata_in);
            OrderLog log =
                ingest_orders_csv(orders_in, seed >= 0 ? static_cast<uint64_t>(seed) : 0,
                                  horizon_days);
            log = reindex_log(log, catalog);
            std::printf("products  %zu\nperiods   %d\norders    %llu\n", log.products(),
                        log.num_periods(),
                        static_cast<unsigned long long>(log.total_orders()));
            if (!orders_out.empty()) {
                export_orders_csv(log, orders_out);
                std::printf("canonical log written to %s\n", orders_out.c_str());
            }
        } else if (train->parsed()) {
            const RunConfig c = load_config(config_path, seed, agent, episodes, output);
            if (!c.seed_set) throw std::runtime_error("train requires --seed");
            const RunSummary s = run_training(c);
            const EpisodeMetrics& last = s.episodes.back();
            std::printf("run directory      %s\n", s.run_dir.c_str());
            std::printf("episodes           %zu\n", s.episodes.size());
            std::printf("final business     %.6f\n", last.business_reward);
            std::printf("final internal     %.6f\n", last.internal_reward);
            std::printf("violations         %ld\n", s.feasibility_violations);
        } else if (eval->parsed()) {
            const RunConfig c = load_config(config_path, seed, "", 0, "");
            print_metrics(run_evaluation(checkpoint, c));
        } else if (heat->parsed()) {
            const RunConfig c = load_config(config_path, seed, "", 0, "");
            const int res = resolution > 0 ? resolution : c.heatmap_resolution;
            const std::string out = output.empty() ? checkpoint : output;
            emit_heatmaps(checkpoint, c, res, out);
            std::printf("heatmaps written to %s\n", out.c_str());
        } else if (report->parsed()) {
            const std::string out = report_out.empty() ? run_dir + "/components.csv" : report_out;
            emit_reward_components(run_dir, out);
            std::printf("components written to %s\n", out.c_str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

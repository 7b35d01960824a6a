#pragma once

#include "replen/catalog.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace replen {

/// Per-period order counts in raw order units, 4 periods per day.
/// Aggregation is exact: total_orders() equals the number of ingested rows.
struct OrderLog {
    std::vector<std::string> product_ids;
    std::vector<std::vector<uint32_t>> counts; // [period][product]
    int64_t start_day = 0;                     // days since 1970-01-01, period 0 starts here
    static constexpr int kPeriodsPerDay = 4;

    int num_periods() const { return static_cast<int>(counts.size()); }
    size_t products() const { return product_ids.size(); }
    uint64_t total_orders() const;

    bool operator==(const OrderLog&) const = default;
};

struct SplitConfig {
    int train_periods = 900;
    int test_periods = 496;
};

struct GeneratorConfig {
    int products = 20;
    int days = 125; // horizon; periods = 4 * days
    double base_rate_min = 2.0;
    double base_rate_max = 12.0; // per-period Poisson rate, log-uniform across products
    std::array<double, 7> dow_multipliers{1.0, 0.9, 0.9, 1.0, 1.1, 1.3, 1.2}; // Monday first
    std::array<double, 4> tod_multipliers{0.7, 1.2, 1.3, 0.8};
    double outlier_prob = 0.01;
    double outlier_min = 3.0;
    double outlier_max = 6.0;
    // synthetic catalog ranges
    double spoilage_min = 0.005;
    double spoilage_max = 0.1; // log-uniform
    double threshold = 0.1;
    double unit_volume_min = 0.2;
    double unit_volume_max = 2.0; // per order unit, log-uniform
    double unit_weight_min = 0.1;
    double unit_weight_max = 1.5;
    double shelf_capacity_min = 80.0;
    double shelf_capacity_max = 160.0; // order units per full shelf
    uint64_t seed = 0;

    void validate() const;
};

/// Seeded synthetic order stream: Poisson counts with day-of-week and
/// time-of-day seasonality plus occasional multiplicative outliers.
OrderLog generate_orders(const GeneratorConfig& config);

/// Matching synthetic product metadata (ids P000..), drawn from the same
/// config with an independent seed stream.
ProductCatalog synthesize_catalog(const GeneratorConfig& config);

/// Reads either the timestamped schema (product_id,timestamp) or the source
/// schema (customer_id,product_id,day_of_week,days_since_prior); the latter
/// assigns a seeded random in-horizon first-order date respecting the stated
/// weekday. horizon_days <= 0 derives the horizon from the data
/// (timestamp schema only).
OrderLog ingest_orders_csv(const std::string& path, uint64_t seed, int horizon_days);

/// One row per order unit, timestamps at period starts. Re-ingesting yields
/// an identical log.
void export_orders_csv(const OrderLog& log, const std::string& path);

/// Metadata CSV -> validated catalog. unit_volume/unit_weight are converted
/// to per-shelf multipliers (value * shelf_capacity_units); empirical stats
/// start at their defaults (sigma 0, shelf life 1).
ProductCatalog assign_metadata(const std::string& csv_path);

void export_metadata_csv(const ProductCatalog& catalog, const std::string& path);

/// Contiguous prefix/suffix split; throws unless the parts sum to the horizon.
std::pair<OrderLog, OrderLog> split_log(const OrderLog& log, const SplitConfig& config);

/// v_max/c_max at tightness * mean per-period order volume/weight.
CapacityConfig calibrate_capacity(const OrderLog& log, const ProductCatalog& catalog,
                                  double tightness, double alpha, double gamma);

/// counts / shelf_capacity, aligned with the catalog (ids must match).
std::vector<std::vector<double>> normalized_orders(const OrderLog& log,
                                                   const ProductCatalog& catalog);

/// Reorders the log's product columns to the catalog's id order.
OrderLog reindex_log(const OrderLog& log, const ProductCatalog& catalog);

} // namespace replen

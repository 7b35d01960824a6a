#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace replen {

/// Per-product metadata. All per-product vectors have length `count()`.
/// Volume/weight multipliers are per unit of *normalized* inventory, i.e.
/// v[i] is the volume of a full shelf of product i.
struct ProductCatalog {
    std::vector<std::string> ids;
    std::vector<double> spoilage_rate;      // a_i >= 0, per unit time
    std::vector<double> unit_volume;        // v_i > 0
    std::vector<double> unit_weight;        // c_i > 0
    std::vector<double> threshold;          // tau_i in [0,1)
    std::vector<double> shelf_life;         // l_i in [0,1], empirical statistic
    std::vector<double> forecast_error_std; // sigma_i >= 0, in normalized units
    std::vector<double> shelf_capacity;     // order units per full shelf (normalization)

    size_t count() const { return ids.size(); }

    void validate() const;
    uint64_t fingerprint() const;
};

/// Shared transport-capacity limits plus the reward-shaping constants.
struct CapacityConfig {
    double v_max = 1.0;
    double c_max = 1.0;
    double alpha = 0.5;  // capacity exceedance penalty coefficient
    double gamma = 0.99; // discount factor

    void validate() const;
};

} // namespace replen

#pragma once

#include "replen/catalog.hpp"
#include "replen/dynamics.hpp"
#include "replen/forecast.hpp"

#include <array>
#include <vector>

namespace replen {

/// Per-product agent input, in file order:
/// x_i, w_hat_i, sigma_i, v_i, c_i, l_i, v.w_hat, c.w_hat
using FeatureVector = std::array<double, 8>;

constexpr int kFeatureCount = 8;

/// Scale constants derived once from catalog + capacity: metadata divided by
/// catalog maxima, aggregate forecasts divided by the capacity limits, and
/// per-product forecast/sigma divided by the training demand scale (the
/// largest per-product mean demand) so tanh inputs stay O(1).
struct FeatureScaler {
    double max_volume = 1.0;
    double max_weight = 1.0;
    double v_max = 1.0;
    double c_max = 1.0;
    double demand_scale = 1.0;

    static FeatureScaler from(const ProductCatalog& catalog, const CapacityConfig& capacity,
                              double demand_scale = 1.0);
};

/// The Table-1 feature map, identical for every agent type.
std::vector<FeatureVector> build_features(const InventoryState& state,
                                          const ForecastSnapshot& snapshot,
                                          const ProductCatalog& catalog,
                                          const FeatureScaler& scaler);

} // namespace replen

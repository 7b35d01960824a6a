#include "replen/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace replen {

FeatureScaler FeatureScaler::from(const ProductCatalog& catalog, const CapacityConfig& capacity,
                                  double demand_scale) {
    if (!(demand_scale > 0.0)) throw std::invalid_argument("FeatureScaler: demand_scale <= 0");
    FeatureScaler s;
    s.max_volume = *std::max_element(catalog.unit_volume.begin(), catalog.unit_volume.end());
    s.max_weight = *std::max_element(catalog.unit_weight.begin(), catalog.unit_weight.end());
    s.v_max = capacity.v_max;
    s.c_max = capacity.c_max;
    s.demand_scale = demand_scale;
    return s;
}

std::vector<FeatureVector> build_features(const InventoryState& state,
                                          const ForecastSnapshot& snapshot,
                                          const ProductCatalog& catalog,
                                          const FeatureScaler& scaler) {
    const size_t p = catalog.count();
    if (state.levels.size() != p || snapshot.w_hat.size() != p)
        throw std::invalid_argument("build_features: size mismatch");

    const double agg_vol = snapshot.total_volume / scaler.v_max;
    const double agg_wgt = snapshot.total_weight / scaler.c_max;
    std::vector<FeatureVector> out(p);
    for (size_t i = 0; i < p; ++i) {
        FeatureVector& f = out[i];
        f[0] = state.levels[i];
        f[1] = snapshot.w_hat[i] / scaler.demand_scale;
        f[2] = catalog.forecast_error_std[i] / scaler.demand_scale;
        f[3] = catalog.unit_volume[i] / scaler.max_volume;
        f[4] = catalog.unit_weight[i] / scaler.max_weight;
        f[5] = catalog.shelf_life[i];
        f[6] = agg_vol;
        f[7] = agg_wgt;
        for (double x : f)
            if (!std::isfinite(x)) throw std::invalid_argument("build_features: non-finite feature");
    }
    return out;
}

} // namespace replen

#include "replen/forecast.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace replen {

OrderHistory::OrderHistory(size_t products, int window) : products_(products), window_(window) {
    if (window <= 0) throw std::invalid_argument("OrderHistory: window must be positive");
}

void OrderHistory::update(const std::vector<double>& realized) {
    if (realized.size() != products_)
        throw std::invalid_argument("OrderHistory: product count mismatch");
    for (double w : realized)
        if (!(w >= 0.0)) throw std::invalid_argument("OrderHistory: negative or NaN entry");
    periods_.push_back(realized);
    while (periods_.size() > static_cast<size_t>(window_)) periods_.pop_front();
}

ForecastSnapshot forecast(const OrderHistory& history, const ProductCatalog& catalog) {
    const size_t p = history.products();
    if (catalog.count() != p) throw std::invalid_argument("forecast: catalog mismatch");

    ForecastSnapshot snap;
    snap.w_hat.assign(p, 0.0);
    if (!history.periods().empty()) {
        for (const auto& period : history.periods())
            for (size_t i = 0; i < p; ++i) snap.w_hat[i] += period[i];
        const double n = static_cast<double>(history.periods().size());
        for (double& w : snap.w_hat) w /= n;
    }
    for (size_t i = 0; i < p; ++i) {
        snap.total_volume += catalog.unit_volume[i] * snap.w_hat[i];
        snap.total_weight += catalog.unit_weight[i] * snap.w_hat[i];
    }
    return snap;
}

ErrorStd forecast_error_std(const std::vector<double>& forecasts,
                            const std::vector<double>& realized) {
    if (forecasts.size() != realized.size())
        throw std::invalid_argument("forecast_error_std: unpaired observations");
    const size_t n = forecasts.size();
    if (n < 2) return {0.0, false};
    double mean = 0.0;
    for (size_t k = 0; k < n; ++k) mean += realized[k] - forecasts[k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double e = realized[k] - forecasts[k] - mean;
        var += e * e;
    }
    return {std::sqrt(var / static_cast<double>(n)), true};
}

std::vector<double> shelf_life_statistics(const std::vector<double>& mean_losses) {
    const size_t p = mean_losses.size();
    if (p == 0) throw std::invalid_argument("shelf_life_statistics: empty input");

    std::vector<double> inv(p, 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (size_t i = 0; i < p; ++i) {
        if (!(mean_losses[i] >= 0.0))
            throw std::invalid_argument("shelf_life_statistics: negative loss");
        if (mean_losses[i] > 0.0) {
            inv[i] = 1.0 / mean_losses[i];
            lo = std::min(lo, inv[i]);
            hi = std::max(hi, inv[i]);
            any_finite = true;
        }
    }
    std::vector<double> l(p, 1.0); // zero loss -> longest-lived by convention
    if (!any_finite) return l;
    const double range = hi - lo;
    for (size_t i = 0; i < p; ++i) {
        if (mean_losses[i] == 0.0) continue;
        l[i] = range > 0.0 ? (inv[i] - lo) / range : 1.0;
    }
    return l;
}

} // namespace replen

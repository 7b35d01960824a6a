#pragma once

#include "replen/catalog.hpp"

#include <deque>
#include <vector>

namespace replen {

/// Trailing-window order history; the forecast is the window mean.
class OrderHistory {
public:
    OrderHistory(size_t products, int window);

    /// Appends one realized period, evicting the oldest beyond the window.
    void update(const std::vector<double>& realized);

    size_t products() const { return products_; }
    int window() const { return window_; }
    size_t retained() const { return periods_.size(); }
    const std::deque<std::vector<double>>& periods() const { return periods_; }

private:
    size_t products_;
    int window_;
    std::deque<std::vector<double>> periods_;
};

struct ForecastSnapshot {
    std::vector<double> w_hat;  // per-product forecast, normalized units
    double total_volume = 0.0;  // v . w_hat
    double total_weight = 0.0;  // c . w_hat
};

/// Window mean per product. Warm-up: mean over whatever exists; zero forecast
/// before any period is recorded.
ForecastSnapshot forecast(const OrderHistory& history, const ProductCatalog& catalog);

struct ErrorStd {
    double sigma = 0.0;
    bool warm = true; // false when fewer than 2 pairs were available
};

/// Population std of (realized - forecast) over paired observations.
ErrorStd forecast_error_std(const std::vector<double>& forecasts,
                            const std::vector<double>& realized);

/// Min-max normalized inverse of the mean per-period unexplained inventory
/// loss, across the catalog. Zero loss (or a degenerate range) maps to 1.
std::vector<double> shelf_life_statistics(const std::vector<double>& mean_losses);

} // namespace replen

#include "replen/dynamics.hpp"
#include "replen/util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace replen {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

struct ProductPeriod {
    double end, served, waste, rejected;
};

// Closed form for one product over one unit period. x is the
// post-replenishment level, W the normalized order mass for the period.
ProductPeriod propagate_product(double a, double x, double W) {
    if (a > 0.0) {
        const double decay = std::exp(-a);
        const double coef = -std::expm1(-a) / a; // (1 - e^-a)/a, stable as a -> 0
        const double end = decay * x - W * coef;
        if (end >= 0.0) {
            // no stockout: all orders served, spoilage by mass balance
            return {end, W, std::max(0.0, x - end - W), 0.0};
        }
        // level hits zero at z* = ln(1 + a x / W)/a; orders after z* rejected
        const double zstar = std::log1p(a * x / W) / a;
        const double served = W * zstar;
        return {0.0, served, std::max(0.0, x - served), W - served};
    }
    // a == 0: linear depletion, no spoilage
    if (x >= W) return {x - W, W, 0.0, 0.0};
    return {0.0, x, 0.0, W - x};
}

} // namespace

void ProductCatalog::validate() const {
    const size_t p = ids.size();
    require(p > 0, "catalog: empty");
    require(spoilage_rate.size() == p && unit_volume.size() == p && unit_weight.size() == p &&
                threshold.size() == p && shelf_life.size() == p &&
                forecast_error_std.size() == p && shelf_capacity.size() == p,
            "catalog: vector length mismatch");
    for (size_t i = 0; i < p; ++i) {
        require(spoilage_rate[i] >= 0.0, "catalog: spoilage_rate < 0");
        require(unit_volume[i] > 0.0, "catalog: unit_volume <= 0");
        require(unit_weight[i] > 0.0, "catalog: unit_weight <= 0");
        require(threshold[i] >= 0.0 && threshold[i] < 1.0, "catalog: threshold outside [0,1)");
        require(shelf_capacity[i] > 0.0, "catalog: shelf_capacity <= 0");
    }
}

uint64_t ProductCatalog::fingerprint() const {
    uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* d, size_t n) { h = fnv1a(d, n, h); };
    for (const auto& id : ids) mix(id.data(), id.size());
    for (const auto* v : {&spoilage_rate, &unit_volume, &unit_weight, &threshold, &shelf_capacity})
        mix(v->data(), v->size() * sizeof(double));
    return h;
}

void CapacityConfig::validate() const {
    require(v_max > 0.0 && c_max > 0.0, "capacity: v_max/c_max must be positive");
    require(alpha >= 0.0, "capacity: alpha < 0");
    require(gamma >= 0.0 && gamma < 1.0, "capacity: gamma outside [0,1)");
}

InventoryState apply_replenishment(const InventoryState& state, const ActionVector& u_con) {
    require(u_con.size() == state.levels.size(), "apply_replenishment: size mismatch");
    InventoryState out = state;
    for (size_t i = 0; i < u_con.size(); ++i) {
        require(u_con[i] >= 0.0, "apply_replenishment: negative action");
        const double level = state.levels[i] + u_con[i];
        if (level > 1.0 + 1e-9)
            throw std::invalid_argument("apply_replenishment: shelf overflow, projection bug upstream");
        out.levels[i] = std::min(level, 1.0);
    }
    return out;
}

PeriodOutcome propagate_period(const InventoryState& state_plus, const std::vector<double>& orders,
                               const ProductCatalog& catalog) {
    const size_t p = state_plus.levels.size();
    require(orders.size() == p && catalog.count() == p, "propagate_period: size mismatch");

    PeriodOutcome out;
    out.end_levels.resize(p);
    out.served.resize(p);
    out.waste.resize(p);
    out.rejected.resize(p);
    out.empty_flags.resize(p);
    for (size_t i = 0; i < p; ++i) {
        const double x = state_plus.levels[i];
        const double W = orders[i];
        require(std::isfinite(x) && std::isfinite(W), "propagate_period: non-finite input");
        require(W >= 0.0, "propagate_period: negative orders");
        const ProductPeriod r = propagate_product(catalog.spoilage_rate[i], x, W);
        out.end_levels[i] = r.end;
        out.served[i] = r.served;
        out.waste[i] = r.waste;
        out.rejected[i] = r.rejected;
        out.empty_flags[i] = r.end <= catalog.threshold[i] ? 1 : 0;
    }
    return out;
}

ActionVector project_actions(const ActionVector& u, const InventoryState& state,
                             const ProductCatalog& catalog, const CapacityConfig& capacity) {
    const size_t p = u.size();
    require(state.levels.size() == p && catalog.count() == p, "project_actions: size mismatch");

    ActionVector con(p);
    double vol = 0.0, wgt = 0.0;
    for (size_t i = 0; i < p; ++i) {
        const double room = std::max(0.0, 1.0 - state.levels[i]);
        con[i] = std::clamp(u[i], 0.0, room);
        vol += catalog.unit_volume[i] * con[i];
        wgt += catalog.unit_weight[i] * con[i];
    }
    double scale = 1.0;
    if (vol > capacity.v_max) scale = std::min(scale, capacity.v_max / vol);
    if (wgt > capacity.c_max) scale = std::min(scale, capacity.c_max / wgt);
    if (scale < 1.0)
        for (double& ui : con) ui *= scale;
    return con;
}

double compute_rho(const ActionVector& u, const ProductCatalog& catalog,
                   const CapacityConfig& capacity) {
    require(u.size() == catalog.count(), "compute_rho: size mismatch");
    double vol = 0.0, wgt = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        vol += catalog.unit_volume[i] * u[i];
        wgt += catalog.unit_weight[i] * u[i];
    }
    return std::max(vol / capacity.v_max, wgt / capacity.c_max);
}

double percentile_spread(const std::vector<double>& levels) {
    require(!levels.empty(), "percentile_spread: empty vector");
    std::vector<double> sorted(levels);
    std::sort(sorted.begin(), sorted.end());
    auto at = [&sorted](double q) {
        const double r = q * static_cast<double>(sorted.size() - 1);
        const size_t lo = static_cast<size_t>(r);
        const double frac = r - static_cast<double>(lo);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };
    return at(0.95) - at(0.05);
}

double system_reward(const PeriodOutcome& outcome) {
    const double p = static_cast<double>(outcome.end_levels.size());
    double empties = 0.0, waste_sum = 0.0;
    for (size_t i = 0; i < outcome.end_levels.size(); ++i) {
        empties += outcome.empty_flags[i] ? 1.0 : 0.0;
        waste_sum += outcome.waste[i];
    }
    return 1.0 - empties / p - waste_sum / p - percentile_spread(outcome.end_levels);
}

std::vector<double> per_product_rewards(const PeriodOutcome& outcome, double alpha) {
    const double spread = percentile_spread(outcome.end_levels);
    const double overshoot = alpha * std::max(outcome.rho - 1.0, 0.0);
    std::vector<double> r(outcome.end_levels.size());
    for (size_t i = 0; i < r.size(); ++i) {
        const double b = outcome.empty_flags[i] ? 1.0 : 0.0;
        r[i] = 1.0 - b - outcome.waste[i] - spread - overshoot;
    }
    return r;
}

StepResult step(const InventoryState& state, const ActionVector& u_desired,
                const std::vector<double>& orders, const ProductCatalog& catalog,
                const CapacityConfig& capacity) {
    StepResult res;
    res.executed = project_actions(u_desired, state, catalog, capacity);
    const InventoryState plus = apply_replenishment(state, res.executed);
    res.outcome = propagate_period(plus, orders, catalog);
    res.outcome.rho = compute_rho(u_desired, catalog, capacity);
    res.next.levels = res.outcome.end_levels;
    res.next.period = state.period + 1;
    return res;
}

} // namespace replen

#pragma once

#include "replen/catalog.hpp"

#include <vector>

namespace replen {

using ActionVector = std::vector<double>;

/// Normalized inventory levels plus the period index.
struct InventoryState {
    std::vector<double> levels; // x_i in [0,1]
    long period = 0;
};

/// Everything observed over one unit period, all in normalized units.
/// `rho` is filled by step() (it depends on the pre-projection request,
/// which propagate_period never sees).
struct PeriodOutcome {
    std::vector<double> end_levels;
    std::vector<double> served;
    std::vector<double> waste;
    std::vector<double> rejected;
    std::vector<char> empty_flags; // end level <= tau_i
    double rho = 0.0;
};

/// Instantaneous replenishment: x <- x + u_con. Expects a constraint-projected
/// action; throws if any x_i + u_i exceeds the shelf by more than 1e-9.
InventoryState apply_replenishment(const InventoryState& state, const ActionVector& u_con);

/// Exact propagation of dx/dz = -a_i x_i - W_i over one unit period, per
/// product, with orders rejected after a stockout. W is in normalized units.
PeriodOutcome propagate_period(const InventoryState& state_plus, const std::vector<double>& orders,
                               const ProductCatalog& catalog);

/// Two-step feasibility projection: clip each u_i to 1 - x_i, then scale the
/// whole vector by min(1, v_max / v.u, c_max / c.u).
ActionVector project_actions(const ActionVector& u, const InventoryState& state,
                             const ProductCatalog& catalog, const CapacityConfig& capacity);

/// Capacity ratio of the *requested* (pre-projection) actions:
/// max(v.u / v_max, c.u / c_max).
double compute_rho(const ActionVector& u, const ProductCatalog& catalog,
                   const CapacityConfig& capacity);

/// P95 - P05 with linear interpolation between order statistics
/// (zero-based rank r = q*(n-1)).
double percentile_spread(const std::vector<double>& levels);

/// Aggregate reward: 1 - p_empty/p - sum(waste)/p - spread.
double system_reward(const PeriodOutcome& outcome);

/// Per-product training rewards: 1 - b_i - waste_i - spread - alpha*max(rho-1, 0).
std::vector<double> per_product_rewards(const PeriodOutcome& outcome, double alpha);

struct StepResult {
    PeriodOutcome outcome;
    InventoryState next;      // end-of-period levels, period advanced
    ActionVector executed;    // u_con actually applied
};

/// One full period: rho on the request, projection, replenishment,
/// propagation. Pure function of its inputs.
StepResult step(const InventoryState& state, const ActionVector& u_desired,
                const std::vector<double>& orders, const ProductCatalog& catalog,
                const CapacityConfig& capacity);

} // namespace replen

//! The comparison algorithms: the identity baseline over the existing
//! infrastructure, three placement greedies sharing the candidate
//! machinery of the environment, and an adapted single-move score greedy.
//!
//! Every baseline is deterministic, respects the budget, and only emits
//! plans that pass [`check_constraints`]; candidates whose insertion would
//! destabilize some station are skipped.

use crate::netdata::{NodeId, RoadNetwork};
use crate::planner::{build_lookup, required_capacity_kw, ConfigTable};
use crate::utility::{
    benefit, check_constraints, plan_stable, score, weakened_demand, ChargerCatalog, ChargingPlan,
    ChargingStation, UtilityParams,
};

/// The status quo: returns the existing infrastructure unchanged.
pub fn existing_charging(initial: &ChargingPlan) -> ChargingPlan {
    initial.clone()
}

/// How the placement greedies rank station-free candidate nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Selection {
    /// Marginal benefit of the configured hypothetical station.
    MarginalBenefit,
    /// Weakened demand of the node.
    WeakenedDemand,
}

struct Candidate {
    fee_eur: f64,
    plan: ChargingPlan,
}

/// Places stations one at a time: each iteration configures a hypothetical
/// station at every station-free node via the lookup table, ranks the
/// stable candidates by the selection key (ties to the lower node id), and
/// applies the best one if affordable, stopping otherwise. With `top_up`,
/// chargers are added to the new station while its utilization exceeds
/// `rho_target`, budget remains and it is below the charger bound.
fn placement_greedy(
    initial: &ChargingPlan,
    budget_eur: f64,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
    rho_target: f64,
    selection: Selection,
    top_up: bool,
) -> ChargingPlan {
    let table = build_lookup(catalog, params.max_chargers);
    let mut plan = initial.clone();
    let mut spent = 0.0;
    loop {
        let base_benefit = benefit(&plan, network, catalog, params);
        let remaining = budget_eur - spent;
        let mut best: Option<(f64, Candidate)> = None;
        for node in network.nodes().iter().map(|n| n.id) {
            if plan.contains(node) {
                continue;
            }
            let Some(candidate) =
                configure_candidate(node, &plan, network, catalog, params, &table, rho_target, top_up, remaining)
            else {
                continue;
            };
            let key = match selection {
                Selection::MarginalBenefit => {
                    benefit(&candidate.plan, network, catalog, params) - base_benefit
                }
                Selection::WeakenedDemand => weakened_demand(node, network, params),
            };
            if best.as_ref().is_none_or(|(b, _)| key > *b) {
                best = Some((key, candidate));
            }
        }
        let Some((_, chosen)) = best else {
            break; // no station-free stable candidate left
        };
        if chosen.fee_eur > remaining {
            break;
        }
        spent += chosen.fee_eur;
        plan = chosen.plan;
    }
    plan
}

/// Builds the configured (and optionally topped-up) insertion of one
/// candidate node, or `None` when even the configured station cannot be
/// stable.
#[allow(clippy::too_many_arguments)]
fn configure_candidate(
    node: NodeId,
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
    table: &ConfigTable,
    rho_target: f64,
    top_up: bool,
    remaining_eur: f64,
) -> Option<Candidate> {
    let required = required_capacity_kw(node, plan, network, params, rho_target);
    let choice = table.cheapest_config(required).ok()?;
    let mut station = ChargingStation::new(node, choice.chargers);
    let mut fee = network.node(node)?.estate_cost + choice.cost_eur;
    if top_up {
        loop {
            let mut trial = plan.clone();
            trial.insert(station.clone()).ok()?;
            let rho = crate::utility::queue_params(node, &trial, network, catalog, params)
                .map(|q| q.utilization)
                .unwrap_or(f64::INFINITY);
            if rho <= rho_target || station.total_chargers() >= params.max_chargers {
                break;
            }
            let Some(charger_type) = catalog.best_ratio_type_within(remaining_eur - fee) else {
                break;
            };
            station.add_charger(charger_type);
            fee += catalog.cost_eur[charger_type];
        }
    }
    let mut candidate_plan = plan.clone();
    candidate_plan.insert(station).ok()?;
    if !plan_stable(&candidate_plan, network, catalog, params) {
        return None;
    }
    Some(Candidate { fee_eur: fee, plan: candidate_plan })
}

/// Greedy over the marginal benefit of the configured candidate station.
pub fn best_benefit(
    initial: &ChargingPlan,
    budget_eur: f64,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
    rho_target: f64,
) -> ChargingPlan {
    placement_greedy(
        initial,
        budget_eur,
        network,
        catalog,
        params,
        rho_target,
        Selection::MarginalBenefit,
        false,
    )
}

/// Greedy over the weakened demand of the candidate node.
pub fn highest_demand(
    initial: &ChargingPlan,
    budget_eur: f64,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
    rho_target: f64,
) -> ChargingPlan {
    placement_greedy(
        initial,
        budget_eur,
        network,
        catalog,
        params,
        rho_target,
        Selection::WeakenedDemand,
        false,
    )
}

/// Benefit-driven placement with per-station charger top-up until the
/// station's utilization drops to `rho_target` (or the charger bound or
/// budget binds); every emitted plan is feasible by construction.
pub fn bounding_optimising_plus(
    initial: &ChargingPlan,
    budget_eur: f64,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
    rho_target: f64,
) -> ChargingPlan {
    placement_greedy(
        initial,
        budget_eur,
        network,
        catalog,
        params,
        rho_target,
        Selection::MarginalBenefit,
        true,
    )
}

/// Single-move score greedy: each iteration applies whichever affordable
/// move — create a cheapest-single-charger station at a station-free node,
/// or add one charger of any type to a non-full station — maximizes the
/// score delta, stopping when no move strictly improves the score.
pub fn score_greedy(
    initial: &ChargingPlan,
    budget_eur: f64,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> ChargingPlan {
    let mut plan = initial.clone();
    let mut spent = 0.0;
    let cheapest = catalog.cheapest_type();
    let current = score(&plan, network, catalog, params);
    let mut current = match current {
        Ok(s) => s,
        Err(_) => return plan, // unscorable initial plan: nothing to improve
    };
    loop {
        let remaining = budget_eur - spent;
        let mut best: Option<(f64, f64, ChargingPlan)> = None; // (delta, fee, plan)
        let consider = |fee: f64, trial: ChargingPlan, best: &mut Option<(f64, f64, ChargingPlan)>| {
            if fee > remaining {
                return;
            }
            let Ok(s) = score(&trial, network, catalog, params) else {
                return; // unstable move
            };
            let delta = s - current;
            if delta > 0.0 && best.as_ref().is_none_or(|(b, _, _)| delta > *b) {
                *best = Some((delta, fee, trial));
            }
        };
        for node in network.nodes().iter().map(|n| n.id) {
            if plan.contains(node) {
                continue;
            }
            let station = ChargingStation::single(node, cheapest, catalog.type_count());
            let fee = network.require(node).estate_cost + catalog.cost_eur[cheapest];
            let mut trial = plan.clone();
            trial.insert(station).expect("single charger");
            consider(fee, trial, &mut best);
        }
        let station_ids: Vec<NodeId> = plan.node_ids().collect();
        for id in station_ids {
            if plan.station(id).unwrap().total_chargers() >= params.max_chargers {
                continue;
            }
            for charger_type in 0..catalog.type_count() {
                let mut trial = plan.clone();
                trial.station_mut(id).unwrap().add_charger(charger_type);
                consider(catalog.cost_eur[charger_type], trial, &mut best);
            }
        }
        let Some((delta, fee, next)) = best else {
            break;
        };
        plan = next;
        spent += fee;
        current += delta;
    }
    plan
}

/// Convenience wrapper asserting the output of any baseline is feasible.
pub fn is_feasible_output(
    plan: &ChargingPlan,
    initial: &ChargingPlan,
    budget_eur: f64,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> bool {
    let spent = crate::utility::plan_fee_eur(plan, network, catalog)
        - crate::utility::plan_fee_eur(initial, network, catalog);
    let mut params = params.clone();
    params.budget_eur = budget_eur;
    check_constraints(plan, network, catalog, &params, spent).is_feasible()
}

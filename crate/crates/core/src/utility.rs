//! The utility model of a charging plan: capacity, influential radius,
//! coverage, benefit, nearest-station assignment, travel/charging/waiting
//! costs, score, installation fees and constraint checking.
//!
//! Every operation is a pure function of immutable inputs and safe to call
//! from parallel workers. All functions require that the plan only
//! references nodes of the given network; loaders and the environment
//! enforce this, and [`check_constraints`] reports violations gracefully.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netdata::{haversine_m, NodeId, RoadNetwork};

/// Tolerance in meters under which two station distances count as equal
/// during assignment; ties go to the smaller station node id.
const ASSIGN_TIE_EPS_M: f64 = 1e-9;

/// The charger types available for installation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerCatalog {
    /// Charging power per type, kW.
    pub power_kw: Vec<f64>,
    /// Installation cost per type, EUR.
    pub cost_eur: Vec<f64>,
}

impl ChargerCatalog {
    pub fn new(power_kw: Vec<f64>, cost_eur: Vec<f64>) -> Result<Self> {
        let catalog = Self { power_kw, cost_eur };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<()> {
        if self.power_kw.is_empty() {
            return Err(Error::InvalidParams("catalog needs at least one charger type".into()));
        }
        if self.power_kw.len() != self.cost_eur.len() {
            return Err(Error::InvalidParams(
                "catalog power and cost vectors differ in length".into(),
            ));
        }
        if self.power_kw.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParams("charger powers must be positive".into()));
        }
        if self.cost_eur.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParams("charger costs must be positive".into()));
        }
        Ok(())
    }

    /// Number of charger types (m).
    pub fn type_count(&self) -> usize {
        self.power_kw.len()
    }

    pub fn max_power_kw(&self) -> f64 {
        self.power_kw.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the cheapest type; ties go to the lower index.
    pub fn cheapest_type(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.cost_eur.iter().enumerate() {
            if c < self.cost_eur[best] {
                best = i;
            }
        }
        best
    }

    /// Type with the best power-per-cost ratio among those costing at most
    /// `budget_eur`; ties go to the lower index.
    pub fn best_ratio_type_within(&self, budget_eur: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.type_count() {
            if self.cost_eur[i] > budget_eur {
                continue;
            }
            let ratio = self.power_kw[i] / self.cost_eur[i];
            if best.is_none_or(|(_, b)| ratio > b) {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }
}

impl Default for ChargerCatalog {
    /// The 7/22/50 kW types at 300/750/28000 EUR.
    fn default() -> Self {
        Self { power_kw: vec![7.0, 22.0, 50.0], cost_eur: vec![300.0, 750.0, 28_000.0] }
    }
}

/// A station: a node plus the number of installed chargers per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingStation {
    pub node_id: NodeId,
    chargers: Vec<u32>,
}

impl ChargingStation {
    pub fn new(node_id: NodeId, chargers: Vec<u32>) -> Self {
        Self { node_id, chargers }
    }

    /// A station holding a single charger of type `charger_type`.
    pub fn single(node_id: NodeId, charger_type: usize, type_count: usize) -> Self {
        let mut chargers = vec![0; type_count];
        chargers[charger_type] = 1;
        Self { node_id, chargers }
    }

    pub fn chargers(&self) -> &[u32] {
        &self.chargers
    }

    pub fn total_chargers(&self) -> u32 {
        self.chargers.iter().sum()
    }

    pub fn add_charger(&mut self, charger_type: usize) {
        self.chargers[charger_type] += 1;
    }

    /// Removes one charger of the given type; returns false if none is
    /// installed.
    pub fn remove_charger(&mut self, charger_type: usize) -> bool {
        if self.chargers[charger_type] == 0 {
            return false;
        }
        self.chargers[charger_type] -= 1;
        true
    }

    /// Installed type with the lowest power among those present; ties go to
    /// the lower index.
    pub fn min_power_type(&self, catalog: &ChargerCatalog) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &count) in self.chargers.iter().enumerate() {
            if count == 0 {
                continue;
            }
            if best.is_none_or(|b| catalog.power_kw[i] < catalog.power_kw[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// A set of stations, at most one per node. Iteration is in ascending
/// node-id order, which fixes tie-breaking and output determinism.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChargingPlan {
    stations: BTreeMap<NodeId, ChargingStation>,
}

impl ChargingPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the station at its node. Stations in a plan must
    /// hold at least one charger.
    pub fn insert(&mut self, station: ChargingStation) -> Result<()> {
        if station.total_chargers() == 0 {
            return Err(Error::EmptyStation { node: station.node_id });
        }
        self.stations.insert(station.node_id, station);
        Ok(())
    }

    pub fn remove(&mut self, id: NodeId) -> Option<ChargingStation> {
        self.stations.remove(&id)
    }

    pub fn station(&self, id: NodeId) -> Option<&ChargingStation> {
        self.stations.get(&id)
    }

    pub(crate) fn station_mut(&mut self, id: NodeId) -> Option<&mut ChargingStation> {
        self.stations.get_mut(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.stations.contains_key(&id)
    }

    pub fn stations(&self) -> impl Iterator<Item = &ChargingStation> {
        self.stations.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.stations.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn total_chargers(&self) -> u64 {
        self.stations.values().map(|s| s.total_chargers() as u64).sum()
    }
}

/// All scalar knobs of the utility model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtilityParams {
    /// Benefit-vs-cost weight in the score.
    pub lambda: f64,
    /// Travel-vs-(charging+waiting) weight in the cost.
    pub alpha: f64,
    /// Home-charging discount weight.
    pub omega: f64,
    /// Maximal influential radius, meters.
    pub r_max_m: f64,
    /// Energy required for one full charge, kWh.
    pub energy_kwh: f64,
    /// Average in-town velocity, km/h.
    pub velocity_kmh: f64,
    /// Maximum number of chargers per station (K).
    pub max_chargers: u32,
    /// Construction budget, EUR (B).
    pub budget_eur: f64,
    /// Capacity divisor producing the dimensionless sigmoid argument, kW.
    pub capacity_scale_kw: f64,
    /// Lower clamp on station-to-node distances in the arrival rate, km.
    pub dist_floor_km: f64,
    /// Multiplier turning the distance-weighted demand sum into a per-hour
    /// arrival rate.
    pub arrival_scale: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            alpha: 0.4,
            omega: 0.1,
            r_max_m: 1_000.0,
            energy_kwh: 85.0,
            velocity_kmh: 30.0,
            max_chargers: 8,
            budget_eur: 5_000_000.0,
            capacity_scale_kw: 50.0,
            dist_floor_km: 0.01,
            arrival_scale: 1.0,
        }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, name: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit(self.lambda, "lambda")?;
        unit(self.alpha, "alpha")?;
        unit(self.omega, "omega")?;
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.r_max_m, "r_max_m")?;
        positive(self.energy_kwh, "energy_kwh")?;
        positive(self.velocity_kmh, "velocity_kmh")?;
        positive(self.budget_eur, "budget_eur")?;
        positive(self.capacity_scale_kw, "capacity_scale_kw")?;
        positive(self.dist_floor_km, "dist_floor_km")?;
        positive(self.arrival_scale, "arrival_scale")?;
        if self.max_chargers == 0 {
            return Err(Error::InvalidParams("max_chargers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which station serves each node: the nearest one by haversine distance,
/// ties broken by the smaller station node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    station_of: BTreeMap<NodeId, NodeId>,
}

impl Assignment {
    pub fn station_for(&self, node: NodeId) -> Option<NodeId> {
        self.station_of.get(&node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.station_of.iter().map(|(&v, &s)| (v, s))
    }
}

/// Queueing quantities of one station under a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    /// Vehicles approaching the station per hour (D).
    pub arrival_rate: f64,
    /// Charges served per hour (mu).
    pub service_rate: f64,
    /// arrival_rate / service_rate (rho); must stay below 1.
    pub utilization: f64,
}

impl QueueParams {
    /// Expected wait per vehicle in hours, `rho / (2 mu (1 - rho))`.
    /// `None` when the queue is unstable (rho >= 1).
    pub fn expected_wait_h(&self) -> Option<f64> {
        if self.utilization < 1.0 {
            Some(self.utilization / (2.0 * self.service_rate * (1.0 - self.utilization)))
        } else {
            None
        }
    }
}

/// Installed capacity of a station in kW: the power of its chargers summed.
pub fn capacity_kw(station: &ChargingStation, catalog: &ChargerCatalog) -> f64 {
    station
        .chargers()
        .iter()
        .zip(&catalog.power_kw)
        .map(|(&count, &power)| count as f64 * power)
        .sum()
}

/// Influential radius in meters: `r_max * sigmoid(C / capacity_scale)`.
/// Strictly increasing in capacity; 0.5 * r_max at zero capacity.
pub fn influential_radius_m(
    station: &ChargingStation,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> f64 {
    let scaled = capacity_kw(station, catalog) / params.capacity_scale_kw;
    params.r_max_m / (1.0 + (-scaled).exp())
}

/// Number of stations whose influential radius reaches the node.
pub fn coverage(
    node: NodeId,
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> usize {
    let at = network.coords(node);
    plan.stations()
        .filter(|s| {
            let d = haversine_m(at, network.coords(s.node_id));
            d <= influential_radius_m(s, catalog, params)
        })
        .count()
}

/// Node demand discounted by home charging: `dem(v) * (1 - omega * home(v))`.
pub fn weakened_demand(node: NodeId, network: &RoadNetwork, params: &UtilityParams) -> f64 {
    let n = network.require(node);
    n.demand * (1.0 - params.omega * n.home_share)
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Plan benefit: the mean over nodes of the harmonic coverage value,
/// discounted by home-charging availability.
pub fn benefit(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> f64 {
    if plan.is_empty() {
        return 0.0;
    }
    let total: f64 = network
        .nodes()
        .iter()
        .map(|n| {
            let cov = coverage(n.id, plan, network, catalog, params);
            harmonic(cov) * (1.0 - params.omega * n.home_share)
        })
        .sum();
    total / network.node_count() as f64
}

/// Nearest-station assignment over an explicit set of station sites.
/// Sites are visited in ascending id order so that distance ties always
/// resolve to the smaller station node id.
pub(crate) fn assign_to_sites(network: &RoadNetwork, sites: &[NodeId]) -> Result<Assignment> {
    if sites.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let mut sites = sites.to_vec();
    sites.sort_unstable();
    let coords: Vec<(NodeId, (f64, f64))> =
        sites.iter().map(|&s| (s, network.coords(s))).collect();
    let mut station_of = BTreeMap::new();
    for node in network.nodes() {
        let mut best: Option<(NodeId, f64)> = None;
        for &(site, at) in &coords {
            let d = haversine_m((node.lat, node.lon), at);
            match best {
                None => best = Some((site, d)),
                Some((_, bd)) if d < bd - ASSIGN_TIE_EPS_M => best = Some((site, d)),
                _ => {}
            }
        }
        station_of.insert(node.id, best.unwrap().0);
    }
    Ok(Assignment { station_of })
}

/// Maps every node to its serving station. Errors on an empty plan, for
/// which the assignment is undefined.
pub fn assign_stations(plan: &ChargingPlan, network: &RoadNetwork) -> Result<Assignment> {
    let sites: Vec<NodeId> = plan.node_ids().collect();
    assign_to_sites(network, &sites)
}

fn dist_km(network: &RoadNetwork, a: NodeId, b: NodeId) -> f64 {
    haversine_m(network.coords(a), network.coords(b)) / 1_000.0
}

pub(crate) fn travel_time_assigned(
    assignment: &Assignment,
    network: &RoadNetwork,
    params: &UtilityParams,
) -> f64 {
    network
        .nodes()
        .iter()
        .map(|n| {
            let station = assignment.station_for(n.id).expect("assignment covers all nodes");
            dist_km(network, station, n.id) / params.velocity_kmh
                * weakened_demand(n.id, network, params)
        })
        .sum()
}

/// Demand-weighted time to reach the assigned stations, in hours.
pub fn travel_time_h(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    params: &UtilityParams,
) -> Result<f64> {
    let assignment = assign_stations(plan, network)?;
    Ok(travel_time_assigned(&assignment, network, params))
}

pub(crate) fn queue_params_assigned(
    station: &ChargingStation,
    assignment: &Assignment,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<QueueParams> {
    let capacity = capacity_kw(station, catalog);
    if capacity <= 0.0 {
        return Err(Error::ZeroCapacity { node: station.node_id });
    }
    let arrival_rate = params.arrival_scale
        * assignment
            .iter()
            .filter(|&(_, s)| s == station.node_id)
            .map(|(v, _)| {
                let d = dist_km(network, station.node_id, v).max(params.dist_floor_km);
                weakened_demand(v, network, params) / d
            })
            .sum::<f64>();
    let service_rate = capacity / params.energy_kwh;
    Ok(QueueParams { arrival_rate, service_rate, utilization: arrival_rate / service_rate })
}

/// Arrival rate, service rate and utilization of one station of the plan.
pub fn queue_params(
    station_id: NodeId,
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<QueueParams> {
    let station = plan.station(station_id).ok_or(Error::StationNotInPlan { node: station_id })?;
    let assignment = assign_stations(plan, network)?;
    queue_params_assigned(station, &assignment, network, catalog, params)
}

pub(crate) fn station_queues(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<Vec<(NodeId, QueueParams)>> {
    if plan.is_empty() {
        return Ok(Vec::new());
    }
    let assignment = assign_stations(plan, network)?;
    plan.stations()
        .map(|s| {
            queue_params_assigned(s, &assignment, network, catalog, params)
                .map(|q| (s.node_id, q))
        })
        .collect()
}

/// Total charging time in hours: the sum of station utilizations.
pub fn charging_time_h(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<f64> {
    Ok(station_queues(plan, network, catalog, params)?
        .iter()
        .map(|(_, q)| q.utilization)
        .sum())
}

/// Total expected waiting time in hours, summing `W(s) * D(s)` over
/// stations. Errors on the first unstable station.
pub fn waiting_time_h(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<f64> {
    let mut total = 0.0;
    for (node, q) in station_queues(plan, network, catalog, params)? {
        let wait = q
            .expected_wait_h()
            .ok_or(Error::Unstable { node, utilization: q.utilization })?;
        total += wait * q.arrival_rate;
    }
    Ok(total)
}

/// The convex combination of the three time components.
pub(crate) fn cost_from_parts(
    travel_h: f64,
    charging_h: f64,
    waiting_h: f64,
    alpha: f64,
) -> f64 {
    alpha * travel_h + (1.0 - alpha) * (charging_h + waiting_h)
}

/// Plan cost in hours. The empty plan costs 0 by convention so that the
/// empty score is 0.
pub fn cost(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<f64> {
    if plan.is_empty() {
        return Ok(0.0);
    }
    let assignment = assign_stations(plan, network)?;
    let travel = travel_time_assigned(&assignment, network, params);
    let mut charging = 0.0;
    let mut waiting = 0.0;
    for station in plan.stations() {
        let q = queue_params_assigned(station, &assignment, network, catalog, params)?;
        charging += q.utilization;
        let wait = q
            .expected_wait_h()
            .ok_or(Error::Unstable { node: station.node_id, utilization: q.utilization })?;
        waiting += wait * q.arrival_rate;
    }
    Ok(cost_from_parts(travel, charging, waiting, params.alpha))
}

/// Plan score: `lambda * benefit - (1 - lambda) * cost`. Zero for the
/// empty plan.
pub fn score(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<f64> {
    let b = benefit(plan, network, catalog, params);
    let c = cost(plan, network, catalog, params)?;
    Ok(params.lambda * b - (1.0 - params.lambda) * c)
}

/// Installation fee of one station: node estate cost plus charger hardware.
pub fn fee_eur(
    station: &ChargingStation,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
) -> f64 {
    let estate = network.require(station.node_id).estate_cost;
    let hardware: f64 = station
        .chargers()
        .iter()
        .zip(&catalog.cost_eur)
        .map(|(&count, &cost)| count as f64 * cost)
        .sum();
    estate + hardware
}

/// Sum of station fees over the plan.
pub fn plan_fee_eur(plan: &ChargingPlan, network: &RoadNetwork, catalog: &ChargerCatalog) -> f64 {
    plan.stations().map(|s| fee_eur(s, network, catalog)).sum()
}

/// Which constraint family a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Budget,
    ChargerBound,
    Stability,
    UnknownNode,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Constraint::Budget => "budget",
            Constraint::ChargerBound => "charger_bound",
            Constraint::Stability => "stability",
            Constraint::UnknownNode => "unknown_node",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    /// The offending station node, if the violation is station-local.
    pub node: Option<NodeId>,
    /// The offending value (spent EUR, charger count or utilization).
    pub value: f64,
}

/// Outcome of evaluating the budget, charger-bound and stability
/// constraints on a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub within_budget: bool,
    pub charger_bounds_ok: bool,
    pub stable: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.within_budget && self.charger_bounds_ok && self.stable && self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.is_feasible() {
            return "feasible".into();
        }
        self.violations
            .iter()
            .map(|v| match v.node {
                Some(node) => format!("{} violated at node {} (value {})", v.constraint, node, v.value),
                None => format!("{} violated (value {})", v.constraint, v.value),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Evaluates all three constraint families. `budget_spent_eur` is checked
/// against the budget; pass the plan fee for standalone plans or the
/// tracked construction spend for episodes, where existing infrastructure
/// is sunk cost.
pub fn check_constraints(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
    budget_spent_eur: f64,
) -> FeasibilityReport {
    let mut violations = Vec::new();
    let within_budget = budget_spent_eur <= params.budget_eur;
    if !within_budget {
        violations.push(Violation {
            constraint: Constraint::Budget,
            node: None,
            value: budget_spent_eur,
        });
    }
    let mut charger_bounds_ok = true;
    let mut nodes_known = true;
    for station in plan.stations() {
        if !network.contains(station.node_id) {
            nodes_known = false;
            violations.push(Violation {
                constraint: Constraint::UnknownNode,
                node: Some(station.node_id),
                value: 0.0,
            });
        }
        let total = station.total_chargers();
        if total > params.max_chargers {
            charger_bounds_ok = false;
            violations.push(Violation {
                constraint: Constraint::ChargerBound,
                node: Some(station.node_id),
                value: total as f64,
            });
        }
    }
    let mut stable = true;
    if nodes_known {
        match station_queues(plan, network, catalog, params) {
            Ok(queues) => {
                for (node, q) in queues {
                    if q.utilization >= 1.0 {
                        stable = false;
                        violations.push(Violation {
                            constraint: Constraint::Stability,
                            node: Some(node),
                            value: q.utilization,
                        });
                    }
                }
            }
            Err(_) => {
                // zero-capacity station: no finite service rate
                stable = false;
                violations.push(Violation {
                    constraint: Constraint::Stability,
                    node: None,
                    value: f64::INFINITY,
                });
            }
        }
    } else {
        stable = false;
    }
    FeasibilityReport { within_budget, charger_bounds_ok, stable, violations }
}

/// True when every station of the plan is strictly stable.
pub(crate) fn plan_stable(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> bool {
    match station_queues(plan, network, catalog, params) {
        Ok(queues) => queues.iter().all(|(_, q)| q.utilization < 1.0),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netdata::{generate_synthetic, DemandProfile, Node};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn node(id: u32, lat: f64, lon: f64, demand: f64, home: f64, estate: f64) -> Node {
        Node { id: NodeId(id), lat, lon, demand, home_share: home, estate_cost: estate }
    }

    /// Nodes along a meridian, `spacing_m` apart.
    fn line_net(specs: &[(f64, f64, f64)]) -> RoadNetwork {
        let deg = |m: f64| m / (crate::netdata::EARTH_RADIUS_M * std::f64::consts::PI / 180.0);
        let nodes = specs
            .iter()
            .enumerate()
            .map(|(i, &(offset_m, demand, home))| {
                node(i as u32, deg(offset_m), 0.0, demand, home, 1_000.0)
            })
            .collect();
        RoadNetwork::new(nodes, vec![]).unwrap()
    }

    fn station(id: u32, chargers: &[u32]) -> ChargingStation {
        ChargingStation::new(NodeId(id), chargers.to_vec())
    }

    fn plan_of(stations: &[ChargingStation]) -> ChargingPlan {
        let mut plan = ChargingPlan::new();
        for s in stations {
            plan.insert(s.clone()).unwrap();
        }
        plan
    }

    #[test]
    fn capacity_sums_power() {
        let catalog = ChargerCatalog::default();
        assert_eq!(capacity_kw(&station(0, &[1, 1, 1]), &catalog), 79.0);
        assert_eq!(capacity_kw(&station(0, &[0, 0, 0]), &catalog), 0.0);
        assert_eq!(capacity_kw(&station(0, &[8, 0, 0]), &catalog), 56.0);
    }

    #[test]
    fn radius_tracks_capacity() {
        let catalog = ChargerCatalog::default();
        let params = UtilityParams::default();
        let empty = station(0, &[0, 0, 0]);
        assert_eq!(influential_radius_m(&empty, &catalog, &params), 500.0);
        // capacity == capacity_scale: r = r_max * sigmoid(1)
        let one_dc = station(0, &[0, 0, 1]);
        assert_relative_eq!(
            influential_radius_m(&one_dc, &catalog, &params),
            731.0585786300049,
            max_relative = 1e-12
        );
        // saturates toward r_max
        let big = station(0, &[0, 0, 1_000]);
        assert!(influential_radius_m(&big, &catalog, &params) > 999.999);
        let r0 = influential_radius_m(&station(0, &[1, 0, 0]), &catalog, &params);
        let r1 = influential_radius_m(&station(0, &[2, 0, 0]), &catalog, &params);
        assert!(r1 > r0);
    }

    #[test]
    fn coverage_respects_radius() {
        let catalog = ChargerCatalog::default();
        let params = UtilityParams::default();
        // one 7 kW charger: r = 1000 * sigmoid(0.14)
        let r = influential_radius_m(&station(0, &[1, 0, 0]), &catalog, &params);
        let net = line_net(&[(0.0, 0.5, 0.0), (r - 100.0, 0.5, 0.0), (r + 100.0, 0.5, 0.0)]);
        let plan = plan_of(&[station(0, &[1, 0, 0])]);
        let empty = ChargingPlan::new();
        assert_eq!(coverage(NodeId(1), &empty, &net, &catalog, &params), 0);
        assert_eq!(coverage(NodeId(1), &plan, &net, &catalog, &params), 1);
        assert_eq!(coverage(NodeId(2), &plan, &net, &catalog, &params), 0);
        // the hosting node covers itself (distance 0)
        assert_eq!(coverage(NodeId(0), &plan, &net, &catalog, &params), 1);
    }

    #[test]
    fn weakened_demand_discounts_home() {
        let net = line_net(&[(0.0, 0.8, 1.0)]);
        let mut params = UtilityParams::default();
        assert_relative_eq!(weakened_demand(NodeId(0), &net, &params), 0.72);
        params.omega = 0.0;
        assert_eq!(weakened_demand(NodeId(0), &net, &params), 0.8);
        let zero = line_net(&[(0.0, 0.0, 1.0)]);
        assert_eq!(weakened_demand(NodeId(0), &zero, &UtilityParams::default()), 0.0);
    }

    #[test]
    fn benefit_examples() {
        let catalog = ChargerCatalog::default();
        let params = UtilityParams::default();
        let net = line_net(&[(0.0, 0.5, 0.0), (100.0, 0.5, 0.0)]);
        assert_eq!(benefit(&ChargingPlan::new(), &net, &catalog, &params), 0.0);
        // one station covering both nodes: cov = 1 each, home = 0 -> 1.0
        let plan = plan_of(&[station(0, &[1, 0, 0])]);
        assert_relative_eq!(benefit(&plan, &net, &catalog, &params), 1.0);
        assert_eq!(harmonic(2), 1.5);
        // every node at cov = 2 and home = 1: H(2) * (1 - 0.1) = 1.35
        let pair = line_net(&[(0.0, 0.5, 1.0), (50.0, 0.5, 1.0)]);
        let both = plan_of(&[station(0, &[1, 0, 0]), station(1, &[1, 0, 0])]);
        assert_relative_eq!(benefit(&both, &pair, &catalog, &params), 1.35);
    }

    #[test]
    fn assignment_nearest_with_tie_break() {
        // node 1 exactly between stations at nodes 0 and 2 -> smaller id wins
        let net = line_net(&[(0.0, 0.5, 0.0), (500.0, 0.5, 0.0), (1_000.0, 0.5, 0.0)]);
        let plan = plan_of(&[station(0, &[1, 0, 0]), station(2, &[1, 0, 0])]);
        let assignment = assign_stations(&plan, &net).unwrap();
        assert_eq!(assignment.station_for(NodeId(1)), Some(NodeId(0)));
        assert_eq!(assignment.station_for(NodeId(2)), Some(NodeId(2)));
        // single station: everyone maps to it
        let single = plan_of(&[station(2, &[1, 0, 0])]);
        let a = assign_stations(&single, &net).unwrap();
        assert!(a.iter().all(|(_, s)| s == NodeId(2)));
        // strictly nearer second station wins
        let net2 = line_net(&[(0.0, 0.5, 0.0), (700.0, 0.5, 0.0), (1_000.0, 0.5, 0.0)]);
        let plan2 = plan_of(&[station(0, &[1, 0, 0]), station(2, &[1, 0, 0])]);
        let a2 = assign_stations(&plan2, &net2).unwrap();
        assert_eq!(a2.station_for(NodeId(1)), Some(NodeId(2)));
        assert!(matches!(
            assign_stations(&ChargingPlan::new(), &net).unwrap_err(),
            Error::EmptyPlan
        ));
    }

    #[test]
    fn travel_time_examples() {
        let params = UtilityParams::default();
        // every node hosts its own station -> 0
        let net = line_net(&[(0.0, 0.5, 0.0), (400.0, 0.5, 0.0)]);
        let plan = plan_of(&[station(0, &[1, 0, 0]), station(1, &[1, 0, 0])]);
        assert_eq!(travel_time_h(&plan, &net, &params).unwrap(), 0.0);
        // one node 1 km away with weakened demand 1 at 30 km/h -> 2 minutes
        let net = line_net(&[(0.0, 0.0, 0.0), (1_000.0, 1.0, 0.0)]);
        let plan = plan_of(&[station(0, &[1, 0, 0])]);
        let t = travel_time_h(&plan, &net, &params).unwrap();
        assert_relative_eq!(t, 1.0 / 30.0, max_relative = 1e-6);
        // doubling velocity halves travel time
        let mut fast = params.clone();
        fast.velocity_kmh *= 2.0;
        assert_relative_eq!(
            travel_time_h(&plan, &net, &fast).unwrap(),
            t / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn queue_params_examples() {
        // mu = 1/h via an 85 kW catalog at E = 85 kWh
        let catalog = ChargerCatalog::new(vec![85.0], vec![1_000.0]).unwrap();
        let params = UtilityParams::default();
        let net = line_net(&[(0.0, 0.0, 0.0), (1_000.0, 0.5, 0.0)]);
        let plan = plan_of(&[ChargingStation::new(NodeId(0), vec![1])]);
        let q = queue_params(NodeId(0), &plan, &net, &catalog, &params).unwrap();
        assert_relative_eq!(q.arrival_rate, 0.5, max_relative = 1e-6);
        assert_relative_eq!(q.service_rate, 1.0);
        assert_relative_eq!(q.utilization, 0.5, max_relative = 1e-6);
        // the host node distance is clamped to dist_floor
        let net2 = line_net(&[(0.0, 0.5, 0.0)]);
        let plan2 = plan_of(&[ChargingStation::new(NodeId(0), vec![1])]);
        let q2 = queue_params(NodeId(0), &plan2, &net2, &catalog, &params).unwrap();
        assert_relative_eq!(q2.arrival_rate, 0.5 / 0.01, max_relative = 1e-12);
        // zero capacity is rejected
        let bad = plan_of(&[ChargingStation::new(NodeId(0), vec![1])]);
        let mut broken = bad.clone();
        broken.station_mut(NodeId(0)).unwrap().chargers[0] = 0;
        assert!(matches!(
            queue_params(NodeId(0), &broken, &net2, &catalog, &params).unwrap_err(),
            Error::ZeroCapacity { .. }
        ));
    }

    #[test]
    fn waiting_and_charging_examples() {
        let catalog = ChargerCatalog::new(vec![85.0], vec![1_000.0]).unwrap();
        let params = UtilityParams::default();
        // rho = 0.5, mu = 1 -> W = 0.5 h, contribution W * D = 0.25 h
        let net = line_net(&[(0.0, 0.0, 0.0), (1_000.0, 0.5, 0.0)]);
        let plan = plan_of(&[ChargingStation::new(NodeId(0), vec![1])]);
        let q = queue_params(NodeId(0), &plan, &net, &catalog, &params).unwrap();
        assert_relative_eq!(
            q.expected_wait_h().unwrap(),
            0.5 / (2.0 * 1.0 * 0.5),
            max_relative = 1e-6
        );
        let w = waiting_time_h(&plan, &net, &catalog, &params).unwrap();
        assert_relative_eq!(w, 0.5 * 0.5, max_relative = 1e-6);
        assert_relative_eq!(
            charging_time_h(&plan, &net, &catalog, &params).unwrap(),
            0.5,
            max_relative = 1e-6
        );
        assert_eq!(charging_time_h(&ChargingPlan::new(), &net, &catalog, &params).unwrap(), 0.0);
        // near-divergence at rho = 0.999
        let q = QueueParams { arrival_rate: 0.999, service_rate: 1.0, utilization: 0.999 };
        assert!(q.expected_wait_h().unwrap() > 499.0);
        // light traffic limit
        let q = QueueParams { arrival_rate: 1e-9, service_rate: 1.0, utilization: 1e-9 };
        assert!(q.expected_wait_h().unwrap() < 1e-8);
        // instability errors name the station
        let net = line_net(&[(0.0, 1.0, 0.0)]);
        let err = waiting_time_h(&plan, &net, &catalog, &params).unwrap_err();
        assert!(matches!(err, Error::Unstable { node: NodeId(0), .. }));
    }

    #[test]
    fn cost_examples() {
        assert_relative_eq!(cost_from_parts(1.0, 1.0, 1.0, 0.4), 1.6);
        let catalog = ChargerCatalog::new(vec![85.0], vec![1_000.0]).unwrap();
        let mut params = UtilityParams::default();
        let net = line_net(&[(0.0, 0.0, 0.0), (1_000.0, 0.5, 0.0)]);
        let plan = plan_of(&[ChargingStation::new(NodeId(0), vec![1])]);
        // empty plan costs zero by convention
        assert_eq!(cost(&ChargingPlan::new(), &net, &catalog, &params).unwrap(), 0.0);
        // alpha = 1 reduces cost to the travel time
        params.alpha = 1.0;
        assert_relative_eq!(
            cost(&plan, &net, &catalog, &params).unwrap(),
            travel_time_h(&plan, &net, &params).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn score_examples() {
        let catalog = ChargerCatalog::new(vec![85.0], vec![1_000.0]).unwrap();
        let mut params = UtilityParams::default();
        let net = line_net(&[(0.0, 0.0, 0.0), (1_000.0, 0.5, 0.0)]);
        assert_eq!(score(&ChargingPlan::new(), &net, &catalog, &params).unwrap(), 0.0);
        let plan = plan_of(&[ChargingStation::new(NodeId(0), vec![1])]);
        // affine identity at lambda = 0.5
        let b = benefit(&plan, &net, &catalog, &params);
        let c = cost(&plan, &net, &catalog, &params).unwrap();
        let s = score(&plan, &net, &catalog, &params).unwrap();
        assert!((s - 0.5 * (b - c)).abs() < 1e-12);
        // lambda = 1 -> pure benefit
        params.lambda = 1.0;
        assert_relative_eq!(
            score(&plan, &net, &catalog, &params).unwrap(),
            benefit(&plan, &net, &catalog, &params),
            max_relative = 1e-15
        );
    }

    #[test]
    fn fee_examples() {
        let catalog = ChargerCatalog::default();
        let net = line_net(&[(0.0, 0.5, 0.0)]);
        assert_eq!(fee_eur(&station(0, &[2, 0, 0]), &net, &catalog), 1_600.0);
        assert_eq!(fee_eur(&station(0, &[0, 0, 0]), &net, &catalog), 1_000.0);
        assert_eq!(plan_fee_eur(&ChargingPlan::new(), &net, &catalog), 0.0);
    }

    #[test]
    fn constraint_report_examples() {
        let catalog = ChargerCatalog::default();
        let mut params = UtilityParams::default();
        params.arrival_scale = 0.0005; // keep the single station stable
        let net = line_net(&[(0.0, 0.01, 0.0), (400.0, 0.01, 0.0)]);
        let plan = plan_of(&[station(0, &[1, 0, 0])]);
        let over = check_constraints(&plan, &net, &catalog, &params, params.budget_eur + 1.0);
        assert!(!over.within_budget);
        assert_eq!(over.violations.len(), 1);
        let nine = plan_of(&[station(0, &[9, 0, 0])]);
        let report = check_constraints(&nine, &net, &catalog, &params, 0.0);
        assert!(!report.charger_bounds_ok);
        let ok = check_constraints(&plan, &net, &catalog, &params, 100.0);
        assert!(ok.is_feasible(), "{}", ok.summary());
    }

    #[test]
    fn plan_rejects_empty_station() {
        let mut plan = ChargingPlan::new();
        assert!(plan.insert(station(0, &[0, 0, 0])).is_err());
    }

    /// Independent M/D/1 sanity check of the waiting formula via the
    /// single-server FCFS recurrence with Poisson arrivals and
    /// deterministic service.
    #[test]
    fn waiting_formula_matches_md1_simulation() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Exp};
        let mu = 1.0;
        for (i, rho) in [0.3, 0.5, 0.8].into_iter().enumerate() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42 + i as u64);
            let exp = Exp::new(rho * mu).unwrap();
            let service = 1.0 / mu;
            let warmup = 100_000;
            let samples = 1_500_000;
            let mut wait = 0.0f64;
            let mut sum = 0.0;
            for n in 0..(warmup + samples) {
                let gap = exp.sample(&mut rng);
                wait = (wait + service - gap).max(0.0);
                if n >= warmup {
                    sum += wait;
                }
            }
            let simulated = sum / samples as f64;
            let q = QueueParams { arrival_rate: rho * mu, service_rate: mu, utilization: rho };
            let formula = q.expected_wait_h().unwrap();
            let rel = (simulated - formula).abs() / formula;
            assert!(rel < 0.05, "rho {rho}: sim {simulated} vs formula {formula} (rel {rel})");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Adding a charger anywhere never decreases benefit.
        #[test]
        fn benefit_monotone_under_charger_addition(
            seed in 0u64..1_000,
            station_picks in proptest::collection::vec(0usize..16, 1..4),
            add_at in 0usize..4,
            add_type in 0usize..3,
        ) {
            let net = generate_synthetic(4, 4, seed, DemandProfile::Uniform).unwrap();
            let catalog = ChargerCatalog::default();
            let params = UtilityParams::default();
            let mut plan = ChargingPlan::new();
            for &p in &station_picks {
                plan.insert(ChargingStation::single(NodeId(p as u32), 0, 3)).unwrap();
            }
            let before = benefit(&plan, &net, &catalog, &params);
            let ids: Vec<NodeId> = plan.node_ids().collect();
            let target = ids[add_at % ids.len()];
            let mut grown = plan.clone();
            grown.station_mut(target).unwrap().add_charger(add_type);
            let after = benefit(&grown, &net, &catalog, &params);
            prop_assert!(after >= before - 1e-12, "benefit fell from {before} to {after}");
        }

        /// Raising one home-free node's coverage from n to n+1 adds exactly
        /// 1/(n+1) * 1/|V|.
        #[test]
        fn benefit_marginal_gain_is_harmonic(extra in 1usize..5) {
            let catalog = ChargerCatalog::default();
            let params = UtilityParams::default();
            // `extra` stations already cover the probe node; a co-located
            // cluster keeps all coverages identical.
            let mut specs = vec![(0.0, 0.3, 0.0)];
            for i in 0..=extra {
                specs.push((10.0 + i as f64, 0.3, 0.0));
            }
            let net = line_net(&specs);
            let mut plan = ChargingPlan::new();
            for i in 0..extra {
                plan.insert(station(1 + i as u32, &[1, 0, 0])).unwrap();
            }
            let before = benefit(&plan, &net, &catalog, &params);
            let mut more = plan.clone();
            more.insert(station(1 + extra as u32, &[1, 0, 0])).unwrap();
            let after = benefit(&more, &net, &catalog, &params);
            // every node goes from cov = extra to cov = extra + 1, so the
            // total gain is |V| * (1/(extra+1) * 1/|V|) = 1/(extra+1)
            let expected = 1.0 / (extra as f64 + 1.0);
            prop_assert!(
                (after - before - expected).abs() < 1e-12,
                "gain {} vs expected {expected}",
                after - before
            );
        }

        /// omega = 0 makes benefit and weakened demand ignore home_share.
        #[test]
        fn omega_zero_ignores_home_share(seed in 0u64..1_000) {
            let net = generate_synthetic(3, 3, seed, DemandProfile::Uniform).unwrap();
            let zeroed = RoadNetwork::new(
                net.nodes().iter().map(|n| Node { home_share: 0.0, ..n.clone() }).collect(),
                net.edges().to_vec(),
            ).unwrap();
            let catalog = ChargerCatalog::default();
            let mut params = UtilityParams::default();
            params.omega = 0.0;
            let plan = plan_of(&[station(0, &[1, 0, 0]), station(8, &[0, 1, 0])]);
            prop_assert_eq!(
                benefit(&plan, &net, &catalog, &params),
                benefit(&plan, &zeroed, &catalog, &params)
            );
            for n in net.nodes() {
                prop_assert_eq!(
                    weakened_demand(n.id, &net, &params),
                    weakened_demand(n.id, &zeroed, &params)
                );
            }
        }

        /// score is the stated affine combination of benefit and cost.
        #[test]
        fn score_affine_in_benefit_and_cost(seed in 0u64..1_000) {
            let net = generate_synthetic(3, 3, seed, DemandProfile::Uniform).unwrap();
            let catalog = ChargerCatalog::default();
            let mut params = UtilityParams::default();
            params.arrival_scale = 0.001; // keep random plans stable
            let plan = plan_of(&[station(0, &[1, 1, 0]), station(7, &[2, 0, 0])]);
            let b = benefit(&plan, &net, &catalog, &params);
            let c = cost(&plan, &net, &catalog, &params).unwrap();
            let s = score(&plan, &net, &catalog, &params).unwrap();
            prop_assert!((s - 0.5 * (b - c)).abs() < 1e-12);
        }
    }
}

//! The episodic placement environment: observation encoding, the five
//! discrete actions, reward computation and the three termination rules.
//!
//! One environment instance is single-threaded; independent instances may
//! run in parallel for evaluation sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netdata::{NodeId, RoadNetwork};
use crate::planner::{build_lookup, required_capacity_kw, ConfigTable};
use crate::utility::{
    self, capacity_kw, check_constraints, coverage, score, weakened_demand, ChargerCatalog,
    ChargingPlan, ChargingStation, UtilityParams,
};

/// The five discrete placement moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    CreateByBenefit,
    CreateByDemand,
    IncreaseByBenefit,
    IncreaseByDemand,
    Relocate,
}

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; 5] = [
        Action::CreateByBenefit,
        Action::CreateByDemand,
        Action::IncreaseByBenefit,
        Action::IncreaseByDemand,
        Action::Relocate,
    ];

    pub fn code(self) -> u8 {
        match self {
            Action::CreateByBenefit => 0,
            Action::CreateByDemand => 1,
            Action::IncreaseByBenefit => 2,
            Action::IncreaseByDemand => 3,
            Action::Relocate => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.get(code as usize).copied()
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Action::CreateByBenefit => "create_by_benefit",
            Action::CreateByDemand => "create_by_demand",
            Action::IncreaseByBenefit => "increase_by_benefit",
            Action::IncreaseByDemand => "increase_by_demand",
            Action::Relocate => "relocate",
        };
        f.write_str(name)
    }
}

/// Node-selection key shared by the create and increase actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Strategy {
    /// Lowest coverage first.
    Benefit,
    /// Highest weakened demand first.
    Demand,
}

/// Flattened per-node feature blocks plus the remaining-budget fraction;
/// length `6 * |V| + 1`, all components in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Vec<f64>);

impl Observation {
    #[cfg(test)]
    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Mutable per-episode state.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub plan: ChargingPlan,
    /// Construction spend so far, EUR. Existing infrastructure is sunk
    /// cost and starts the episode at zero.
    pub spent_eur: f64,
    pub step_index: u32,
    pub i_max: u32,
    /// Score of the current plan, cached after every applied step.
    pub prev_score: f64,
    pub done: bool,
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The chosen action needed more budget than remained; not applied.
    BudgetExceeded,
    /// Every node holds a station with the maximum charger count.
    Saturated,
    /// The step budget `i_max` has been used up.
    MaxIterations,
}

/// Why a step left the plan unchanged without ending the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoopReason {
    /// No node or station was eligible for the action.
    NoEligibleTarget,
    /// Applying the action would have driven some station to rho >= 1.
    WouldDestabilize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub applied: bool,
    pub fee_eur: f64,
    pub termination: Option<Termination>,
    pub noop: Option<NoopReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

struct ObsNorm {
    lat_min: f64,
    lat_span: f64,
    lon_min: f64,
    lon_span: f64,
    estate_min: f64,
    estate_span: f64,
    capacity_denom: f64,
}

enum Move {
    Apply { plan: ChargingPlan, fee_eur: f64 },
    BudgetExceeded,
    Noop(NoopReason),
}

/// The placement environment over one road network.
pub struct Environment<'a> {
    network: &'a RoadNetwork,
    catalog: &'a ChargerCatalog,
    params: &'a UtilityParams,
    rho_target: f64,
    table: ConfigTable,
    initial: ChargingPlan,
    norm: ObsNorm,
    state: EpisodeState,
}

impl<'a> Environment<'a> {
    /// Builds the environment and resets it to the initial plan, which must
    /// be empty or pass [`check_constraints`]. The configuration lookup
    /// table is built once here.
    pub fn new(
        network: &'a RoadNetwork,
        catalog: &'a ChargerCatalog,
        params: &'a UtilityParams,
        rho_target: f64,
        initial: ChargingPlan,
    ) -> Result<Self> {
        params.validate()?;
        catalog.validate()?;
        if !(rho_target > 0.0 && rho_target < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho_target must lie in (0, 1), got {rho_target}"
            )));
        }
        let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut estate_min, mut estate_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for n in network.nodes() {
            lat_min = lat_min.min(n.lat);
            lat_max = lat_max.max(n.lat);
            lon_min = lon_min.min(n.lon);
            lon_max = lon_max.max(n.lon);
            estate_min = estate_min.min(n.estate_cost);
            estate_max = estate_max.max(n.estate_cost);
        }
        let norm = ObsNorm {
            lat_min,
            lat_span: lat_max - lat_min,
            lon_min,
            lon_span: lon_max - lon_min,
            estate_min,
            estate_span: estate_max - estate_min,
            capacity_denom: params.max_chargers as f64 * catalog.max_power_kw(),
        };
        let table = build_lookup(catalog, params.max_chargers);
        let i_max = (network.node_count() as u32).div_ceil(2);
        let mut env = Self {
            network,
            catalog,
            params,
            rho_target,
            table,
            initial,
            norm,
            state: EpisodeState {
                plan: ChargingPlan::new(),
                spent_eur: 0.0,
                step_index: 0,
                i_max,
                prev_score: 0.0,
                done: false,
            },
        };
        env.reset()?;
        Ok(env)
    }

    pub fn network(&self) -> &RoadNetwork {
        self.network
    }

    pub fn catalog(&self) -> &ChargerCatalog {
        self.catalog
    }

    pub fn params(&self) -> &UtilityParams {
        self.params
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn i_max(&self) -> u32 {
        self.state.i_max
    }

    pub fn observation_len(&self) -> usize {
        6 * self.network.node_count() + 1
    }

    /// Restores the initial plan and returns the first observation.
    pub fn reset(&mut self) -> Result<Observation> {
        if !self.initial.is_empty() {
            let report =
                check_constraints(&self.initial, self.network, self.catalog, self.params, 0.0);
            if !report.is_feasible() {
                return Err(Error::InfeasibleInitialPlan { reason: report.summary() });
            }
        }
        let prev_score = score(&self.initial, self.network, self.catalog, self.params)?;
        self.state = EpisodeState {
            plan: self.initial.clone(),
            spent_eur: 0.0,
            step_index: 0,
            i_max: self.state.i_max,
            prev_score,
            done: false,
        };
        Ok(self.observation())
    }

    /// Encodes the current state: per node
    /// `[lat, lon, demand, home_share, estate, installed_capacity]`, each
    /// min-max normalized over the network, then the remaining-budget
    /// fraction.
    pub fn observation(&self) -> Observation {
        let norm = |v: f64, min: f64, span: f64| if span > 0.0 { (v - min) / span } else { 0.0 };
        let mut values = Vec::with_capacity(self.observation_len());
        for n in self.network.nodes() {
            values.push(norm(n.lat, self.norm.lat_min, self.norm.lat_span));
            values.push(norm(n.lon, self.norm.lon_min, self.norm.lon_span));
            values.push(n.demand);
            values.push(n.home_share);
            values.push(norm(n.estate_cost, self.norm.estate_min, self.norm.estate_span));
            let installed = self
                .state
                .plan
                .station(n.id)
                .map(|s| capacity_kw(s, self.catalog) / self.norm.capacity_denom)
                .unwrap_or(0.0);
            values.push(installed);
        }
        let remaining = (self.params.budget_eur - self.state.spent_eur) / self.params.budget_eur;
        values.push(remaining.clamp(0.0, 1.0));
        Observation(values)
    }

    /// Applies one action. The reward is the score delta; the episode ends
    /// on budget exhaustion, full saturation, or after `i_max` steps.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.state.done {
            return Err(Error::EpisodeDone);
        }
        let remaining = self.params.budget_eur - self.state.spent_eur;
        let resolved = match action {
            Action::CreateByBenefit => self.resolve_create(Strategy::Benefit, remaining),
            Action::CreateByDemand => self.resolve_create(Strategy::Demand, remaining),
            Action::IncreaseByBenefit => self.resolve_increase(Strategy::Benefit, remaining),
            Action::IncreaseByDemand => self.resolve_increase(Strategy::Demand, remaining),
            Action::Relocate => self.resolve_relocate()?,
        };
        self.state.step_index += 1;
        let mut info =
            StepInfo { applied: false, fee_eur: 0.0, termination: None, noop: None };
        let mut reward = 0.0;
        match resolved {
            Move::BudgetExceeded => {
                self.state.done = true;
                info.termination = Some(Termination::BudgetExceeded);
            }
            Move::Noop(reason) => {
                info.noop = Some(reason);
            }
            Move::Apply { plan, fee_eur } => {
                if utility::plan_stable(&plan, self.network, self.catalog, self.params) {
                    let new_score = score(&plan, self.network, self.catalog, self.params)?;
                    reward = new_score - self.state.prev_score;
                    self.state.plan = plan;
                    self.state.spent_eur += fee_eur;
                    self.state.prev_score = new_score;
                    info.applied = true;
                    info.fee_eur = fee_eur;
                } else {
                    info.noop = Some(NoopReason::WouldDestabilize);
                }
            }
        }
        if !self.state.done {
            if self.is_saturated() {
                self.state.done = true;
                info.termination = Some(Termination::Saturated);
            } else if self.state.step_index >= self.state.i_max {
                self.state.done = true;
                info.termination = Some(Termination::MaxIterations);
            }
        }
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.state.done,
            info,
        })
    }

    fn is_saturated(&self) -> bool {
        self.state.plan.len() == self.network.node_count()
            && self
                .state
                .plan
                .stations()
                .all(|s| s.total_chargers() >= self.params.max_chargers)
    }

    /// Strategy key; create scans station-free nodes, increase scans
    /// station nodes. Ties go to the lower node id.
    fn pick_node(&self, candidates: impl Iterator<Item = NodeId>, strategy: Strategy) -> Option<NodeId> {
        let mut best: Option<(NodeId, f64)> = None;
        for id in candidates {
            let key = match strategy {
                Strategy::Benefit => {
                    coverage(id, &self.state.plan, self.network, self.catalog, self.params) as f64
                }
                Strategy::Demand => weakened_demand(id, self.network, self.params),
            };
            let better = match (best, strategy) {
                (None, _) => true,
                (Some((_, b)), Strategy::Benefit) => key < b,
                (Some((_, b)), Strategy::Demand) => key > b,
            };
            if better {
                best = Some((id, key));
            }
        }
        best.map(|(id, _)| id)
    }

    fn resolve_create(&self, strategy: Strategy, remaining: f64) -> Move {
        let free =
            self.network.nodes().iter().map(|n| n.id).filter(|&id| !self.state.plan.contains(id));
        let Some(target) = self.pick_node(free, strategy) else {
            // every node already has a station: degrade to increase
            return self.resolve_increase(strategy, remaining);
        };
        let required =
            required_capacity_kw(target, &self.state.plan, self.network, self.params, self.rho_target);
        let choice = self.table.cheapest_config(required).expect("table is non-empty");
        let fee_eur = self.network.require(target).estate_cost + choice.cost_eur;
        if fee_eur > remaining {
            return Move::BudgetExceeded;
        }
        let mut plan = self.state.plan.clone();
        plan.insert(ChargingStation::new(target, choice.chargers))
            .expect("config holds at least one charger");
        Move::Apply { plan, fee_eur }
    }

    fn resolve_increase(&self, strategy: Strategy, remaining: f64) -> Move {
        let non_full = self
            .state
            .plan
            .stations()
            .filter(|s| s.total_chargers() < self.params.max_chargers)
            .map(|s| s.node_id);
        let Some(target) = self.pick_node(non_full, strategy) else {
            return Move::Noop(NoopReason::NoEligibleTarget);
        };
        let Some(charger_type) = self.catalog.best_ratio_type_within(remaining) else {
            return Move::BudgetExceeded;
        };
        let fee_eur = self.catalog.cost_eur[charger_type];
        let mut plan = self.state.plan.clone();
        plan.station_mut(target).unwrap().add_charger(charger_type);
        Move::Apply { plan, fee_eur }
    }

    fn resolve_relocate(&self) -> Result<Move> {
        if self.state.plan.len() < 2 {
            return Ok(Move::Noop(NoopReason::NoEligibleTarget));
        }
        // donor: the station contributing the least marginal benefit
        let full_benefit =
            utility::benefit(&self.state.plan, self.network, self.catalog, self.params);
        let mut donor: Option<(NodeId, f64)> = None;
        for station in self.state.plan.stations() {
            let mut without = self.state.plan.clone();
            without.remove(station.node_id);
            let marginal = full_benefit
                - utility::benefit(&without, self.network, self.catalog, self.params);
            if donor.is_none_or(|(_, b)| marginal < b) {
                donor = Some((station.node_id, marginal));
            }
        }
        let (donor_id, _) = donor.unwrap();
        // recipient: the non-full station with the highest waiting and
        // charging time, W(s) * D(s) + rho(s)
        let queues =
            utility::station_queues(&self.state.plan, self.network, self.catalog, self.params)?;
        let mut recipient: Option<(NodeId, f64)> = None;
        for (node, q) in queues {
            if node == donor_id {
                continue;
            }
            let station = self.state.plan.station(node).unwrap();
            if station.total_chargers() >= self.params.max_chargers {
                continue;
            }
            let Some(wait) = q.expected_wait_h() else { continue };
            let key = wait * q.arrival_rate + q.utilization;
            if recipient.is_none_or(|(_, b)| key > b) {
                recipient = Some((node, key));
            }
        }
        let Some((recipient_id, _)) = recipient else {
            return Ok(Move::Noop(NoopReason::NoEligibleTarget));
        };
        let donor_station = self.state.plan.station(donor_id).unwrap();
        let moved_type = donor_station
            .min_power_type(self.catalog)
            .expect("plan stations hold at least one charger");
        let mut plan = self.state.plan.clone();
        {
            let donor_station = plan.station_mut(donor_id).unwrap();
            donor_station.remove_charger(moved_type);
            if donor_station.total_chargers() == 0 {
                plan.remove(donor_id);
            }
        }
        plan.station_mut(recipient_id).unwrap().add_charger(moved_type);
        Ok(Move::Apply { plan, fee_eur: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netdata::{generate_synthetic, DemandProfile};
    use crate::utility::plan_fee_eur;

    fn desk_params() -> UtilityParams {
        UtilityParams {
            budget_eur: 20_000.0,
            arrival_scale: 0.005,
            ..UtilityParams::default()
        }
    }

    fn hotspot_net(seed: u64) -> RoadNetwork {
        generate_synthetic(4, 4, seed, DemandProfile::Hotspot).unwrap()
    }

    #[test]
    fn action_codes_roundtrip() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.code() as usize, i);
            assert_eq!(Action::from_code(a.code()), Some(*a));
        }
        assert_eq!(Action::from_code(5), None);
    }

    #[test]
    fn reset_sets_score_and_i_max() {
        let net = hotspot_net(1);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        assert_eq!(env.state().prev_score, 0.0);
        assert_eq!(env.i_max(), 8); // ceil(16 / 2)
        assert_eq!(env.observation_len(), 6 * 16 + 1);

        // i_max on an odd node count rounds up: 1947 nodes -> 974
        let big = generate_synthetic(3, 649, 0, DemandProfile::Uniform).unwrap();
        let env = Environment::new(&big, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        assert_eq!(env.i_max(), 974);
    }

    #[test]
    fn reset_with_existing_plan_scores_it() {
        let net = hotspot_net(1);
        let catalog = ChargerCatalog::default();
        let mut params = desk_params();
        params.arrival_scale = 0.001; // one station carries the whole grid
        let mut initial = ChargingPlan::new();
        initial.insert(ChargingStation::new(NodeId(5), vec![1, 1, 0])).unwrap();
        let env = Environment::new(&net, &catalog, &params, 0.9, initial.clone()).unwrap();
        let expected = score(&initial, &net, &catalog, &params).unwrap();
        assert_eq!(env.state().prev_score, expected);
    }

    #[test]
    fn reset_rejects_infeasible_initial_plan() {
        let net = hotspot_net(1);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut initial = ChargingPlan::new();
        initial.insert(ChargingStation::new(NodeId(0), vec![9, 0, 0])).unwrap();
        let err = match Environment::new(&net, &catalog, &params, 0.9, initial) {
            Ok(_) => panic!("expected an infeasible-plan error"),
            Err(e) => e,
        };
        assert!(matches!(err, Error::InfeasibleInitialPlan { .. }));
    }

    #[test]
    fn observation_components_stay_in_unit_interval() {
        let net = hotspot_net(3);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        env.step(Action::CreateByDemand).unwrap();
        let obs = env.observation();
        assert_eq!(obs.len(), env.observation_len());
        assert!(obs.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn create_by_benefit_picks_lowest_coverage_with_low_id_ties() {
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        // all coverages are 0 -> the tie goes to node 0
        let out = env.step(Action::CreateByBenefit).unwrap();
        assert!(out.info.applied);
        assert!(env.state().plan.contains(NodeId(0)));
    }

    #[test]
    fn create_by_demand_picks_peak_demand() {
        let net = hotspot_net(2);
        let peak = net
            .nodes()
            .iter()
            .max_by(|a, b| a.demand.partial_cmp(&b.demand).unwrap())
            .unwrap()
            .id;
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        // demand ties cannot occur on a hotspot profile (strict decay)
        let out = env.step(Action::CreateByDemand).unwrap();
        assert!(out.info.applied);
        assert!(env.state().plan.contains(peak), "expected a station at node {peak}");
    }

    #[test]
    fn increase_prefers_best_power_per_cost_within_budget() {
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        env.step(Action::CreateByDemand).unwrap();
        let station_id = env.state().plan.node_ids().next().unwrap();
        let before = env.state().plan.station(station_id).unwrap().chargers().to_vec();
        let out = env.step(Action::IncreaseByDemand).unwrap();
        assert!(out.info.applied);
        let after = env.state().plan.station(station_id).unwrap().chargers().to_vec();
        // 22 kW at 750 EUR has the best kW-per-EUR ratio
        assert_eq!(after[1], before[1] + 1);
        assert_eq!(out.info.fee_eur, 750.0);
    }

    #[test]
    fn increase_on_empty_plan_is_noop() {
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        let out = env.step(Action::IncreaseByBenefit).unwrap();
        assert!(!out.info.applied);
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.info.noop, Some(NoopReason::NoEligibleTarget));
        assert_eq!(env.state().step_index, 1); // no-ops count toward i_max
    }

    #[test]
    fn budget_exceeded_terminates_without_applying() {
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let mut params = desk_params();
        params.budget_eur = 100.0; // cheaper than any station
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        let out = env.step(Action::CreateByBenefit).unwrap();
        assert!(out.done);
        assert_eq!(out.reward, 0.0);
        assert!(env.state().plan.is_empty());
        assert_eq!(out.info.termination, Some(Termination::BudgetExceeded));
        assert!(matches!(env.step(Action::CreateByBenefit).unwrap_err(), Error::EpisodeDone));
    }

    #[test]
    fn episode_ends_at_i_max() {
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        let mut done = false;
        for _ in 0..env.i_max() {
            done = env.step(Action::Relocate).unwrap().done; // all no-ops
        }
        assert!(done);
        assert_eq!(env.state().step_index, env.i_max());
    }

    #[test]
    fn relocate_needs_two_stations_and_conserves_chargers() {
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        let out = env.step(Action::Relocate).unwrap();
        assert_eq!(out.info.noop, Some(NoopReason::NoEligibleTarget));
        env.step(Action::CreateByBenefit).unwrap();
        env.step(Action::CreateByDemand).unwrap();
        let before = env.state().plan.total_chargers();
        let out = env.step(Action::Relocate).unwrap();
        if out.info.applied {
            assert_eq!(env.state().plan.total_chargers(), before);
        }
    }

    #[test]
    fn rewards_telescope_and_spend_matches_fee() {
        let net = hotspot_net(5);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        let actions = [
            Action::CreateByBenefit,
            Action::CreateByDemand,
            Action::IncreaseByDemand,
            Action::Relocate,
            Action::CreateByBenefit,
            Action::IncreaseByBenefit,
        ];
        let mut cumulative = 0.0;
        for &a in &actions {
            let out = env.step(a).unwrap();
            // the cached score always equals a fresh recomputation
            let fresh = score(&env.state().plan, &net, &catalog, &params).unwrap();
            assert_eq!(env.state().prev_score, fresh);
            cumulative += out.reward;
            if out.done {
                break;
            }
        }
        let final_score = score(&env.state().plan, &net, &catalog, &params).unwrap();
        assert!((cumulative - final_score).abs() < 1e-12);
        // with an empty initial plan, spent equals the plan fee
        assert!(
            (env.state().spent_eur - plan_fee_eur(&env.state().plan, &net, &catalog)).abs() < 1e-9
        );
    }

    #[test]
    fn identical_action_sequences_give_identical_plans() {
        let net = hotspot_net(7);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let actions = [
            Action::CreateByDemand,
            Action::CreateByBenefit,
            Action::IncreaseByDemand,
            Action::Relocate,
            Action::CreateByBenefit,
        ];
        let run = || {
            let mut env =
                Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
            for &a in &actions {
                if env.state().done {
                    break;
                }
                env.step(a).unwrap();
            }
            env.state().plan.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn every_applied_step_keeps_plan_feasible() {
        let net = hotspot_net(11);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut env = Environment::new(&net, &catalog, &params, 0.9, ChargingPlan::new()).unwrap();
        // cycle deterministically through all actions
        let mut i = 0;
        loop {
            let action = Action::ALL[i % Action::ALL.len()];
            i += 1;
            let out = env.step(action).unwrap();
            let report = check_constraints(
                &env.state().plan,
                &net,
                &catalog,
                &params,
                env.state().spent_eur,
            );
            assert!(report.is_feasible(), "{}", report.summary());
            if out.done {
                break;
            }
        }
    }

    #[test]
    fn node_outside_plan_contract_is_reported() {
        // a plan referencing a foreign node fails feasibility instead of
        // panicking
        let net = hotspot_net(2);
        let catalog = ChargerCatalog::default();
        let params = desk_params();
        let mut foreign = ChargingPlan::new();
        foreign.insert(ChargingStation::new(NodeId(999), vec![1, 0, 0])).unwrap();
        let report = check_constraints(&foreign, &net, &catalog, &params, 0.0);
        assert!(!report.is_feasible());
        let err = match Environment::new(&net, &catalog, &params, 0.9, foreign) {
            Ok(_) => panic!("expected an infeasible-plan error"),
            Err(e) => e,
        };
        assert!(matches!(err, Error::InfeasibleInitialPlan { .. }));
    }
}

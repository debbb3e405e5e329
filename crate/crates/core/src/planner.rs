//! Charger-configuration machinery shared by the environment and the
//! baselines: the cheapest-configuration lookup table and required-capacity
//! estimation for candidate stations.

use crate::error::{Error, Result};
use crate::netdata::{NodeId, RoadNetwork};
use crate::utility::{assign_to_sites, weakened_demand, ChargerCatalog, ChargingPlan, UtilityParams};

/// One achievable capacity with its cheapest charger vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub capacity_kw: f64,
    pub chargers: Vec<u32>,
    pub cost_eur: f64,
}

/// Lookup table over all feasible charger configurations, sorted by
/// ascending capacity with only the cheapest vector kept per capacity.
/// Built once; immutable and freely shared afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigTable {
    entries: Vec<ConfigEntry>,
}

/// The configuration picked for a required capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigChoice {
    pub chargers: Vec<u32>,
    pub capacity_kw: f64,
    pub cost_eur: f64,
    /// Set when the requirement exceeded the maximum achievable capacity
    /// and the maximum entry was returned instead.
    pub saturated: bool,
}

/// Enumerates every charger vector with a total count in `[1, k_max]`,
/// deduplicated by capacity keeping the cheapest vector. Cost ties break
/// toward fewer total chargers, then the lexicographically smaller vector.
pub fn build_lookup(catalog: &ChargerCatalog, k_max: u32) -> ConfigTable {
    let m = catalog.type_count();
    let mut raw: Vec<ConfigEntry> = Vec::new();
    let mut counts = vec![0u32; m];
    loop {
        // odometer increment over the m-dimensional count vector
        let mut i = 0;
        loop {
            if i == m {
                let entries = dedup_by_capacity(raw);
                return ConfigTable { entries };
            }
            counts[i] += 1;
            if counts.iter().sum::<u32>() <= k_max {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
        // a successful increment always leaves at least one charger
        let capacity_kw: f64 = counts
            .iter()
            .zip(&catalog.power_kw)
            .map(|(&c, &p)| c as f64 * p)
            .sum();
        let cost_eur: f64 = counts
            .iter()
            .zip(&catalog.cost_eur)
            .map(|(&c, &p)| c as f64 * p)
            .sum();
        raw.push(ConfigEntry { capacity_kw, chargers: counts.clone(), cost_eur });
    }
}

fn dedup_by_capacity(mut raw: Vec<ConfigEntry>) -> Vec<ConfigEntry> {
    raw.sort_by(|a, b| {
        a.capacity_kw
            .total_cmp(&b.capacity_kw)
            .then(a.cost_eur.total_cmp(&b.cost_eur))
            .then_with(|| {
                let ta: u32 = a.chargers.iter().sum();
                let tb: u32 = b.chargers.iter().sum();
                ta.cmp(&tb)
            })
            .then_with(|| a.chargers.cmp(&b.chargers))
    });
    raw.dedup_by(|next, kept| next.capacity_kw == kept.capacity_kw);
    raw
}

impl ConfigTable {
    pub fn entries(&self) -> &[ConfigEntry] {
        &self.entries
    }

    pub fn max_capacity_kw(&self) -> f64 {
        self.entries.last().map(|e| e.capacity_kw).unwrap_or(0.0)
    }

    /// Minimum-cost entry among those with capacity >= `required_kw`; cost
    /// ties keep the smaller capacity. When the requirement exceeds the
    /// maximum achievable capacity, the maximum-capacity entry is returned
    /// with the saturation flag set.
    pub fn cheapest_config(&self, required_kw: f64) -> Result<ConfigChoice> {
        if self.entries.is_empty() {
            return Err(Error::EmptyConfigTable);
        }
        let mut best: Option<&ConfigEntry> = None;
        for entry in &self.entries {
            if entry.capacity_kw < required_kw {
                continue;
            }
            if best.is_none_or(|b| entry.cost_eur < b.cost_eur) {
                best = Some(entry);
            }
        }
        match best {
            Some(entry) => Ok(ConfigChoice {
                chargers: entry.chargers.clone(),
                capacity_kw: entry.capacity_kw,
                cost_eur: entry.cost_eur,
                saturated: false,
            }),
            None => {
                let entry = self.entries.last().unwrap();
                Ok(ConfigChoice {
                    chargers: entry.chargers.clone(),
                    capacity_kw: entry.capacity_kw,
                    cost_eur: entry.cost_eur,
                    saturated: true,
                })
            }
        }
    }
}

/// Capacity a station at `candidate` would need so that its utilization
/// comes out at `rho_target`, estimated by hypothetically inserting the
/// station, reassigning nodes, and converting its arrival rate via
/// `C = D * E / rho_target`. Returns 0 when no demand would arrive.
pub fn required_capacity_kw(
    candidate: NodeId,
    plan: &ChargingPlan,
    network: &RoadNetwork,
    params: &UtilityParams,
    rho_target: f64,
) -> f64 {
    let mut sites: Vec<NodeId> = plan.node_ids().collect();
    if !sites.contains(&candidate) {
        sites.push(candidate);
    }
    let assignment = assign_to_sites(network, &sites).expect("sites are non-empty");
    let candidate_coords = network.coords(candidate);
    let arrival: f64 = assignment
        .iter()
        .filter(|&(_, s)| s == candidate)
        .map(|(v, _)| {
            let d = (crate::netdata::haversine_m(candidate_coords, network.coords(v)) / 1_000.0)
                .max(params.dist_floor_km);
            weakened_demand(v, network, params) / d
        })
        .sum::<f64>()
        * params.arrival_scale;
    arrival * params.energy_kwh / rho_target
}

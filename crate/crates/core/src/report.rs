//! Metric computation, relative comparison tables and plan export.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netdata::{NodeId, RoadNetwork};
use crate::utility::{
    self, assign_stations, benefit, capacity_kw, fee_eur, plan_fee_eur, score, ChargerCatalog,
    ChargingPlan, UtilityParams,
};

/// The seven quality indicators of a plan, plus bookkeeping counts.
/// `travel_max_min` and `wait_max_min` are reported in minutes and are
/// `None` for the empty plan, where a zero would falsely signal perfection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub score: f64,
    pub benefit: f64,
    pub wait_h: f64,
    pub travel_h: f64,
    pub charging_h: f64,
    pub travel_max_min: Option<f64>,
    pub wait_max_min: Option<f64>,
    pub fee_spent_eur: f64,
    pub station_count: usize,
    pub charger_count: u64,
}

/// Computes every metric of a plan. Errors on an unstable station, naming
/// it.
pub fn evaluate_metrics(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    params: &UtilityParams,
) -> Result<PlanMetrics> {
    if plan.is_empty() {
        return Ok(PlanMetrics {
            score: 0.0,
            benefit: 0.0,
            wait_h: 0.0,
            travel_h: 0.0,
            charging_h: 0.0,
            travel_max_min: None,
            wait_max_min: None,
            fee_spent_eur: 0.0,
            station_count: 0,
            charger_count: 0,
        });
    }
    let assignment = assign_stations(plan, network)?;
    let travel_h = utility::travel_time_assigned(&assignment, network, params);
    let mut travel_max_h = 0.0f64;
    for node in network.nodes() {
        let station = assignment.station_for(node.id).expect("assignment covers all nodes");
        let d_km =
            crate::netdata::haversine_m(network.coords(station), (node.lat, node.lon)) / 1_000.0;
        travel_max_h = travel_max_h.max(d_km / params.velocity_kmh);
    }
    let mut wait_h = 0.0;
    let mut charging_h = 0.0;
    let mut wait_max_h = 0.0f64;
    for station in plan.stations() {
        let q = utility::queue_params_assigned(station, &assignment, network, catalog, params)?;
        let wait = q.expected_wait_h().ok_or(Error::Unstable {
            node: station.node_id,
            utilization: q.utilization,
        })?;
        wait_h += wait * q.arrival_rate;
        charging_h += q.utilization;
        wait_max_h = wait_max_h.max(wait);
    }
    Ok(PlanMetrics {
        score: score(plan, network, catalog, params)?,
        benefit: benefit(plan, network, catalog, params),
        wait_h,
        travel_h,
        charging_h,
        travel_max_min: Some(travel_max_h * 60.0),
        wait_max_min: Some(wait_max_h * 60.0),
        fee_spent_eur: plan_fee_eur(plan, network, catalog),
        station_count: plan.len(),
        charger_count: plan.total_chargers(),
    })
}

/// One rendered row of a relative comparison table. Ratio columns are
/// percentages of the reference model; `None` marks a column whose
/// reference value is zero (not applicable).
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeRow {
    pub name: String,
    pub score_pct: Option<f64>,
    pub benefit_pct: Option<f64>,
    pub wait_pct: Option<f64>,
    pub travel_pct: Option<f64>,
    pub charging_pct: Option<f64>,
    pub travel_max_min: Option<f64>,
    pub wait_max_min: Option<f64>,
}

/// Comparison of several models against a reference, with score, benefit,
/// wait, travel and charging as percentages of the reference and the two
/// maxima as absolute minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeTable {
    pub reference: String,
    pub rows: Vec<RelativeRow>,
}

/// Builds the relative table. The reference model must be present.
pub fn relative_table(models: &[(String, PlanMetrics)], reference: &str) -> Result<RelativeTable> {
    let reference_metrics = models
        .iter()
        .find(|(name, _)| name == reference)
        .map(|(_, m)| m.clone())
        .ok_or_else(|| Error::MissingReference(reference.to_string()))?;
    let pct = |value: f64, base: f64| -> Option<f64> {
        if base == 0.0 || !base.is_finite() {
            None
        } else {
            Some(value / base * 100.0)
        }
    };
    let rows = models
        .iter()
        .map(|(name, m)| RelativeRow {
            name: name.clone(),
            score_pct: pct(m.score, reference_metrics.score),
            benefit_pct: pct(m.benefit, reference_metrics.benefit),
            wait_pct: pct(m.wait_h, reference_metrics.wait_h),
            travel_pct: pct(m.travel_h, reference_metrics.travel_h),
            charging_pct: pct(m.charging_h, reference_metrics.charging_h),
            travel_max_min: m.travel_max_min,
            wait_max_min: m.wait_max_min,
        })
        .collect();
    Ok(RelativeTable { reference: reference.to_string(), rows })
}

fn cell(v: Option<f64>, precision: usize) -> String {
    match v {
        Some(v) => format!("{v:.precision$}"),
        None => "n/a".to_string(),
    }
}

impl RelativeTable {
    /// CSV rendering:
    /// `algorithm,score_pct,benefit_pct,wait_pct,travel_pct,charging_pct,travel_max_min,wait_max_min`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "algorithm,score_pct,benefit_pct,wait_pct,travel_pct,charging_pct,travel_max_min,wait_max_min\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.name,
                cell(r.score_pct, 1),
                cell(r.benefit_pct, 1),
                cell(r.wait_pct, 1),
                cell(r.travel_pct, 1),
                cell(r.charging_pct, 1),
                cell(r.travel_max_min, 2),
                cell(r.wait_max_min, 2),
            );
        }
        out
    }

    /// Fixed-width text rendering for terminals.
    pub fn to_text(&self) -> String {
        let headers = [
            "algorithm",
            "score%",
            "benefit%",
            "wait%",
            "travel%",
            "charging%",
            "travel_max[min]",
            "wait_max[min]",
        ];
        let mut cells: Vec<Vec<String>> = vec![headers.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            cells.push(vec![
                r.name.clone(),
                cell(r.score_pct, 1),
                cell(r.benefit_pct, 1),
                cell(r.wait_pct, 1),
                cell(r.travel_pct, 1),
                cell(r.charging_pct, 1),
                cell(r.travel_max_min, 2),
                cell(r.wait_max_min, 2),
            ]);
        }
        let widths: Vec<usize> = (0..headers.len())
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(text, w)| format!("{text:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct GeoJsonGeometry {
    #[serde(rename = "type")]
    kind: String,
    /// `[lon, lat]`
    coordinates: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct GeoJsonProperties {
    node_id: u32,
    chargers: Vec<u32>,
    capacity_kw: f64,
    fee_eur: f64,
}

#[derive(Serialize, Deserialize)]
struct GeoJsonFeature {
    #[serde(rename = "type")]
    kind: String,
    geometry: GeoJsonGeometry,
    properties: GeoJsonProperties,
}

#[derive(Serialize, Deserialize)]
struct GeoJsonFeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<GeoJsonFeature>,
}

/// Renders the plan as a GeoJSON FeatureCollection of station points with
/// `node_id`, `chargers`, `capacity_kw` and `fee_eur` properties.
pub fn plan_geojson(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
) -> String {
    let features = plan
        .stations()
        .map(|s| {
            let (lat, lon) = network.coords(s.node_id);
            GeoJsonFeature {
                kind: "Feature".into(),
                geometry: GeoJsonGeometry { kind: "Point".into(), coordinates: [lon, lat] },
                properties: GeoJsonProperties {
                    node_id: s.node_id.0,
                    chargers: s.chargers().to_vec(),
                    capacity_kw: capacity_kw(s, catalog),
                    fee_eur: fee_eur(s, network, catalog),
                },
            }
        })
        .collect();
    let collection =
        GeoJsonFeatureCollection { kind: "FeatureCollection".into(), features };
    serde_json::to_string_pretty(&collection).expect("geojson serialization cannot fail")
}

/// Writes [`plan_geojson`] to a file.
pub fn export_plan(
    plan: &ChargingPlan,
    network: &RoadNetwork,
    catalog: &ChargerCatalog,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, plan_geojson(plan, network, catalog))
        .map_err(|e| Error::Io { path: path.into(), source: e })
}

/// Parses station `(node_id, lon, lat)` triples back out of an exported
/// GeoJSON string.
pub fn parse_plan_geojson(text: &str) -> Result<Vec<(NodeId, f64, f64)>> {
    let collection: GeoJsonFeatureCollection =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad GeoJSON: {e}")))?;
    Ok(collection
        .features
        .iter()
        .map(|f| {
            (
                NodeId(f.properties.node_id),
                f.geometry.coordinates[0],
                f.geometry.coordinates[1],
            )
        })
        .collect())
}

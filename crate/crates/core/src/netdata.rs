//! Road-network data model: CSV ingestion, trip-based demand derivation,
//! haversine distances and synthetic lattice generation for tests and demos.
//!
//! Networks are directed graphs over junction nodes. Edges are purely
//! topological; every distance used by the utility model is the haversine
//! distance between node coordinates.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::{ChargingPlan, ChargingStation};

/// Mean Earth radius used by [`haversine_m`].
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Identifier of a road-network junction.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A junction with the per-node features consumed by the utility model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    /// Latitude in degrees.
    pub lat: f64,
    /// Longitude in degrees.
    pub lon: f64,
    /// Charging demand, normalized to [0, 1].
    pub demand: f64,
    /// Share of detached houses around the node, in [0, 1]. Proxy for
    /// private home-charging availability.
    pub home_share: f64,
    /// Estate cost of building at this node, in EUR.
    pub estate_cost: f64,
}

impl Node {
    fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidNetwork(format!(
                    "node {}: {} out of range",
                    self.id, what
                )))
            }
        };
        check(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat), "lat")?;
        check(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon), "lon")?;
        check((0.0..=1.0).contains(&self.demand), "demand")?;
        check((0.0..=1.0).contains(&self.home_share), "home_share")?;
        check(self.estate_cost.is_finite() && self.estate_cost >= 0.0, "estate_cost")?;
        Ok(())
    }
}

/// Directed road network. Immutable after construction; cheap to share
/// read-only across parallel workers.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<(NodeId, NodeId)>,
    index: HashMap<NodeId, usize>,
}

impl RoadNetwork {
    /// Builds a validated network. Node ids must be unique, every edge
    /// endpoint must exist and the network must hold at least one node.
    pub fn new(nodes: Vec<Node>, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidNetwork("a network needs at least one node".into()));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            node.validate()?;
            if index.insert(node.id, i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate node id {}", node.id)));
            }
        }
        for &(src, dst) in &edges {
            for id in [src, dst] {
                if !index.contains_key(&id) {
                    return Err(Error::InvalidNetwork(format!(
                        "edge ({src}, {dst}) references unknown node id {id}"
                    )));
                }
            }
        }
        Ok(Self { nodes, edges, index })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    /// Looks a node up, panicking on a foreign id. Callers hold the
    /// documented contract that plans only reference network nodes.
    pub(crate) fn require(&self, id: NodeId) -> &Node {
        self.node(id)
            .unwrap_or_else(|| panic!("node id {id} does not belong to this network"))
    }

    pub fn coords(&self, id: NodeId) -> (f64, f64) {
        let n = self.require(id);
        (n.lat, n.lon)
    }

    /// Returns a copy with demand replaced per node (same order as `nodes()`).
    fn with_demands(&self, demands: &[f64]) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        for (node, &d) in nodes.iter_mut().zip(demands) {
            node.demand = d;
        }
        Self::new(nodes, self.edges.clone())
    }
}

/// Great-circle distance in meters between two `(lat, lon)` points in
/// degrees.
pub fn haversine_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Geographic bounding box; `lat_min <= lat_max`, `lon_min <= lon_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

/// Trip destination points used to derive per-node charging demand.
#[derive(Debug, Clone, PartialEq)]
pub struct TripEndpointSet {
    points: Vec<(f64, f64)>,
    bbox: BoundingBox,
}

impl TripEndpointSet {
    /// Keeps only points inside `bbox`.
    pub fn new(points: Vec<(f64, f64)>, bbox: BoundingBox) -> Self {
        let points = points
            .into_iter()
            .filter(|&(lat, lon)| bbox.contains(lat, lon))
            .collect();
        Self { points, bbox }
    }

    /// Bounding box taken as the hull of the points themselves.
    pub fn from_points(points: Vec<(f64, f64)>) -> Option<Self> {
        let first = *points.first()?;
        let bbox = points.iter().fold(
            BoundingBox {
                lat_min: first.0,
                lon_min: first.1,
                lat_max: first.0,
                lon_max: first.1,
            },
            |mut b, &(lat, lon)| {
                b.lat_min = b.lat_min.min(lat);
                b.lat_max = b.lat_max.max(lat);
                b.lon_min = b.lon_min.min(lon);
                b.lon_max = b.lon_max.max(lon);
                b
            },
        );
        Some(Self { points, bbox })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }
}

/// Grid-cell index for a point. A coordinate exactly on an interior cell
/// boundary belongs to the cell with the smaller row, then smaller column.
fn cell_of(lat: f64, lon: f64, bbox: &BoundingBox, grid: usize) -> (usize, usize) {
    let axis = |x: f64, min: f64, max: f64| -> usize {
        let span = max - min;
        if span <= 0.0 {
            return 0;
        }
        let t = (x - min) / span * grid as f64;
        let mut cell = t.floor();
        if t == cell && cell > 0.0 {
            cell -= 1.0; // boundary: pick the smaller index
        }
        (cell as usize).min(grid - 1)
    };
    (
        axis(lat, bbox.lat_min, bbox.lat_max),
        axis(lon, bbox.lon_min, bbox.lon_max),
    )
}

/// Derives per-node demand from trip endpoints: trips are binned into a
/// `grid` x `grid` lattice over the bounding box, cell counts are divided
/// by the maximum cell count, and every node inherits the normalized count
/// of its containing cell.
pub fn demand_from_trips(
    trips: &TripEndpointSet,
    network: &RoadNetwork,
    grid: usize,
) -> Result<RoadNetwork> {
    if grid == 0 {
        return Err(Error::InvalidParams("grid must be >= 1".into()));
    }
    let bbox = trips.bbox();
    for node in network.nodes() {
        if !bbox.contains(node.lat, node.lon) {
            return Err(Error::NodeOutsideBbox { id: node.id });
        }
    }
    let mut counts = vec![0u64; grid * grid];
    for &(lat, lon) in trips.points() {
        let (r, c) = cell_of(lat, lon, &bbox, grid);
        counts[r * grid + c] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        log::warn!("empty trip set: every node receives demand 0");
        let zeros = vec![0.0; network.node_count()];
        return network.with_demands(&zeros);
    }
    let demands: Vec<f64> = network
        .nodes()
        .iter()
        .map(|n| {
            let (r, c) = cell_of(n.lat, n.lon, &bbox, grid);
            counts[r * grid + c] as f64 / max as f64
        })
        .collect();
    network.with_demands(&demands)
}

/// Spatial demand pattern of a synthetic network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandProfile {
    /// Independent uniform draws in [0, 1].
    Uniform,
    /// A single peak node with demand 1.0, decaying with lattice distance.
    Hotspot,
    /// Linear ramp from the (0, 0) corner to the opposite corner.
    Gradient,
}

impl FromStr for DemandProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "hotspot" => Ok(Self::Hotspot),
            "gradient" => Ok(Self::Gradient),
            other => Err(format!("unknown demand profile `{other}`")),
        }
    }
}

/// Lattice spacing of synthetic networks, meters.
pub const SYNTHETIC_SPACING_M: f64 = 200.0;
/// Decay length of the hotspot profile, in lattice units.
const HOTSPOT_DECAY: f64 = 2.0;

/// Generates a `rows` x `cols` lattice with 4-neighbor bidirectional edges
/// and 200 m node spacing. All features are drawn deterministically from
/// `seed`; the same seed yields a byte-identical network.
pub fn generate_synthetic(
    rows: usize,
    cols: usize,
    seed: u64,
    profile: DemandProfile,
) -> Result<RoadNetwork> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParams("rows and cols must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meters_per_degree = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let deg_per_step = SYNTHETIC_SPACING_M / meters_per_degree;
    let hotspot = match profile {
        DemandProfile::Hotspot => {
            Some((rng.random_range(0..rows), rng.random_range(0..cols)))
        }
        _ => None,
    };
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let demand = match profile {
                DemandProfile::Uniform => rng.random_range(0.0..1.0),
                DemandProfile::Hotspot => {
                    let (hr, hc) = hotspot.unwrap();
                    let d = ((r as f64 - hr as f64).powi(2) + (c as f64 - hc as f64).powi(2))
                        .sqrt();
                    (-d / HOTSPOT_DECAY).exp()
                }
                DemandProfile::Gradient => {
                    let denom = (rows - 1 + cols - 1) as f64;
                    if denom == 0.0 {
                        1.0
                    } else {
                        (r + c) as f64 / denom
                    }
                }
            };
            nodes.push(Node {
                id: NodeId((r * cols + c) as u32),
                lat: r as f64 * deg_per_step,
                lon: c as f64 * deg_per_step,
                demand,
                home_share: rng.random_range(0.0..1.0),
                estate_cost: rng.random_range(500.0..3000.0),
            });
        }
    }
    let mut edges = Vec::new();
    let id = |r: usize, c: usize| NodeId((r * cols + c) as u32);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
                edges.push((id(r, c + 1), id(r, c)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
                edges.push((id(r + 1, c), id(r, c)));
            }
        }
    }
    RoadNetwork::new(nodes, edges)
}

const NODE_COLUMNS: [&str; 6] = ["id", "lat", "lon", "demand", "home_share", "estate_cost"];

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|e| Error::Csv { path: path.into(), source: e })
}

fn check_columns(path: &Path, headers: &csv::StringRecord, required: &[&str]) -> Result<()> {
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::MissingColumn { path: path.into(), column: (*col).into() });
        }
    }
    Ok(())
}

/// Loads a network from a nodes CSV (`id,lat,lon,demand,home_share,estate_cost`)
/// and an edges CSV (`src,dst`). With `normalize`, the demand column is
/// divided by its maximum so the largest demand becomes 1.0.
pub fn load_network(nodes_path: &Path, edges_path: &Path, normalize: bool) -> Result<RoadNetwork> {
    #[derive(Deserialize)]
    struct NodeRow {
        id: u32,
        lat: f64,
        lon: f64,
        demand: f64,
        home_share: f64,
        estate_cost: f64,
    }

    let mut rdr = open_csv(nodes_path)?;
    check_columns(
        nodes_path,
        rdr.headers().map_err(|e| Error::Csv { path: nodes_path.into(), source: e })?,
        &NODE_COLUMNS,
    )?;
    let mut nodes = Vec::new();
    let mut seen = HashMap::new();
    for (i, row) in rdr.deserialize::<NodeRow>().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::InvalidRow {
            path: nodes_path.into(),
            row: row_no,
            message: e.to_string(),
        })?;
        let id = NodeId(row.id);
        if seen.insert(id, row_no).is_some() {
            return Err(Error::DuplicateNodeId { id, row: row_no });
        }
        nodes.push(Node {
            id,
            lat: row.lat,
            lon: row.lon,
            demand: row.demand,
            home_share: row.home_share,
            estate_cost: row.estate_cost,
        });
    }
    if normalize {
        let max = nodes.iter().map(|n| n.demand).fold(f64::NEG_INFINITY, f64::max);
        if max > 0.0 {
            for n in &mut nodes {
                n.demand /= max;
            }
        }
    }

    #[derive(Deserialize)]
    struct EdgeRow {
        src: u32,
        dst: u32,
    }

    let mut rdr = open_csv(edges_path)?;
    check_columns(
        edges_path,
        rdr.headers().map_err(|e| Error::Csv { path: edges_path.into(), source: e })?,
        &["src", "dst"],
    )?;
    let mut edges = Vec::new();
    for (i, row) in rdr.deserialize::<EdgeRow>().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::InvalidRow {
            path: edges_path.into(),
            row: row_no,
            message: e.to_string(),
        })?;
        for id in [NodeId(row.src), NodeId(row.dst)] {
            if !seen.contains_key(&id) {
                return Err(Error::UnknownNodeId { id, row: row_no });
            }
        }
        edges.push((NodeId(row.src), NodeId(row.dst)));
    }
    RoadNetwork::new(nodes, edges)
}

/// Loads trip endpoints from a `lat,lon` CSV. When `bbox` is `None` the
/// hull of the points is used.
pub fn load_trips(path: &Path, bbox: Option<BoundingBox>) -> Result<TripEndpointSet> {
    #[derive(Deserialize)]
    struct TripRow {
        lat: f64,
        lon: f64,
    }

    let mut rdr = open_csv(path)?;
    check_columns(
        path,
        rdr.headers().map_err(|e| Error::Csv { path: path.into(), source: e })?,
        &["lat", "lon"],
    )?;
    let mut points = Vec::new();
    for (i, row) in rdr.deserialize::<TripRow>().enumerate() {
        let row = row.map_err(|e| Error::InvalidRow {
            path: path.into(),
            row: i + 1,
            message: e.to_string(),
        })?;
        points.push((row.lat, row.lon));
    }
    match bbox {
        Some(bbox) => Ok(TripEndpointSet::new(points, bbox)),
        None => TripEndpointSet::from_points(points)
            .ok_or_else(|| Error::InvalidParams(format!("{}: no trip points", path.display()))),
    }
}

/// Loads existing stations from a `node_id,t1,...,tm` CSV. Rows mapping to
/// the same node are merged by summing charger vectors; totals above
/// `k_max` are clamped (dropping highest-index types first) with a warning.
/// Rows whose merged vector sums to zero are skipped with a warning.
pub fn load_existing_stations(
    path: &Path,
    network: &RoadNetwork,
    charger_types: usize,
    k_max: u32,
) -> Result<ChargingPlan> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| Error::Csv { path: path.into(), source: e })?.clone();
    if headers.len() == 0 || headers.get(0) != Some("node_id") {
        return Err(Error::MissingColumn { path: path.into(), column: "node_id".into() });
    }
    let found = headers.len() - 1;
    if found != charger_types {
        return Err(Error::CatalogMismatch { expected: charger_types, found });
    }
    let mut merged: HashMap<NodeId, Vec<u32>> = HashMap::new();
    let mut order: Vec<NodeId> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| Error::Csv { path: path.into(), source: e })?;
        let parse = |field: usize| -> Result<u32> {
            record
                .get(field)
                .and_then(|s| s.trim().parse::<u32>().ok())
                .ok_or_else(|| Error::InvalidRow {
                    path: path.into(),
                    row: row_no,
                    message: format!("column {} is not a non-negative integer", field),
                })
        };
        let id = NodeId(parse(0)?);
        if !network.contains(id) {
            return Err(Error::UnknownNodeId { id, row: row_no });
        }
        let counts: Vec<u32> = (1..=charger_types).map(parse).collect::<Result<_>>()?;
        match merged.get_mut(&id) {
            Some(existing) => {
                for (e, c) in existing.iter_mut().zip(&counts) {
                    *e += c;
                }
            }
            None => {
                merged.insert(id, counts);
                order.push(id);
            }
        }
    }
    let mut plan = ChargingPlan::new();
    for id in order {
        let mut chargers = merged.remove(&id).unwrap();
        let mut total: u32 = chargers.iter().sum();
        if total == 0 {
            log::warn!("station at node {id} has no chargers; skipping");
            continue;
        }
        if total > k_max {
            log::warn!("station at node {id} holds {total} chargers; clamping to {k_max}");
            for slot in chargers.iter_mut().rev() {
                if total <= k_max {
                    break;
                }
                let drop = (*slot).min(total - k_max);
                *slot -= drop;
                total -= drop;
            }
        }
        plan.insert(ChargingStation::new(id, chargers))?;
    }
    Ok(plan)
}

/// Writes a network as the nodes/edges CSV pair read by [`load_network`].
pub fn write_network_csv(network: &RoadNetwork, nodes_path: &Path, edges_path: &Path) -> Result<()> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |e: csv::Error| Error::Csv { path, source: e }
    };
    let mut w = csv::Writer::from_path(nodes_path)
        .map_err(|e| Error::Csv { path: nodes_path.into(), source: e })?;
    w.write_record(NODE_COLUMNS).map_err(io_err(nodes_path))?;
    for n in network.nodes() {
        w.serialize((n.id.0, n.lat, n.lon, n.demand, n.home_share, n.estate_cost))
            .map_err(io_err(nodes_path))?;
    }
    w.flush().map_err(|e| Error::Io { path: nodes_path.into(), source: e })?;

    let mut w = csv::Writer::from_path(edges_path)
        .map_err(|e| Error::Csv { path: edges_path.into(), source: e })?;
    w.write_record(["src", "dst"]).map_err(io_err(edges_path))?;
    for &(src, dst) in network.edges() {
        w.serialize((src.0, dst.0)).map_err(io_err(edges_path))?;
    }
    w.flush().map_err(|e| Error::Io { path: edges_path.into(), source: e })?;
    Ok(())
}

/// Writes a plan as the `node_id,t1,...,tm` CSV read by
/// [`load_existing_stations`]. Stations appear in ascending node-id order.
pub fn write_stations_csv(plan: &ChargingPlan, charger_types: usize, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Error::Csv { path: path.into(), source: e })?;
    let mut header = vec!["node_id".to_string()];
    header.extend((1..=charger_types).map(|i| format!("t{i}")));
    w.write_record(&header).map_err(|e| Error::Csv { path: path.into(), source: e })?;
    for station in plan.stations() {
        let mut record = vec![station.node_id.0.to_string()];
        record.extend(station.chargers().iter().map(|c| c.to_string()));
        w.write_record(&record).map_err(|e| Error::Csv { path: path.into(), source: e })?;
    }
    w.flush().map_err(|e| Error::Io { path: path.into(), source: e })?;
    Ok(())
}

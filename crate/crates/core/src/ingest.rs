//! Real base-station inventories: CSV ingestion, single-linkage co-location
//! clustering, parameter estimation, and the measured-data comparison runs.

use crate::analytics::{self, AnalyticInputs};
use crate::geometry::{sample_ppp, GridIndex, Point, PointSet, Region};
use crate::metrics::{summarize, RadioParams};
use crate::network::{associate, AssociationMode, NetworkError, Tower, TypedUser};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: empty file")]
    EmptyFile { path: String },
    #[error("{path}: no data rows")]
    NoRows { path: String },
    #[error("{path}: header must be operator_id,x_m,y_m or operator_id,lat,lon; got {header:?}")]
    BadHeader { path: String, header: String },
    #[error("{path}:{line}: expected 3 fields, got {got}")]
    BadFieldCount {
        path: String,
        line: usize,
        got: usize,
    },
    #[error("{path}:{line}: cannot parse {field} value {value:?}")]
    BadField {
        path: String,
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("{path}:{line}: non-finite coordinate")]
    NonFinite { path: String, line: usize },
    #[error("operator {0} has no base stations")]
    EmptyOperator(u16),
    #[error("need at least {needed} operators, inventory has {got}")]
    TooFewOperators { needed: usize, got: usize },
    #[error("area must be positive, got {0}")]
    BadArea(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

/// Base-station locations per operator, planar meters.
#[derive(Debug, Clone)]
pub struct BsInventory {
    pub operators: BTreeMap<u16, Vec<Point>>,
    pub source: String,
}

impl BsInventory {
    pub fn n_operators(&self) -> usize {
        self.operators.len()
    }

    pub fn total_stations(&self) -> usize {
        self.operators.values().map(Vec::len).sum()
    }

    /// Axis-aligned bounding box (min, max) over all stations.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let mut pts = self.operators.values().flatten();
        let first = *pts.next()?;
        let mut min = first;
        let mut max = first;
        for p in self.operators.values().flatten() {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Some((min, max))
    }

    /// All stations as (operator, location) rows in deterministic order.
    pub fn rows(&self) -> Vec<(u16, Point)> {
        self.operators
            .iter()
            .flat_map(|(&op, pts)| pts.iter().map(move |&p| (op, p)))
            .collect()
    }
}

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Parse a base-station inventory CSV.
///
/// Schema: header `operator_id,x_m,y_m` with planar meter coordinates, or
/// `operator_id,lat,lon` with degrees, which are projected by an
/// equirectangular map about the mean latitude:
/// `x = R (lon - lon_ref) cos(lat_ref)`, `y = R (lat - lat_ref)`.
pub fn parse_bs_csv(path: impl AsRef<Path>) -> Result<BsInventory, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_bs_reader(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn parse_bs_reader(reader: impl BufRead, source: &str) -> Result<BsInventory, IngestError> {
    let path = source.to_string();
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(IngestError::EmptyFile { path }),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let geographic = match cols.as_slice() {
        ["operator_id", "x_m", "y_m"] => false,
        ["operator_id", "lat", "lon"] => true,
        _ => return Err(IngestError::BadHeader { path, header }),
    };

    let mut raw: Vec<(u16, f64, f64)> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(IngestError::BadFieldCount {
                path,
                line: lineno,
                got: fields.len(),
            });
        }
        let op: u16 = fields[0].parse().map_err(|_| IngestError::BadField {
            path: path.clone(),
            line: lineno,
            field: "operator_id",
            value: fields[0].to_string(),
        })?;
        let a: f64 = fields[1].parse().map_err(|_| IngestError::BadField {
            path: path.clone(),
            line: lineno,
            field: if geographic { "lat" } else { "x_m" },
            value: fields[1].to_string(),
        })?;
        let b: f64 = fields[2].parse().map_err(|_| IngestError::BadField {
            path: path.clone(),
            line: lineno,
            field: if geographic { "lon" } else { "y_m" },
            value: fields[2].to_string(),
        })?;
        if !(a.is_finite() && b.is_finite()) {
            return Err(IngestError::NonFinite { path, line: lineno });
        }
        raw.push((op, a, b));
    }
    if raw.is_empty() {
        return Err(IngestError::NoRows { path });
    }

    let mut operators: BTreeMap<u16, Vec<Point>> = BTreeMap::new();
    if geographic {
        let lat_ref = raw.iter().map(|r| r.1).sum::<f64>() / raw.len() as f64;
        let lon_ref = raw.iter().map(|r| r.2).sum::<f64>() / raw.len() as f64;
        let cos_ref = lat_ref.to_radians().cos();
        for (op, lat, lon) in raw {
            let x = EARTH_RADIUS_M * (lon - lon_ref).to_radians() * cos_ref;
            let y = EARTH_RADIUS_M * (lat - lat_ref).to_radians();
            operators.entry(op).or_default().push(Point::new(x, y));
        }
    } else {
        for (op, x, y) in raw {
            operators.entry(op).or_default().push(Point::new(x, y));
        }
    }
    Ok(BsInventory {
        operators,
        source: path,
    })
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Merge base stations into towers by single linkage: any two stations
/// within `threshold_m` share a tower, chains merge transitively. Tower
/// location is the cluster centroid; the owner list keeps one entry per
/// member station.
pub fn cluster_colocated(inv: &BsInventory, threshold_m: f64) -> Vec<Tower> {
    let rows = inv.rows();
    if rows.is_empty() {
        return Vec::new();
    }
    // Shift into a truncate region so the grid index applies to raw data.
    let (min, max) = inv.bounding_box().expect("non-empty");
    let width = (max.x - min.x).max(1.0);
    let height = (max.y - min.y).max(1.0);
    let region = Region::truncate(width, height);
    let shifted: Vec<Point> = rows
        .iter()
        .map(|(_, p)| Point::new(p.x - min.x, p.y - min.y))
        .collect();
    // The index clamps the cell grid to the point count, so a meter-scale
    // threshold over a province-scale region stays cheap.
    let index = GridIndex::build(
        &PointSet::new(shifted.clone(), region),
        threshold_m.max(1.0),
    )
    .expect("positive cell and region");

    let mut uf = UnionFind::new(rows.len());
    for (i, p) in shifted.iter().enumerate() {
        for j in index.neighbors_within(*p, threshold_m) {
            uf.union(i, j);
        }
    }

    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..rows.len() {
        clusters.entry(uf.find(i)).or_default().push(i);
    }
    clusters
        .into_values()
        .map(|members| {
            let n = members.len() as f64;
            let cx = members.iter().map(|&i| rows[i].1.x).sum::<f64>() / n;
            let cy = members.iter().map(|&i| rows[i].1.y).sum::<f64>() / n;
            Tower::new(
                Point::new(cx, cy),
                members.iter().map(|&i| rows[i].0).collect(),
            )
        })
        .collect()
}

/// Parameters estimated from an inventory and its clustering. Operators are
/// reindexed by descending station count; index 0 is the anchor.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatedParams {
    /// Original operator ids in descending-density order.
    pub operator_order: Vec<u16>,
    /// Station count per operator, in `operator_order`.
    pub counts: Vec<usize>,
    /// Intensity per operator (count / area), in `operator_order`.
    pub lambda_bs_hat: Vec<f64>,
    /// Density ratio per operator relative to the anchor; first entry is 1.
    pub beta_hat: Vec<f64>,
    /// Fraction of non-anchor stations co-located with an anchor station.
    pub p_hat: f64,
    pub area_m2: f64,
    pub colocation_threshold_m: f64,
}

/// Estimate densities, ratios and the co-location factor from a clustered
/// inventory. `area_m2` is the region the densities refer to.
pub fn estimate_params(
    inv: &BsInventory,
    towers: &[Tower],
    area_m2: f64,
    threshold_m: f64,
) -> Result<EstimatedParams, IngestError> {
    if !area_m2.is_finite() || area_m2 <= 0.0 {
        return Err(IngestError::BadArea(area_m2));
    }
    for (&op, pts) in &inv.operators {
        if pts.is_empty() {
            return Err(IngestError::EmptyOperator(op));
        }
    }
    let mut order: Vec<(u16, usize)> = inv
        .operators
        .iter()
        .map(|(&op, pts)| (op, pts.len()))
        .collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let anchor = order[0].0;

    let mut colocated = 0usize;
    let mut non_anchor_total = 0usize;
    for tower in towers {
        let has_anchor = tower.owners.contains(&anchor);
        for &o in &tower.owners {
            if o != anchor {
                non_anchor_total += 1;
                if has_anchor {
                    colocated += 1;
                }
            }
        }
    }
    let p_hat = if non_anchor_total == 0 {
        0.0
    } else {
        colocated as f64 / non_anchor_total as f64
    };

    let counts: Vec<usize> = order.iter().map(|&(_, c)| c).collect();
    Ok(EstimatedParams {
        operator_order: order.iter().map(|&(op, _)| op).collect(),
        lambda_bs_hat: counts.iter().map(|&c| c as f64 / area_m2).collect(),
        beta_hat: counts
            .iter()
            .map(|&c| c as f64 / counts[0] as f64)
            .collect(),
        counts,
        p_hat,
        area_m2,
        colocation_threshold_m: threshold_m,
    })
}

#[derive(Debug, Clone)]
pub struct RealWorldOptions {
    /// User intensity per m^2 in every scenario.
    pub user_density: f64,
    pub bandwidth_w: f64,
    pub replications: usize,
    pub seed: u64,
    pub threshold_m: f64,
    /// Region area; falls back to the bounding box with a warning.
    pub area_m2: Option<f64>,
    /// Additional scenarios with the co-location factor forced up by moving
    /// operator-2 stations onto operator-1 sites.
    pub forced_p: Vec<f64>,
}

impl Default for RealWorldOptions {
    fn default() -> Self {
        Self {
            user_density: 1e-5,
            bandwidth_w: 1e7,
            replications: 20,
            seed: 0,
            threshold_m: 5.0,
            area_m2: None,
            forced_p: vec![0.5, 1.0],
        }
    }
}

/// One scenario of the measured-data comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RealWorldRow {
    pub scenario: String,
    pub colocation_p: f64,
    pub r_opt_m: f64,
    pub strength_sim_mean: f64,
    pub strength_sim_stderr: f64,
    pub strength_analytic: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RealWorldReport {
    pub params: EstimatedParams,
    pub rows: Vec<RealWorldRow>,
    pub warnings: Vec<String>,
}

impl RealWorldReport {
    pub const CSV_HEADER: &'static str = "scenario,colocation_p,r_opt_m,strength_sim_mean,strength_sim_stderr,strength_analytic,rel_error";

    pub fn rows_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.scenario,
                r.colocation_p,
                r.r_opt_m,
                r.strength_sim_mean,
                r.strength_sim_stderr,
                r.strength_analytic,
                r.rel_error
            ));
        }
        out
    }
}

/// Compare simulated and analytic strength on a measured inventory.
///
/// Scenarios: each of the two densest operators standalone at its own
/// optimal radius, the shared network at the estimated co-location factor,
/// and the shared network with the factor forced to each `forced_p` by
/// relocating operator-2 stations onto distinct operator-1 sites.
/// User populations are fresh PPP draws per replication over the bounding
/// region (truncate boundary); all scenarios reuse the same seed sequence.
pub fn run_real_world(
    inv: &BsInventory,
    opts: &RealWorldOptions,
) -> Result<RealWorldReport, IngestError> {
    if inv.n_operators() < 2 {
        return Err(IngestError::TooFewOperators {
            needed: 2,
            got: inv.n_operators(),
        });
    }
    let mut warnings = Vec::new();
    let (min, max) = inv.bounding_box().expect("non-empty inventory");
    let bbox_area = (max.x - min.x) * (max.y - min.y);
    let area = match opts.area_m2 {
        Some(a) => a,
        None => {
            warnings.push(format!(
                "no area supplied; using the bounding-box area {bbox_area:.3e} m^2"
            ));
            bbox_area
        }
    };

    let towers_all = cluster_colocated(inv, opts.threshold_m);
    let params = estimate_params(inv, &towers_all, area, opts.threshold_m)?;

    // Work with the two densest operators only.
    let op1 = params.operator_order[0];
    let op2 = params.operator_order[1];
    let beta2 = params.counts[1] as f64 / params.counts[0] as f64;
    let lambda1 = params.lambda_bs_hat[0];

    let pair_inv = BsInventory {
        operators: inv
            .operators
            .iter()
            .filter(|(op, _)| **op == op1 || **op == op2)
            .map(|(&op, pts)| (if op == op1 { 1u16 } else { 2u16 }, pts.clone()))
            .collect(),
        source: inv.source.clone(),
    };
    let pair_towers = cluster_colocated(&pair_inv, opts.threshold_m);
    let pair_params = estimate_params(&pair_inv, &pair_towers, area, opts.threshold_m)?;
    let observed_p = pair_params.p_hat;

    let region = Region::truncate((max.x - min.x).max(1.0), (max.y - min.y).max(1.0));
    let shift = |p: Point| Point::new(p.x - min.x, p.y - min.y);

    let mut rows = Vec::new();
    let mut scenario = |name: &str,
                        towers: Vec<Tower>,
                        p_used: f64,
                        inputs: &AnalyticInputs,
                        user_layers: &[(u16, f64)]|
     -> Result<(), IngestError> {
        let r_opt = analytics::optimal_radius(inputs)?;
        let analytic = analytics::optimal_strength(inputs)?;
        let mut means = Vec::with_capacity(opts.replications);
        for k in 0..opts.replications as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k));
            let mut users: Vec<TypedUser> = Vec::new();
            for &(op, density) in user_layers {
                let layer = sample_ppp(&region, density, &mut rng).map_err(NetworkError::from)?;
                users.extend(layer.points.iter().map(|&location| TypedUser {
                    location,
                    operator: op,
                }));
            }
            let net = associate(
                towers.clone(),
                users,
                r_opt,
                region,
                AssociationMode::Shared,
            )?;
            let summary = summarize(&net, opts.bandwidth_w, 1.0, &RadioParams::default())?;
            means.push(summary.mean_strength);
        }
        let agg = crate::experiments::Aggregate::from_samples(&means);
        rows.push(RealWorldRow {
            scenario: name.to_string(),
            colocation_p: p_used,
            r_opt_m: r_opt,
            strength_sim_mean: agg.mean,
            strength_sim_stderr: agg.stderr,
            strength_analytic: analytic,
            rel_error: (agg.mean - analytic).abs() / analytic.abs(),
        });
        Ok(())
    };

    // Standalone operators: each serves its own user population of the full
    // configured density, so both share the same optimal radius.
    for (name, op) in [("operator_1", 1u16), ("operator_2", 2u16)] {
        let towers: Vec<Tower> = pair_inv.operators[&op]
            .iter()
            .map(|&p| Tower::new(shift(p), vec![op]))
            .collect();
        let lambda_k = towers.len() as f64 / area;
        let inputs = AnalyticInputs::single_operator(lambda_k, opts.user_density, opts.bandwidth_w);
        scenario(name, towers, 0.0, &inputs, &[(op, opts.user_density)])?;
    }

    // Shared network at the observed co-location factor.
    let shared_layers = [(1u16, opts.user_density), (2u16, beta2 * opts.user_density)];
    let shared_towers: Vec<Tower> = pair_towers
        .iter()
        .map(|t| Tower::new(shift(t.location), t.owners.clone()))
        .collect();
    let inputs_at = |p: f64| {
        AnalyticInputs::new(
            2,
            p,
            vec![beta2],
            lambda1,
            opts.user_density,
            opts.bandwidth_w,
        )
    };
    scenario(
        "shared_observed",
        shared_towers,
        observed_p,
        &inputs_at(observed_p),
        &shared_layers,
    )?;

    // Forced co-location: move operator-2 stations onto free operator-1 sites.
    for &p_target in &opts.forced_p {
        let forced = force_colocation(&pair_inv, opts.threshold_m, p_target, opts.seed);
        let forced_towers = cluster_colocated(&forced, opts.threshold_m);
        let forced_params = estimate_params(&forced, &forced_towers, area, opts.threshold_m)?;
        let p_used = forced_params.p_hat;
        let towers: Vec<Tower> = forced_towers
            .iter()
            .map(|t| Tower::new(shift(t.location), t.owners.clone()))
            .collect();
        scenario(
            &format!("shared_forced_p{p_target}"),
            towers,
            p_used,
            &inputs_at(p_used),
            &shared_layers,
        )?;
    }

    Ok(RealWorldReport {
        params,
        rows,
        warnings,
    })
}

/// Relocate uniformly chosen operator-2 stations onto distinct operator-1
/// sites until the target fraction of operator-2 stations sits within the
/// co-location threshold of an operator-1 station. Expects a two-operator
/// inventory with ids 1 and 2.
pub fn force_colocation(
    inv: &BsInventory,
    threshold_m: f64,
    p_target: f64,
    seed: u64,
) -> BsInventory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c01c);
    let op1_pts = inv.operators[&1].clone();
    let mut op2_pts = inv.operators[&2].clone();

    let dist = |a: Point, b: Point| (a.x - b.x).hypot(a.y - b.y);
    let mut op2_colocated = vec![false; op2_pts.len()];
    let mut op1_taken = vec![false; op1_pts.len()];
    for (i, q) in op2_pts.iter().enumerate() {
        for (j, p) in op1_pts.iter().enumerate() {
            if dist(*p, *q) <= threshold_m {
                op2_colocated[i] = true;
                op1_taken[j] = true;
            }
        }
    }

    let target = (p_target * op2_pts.len() as f64).round() as usize;
    let current = op2_colocated.iter().filter(|&&c| c).count();
    if target > current {
        let mut movable: Vec<usize> = (0..op2_pts.len()).filter(|&i| !op2_colocated[i]).collect();
        let mut free_sites: Vec<usize> = (0..op1_pts.len()).filter(|&i| !op1_taken[i]).collect();
        movable.shuffle(&mut rng);
        free_sites.shuffle(&mut rng);
        for (&i, &site) in movable.iter().zip(free_sites.iter()).take(target - current) {
            op2_pts[i] = op1_pts[site];
        }
    }

    BsInventory {
        operators: [(1u16, op1_pts), (2u16, op2_pts)].into_iter().collect(),
        source: format!("{} (forced p={p_target})", inv.source),
    }
}

//! Multi-operator network construction: scenario configuration, tower
//! placement with co-location, typed user placement, and the disk-model
//! bipartite association.

use crate::analytics::{self, AnalyticInputs, AnalyticsError};
use crate::geometry::{sample_ppp, GeometryError, GridIndex, Point, PointSet, Region};
use crate::metrics::RadioParams;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("n_operators must be at least 1")]
    NoOperators,
    #[error("betas must have n_operators - 1 entries, got {got} for {n} operators")]
    BetaCount { got: usize, n: usize },
    #[error("beta values must lie in (0, 1], got {0}")]
    BetaRange(f64),
    #[error("colocation_p must lie in [0, 1], got {0}")]
    ColocationRange(f64),
    #[error("{name} must be finite and non-negative, got {value}")]
    NonNegative { name: &'static str, value: f64 },
    #[error("{name} must be finite and positive, got {value}")]
    Positive { name: &'static str, value: f64 },
    #[error("invalid region: {0}")]
    Region(#[from] GeometryError),
    #[error("unknown override key {0:?}")]
    UnknownKey(String),
    #[error("cannot parse override {key}={value:?}: {reason}")]
    BadOverride {
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Connection radius: a fixed value in meters or the strength-optimal radius
/// derived from the scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadiusRepr", into = "RadiusRepr")]
pub enum RadiusSpec {
    Optimal,
    Meters(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RadiusRepr {
    Tag(String),
    Meters(f64),
}

impl TryFrom<RadiusRepr> for RadiusSpec {
    type Error = String;
    fn try_from(repr: RadiusRepr) -> Result<Self, Self::Error> {
        match repr {
            RadiusRepr::Meters(r) => Ok(RadiusSpec::Meters(r)),
            RadiusRepr::Tag(s) if s == "optimal" => Ok(RadiusSpec::Optimal),
            RadiusRepr::Tag(s) => Err(format!(
                "radius_r must be a number or \"optimal\", got {s:?}"
            )),
        }
    }
}

impl From<RadiusSpec> for RadiusRepr {
    fn from(spec: RadiusSpec) -> Self {
        match spec {
            RadiusSpec::Optimal => RadiusRepr::Tag("optimal".into()),
            RadiusSpec::Meters(r) => RadiusRepr::Meters(r),
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

/// Full parameterization of a multi-operator scenario. Serializes 1:1 to the
/// JSON config file consumed by the command-line tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of operators N (operator 1 is the densest, the co-location anchor).
    pub n_operators: usize,
    /// Fraction p of each non-anchor operator's base stations placed on
    /// anchor towers.
    pub colocation_p: f64,
    /// Base-station intensity of operator 1, per m^2.
    pub lambda_bs: f64,
    /// User intensity of operator 1, per m^2.
    pub lambda_u: f64,
    /// Density ratios beta_2..beta_N relative to operator 1, each in (0, 1].
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Connection radius in meters, or "optimal".
    pub radius_r: RadiusSpec,
    /// Bandwidth per base station, Hz.
    pub bandwidth_w: f64,
    pub region: Region,
    /// Path-loss exponent used in the strength metric (default 1).
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// SNR-scale and path-loss parameters for the channel-capacity metric.
    #[serde(default)]
    pub radio: RadioParams,
}

impl ScenarioConfig {
    /// Validate ranges. Returns non-fatal warnings (e.g. a base-station
    /// density above the user density, which the analytic regime assumes
    /// away) rather than failing on them.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        if self.n_operators < 1 {
            return Err(ConfigError::NoOperators);
        }
        if self.betas.len() != self.n_operators - 1 {
            return Err(ConfigError::BetaCount {
                got: self.betas.len(),
                n: self.n_operators,
            });
        }
        if let Some(&b) = self.betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(ConfigError::BetaRange(b));
        }
        if !(0.0..=1.0).contains(&self.colocation_p) {
            return Err(ConfigError::ColocationRange(self.colocation_p));
        }
        for (name, value) in [("lambda_bs", self.lambda_bs), ("lambda_u", self.lambda_u)] {
            if !value.is_finite() || value < 0.0 {
                return Err(ConfigError::NonNegative { name, value });
            }
        }
        for (name, value) in [("bandwidth_w", self.bandwidth_w), ("alpha", self.alpha)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ConfigError::Positive { name, value });
            }
        }
        if let RadiusSpec::Meters(r) = self.radius_r {
            if !r.is_finite() || r < 0.0 {
                return Err(ConfigError::NonNegative {
                    name: "radius_r",
                    value: r,
                });
            }
        }
        self.region.validate()?;
        let mut warnings = Vec::new();
        if self.lambda_bs > self.lambda_u {
            warnings.push(format!(
                "lambda_bs ({}) exceeds lambda_u ({}); the strength expansion assumes a dense user population",
                self.lambda_bs, self.lambda_u
            ));
        }
        Ok(warnings)
    }

    /// The connection radius in meters, resolving the "optimal" sentinel.
    pub fn resolve_radius(&self) -> Result<f64, NetworkError> {
        match self.radius_r {
            RadiusSpec::Meters(r) => Ok(r),
            RadiusSpec::Optimal => Ok(analytics::optimal_radius(&AnalyticInputs::from(self))?),
        }
    }

    /// Apply a `key=value` override. Values are parsed per field; `radius_r`
    /// additionally accepts the string `optimal`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::BadOverride {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        let parse_f64 = |v: &str| v.parse::<f64>().map_err(|e| bad(&e.to_string()));
        match key {
            "n_operators" => {
                self.n_operators = value.parse::<usize>().map_err(|e| bad(&e.to_string()))?;
                self.betas.resize(self.n_operators.saturating_sub(1), 1.0);
            }
            "colocation_p" => self.colocation_p = parse_f64(value)?,
            "lambda_bs" => self.lambda_bs = parse_f64(value)?,
            "lambda_u" => self.lambda_u = parse_f64(value)?,
            "bandwidth_w" => self.bandwidth_w = parse_f64(value)?,
            "alpha" => self.alpha = parse_f64(value)?,
            "seed" => self.seed = value.parse::<u64>().map_err(|e| bad(&e.to_string()))?,
            "radius_r" => {
                self.radius_r = if value == "optimal" {
                    RadiusSpec::Optimal
                } else {
                    RadiusSpec::Meters(parse_f64(value)?)
                };
            }
            "beta" => {
                let b = parse_f64(value)?;
                self.betas.iter_mut().for_each(|x| *x = b);
            }
            _ if key.starts_with("beta_") => {
                let k: usize = key[5..]
                    .parse()
                    .map_err(|_| ConfigError::UnknownKey(key.to_string()))?;
                if k < 2 || k > self.n_operators {
                    return Err(bad(&format!(
                        "operator index out of range 2..={}",
                        self.n_operators
                    )));
                }
                self.betas[k - 2] = parse_f64(value)?;
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }
}

impl From<&ScenarioConfig> for AnalyticInputs {
    fn from(cfg: &ScenarioConfig) -> Self {
        AnalyticInputs::new(
            cfg.n_operators,
            cfg.colocation_p,
            cfg.betas.clone(),
            cfg.lambda_bs,
            cfg.lambda_u,
            cfg.bandwidth_w,
        )
    }
}

/// Effective tower and user intensities (lambda_tower_eff, lambda_user_eff)
/// of the pooled network described by `cfg`.
pub fn compose_densities(cfg: &ScenarioConfig) -> (f64, f64) {
    analytics::effective_densities(cfg.colocation_p, &cfg.betas, cfg.lambda_bs, cfg.lambda_u)
}

/// A physical site hosting one base station per entry in `owners`.
///
/// Generated networks host at most one base station per operator and tower;
/// inventories ingested from measured data may repeat an operator when two of
/// its stations stand within the co-location threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    pub location: Point,
    /// Operator ids (1-based) of the hosted base stations, sorted.
    pub owners: Vec<u16>,
}

impl Tower {
    pub fn new(location: Point, mut owners: Vec<u16>) -> Self {
        owners.sort_unstable();
        Self { location, owners }
    }

    /// Number of co-located base stations C, which scales the pooled
    /// bandwidth of the tower.
    pub fn resource_count(&self) -> usize {
        self.owners.len()
    }

    pub fn hosts(&self, operator: u16) -> bool {
        self.owners.binary_search(&operator).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypedUser {
    pub location: Point,
    /// Operator subscription, 1-based.
    pub operator: u16,
}

/// Realize tower sites.
///
/// Anchor (operator 1) towers form a PPP of intensity `lambda_bs`; each of
/// them independently gains an operator-k station with probability
/// `p * beta_k`, so the anchor resource count is 1 + PoissonBinomial({p beta_k}).
/// Remaining operator-k stations form standalone PPP layers of intensity
/// `(1 - p) * beta_k * lambda_bs`.
pub fn place_towers(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<Vec<Tower>, NetworkError> {
    let anchors = sample_ppp(&cfg.region, cfg.lambda_bs, rng)?;
    let mut towers: Vec<Tower> = Vec::with_capacity(anchors.len());
    for &location in &anchors.points {
        let mut owners = vec![1u16];
        for (i, &beta) in cfg.betas.iter().enumerate() {
            if rng.random::<f64>() < cfg.colocation_p * beta {
                owners.push(i as u16 + 2);
            }
        }
        towers.push(Tower::new(location, owners));
    }
    for (i, &beta) in cfg.betas.iter().enumerate() {
        let standalone = sample_ppp(
            &cfg.region,
            (1.0 - cfg.colocation_p) * beta * cfg.lambda_bs,
            rng,
        )?;
        towers.extend(
            standalone
                .points
                .iter()
                .map(|&p| Tower::new(p, vec![i as u16 + 2])),
        );
    }
    Ok(towers)
}

/// Realize users: one independent PPP per operator, operator k at intensity
/// `beta_k * lambda_u` (beta_1 = 1).
pub fn place_users(
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<Vec<TypedUser>, NetworkError> {
    let mut users = Vec::new();
    for k in 1..=cfg.n_operators {
        let beta = if k == 1 { 1.0 } else { cfg.betas[k - 2] };
        let layer = sample_ppp(&cfg.region, beta * cfg.lambda_u, rng)?;
        users.extend(layer.points.iter().map(|&location| TypedUser {
            location,
            operator: k as u16,
        }));
    }
    Ok(users)
}

/// Which towers a user may connect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationMode {
    /// Full sharing: any tower within range.
    Shared,
    /// No sharing: only towers hosting the user's own operator.
    OwnOperatorOnly,
}

/// The realized bipartite graph: every user links to the towers within the
/// connection radius, distances attached. Disconnected users stay in the
/// graph with empty edge lists.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    pub towers: Vec<Tower>,
    pub users: Vec<TypedUser>,
    /// Per user: (tower id, distance) sorted by tower id.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub tower_degrees: Vec<usize>,
    pub radius: f64,
    pub region: Region,
}

impl NetworkGraph {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_towers(&self) -> usize {
        self.towers.len()
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.edges[user].len()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }
}

/// Connect users to towers within `radius` under the given mode.
pub fn associate(
    towers: Vec<Tower>,
    users: Vec<TypedUser>,
    radius: f64,
    region: Region,
    mode: AssociationMode,
) -> Result<NetworkGraph, NetworkError> {
    let tower_points = PointSet::new(towers.iter().map(|t| t.location).collect(), region);
    // A grid cell of the query radius is the standard fixed-radius layout;
    // any positive size keeps degenerate radii valid.
    let cell = if radius > 0.0 { radius } else { 1.0 };
    let index = GridIndex::build(&tower_points, cell)?;

    let mut edges = Vec::with_capacity(users.len());
    let mut tower_degrees = vec![0usize; towers.len()];
    for user in &users {
        let mut links: Vec<(usize, f64)> = index
            .neighbors_within(user.location, radius)
            .into_iter()
            .filter(|&t| mode == AssociationMode::Shared || towers[t].hosts(user.operator))
            .map(|t| (t, region.distance(user.location, towers[t].location)))
            .collect();
        links.sort_by_key(|&(t, _)| t);
        for &(t, _) in &links {
            tower_degrees[t] += 1;
        }
        edges.push(links);
    }
    Ok(NetworkGraph {
        towers,
        users,
        edges,
        tower_degrees,
        radius,
        region,
    })
}

/// The operator-k sub-network: towers hosting k reduced to a single-station
/// site, users of type k only. This is the no-sharing baseline an operator
/// runs on its own.
pub fn type_subnetwork(
    towers: &[Tower],
    users: &[TypedUser],
    operator: u16,
) -> (Vec<Tower>, Vec<TypedUser>) {
    let sub_towers = towers
        .iter()
        .filter(|t| t.hosts(operator))
        .map(|t| Tower::new(t.location, vec![operator]))
        .collect();
    let sub_users = users
        .iter()
        .filter(|u| u.operator == operator)
        .copied()
        .collect();
    (sub_towers, sub_users)
}

/// Sample towers and users and associate them under full sharing at the
/// configured radius.
pub fn realize(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<NetworkGraph, NetworkError> {
    let radius = cfg.resolve_radius()?;
    let towers = place_towers(cfg, rng)?;
    let users = place_users(cfg, rng)?;
    associate(towers, users, radius, cfg.region, AssociationMode::Shared)
}

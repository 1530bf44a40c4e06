//! Replicated Monte Carlo runs, parameter sweeps with analytic companion
//! values, and plot-ready dataset emission.
//!
//! Replication k always draws from a fresh stream seeded with
//! `base_seed + k`, so every output is bit-reproducible from (config, n).

use crate::analytics::{self, AnalyticInputs};
use crate::ingest;
use crate::metrics::{summarize, MetricsError, MetricsSummary};
use crate::network::{realize, NetworkError, RadiusSpec, ScenarioConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
    #[error("sweep needs at least one replication")]
    NoReplications,
    #[error("unknown sweep parameter {0:?}")]
    UnknownParameter(String),
    #[error("unknown output metric {0:?} (known: strength, capacity, coverage, user_degree, tower_degree)")]
    UnknownMetric(String),
    #[error("unknown figure id {0:?}")]
    UnknownFigure(String),
    #[error("figure real_world needs a base-station inventory file")]
    MissingInventory,
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The stream for replication `k` of a run seeded with `base_seed`.
pub fn replication_rng(base_seed: u64, replication: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(replication))
}

/// Sample mean and standard error of a replicated scalar.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub stderr: f64,
}

impl Aggregate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { mean, stderr }
    }
}

/// Aggregated empirical metrics over independent replications, with the
/// per-replication rows retained.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub n_replications: usize,
    pub radius_m: f64,
    pub strength: Aggregate,
    pub capacity: Aggregate,
    pub coverage: Aggregate,
    pub user_degree: Aggregate,
    pub tower_degree: Aggregate,
    pub mean_n_users: f64,
    pub mean_n_towers: f64,
    pub strength_by_type: BTreeMap<u16, Aggregate>,
    pub per_replication: Vec<MetricsSummary>,
}

impl SimulationSummary {
    fn from_replications(radius_m: f64, reps: Vec<MetricsSummary>) -> Self {
        let collect =
            |f: &dyn Fn(&MetricsSummary) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
        let mut types: Vec<u16> = reps
            .iter()
            .flat_map(|r| r.mean_strength_by_type.keys().copied())
            .collect();
        types.sort_unstable();
        types.dedup();
        let strength_by_type = types
            .into_iter()
            .map(|k| {
                let samples: Vec<f64> = reps
                    .iter()
                    .map(|r| r.mean_strength_by_type.get(&k).copied().unwrap_or(0.0))
                    .collect();
                (k, Aggregate::from_samples(&samples))
            })
            .collect();
        Self {
            n_replications: reps.len(),
            radius_m,
            strength: Aggregate::from_samples(&collect(&|r| r.mean_strength)),
            capacity: Aggregate::from_samples(&collect(&|r| r.mean_capacity)),
            coverage: Aggregate::from_samples(&collect(&|r| r.coverage_fraction)),
            user_degree: Aggregate::from_samples(&collect(&|r| r.mean_user_degree)),
            tower_degree: Aggregate::from_samples(&collect(&|r| r.mean_tower_degree)),
            mean_n_users: collect(&|r| r.n_users as f64).iter().sum::<f64>() / reps.len() as f64,
            mean_n_towers: collect(&|r| r.n_towers as f64).iter().sum::<f64>() / reps.len() as f64,
            strength_by_type,
            per_replication: reps,
        }
    }

    pub fn metric(&self, name: &str) -> Option<Aggregate> {
        match name {
            "strength" => Some(self.strength),
            "capacity" => Some(self.capacity),
            "coverage" => Some(self.coverage),
            "user_degree" => Some(self.user_degree),
            "tower_degree" => Some(self.tower_degree),
            _ => None,
        }
    }

    /// One CSV line per replication, prefixed by the replication index.
    pub fn replications_csv(&self, n_operators: usize) -> String {
        let mut out = format!("replication,{}\n", MetricsSummary::csv_header(n_operators));
        for (k, rep) in self.per_replication.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k, rep.csv_row(n_operators)));
        }
        out
    }

    /// Aggregate table: one row per metric with mean and standard error.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,mean,stderr\n");
        for (name, agg) in [
            ("strength", self.strength),
            ("capacity", self.capacity),
            ("coverage", self.coverage),
            ("user_degree", self.user_degree),
            ("tower_degree", self.tower_degree),
        ] {
            out.push_str(&format!("{},{},{}\n", name, agg.mean, agg.stderr));
        }
        for (k, agg) in &self.strength_by_type {
            out.push_str(&format!(
                "strength_type_{},{},{}\n",
                k, agg.mean, agg.stderr
            ));
        }
        out.push_str(&format!("n_users,{},\n", self.mean_n_users));
        out.push_str(&format!("n_towers,{},\n", self.mean_n_towers));
        out
    }
}

/// Run `n` independent replications of the configured scenario (replication
/// k seeded with `seed + k`) and aggregate the per-realization metrics.
pub fn run_replications(
    cfg: &ScenarioConfig,
    n: usize,
) -> Result<SimulationSummary, ExperimentError> {
    if n == 0 {
        return Err(ExperimentError::NoReplications);
    }
    let radius = cfg.resolve_radius()?;
    let mut fixed = cfg.clone();
    fixed.radius_r = RadiusSpec::Meters(radius);
    let reps: Vec<MetricsSummary> = (0..n as u64)
        .into_par_iter()
        .map(|k| -> Result<MetricsSummary, ExperimentError> {
            let mut rng = replication_rng(fixed.seed, k);
            let net = realize(&fixed, &mut rng)?;
            Ok(summarize(
                &net,
                fixed.bandwidth_w,
                fixed.alpha,
                &fixed.radio,
            )?)
        })
        .collect::<Result<_, _>>()?;
    Ok(SimulationSummary::from_replications(radius, reps))
}

/// The no-sharing baseline scenario of one operator: a single-operator
/// network with that operator's densities at its own optimal radius.
pub fn baseline_config(cfg: &ScenarioConfig, operator: u16) -> ScenarioConfig {
    let beta = if operator == 1 {
        1.0
    } else {
        cfg.betas[operator as usize - 2]
    };
    let mut base = cfg.clone();
    base.n_operators = 1;
    base.betas = Vec::new();
    base.colocation_p = 0.0;
    base.lambda_bs = beta * cfg.lambda_bs;
    base.lambda_u = beta * cfg.lambda_u;
    base.radius_r = RadiusSpec::Optimal;
    base
}

/// Empirical sharing gain of `operator`: mean shared strength at the shared
/// optimal radius over the operator's standalone mean strength at its own
/// optimal radius. Shared and baseline runs reuse the same seed sequence.
pub fn empirical_gain(
    cfg: &ScenarioConfig,
    operator: u16,
    shared_reps: usize,
    baseline_reps: usize,
) -> Result<f64, ExperimentError> {
    let mut shared_cfg = cfg.clone();
    shared_cfg.radius_r = RadiusSpec::Optimal;
    let shared = run_replications(&shared_cfg, shared_reps)?;
    let baseline = run_replications(&baseline_config(cfg, operator), baseline_reps)?;
    Ok(shared.strength.mean / baseline.strength.mean)
}

/// One axis of a sweep: a config field name and the values to visit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

/// A gridded experiment: Cartesian product of the axes over a base scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axes: Vec<SweepAxis>,
    pub replications: usize,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
}

fn default_outputs() -> Vec<String> {
    vec!["strength".to_string()]
}

/// One sweep cell and metric, with the analytic companion where one exists.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub parameters: Vec<(String, f64)>,
    pub metric: String,
    pub empirical_mean: f64,
    pub empirical_stderr: f64,
    pub analytic_value: Option<f64>,
    pub rel_error: Option<f64>,
    /// Regime parameter lambda_user_eff * pi * r^2 of the cell.
    pub regime_mu: f64,
}

fn analytic_companion(metric: &str, inputs: &AnalyticInputs, radius: f64) -> Option<f64> {
    let pi = std::f64::consts::PI;
    match metric {
        "strength" => Some(analytics::expected_strength(radius, inputs).ok()?.value),
        "coverage" => {
            Some(1.0 - analytics::not_covered_probability(inputs.lambda_tower_eff, radius))
        }
        "user_degree" => Some(inputs.lambda_tower_eff * pi * radius * radius),
        "tower_degree" => Some(inputs.lambda_user_eff * pi * radius * radius),
        "capacity" => None,
        _ => None,
    }
}

const KNOWN_METRICS: [&str; 5] = [
    "strength",
    "capacity",
    "coverage",
    "user_degree",
    "tower_degree",
];

fn apply_axis_value(
    cfg: &mut ScenarioConfig,
    param: &str,
    value: f64,
) -> Result<(), ExperimentError> {
    cfg.apply_override(param, &value.to_string())
        .map_err(|_| ExperimentError::UnknownParameter(param.to_string()))
}

/// Run the Cartesian sweep; one row per (cell, output metric).
pub fn sweep(spec: &SweepSpec) -> Result<Vec<ComparisonRow>, ExperimentError> {
    if spec.replications == 0 {
        return Err(ExperimentError::NoReplications);
    }
    for m in &spec.outputs {
        if !KNOWN_METRICS.contains(&m.as_str()) {
            return Err(ExperimentError::UnknownMetric(m.clone()));
        }
    }
    // Validate axis names up front on a scratch config.
    let mut scratch = spec.base.clone();
    for axis in &spec.axes {
        let probe = axis.values.first().copied().unwrap_or(0.0);
        apply_axis_value(&mut scratch, &axis.param, probe)?;
    }

    let mut cells: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in &spec.axes {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                axis.values.iter().map(move |&v| {
                    let mut next = cell.clone();
                    next.push((axis.param.clone(), v));
                    next
                })
            })
            .collect();
    }

    let mut rows = Vec::new();
    for cell in cells {
        let mut cfg = spec.base.clone();
        for (param, value) in &cell {
            apply_axis_value(&mut cfg, param, *value)?;
        }
        let radius = cfg.resolve_radius()?;
        let inputs = AnalyticInputs::from(&cfg);
        let mu = inputs.lambda_user_eff * std::f64::consts::PI * radius * radius;
        let summary = run_replications(&cfg, spec.replications)?;
        for metric in &spec.outputs {
            let agg = summary.metric(metric).expect("metric validated above");
            let analytic = analytic_companion(metric, &inputs, radius);
            let rel_error = analytic
                .filter(|a| *a != 0.0)
                .map(|a| (agg.mean - a).abs() / a.abs());
            rows.push(ComparisonRow {
                parameters: cell.clone(),
                metric: metric.clone(),
                empirical_mean: agg.mean,
                empirical_stderr: agg.stderr,
                analytic_value: analytic,
                rel_error,
                regime_mu: mu,
            });
        }
    }
    Ok(rows)
}

/// CSV for a sweep result; axis columns in spec order.
pub fn sweep_csv(spec: &SweepSpec, rows: &[ComparisonRow]) -> String {
    let axis_names: Vec<&str> = spec.axes.iter().map(|a| a.param.as_str()).collect();
    let mut out = String::new();
    out.push_str(&axis_names.join(","));
    if !axis_names.is_empty() {
        out.push(',');
    }
    out.push_str("metric,empirical_mean,empirical_stderr,analytic_value,rel_error,regime_mu\n");
    for row in rows {
        for name in &axis_names {
            let v = row
                .parameters
                .iter()
                .find(|(p, _)| p == name)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default();
            out.push_str(&v);
            out.push(',');
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.metric,
            row.empirical_mean,
            row.empirical_stderr,
            opt(row.analytic_value),
            opt(row.rel_error),
            row.regime_mu
        ));
    }
    out
}

/// Identifiers of the emittable datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// Mean channel capacity and strength per user over a radius grid.
    Fig3,
    /// Simulated vs analytic strength over a radius grid, several (N, p).
    Fig4,
    /// Two-operator gains over the co-location factor.
    Fig5,
    /// Benefit threshold p* over the density ratio, with the printed bound.
    Fig7,
    /// Optimal radius, strength and gain over p for several N.
    Fig8,
    /// Benefit threshold p* over N, with the printed bound.
    Fig9,
    /// Coverage-driven minimum radius and required bandwidth.
    Fig10,
    /// Real-inventory comparison: simulated vs analytic strength.
    RealWorld,
}

impl std::str::FromStr for FigureId {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            "fig7" => Ok(Self::Fig7),
            "fig8" => Ok(Self::Fig8),
            "fig9" => Ok(Self::Fig9),
            "fig10" => Ok(Self::Fig10),
            "real_world" => Ok(Self::RealWorld),
            other => Err(ExperimentError::UnknownFigure(other.to_string())),
        }
    }
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
            Self::Fig9 => "fig9",
            Self::Fig10 => "fig10",
            Self::RealWorld => "real_world",
        };
        write!(f, "{s}")
    }
}

/// Options for [`emit_figure`].
#[derive(Debug, Clone)]
pub struct EmitOptions {
    pub replications: usize,
    /// Base-station inventory CSV, needed by `real_world` only.
    pub inventory: Option<PathBuf>,
    /// Region area in m^2 for density estimation (`real_world`).
    pub area_m2: Option<f64>,
    /// Co-location clustering threshold in meters (`real_world`).
    pub threshold_m: f64,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self {
            replications: 50,
            inventory: None,
            area_m2: None,
            threshold_m: 5.0,
        }
    }
}

/// One line of the output manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub figure_id: String,
    pub spec_hash: String,
    pub seed: u64,
    pub path: String,
}

/// Short content hash binding an output file to the spec that produced it.
pub fn spec_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Write `manifest.csv` into `out_dir`.
pub fn write_manifest(out_dir: &Path, entries: &[ManifestEntry]) -> std::io::Result<PathBuf> {
    let path = out_dir.join("manifest.csv");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "figure_id,spec_hash,seed,path")?;
    for e in entries {
        writeln!(
            file,
            "{},{},{},{}",
            e.figure_id, e.spec_hash, e.seed, e.path
        )?;
    }
    Ok(path)
}

fn write_dataset(out_dir: &Path, name: &str, content: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn manifest_entry(
    figure: FigureId,
    cfg: &ScenarioConfig,
    opts: &EmitOptions,
    path: &Path,
) -> ManifestEntry {
    let cfg_json = serde_json::to_string(cfg).expect("config serializes");
    ManifestEntry {
        figure_id: figure.to_string(),
        spec_hash: spec_hash(&[
            &figure.to_string(),
            &cfg_json,
            &opts.replications.to_string(),
        ]),
        seed: cfg.seed,
        path: path.display().to_string(),
    }
}

/// Emit one plot-ready dataset (CSV with a header row, no rendering) into
/// `out_dir`, returning its manifest entry.
pub fn emit_figure(
    figure: FigureId,
    base: &ScenarioConfig,
    opts: &EmitOptions,
    out_dir: &Path,
) -> Result<ManifestEntry, ExperimentError> {
    let content = match figure {
        FigureId::Fig3 => emit_fig3(base, opts)?,
        FigureId::Fig4 => emit_fig4(base, opts)?,
        FigureId::Fig5 => emit_fig5(base)?,
        FigureId::Fig7 => emit_fig7()?,
        FigureId::Fig8 => emit_fig8(base)?,
        FigureId::Fig9 => emit_fig9()?,
        FigureId::Fig10 => emit_fig10(base)?,
        FigureId::RealWorld => emit_real_world(base, opts)?,
    };
    let path = write_dataset(out_dir, &format!("{figure}.csv"), &content)?;
    Ok(manifest_entry(figure, base, opts, &path))
}

/// Capacity and strength per user over a radius grid. The capacity-optimal
/// radius sits far below the strength-optimal one.
fn emit_fig3(base: &ScenarioConfig, opts: &EmitOptions) -> Result<String, ExperimentError> {
    let mut out = String::from("r_m,capacity_mean,capacity_stderr,strength_mean,strength_stderr\n");
    for r in [
        10.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 400.0, 500.0,
    ] {
        let mut cfg = base.clone();
        cfg.radius_r = RadiusSpec::Meters(r);
        let s = run_replications(&cfg, opts.replications)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r, s.capacity.mean, s.capacity.stderr, s.strength.mean, s.strength.stderr
        ));
    }
    Ok(out)
}

/// Simulated vs analytic strength over a radius grid for N in {2, 10} and
/// p in {0, 0.5, 1}, equal density ratios.
fn emit_fig4(base: &ScenarioConfig, opts: &EmitOptions) -> Result<String, ExperimentError> {
    let mut out = String::from(
        "n_operators,colocation_p,r_m,regime_mu,strength_sim_mean,strength_sim_stderr,strength_analytic,rel_error\n",
    );
    for n in [2usize, 10] {
        for p in [0.0, 0.5, 1.0] {
            let mut cfg = base.clone();
            cfg.n_operators = n;
            cfg.betas = vec![1.0; n - 1];
            cfg.colocation_p = p;
            let inputs = AnalyticInputs::from(&cfg);
            let r_opt = analytics::optimal_radius(&inputs)?;
            for frac in [0.6, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5] {
                let r = frac * r_opt;
                cfg.radius_r = RadiusSpec::Meters(r);
                let s = run_replications(&cfg, opts.replications)?;
                let ana = analytics::expected_strength(r, &inputs)?;
                let rel = (s.strength.mean - ana.value).abs() / ana.value.abs();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    n, p, r, ana.mu, s.strength.mean, s.strength.stderr, ana.value, rel
                ));
            }
        }
    }
    Ok(out)
}

/// Two-operator gains over p at the base config's density ratio.
fn emit_fig5(base: &ScenarioConfig) -> Result<String, ExperimentError> {
    let beta2 = base.betas.first().copied().unwrap_or(0.8);
    let mut out = String::from("beta2,colocation_p,gain_type1,gain_type2\n");
    for i in 0..=100 {
        let p = i as f64 / 100.0;
        out.push_str(&format!(
            "{},{},{},{}\n",
            beta2,
            p,
            analytics::gain_type1(beta2, p),
            analytics::gain_type2(beta2, p)
        ));
    }
    Ok(out)
}

/// Numeric benefit threshold vs density ratio, with the printed bound.
fn emit_fig7() -> Result<String, ExperimentError> {
    let mut out = String::from("beta2,p_star_numeric,p_bound_printed,bound_in_unit_interval\n");
    for i in 1..=20 {
        let beta2 = i as f64 / 20.0;
        let p_star = analytics::threshold_numeric(|p| analytics::gain_type1(beta2, p))?
            .map(|p| p.to_string())
            .unwrap_or_default();
        let bound = analytics::threshold_bound_n2(beta2);
        out.push_str(&format!(
            "{},{},{},{}\n",
            beta2, p_star, bound.value, bound.in_unit_interval
        ));
    }
    Ok(out)
}

/// Optimal radius, optimal strength and gain over p for several N.
fn emit_fig8(base: &ScenarioConfig) -> Result<String, ExperimentError> {
    let mut out =
        String::from("n_operators,colocation_p,e_log_c,e_log_c_method,r_opt_m,s_opt,gain_n\n");
    for n in [2usize, 5, 10, 20] {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let inputs = AnalyticInputs::new(
                n,
                p,
                vec![1.0; n - 1],
                base.lambda_bs,
                base.lambda_u,
                base.bandwidth_w,
            );
            let (e, method) = inputs.e_log_c()?;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                n,
                p,
                e,
                method,
                analytics::optimal_radius(&inputs)?,
                analytics::optimal_strength(&inputs)?,
                analytics::gain_n(n, p)
            ));
        }
    }
    Ok(out)
}

/// Numeric benefit threshold vs operator count, with the printed bound.
fn emit_fig9() -> Result<String, ExperimentError> {
    let mut out = String::from("n_operators,p_star_numeric,p_bound\n");
    for n in 2..=30usize {
        let p_star = analytics::threshold_numeric(|p| analytics::gain_n(n, p))?
            .map(|p| p.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{}\n",
            n,
            p_star,
            analytics::threshold_bound_n(n).value
        ));
    }
    Ok(out)
}

/// Coverage-driven minimum radius and required bandwidth at theta = 0.9.
fn emit_fig10(base: &ScenarioConfig) -> Result<String, ExperimentError> {
    let theta = 0.9;
    let mut out = String::from("n_operators,colocation_p,theta,r_min_m,w_required_hz\n");
    for n in [1usize, 2, 5, 10] {
        let p_grid: Vec<f64> = if n == 1 {
            vec![0.0]
        } else {
            (0..=20).map(|i| i as f64 / 20.0).collect()
        };
        for p in p_grid {
            let inputs = AnalyticInputs::new(
                n,
                p,
                vec![1.0; n - 1],
                base.lambda_bs,
                base.lambda_u,
                base.bandwidth_w,
            );
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                n,
                p,
                theta,
                analytics::coverage_min_radius(theta, inputs.lambda_tower_eff)?,
                analytics::required_bandwidth(theta, &inputs)?
            ));
        }
    }
    Ok(out)
}

/// Real-inventory comparison rows (see [`ingest::run_real_world`]).
fn emit_real_world(base: &ScenarioConfig, opts: &EmitOptions) -> Result<String, ExperimentError> {
    let path = opts
        .inventory
        .as_ref()
        .ok_or(ExperimentError::MissingInventory)?;
    let inv = ingest::parse_bs_csv(path)?;
    let rw_opts = ingest::RealWorldOptions {
        user_density: base.lambda_u,
        bandwidth_w: base.bandwidth_w,
        replications: opts.replications,
        seed: base.seed,
        threshold_m: opts.threshold_m,
        area_m2: opts.area_m2,
        forced_p: vec![0.5, 1.0],
    };
    let report = ingest::run_real_world(&inv, &rw_opts)?;
    Ok(report.rows_csv())
}

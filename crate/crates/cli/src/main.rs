//! Command-line surface for batch use of the simulator and analytics.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage/config error,
//! 3 output I/O error. Logs go to standard error; data goes to files under
//! `--out` and to standard output.

mod validate;

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;
use towershare_core::experiments::{
    self, spec_hash, write_manifest, EmitOptions, FigureId, ManifestEntry, SweepSpec,
};
use towershare_core::{analytics, ingest, AnalyticInputs, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("validation failed")]
    ValidationFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::ValidationFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn usage(err: impl std::fmt::Display) -> Self {
        CliError::Usage(err.to_string())
    }

    fn io(err: impl std::fmt::Display) -> Self {
        CliError::Io(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "towershare",
    version,
    about = "Simulate and analyze resource sharing among co-located wireless operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Input path: scenario JSON (simulate/analyze/emit-figure), sweep-spec
    /// JSON (sweep), or base-station CSV (ingest/real-world and the
    /// real_world figure).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; all files land here.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config field, e.g. --set colocation_p=0.3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated simulations of a scenario and write summary CSVs.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of replications.
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Evaluate the closed forms for a scenario; no simulation.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Coverage target for the coverage block (also settable via
        /// --set theta=...).
        #[arg(long, default_value_t = 0.9)]
        theta: f64,
    },
    /// Run the gridded sweep described by a sweep-spec JSON.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the spec's replication count.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Parse a base-station CSV, cluster co-located stations into towers,
    /// and estimate densities, ratios and the co-location factor.
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
        /// Region area in m^2 (defaults to the bounding box, with a warning).
        #[arg(long)]
        area: Option<f64>,
        /// Co-location clustering threshold in meters.
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
    },
    /// Compare simulated and analytic strength on a measured inventory.
    RealWorld {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        area: Option<f64>,
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
    /// Emit one plot-ready dataset (fig3|fig4|fig5|fig7|fig8|fig9|fig10|real_world).
    EmitFigure {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        figure: String,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        /// Region area in m^2 (real_world figure only).
        #[arg(long)]
        area: Option<f64>,
        /// Clustering threshold in meters (real_world figure only).
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
    },
    /// Run the built-in verification suite and write a pass/fail report.
    Validate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Corrupt one internal quantity to prove the suite catches it
        /// (negative control; currently: e_log_c).
        #[arg(long, hide = true)]
        mutate: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !matches!(err, CliError::ValidationFailed) {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, reps } => simulate(&common, reps),
        Command::Analyze { common, theta } => analyze(&common, theta),
        Command::Sweep { common, reps } => run_sweep(&common, reps),
        Command::Ingest {
            common,
            area,
            threshold,
        } => run_ingest(&common, area, threshold),
        Command::RealWorld {
            common,
            area,
            threshold,
            reps,
        } => real_world(&common, area, threshold, reps),
        Command::EmitFigure {
            common,
            figure,
            reps,
            area,
            threshold,
        } => emit_figure(&common, &figure, reps, area, threshold),
        Command::Validate { out, mutate } => validate::run(&out, mutate.as_deref()),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn split_kv(entry: &str) -> Result<(&str, &str), CliError> {
    entry
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {entry:?}")))
}

/// Load a scenario, apply seed and --set overrides, validate.
/// Returns the config and the override list for manifest provenance.
fn load_scenario(common: &CommonArgs) -> Result<(ScenarioConfig, Vec<String>), CliError> {
    let text = read_input(&common.config)?;
    let mut cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", common.config.display())))?;
    let mut applied = Vec::new();
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        applied.push(format!("seed={seed}"));
    }
    for entry in &common.set {
        let (key, value) = split_kv(entry)?;
        cfg.apply_override(key, value).map_err(CliError::usage)?;
        applied.push(entry.clone());
    }
    for warning in cfg.validate().map_err(CliError::usage)? {
        eprintln!("warning: {warning}");
    }
    Ok((cfg, applied))
}

fn ensure_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn manifest_with_overrides(
    kind: &str,
    cfg_json: &str,
    seed: u64,
    overrides: &[String],
    path: &Path,
) -> ManifestEntry {
    let joined = overrides.join(";");
    ManifestEntry {
        figure_id: kind.to_string(),
        spec_hash: spec_hash(&[kind, cfg_json, &joined]),
        seed,
        path: path.display().to_string(),
    }
}

fn simulate(common: &CommonArgs, reps: usize) -> Result<(), CliError> {
    let (cfg, overrides) = load_scenario(common)?;
    let summary = experiments::run_replications(&cfg, reps).map_err(CliError::usage)?;
    ensure_out(&common.out)?;
    let reps_path = common.out.join("replications.csv");
    write_file(&reps_path, &summary.replications_csv(cfg.n_operators))?;
    let summary_path = common.out.join("summary.csv");
    write_file(&summary_path, &summary.summary_csv())?;
    let cfg_json = serde_json::to_string(&cfg).expect("config serializes");
    let entries = vec![
        manifest_with_overrides("simulate", &cfg_json, cfg.seed, &overrides, &reps_path),
        manifest_with_overrides("simulate", &cfg_json, cfg.seed, &overrides, &summary_path),
    ];
    write_manifest(&common.out, &entries).map_err(CliError::io)?;
    print!("{}", summary.summary_csv());
    eprintln!(
        "simulate: {} replications at r = {} m -> {}",
        reps,
        summary.radius_m,
        common.out.display()
    );
    Ok(())
}

fn analyze(common: &CommonArgs, theta: f64) -> Result<(), CliError> {
    let mut theta = theta;
    let mut passthrough = Vec::new();
    // theta is an analysis knob, not a scenario field; peel it off --set.
    let mut common_filtered = CommonArgs {
        config: common.config.clone(),
        out: common.out.clone(),
        seed: common.seed,
        set: Vec::new(),
    };
    for entry in &common.set {
        let (key, value) = split_kv(entry)?;
        if key == "theta" {
            theta = value
                .parse()
                .map_err(|e| CliError::usage(format!("theta: {e}")))?;
            passthrough.push(entry.clone());
        } else {
            common_filtered.set.push(entry.clone());
        }
    }
    let (cfg, mut overrides) = load_scenario(&common_filtered)?;
    overrides.append(&mut passthrough);

    let inputs = AnalyticInputs::from(&cfg);
    let report = analytics::build_report(&inputs, theta).map_err(CliError::usage)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    ensure_out(&common.out)?;
    let json_path = common.out.join("report.json");
    write_file(&json_path, &json)?;
    let csv_path = common.out.join("report.csv");
    write_file(
        &csv_path,
        &format!(
            "{}\n{}\n",
            towershare_core::AnalyticReport::CSV_HEADER,
            report.csv_row()
        ),
    )?;
    let cfg_json = serde_json::to_string(&cfg).expect("config serializes");
    let entries = vec![
        manifest_with_overrides("analyze", &cfg_json, cfg.seed, &overrides, &json_path),
        manifest_with_overrides("analyze", &cfg_json, cfg.seed, &overrides, &csv_path),
    ];
    write_manifest(&common.out, &entries).map_err(CliError::io)?;
    println!("{json}");
    Ok(())
}

fn run_sweep(common: &CommonArgs, reps: Option<usize>) -> Result<(), CliError> {
    let text = read_input(&common.config)?;
    let mut spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", common.config.display())))?;
    let mut overrides = Vec::new();
    if let Some(seed) = common.seed {
        spec.base.seed = seed;
        overrides.push(format!("seed={seed}"));
    }
    for entry in &common.set {
        let (key, value) = split_kv(entry)?;
        spec.base
            .apply_override(key, value)
            .map_err(CliError::usage)?;
        overrides.push(entry.clone());
    }
    if let Some(reps) = reps {
        spec.replications = reps;
        overrides.push(format!("reps={reps}"));
    }
    spec.base.validate().map_err(CliError::usage)?;
    let rows = experiments::sweep(&spec).map_err(CliError::usage)?;
    let csv = experiments::sweep_csv(&spec, &rows);
    ensure_out(&common.out)?;
    let path = common.out.join("sweep.csv");
    write_file(&path, &csv)?;
    let spec_json = serde_json::to_string(&spec).expect("spec serializes");
    let entries = vec![manifest_with_overrides(
        "sweep",
        &spec_json,
        spec.base.seed,
        &overrides,
        &path,
    )];
    write_manifest(&common.out, &entries).map_err(CliError::io)?;
    print!("{csv}");
    Ok(())
}

fn towers_csv(towers: &[towershare_core::Tower]) -> String {
    let mut out = String::from("tower_id,x_m,y_m,resource_count,owners\n");
    for (id, t) in towers.iter().enumerate() {
        let owners = t
            .owners
            .iter()
            .map(u16::to_string)
            .collect::<Vec<_>>()
            .join("|");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            id,
            t.location.x,
            t.location.y,
            t.resource_count(),
            owners
        ));
    }
    out
}

fn run_ingest(common: &CommonArgs, area: Option<f64>, threshold: f64) -> Result<(), CliError> {
    let inv = ingest::parse_bs_csv(&common.config).map_err(CliError::usage)?;
    let towers = ingest::cluster_colocated(&inv, threshold);
    let area = match area {
        Some(a) => a,
        None => {
            let (min, max) = inv
                .bounding_box()
                .expect("parser rejects empty inventories");
            let bbox = (max.x - min.x) * (max.y - min.y);
            eprintln!("warning: no --area supplied; using the bounding-box area {bbox:.3e} m^2");
            bbox
        }
    };
    let params =
        ingest::estimate_params(&inv, &towers, area, threshold).map_err(CliError::usage)?;
    ensure_out(&common.out)?;
    let towers_path = common.out.join("towers.csv");
    write_file(&towers_path, &towers_csv(&towers))?;
    let params_json = serde_json::to_string_pretty(&params).expect("params serialize");
    let params_path = common.out.join("params.json");
    write_file(&params_path, &params_json)?;
    let key = format!("{}:{threshold}:{area}", common.config.display());
    let entries = vec![
        manifest_with_overrides("ingest", &key, 0, &common.set, &towers_path),
        manifest_with_overrides("ingest", &key, 0, &common.set, &params_path),
    ];
    write_manifest(&common.out, &entries).map_err(CliError::io)?;
    println!("{params_json}");
    Ok(())
}

fn real_world(
    common: &CommonArgs,
    area: Option<f64>,
    threshold: f64,
    reps: usize,
) -> Result<(), CliError> {
    let inv = ingest::parse_bs_csv(&common.config).map_err(CliError::usage)?;
    let mut opts = ingest::RealWorldOptions {
        replications: reps,
        seed: common.seed.unwrap_or(0),
        threshold_m: threshold,
        area_m2: area,
        ..Default::default()
    };
    for entry in &common.set {
        let (key, value) = split_kv(entry)?;
        let parsed: f64 = value
            .parse()
            .map_err(|e| CliError::usage(format!("--set {key}: {e}")))?;
        match key {
            "user_density" | "lambda_u" => opts.user_density = parsed,
            "bandwidth_w" => opts.bandwidth_w = parsed,
            other => {
                return Err(CliError::usage(format!(
                    "unknown real-world override {other:?} (known: user_density, bandwidth_w)"
                )))
            }
        }
    }
    let report = ingest::run_real_world(&inv, &opts).map_err(CliError::usage)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    ensure_out(&common.out)?;
    let rows_path = common.out.join("real_world.csv");
    write_file(&rows_path, &report.rows_csv())?;
    let params_path = common.out.join("params.json");
    write_file(
        &params_path,
        &serde_json::to_string_pretty(&report.params).expect("serializes"),
    )?;
    let key = format!("{}:{threshold}:{reps}", common.config.display());
    let entries = vec![
        manifest_with_overrides("real_world", &key, opts.seed, &common.set, &rows_path),
        manifest_with_overrides("real_world", &key, opts.seed, &common.set, &params_path),
    ];
    write_manifest(&common.out, &entries).map_err(CliError::io)?;
    print!("{}", report.rows_csv());
    Ok(())
}

/// Default scenario backing the real_world figure, where --config is the
/// inventory CSV rather than a scenario file.
fn real_world_base(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_operators: 1,
        colocation_p: 0.0,
        lambda_bs: 2.78e-7,
        lambda_u: 1e-5,
        betas: Vec::new(),
        radius_r: towershare_core::RadiusSpec::Optimal,
        bandwidth_w: 1e7,
        region: towershare_core::Region::truncate(39_511.0, 39_511.0),
        alpha: 1.0,
        seed,
        radio: towershare_core::RadioParams::default(),
    }
}

fn emit_figure(
    common: &CommonArgs,
    figure: &str,
    reps: usize,
    area: Option<f64>,
    threshold: f64,
) -> Result<(), CliError> {
    let figure: FigureId = figure.parse().map_err(CliError::usage)?;
    let mut opts = EmitOptions {
        replications: reps,
        area_m2: area,
        threshold_m: threshold,
        ..Default::default()
    };
    let (base, overrides) = if figure == FigureId::RealWorld {
        opts.inventory = Some(common.config.clone());
        let mut base = real_world_base(common.seed.unwrap_or(0));
        let mut applied = Vec::new();
        for entry in &common.set {
            let (key, value) = split_kv(entry)?;
            base.apply_override(key, value).map_err(CliError::usage)?;
            applied.push(entry.clone());
        }
        (base, applied)
    } else {
        load_scenario(common)?
    };
    ensure_out(&common.out)?;
    let mut entry =
        experiments::emit_figure(figure, &base, &opts, &common.out).map_err(CliError::usage)?;
    if !overrides.is_empty() {
        entry.spec_hash = spec_hash(&[&entry.spec_hash, &overrides.join(";")]);
    }
    eprintln!("emitted {} -> {}", figure, entry.path);
    write_manifest(&common.out, &[entry]).map_err(CliError::io)?;
    Ok(())
}

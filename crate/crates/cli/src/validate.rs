//! Built-in verification suite: closed-form identities, solver thresholds,
//! scaling limits, and a fast simulation-vs-theory coverage check. Writes a
//! pass/fail report and drives the process exit code.

use crate::CliError;
use std::path::Path;
use std::time::Instant;
use towershare_core::experiments::run_replications;
use towershare_core::geometry::Region;
use towershare_core::metrics::RadioParams;
use towershare_core::network::{RadiusSpec, ScenarioConfig};
use towershare_core::{analytics, AnalyticInputs};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Exact E[ln C] with the optional corruption hook applied; the suite must
/// catch the corruption and exit nonzero.
fn e_log_c_exact(n: usize, p: f64, betas: &[f64], mutate: bool) -> f64 {
    let v = analytics::e_log_c_exact(n, p, betas).expect("within exact range");
    if mutate {
        v + 0.01
    } else {
        v
    }
}

pub fn run(out_dir: &Path, mutate: Option<&str>) -> Result<(), CliError> {
    let mutate_e_log_c = match mutate {
        None => false,
        Some("e_log_c") => true,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown mutation target {other:?} (known: e_log_c)"
            )))
        }
    };
    let started = Instant::now();
    let mut checks: Vec<Check> = Vec::new();

    // Published optimal radii: single-operator and shared two-operator case.
    {
        let single = AnalyticInputs::single_operator(2.78e-7, 1e-5, 1e7);
        let r1 = analytics::optimal_radius(&single).unwrap();
        let shared = AnalyticInputs::new(2, 0.14, vec![387.0 / 434.0], 2.78e-7, 1e-5, 1e7);
        let r2 = analytics::optimal_radius(&shared).unwrap();
        let (e1, e2) = ((r1 - 4892.0).abs() / 4892.0, (r2 - 3951.0).abs() / 3951.0);
        checks.push(check(
            "real_world_optimal_radius",
            e1 <= 0.005 && e2 <= 0.03,
            format!("single {r1:.1} m (ref 4892, rel {e1:.4}), shared {r2:.1} m (ref 3951, rel {e2:.4})"),
        ));
    }

    // Exact Poisson-binomial route vs the two-operator closed form.
    {
        let mut worst = 0.0f64;
        for i in 1..=50 {
            let beta2 = i as f64 / 50.0;
            for j in 0..=50 {
                let p = j as f64 / 50.0;
                let exact = e_log_c_exact(2, p, &[beta2], mutate_e_log_c);
                let closed = analytics::e_log_c_closed_n2(beta2, p);
                let rel = (exact - closed).abs() / closed.abs().max(1e-300);
                if closed != 0.0 || exact != 0.0 {
                    worst = worst.max(rel);
                }
            }
        }
        checks.push(check(
            "e_log_c_exact_vs_closed_n2",
            worst <= 1e-12,
            format!("worst relative gap {worst:.2e} on a 50x50 grid (tol 1e-12)"),
        ));
    }

    // Taylor expansion quality, plus the pinned pair at N=10, p=0.5.
    {
        let mut worst = 0.0f64;
        let mut worst20 = 0.0f64;
        for &n in &[5usize, 10, 20] {
            for j in 1..=9 {
                let p = j as f64 / 10.0;
                let gap = (e_log_c_exact(n, p, &vec![1.0; n - 1], mutate_e_log_c)
                    - analytics::e_log_c_taylor(n, p))
                .abs();
                worst = worst.max(gap);
                if n == 20 {
                    worst20 = worst20.max(gap);
                }
            }
        }
        let exact10 = e_log_c_exact(10, 0.5, &[1.0; 9], mutate_e_log_c);
        let taylor10 = analytics::e_log_c_taylor(10, 0.5);
        let pinned = (exact10 - 0.30227).abs() <= 1e-4 && (taylor10 - 0.29643).abs() <= 1e-4;
        checks.push(check(
            "e_log_c_taylor_quality",
            worst <= 0.03 && worst20 <= 0.01 && pinned,
            format!(
                "worst gap {worst:.4} (tol 0.03), N=20 worst {worst20:.4} (tol 0.01), pinned pair ({exact10:.5}, {taylor10:.5})"
            ),
        ));
    }

    // Numeric benefit thresholds and the printed N-operator bound.
    {
        let p10 = analytics::threshold_numeric(|p| analytics::gain_n(10, p))
            .unwrap()
            .expect("crosses");
        let p_small = analytics::threshold_numeric(|p| analytics::gain_type1(1e-3, p))
            .unwrap()
            .expect("crosses");
        let bound10 = analytics::threshold_bound_n(10).value;
        checks.push(check(
            "benefit_thresholds",
            (p10 - 0.487).abs() <= 0.01
                && (p_small - 0.620).abs() <= 0.01
                && (bound10 - 0.5954).abs() <= 1e-4,
            format!("p*(N=10) {p10:.4} (ref 0.487 +- 0.01), p*(beta=1e-3) {p_small:.4} (ref 0.620 +- 0.01), bound(N=10) {bound10:.4}"),
        ));
    }

    // The smaller operator always benefits.
    {
        let mut min_gain = f64::INFINITY;
        for i in 1..=100 {
            for j in 0..=100 {
                min_gain = min_gain.min(analytics::gain_type2(i as f64 / 100.0, j as f64 / 100.0));
            }
        }
        checks.push(check(
            "gain_type2_grid",
            min_gain >= 1.0 - 1e-12,
            format!("min gain {min_gain:.12} over a 100x100 grid"),
        ));
    }

    // Scaling: exact cube-root gain at p = 0, limits at N = 10^4, and the
    // N-independence of the fully co-located optimal radius.
    {
        let cube_ok = [1usize, 8, 27]
            .iter()
            .all(|&n| analytics::gain_n(n, 0.0) == (n as f64).cbrt());
        let mut limit_worst = 0.0f64;
        for p in [0.2, 0.5, 0.8] {
            let d = analytics::scaling_limits(10_000, p, 1e-6, 1e-3, 1e7);
            limit_worst = limit_worst.max((d.gain_ratio - d.gain_limit).abs());
        }
        let reference =
            analytics::optimal_radius(&AnalyticInputs::single_operator(1e-6, 1e-3, 1e7)).unwrap();
        let mut r_worst = 0.0f64;
        for n in [2usize, 5, 10, 20, 30] {
            let inputs = AnalyticInputs::new(n, 1.0, vec![1.0; n - 1], 1e-6, 1e-3, 1e7);
            let r = analytics::optimal_radius(&inputs).unwrap();
            r_worst = r_worst.max((r - reference).abs() / reference);
        }
        checks.push(check(
            "scaling_limits",
            cube_ok && limit_worst <= 0.01 && r_worst <= 1e-12,
            format!(
                "gain(0)=N^(1/3) exact: {cube_ok}, |G/N^(1/3)-(1-p)| worst {limit_worst:.4} (tol 0.01), r_opt(p=1) N-spread {r_worst:.2e} (tol 1e-12)"
            ),
        ));
    }

    // Coverage: simulated fraction vs the void probability, 100 replications.
    {
        let cfg = ScenarioConfig {
            n_operators: 2,
            colocation_p: 0.5,
            lambda_bs: 1e-6,
            lambda_u: 1e-3,
            betas: vec![0.8],
            radius_r: RadiusSpec::Meters(500.0),
            bandwidth_w: 1e7,
            region: Region::torus(4000.0, 4000.0),
            alpha: 1.0,
            seed: 424242,
            radio: RadioParams::default(),
        };
        let summary = run_replications(&cfg, 100).map_err(CliError::usage)?;
        let inputs = AnalyticInputs::from(&cfg);
        let analytic = 1.0 - analytics::not_covered_probability(inputs.lambda_tower_eff, 500.0);
        let gap = (summary.coverage.mean - analytic).abs();
        checks.push(check(
            "coverage_vs_void_probability",
            gap <= 0.02,
            format!(
                "empirical {:.4} vs analytic {analytic:.4}, gap {gap:.4} (tol 0.02)",
                summary.coverage.mean
            ),
        ));
    }

    // Bandwidth self-consistency plus an independent inversion route and the
    // pinned theta = 0.9 value.
    {
        let inputs = AnalyticInputs::single_operator(1e-6, 1e-3, 1e7);
        let theta = 0.9;
        let w_req = analytics::required_bandwidth(theta, &inputs).unwrap();
        let r_min = analytics::coverage_min_radius(theta, inputs.lambda_tower_eff).unwrap();
        let mut at_w = inputs.clone();
        at_w.bandwidth_w = w_req;
        let closed_gap = (analytics::optimal_radius(&at_w).unwrap() - r_min).abs() / r_min;

        // Independent route: bisect the bandwidth until the optimal radius
        // meets the coverage radius.
        let (mut lo, mut hi) = (1.0f64, 1e12f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let mut probe = inputs.clone();
            probe.bandwidth_w = mid;
            if analytics::optimal_radius(&probe).unwrap() < r_min {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w_bisect = 0.5 * (lo + hi);
        let bisect_gap = (w_bisect - w_req).abs() / w_req;
        let pinned_gap = (w_req - 5.36e6).abs() / 5.36e6;
        checks.push(check(
            "required_bandwidth",
            closed_gap <= 1e-9 && bisect_gap <= 1e-6 && pinned_gap <= 0.005,
            format!(
                "w_req {w_req:.4e} (ref 5.36e6, rel {pinned_gap:.4}), inversion gap {closed_gap:.2e} (tol 1e-9), bisection gap {bisect_gap:.2e}"
            ),
        ));
    }

    // Fast structural invariant: the bipartite handshake on a realization.
    {
        let cfg = ScenarioConfig {
            n_operators: 3,
            colocation_p: 0.3,
            lambda_bs: 2e-6,
            lambda_u: 5e-4,
            betas: vec![0.9, 0.6],
            radius_r: RadiusSpec::Optimal,
            bandwidth_w: 1e7,
            region: Region::torus(3000.0, 3000.0),
            alpha: 1.0,
            seed: 7,
            radio: RadioParams::default(),
        };
        let mut rng = towershare_core::experiments::replication_rng(cfg.seed, 0);
        let net = towershare_core::network::realize(&cfg, &mut rng).map_err(CliError::usage)?;
        let user_sum: usize = net.edges.iter().map(Vec::len).sum();
        let tower_sum: usize = net.tower_degrees.iter().sum();
        checks.push(check(
            "degree_handshake",
            user_sum == tower_sum,
            format!("sum of user degrees {user_sum} vs sum of tower degrees {tower_sum}"),
        ));
    }

    let elapsed = started.elapsed();
    let all_pass = checks.iter().all(|c| c.pass);
    let mut report = String::new();
    for c in &checks {
        report.push_str(&format!(
            "{} {}: {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    report.push_str(&format!(
        "{} of {} checks passed in {:.1}s\n",
        checks.iter().filter(|c| c.pass).count(),
        checks.len(),
        elapsed.as_secs_f64()
    ));
    print!("{report}");
    std::fs::create_dir_all(out_dir).map_err(CliError::io)?;
    std::fs::write(out_dir.join("validation_report.txt"), &report).map_err(CliError::io)?;

    if all_pass {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

//! Acceptance suite: end-to-end checks of the published values, closed-form
//! identities, solver thresholds, and simulation-vs-theory tolerances, each
//! with its runtime budget. One pass line is printed per check.

use std::path::Path;
use std::time::{Duration, Instant};
use towershare_core::analytics::{self, AnalyticInputs};
use towershare_core::experiments::{replication_rng, run_replications};
use towershare_core::geometry::Region;
use towershare_core::ingest;
use towershare_core::metrics::RadioParams;
use towershare_core::network::{place_towers, RadiusSpec, ScenarioConfig};

fn desk_region() -> Region {
    Region::torus(4000.0, 4000.0)
}

fn scenario(n: usize, p: f64, betas: Vec<f64>, radius_m: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_operators: n,
        colocation_p: p,
        lambda_bs: 1e-6,
        lambda_u: 1e-3,
        betas,
        radius_r: RadiusSpec::Meters(radius_m),
        bandwidth_w: 1e7,
        region: desk_region(),
        alpha: 1.0,
        seed,
        radio: RadioParams::default(),
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn pass(name: &str, detail: String) {
    println!("ACCEPTANCE {name}: PASS ({detail})");
}

#[test]
fn real_world_optimal_radii_match_published_values() {
    let started = Instant::now();
    let single = AnalyticInputs::single_operator(2.78e-7, 1e-5, 1e7);
    let r_single = analytics::optimal_radius(&single).unwrap();
    let rel_single = (r_single - 4892.0).abs() / 4892.0;
    assert!(
        rel_single <= 0.005,
        "single-operator r_opt {r_single} vs 4892 m"
    );

    let shared = AnalyticInputs::new(2, 0.14, vec![387.0 / 434.0], 2.78e-7, 1e-5, 1e7);
    let r_shared = analytics::optimal_radius(&shared).unwrap();
    let rel_shared = (r_shared - 3951.0).abs() / 3951.0;
    assert!(rel_shared <= 0.03, "shared r_opt {r_shared} vs 3951 m");

    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "budget 1 s, took {elapsed:?}"
    );
    pass(
        "real_world_optimal_radius",
        format!(
            "single {r_single:.1} m (rel {rel_single:.5}), shared {r_shared:.1} m (rel {rel_shared:.5}), {elapsed:?}"
        ),
    );
}

#[test]
fn simulated_strength_matches_closed_form_in_regime() {
    // Dense-regime configurations (lambda_user_eff pi r^2 >= 50), 100
    // replications on the 4000 m desk region, 5% relative tolerance.
    let cases = [
        (scenario(1, 0.0, vec![], 300.0, 42), "N=1 r=300"),
        (scenario(1, 0.0, vec![], 600.0, 42), "N=1 r=600"),
        (scenario(1, 0.0, vec![], 1054.0, 42), "N=1 r=1054"),
        (scenario(2, 0.5, vec![0.8], 300.0, 42), "N=2 r=300"),
        (scenario(2, 0.5, vec![0.8], 900.0, 42), "N=2 r=900"),
    ];
    let mut details = Vec::new();
    for (cfg, label) in cases {
        let started = Instant::now();
        let radius = match cfg.radius_r {
            RadiusSpec::Meters(r) => r,
            RadiusSpec::Optimal => unreachable!(),
        };
        let inputs = AnalyticInputs::from(&cfg);
        let analytic = analytics::expected_strength(radius, &inputs).unwrap();
        assert!(
            analytic.mu >= 50.0,
            "{label}: out of regime (mu = {})",
            analytic.mu
        );
        let summary = run_replications(&cfg, 100).unwrap();
        let rel = (summary.strength.mean - analytic.value).abs() / analytic.value.abs();
        let elapsed = started.elapsed();
        assert!(
            rel <= 0.05,
            "{label}: empirical {} vs analytic {} (rel {rel:.4})",
            summary.strength.mean,
            analytic.value
        );
        assert!(
            elapsed < Duration::from_secs(180),
            "{label}: budget 3 min, took {elapsed:?}"
        );
        details.push(format!("{label} rel {rel:.4}"));
    }
    pass("sim_vs_theory_strength", details.join("; "));
}

#[test]
fn e_log_c_routes_agree() {
    let started = Instant::now();

    // Exact Poisson-binomial vs the two-operator closed form, 50x50 grid.
    let mut worst_closed = 0.0f64;
    for i in 1..=50 {
        let beta2 = i as f64 / 50.0;
        for j in 0..=50 {
            let p = j as f64 / 50.0;
            let exact = analytics::e_log_c_exact(2, p, &[beta2]).unwrap();
            let closed = analytics::e_log_c_closed_n2(beta2, p);
            if closed != 0.0 {
                worst_closed = worst_closed.max((exact - closed).abs() / closed.abs());
            } else {
                assert_eq!(exact, 0.0, "beta2={beta2} p={p}");
            }
        }
    }
    assert!(
        worst_closed <= 1e-12,
        "worst relative gap {worst_closed:.2e}"
    );

    // Taylor expansion within 0.03 of exact on the stated grid.
    let mut worst_taylor = 0.0f64;
    for &n in &[5usize, 10, 20] {
        for j in 1..=9 {
            let p = j as f64 / 10.0;
            let gap = (analytics::e_log_c_exact(n, p, &vec![1.0; n - 1]).unwrap()
                - analytics::e_log_c_taylor(n, p))
            .abs();
            assert!(gap <= 0.03, "N={n} p={p} gap {gap}");
            worst_taylor = worst_taylor.max(gap);
        }
    }

    // The pinned pair at N=10, p=0.5.
    let exact10 = analytics::e_log_c_exact(10, 0.5, &[1.0; 9]).unwrap();
    let taylor10 = analytics::e_log_c_taylor(10, 0.5);
    assert!((exact10 - 0.30227).abs() <= 1e-5, "exact {exact10}");
    assert!((taylor10 - 0.29643).abs() <= 1e-5, "taylor {taylor10}");

    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "budget 1 s, took {elapsed:?}"
    );
    pass(
        "e_log_c_oracle_equivalence",
        format!(
            "closed-form gap {worst_closed:.1e}, worst Taylor gap {worst_taylor:.4}, pinned ({exact10:.5}, {taylor10:.5}), {elapsed:?}"
        ),
    );
}

#[test]
fn simulated_argmax_tracks_optimal_radius() {
    // Five random configurations; the empirical strength argmax over a
    // radius grid must land within one grid step of the closed form.
    // Identical seeds across grid points share the point patterns, so the
    // comparison is paired.
    use rand::{Rng, SeedableRng};
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let fracs = [0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3];
    let mut details = Vec::new();
    for case in 0..5 {
        let n = rng.random_range(1..=2usize);
        let p = rng.random_range(0.0..1.0);
        let betas: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.5..=1.0)).collect();
        let cfg = scenario(n, p, betas, 0.0, 1000 + case);
        let inputs = AnalyticInputs::from(&cfg);
        let r_opt = analytics::optimal_radius(&inputs).unwrap();

        let mut best = (f64::NEG_INFINITY, 0.0);
        for &frac in &fracs {
            let mut at_r = cfg.clone();
            at_r.radius_r = RadiusSpec::Meters(frac * r_opt);
            let summary = run_replications(&at_r, 30).unwrap();
            if summary.strength.mean > best.0 {
                best = (summary.strength.mean, frac);
            }
        }
        assert!(
            (best.1 - 1.0f64).abs() <= 0.1 + 1e-9,
            "case {case} (N={n}, p={p:.2}): argmax at {:.1} vs r_opt {r_opt:.1}",
            best.1 * r_opt
        );
        details.push(format!("case {case} argmax {:.2} r_opt", best.1));
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(600),
        "budget 10 min, took {elapsed:?}"
    );
    pass(
        "empirical_argmax",
        format!("{}; {elapsed:?}", details.join("; ")),
    );
}

#[test]
fn benefit_thresholds_and_bounds() {
    let started = Instant::now();

    let p10 = analytics::threshold_numeric(|p| analytics::gain_n(10, p))
        .unwrap()
        .unwrap();
    assert!((p10 - 0.487).abs() <= 0.01, "p*(N=10) = {p10}");
    // Grid-scan cross-check of the bisection.
    let mut grid_p = 0.0;
    for i in 0..=10_000 {
        let p = i as f64 / 10_000.0;
        if analytics::gain_n(10, p) >= 1.0 {
            grid_p = p;
        }
    }
    assert!(
        (p10 - grid_p).abs() <= 2e-4,
        "bisection {p10} vs grid {grid_p}"
    );

    let p_small = analytics::threshold_numeric(|p| analytics::gain_type1(1e-3, p))
        .unwrap()
        .unwrap();
    assert!((p_small - 0.620).abs() <= 0.01, "p*(beta=1e-3) = {p_small}");

    let bound10 = analytics::threshold_bound_n(10).value;
    assert!((bound10 - 0.5954).abs() <= 5e-5, "bound(N=10) = {bound10}");

    let mut min_gain2 = f64::INFINITY;
    for i in 1..=100 {
        for j in 0..=100 {
            min_gain2 = min_gain2.min(analytics::gain_type2(i as f64 / 100.0, j as f64 / 100.0));
        }
    }
    assert!(min_gain2 >= 1.0 - 1e-12, "min G2 = {min_gain2}");

    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(5),
        "budget 5 s, took {elapsed:?}"
    );
    pass(
        "benefit_thresholds",
        format!("p*(N=10) {p10:.4}, p*(beta=1e-3) {p_small:.4}, bound {bound10:.4}, min G2 {min_gain2:.6}, {elapsed:?}"),
    );
}

#[test]
fn scaling_limits_hold() {
    // Exact cube-root gain at p = 0.
    for n in [1usize, 8, 27] {
        assert_eq!(analytics::gain_n(n, 0.0), (n as f64).cbrt(), "N={n}");
    }
    // Normalized gain approaches 1 - p at N = 10^4.
    let mut worst = 0.0f64;
    for p in [0.2, 0.5, 0.8] {
        let d = analytics::scaling_limits(10_000, p, 1e-6, 1e-3, 1e7);
        let gap = (d.gain_ratio - d.gain_limit).abs();
        assert!(
            gap <= 0.01,
            "p={p}: ratio {} vs {}",
            d.gain_ratio,
            d.gain_limit
        );
        worst = worst.max(gap);
    }
    // Fully co-located: the optimal radius does not depend on N.
    let reference =
        analytics::optimal_radius(&AnalyticInputs::single_operator(1e-6, 1e-3, 1e7)).unwrap();
    for n in [2usize, 5, 10, 20, 30] {
        let inputs = AnalyticInputs::new(n, 1.0, vec![1.0; n - 1], 1e-6, 1e-3, 1e7);
        let r = analytics::optimal_radius(&inputs).unwrap();
        assert!(
            (r - reference).abs() / reference <= 1e-12,
            "N={n}: {r} vs {reference}"
        );
    }
    pass(
        "scaling_limits",
        format!("cube roots exact, limit gap <= {worst:.4}, r_opt(p=1) N-independent"),
    );
}

#[test]
fn coverage_and_required_bandwidth() {
    // Empirical coverage vs the void probability at 100 replications.
    let cfg = scenario(2, 0.5, vec![0.8], 500.0, 424242);
    let summary = run_replications(&cfg, 100).unwrap();
    let inputs = AnalyticInputs::from(&cfg);
    let analytic = 1.0 - analytics::not_covered_probability(inputs.lambda_tower_eff, 500.0);
    let coverage_gap = (summary.coverage.mean - analytic).abs();
    assert!(
        coverage_gap <= 0.02,
        "empirical {} vs {analytic}",
        summary.coverage.mean
    );

    // Bandwidth-radius inversion identity across scenarios and targets.
    for (n, p, betas) in [
        (1usize, 0.0, vec![]),
        (2, 0.4, vec![0.9]),
        (6, 0.8, vec![1.0; 5]),
    ] {
        let inputs = AnalyticInputs::new(n, p, betas, 1e-6, 1e-3, 1e7);
        for theta in [0.5, 0.9, 0.99] {
            let w_req = analytics::required_bandwidth(theta, &inputs).unwrap();
            let r_min = analytics::coverage_min_radius(theta, inputs.lambda_tower_eff).unwrap();
            let mut at_w = inputs.clone();
            at_w.bandwidth_w = w_req;
            let r_opt = analytics::optimal_radius(&at_w).unwrap();
            assert!((r_opt - r_min).abs() / r_min <= 1e-9, "N={n} theta={theta}");
        }
    }

    // Direct-substitution value at theta = 0.9 for the single operator.
    let single = AnalyticInputs::single_operator(1e-6, 1e-3, 1e7);
    let w_req = analytics::required_bandwidth(0.9, &single).unwrap();
    let pi = std::f64::consts::PI;
    let oracle = (-(0.1f64).ln() / (pi * 1e-6)).powf(1.5) * (1e-3 * pi) / (-1.0f64).exp();
    assert!(
        (w_req - oracle).abs() / oracle <= 1e-12,
        "{w_req} vs {oracle}"
    );
    assert!(
        (w_req - 5.36e6).abs() / 5.36e6 <= 0.005,
        "{w_req} vs 5.36e6"
    );

    pass(
        "coverage_and_bandwidth",
        format!("coverage gap {coverage_gap:.4}, inversion <= 1e-9, w_req {w_req:.4e}"),
    );
}

#[test]
fn estimated_parameters_round_trip() {
    // Parameters synthesized by the tower model are recovered by the
    // estimator within two binomial standard errors.
    let mut cfg = scenario(2, 0.3, vec![0.8], 0.0, 77);
    cfg.lambda_bs = 5e-6;
    cfg.region = Region::torus(20_000.0, 20_000.0);
    let mut rng = replication_rng(cfg.seed, 0);
    let towers = place_towers(&cfg, &mut rng).unwrap();

    let mut operators: std::collections::BTreeMap<u16, Vec<towershare_core::Point>> =
        Default::default();
    for tower in &towers {
        for &op in &tower.owners {
            operators.entry(op).or_default().push(tower.location);
        }
    }
    let inv = towershare_core::BsInventory {
        operators,
        source: "synthesized".into(),
    };
    let clustered = ingest::cluster_colocated(&inv, 5.0);
    let est = ingest::estimate_params(&inv, &clustered, cfg.region.area(), 5.0).unwrap();

    let n1 = est.counts[0] as f64;
    let n2 = est.counts[1] as f64;
    let se_p = (0.3f64 * 0.7 / n2).sqrt();
    assert!(
        (est.p_hat - 0.3).abs() <= 2.0 * se_p,
        "p_hat {} vs 0.3 (se {se_p})",
        est.p_hat
    );
    let se_beta = 0.8 * (1.0 / n1 + 1.0 / n2).sqrt();
    assert!(
        (est.beta_hat[1] - 0.8).abs() <= 2.0 * se_beta,
        "beta_hat {} vs 0.8 (se {se_beta})",
        est.beta_hat[1]
    );

    // The committed fixtures recover their constructed ground truth exactly.
    let p014 = ingest::parse_bs_csv(fixture("bs_colocation_p014.csv")).unwrap();
    let p014_towers = ingest::cluster_colocated(&p014, 5.0);
    let p014_est = ingest::estimate_params(&p014, &p014_towers, 4e8, 5.0).unwrap();
    assert_eq!(p014_est.p_hat, 0.14, "fixture p_hat {}", p014_est.p_hat);

    let utrecht = ingest::parse_bs_csv(fixture("bs_utrecht_synthetic.csv")).unwrap();
    let u_towers = ingest::cluster_colocated(&utrecht, 5.0);
    let u_est = ingest::estimate_params(&utrecht, &u_towers, 39_511.0f64 * 39_511.0, 5.0).unwrap();
    assert_eq!(u_est.beta_hat[1], 387.0 / 434.0);
    assert_eq!(u_est.p_hat, 54.0 / 387.0);

    pass(
        "ingest_round_trip",
        format!(
            "synthesized p_hat {:.4} beta_hat {:.4}; fixtures p_hat 0.14 exact, beta_hat 387/434 exact",
            est.p_hat, est.beta_hat[1]
        ),
    );
}

#[test]
fn capacity_peaks_far_below_strength_radius() {
    // The capacity-vs-radius curve peaks at small radii, far below the
    // strength-optimal radius, so capacity is not the utility the optimal
    // radius maximizes.
    let grid = [
        10.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 400.0, 500.0,
    ];
    let cfg = scenario(1, 0.0, vec![], 0.0, 31);
    let mut best_capacity = (f64::NEG_INFINITY, 0.0);
    let mut best_strength = (f64::NEG_INFINITY, 0.0);
    for &r in &grid {
        let mut at_r = cfg.clone();
        at_r.radius_r = RadiusSpec::Meters(r);
        let summary = run_replications(&at_r, 40).unwrap();
        if summary.capacity.mean > best_capacity.0 {
            best_capacity = (summary.capacity.mean, r);
        }
        if summary.strength.mean > best_strength.0 {
            best_strength = (summary.strength.mean, r);
        }
    }
    let r_opt = analytics::optimal_radius(&AnalyticInputs::from(&cfg)).unwrap();
    assert!(
        best_capacity.1 <= 100.0,
        "capacity argmax at {}",
        best_capacity.1
    );
    assert!(
        best_capacity.1 < best_strength.1,
        "capacity argmax {} vs strength argmax {}",
        best_capacity.1,
        best_strength.1
    );
    assert!(
        best_capacity.1 < r_opt,
        "capacity argmax {} vs r_opt {r_opt}",
        best_capacity.1
    );
    pass(
        "capacity_vs_strength_radii",
        format!(
            "capacity argmax {} m, strength argmax {} m on the grid, r_opt {r_opt:.0} m",
            best_capacity.1, best_strength.1
        ),
    );
}

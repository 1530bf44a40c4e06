//! Closed-form network quantities and the numeric solvers for thresholds the
//! closed forms only bound.
//!
//! Everything here is a pure function of the scenario parameters. Natural
//! logarithms throughout; strength values are in nats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest operator count for which the exact Poisson-binomial route is used.
pub const EXACT_E_LOG_C_MAX_OPERATORS: usize = 30;

/// Tolerance (in p) of the threshold bisection.
pub const THRESHOLD_BISECTION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("exact E[ln C] supports at most {EXACT_E_LOG_C_MAX_OPERATORS} operators, got {0}; use the Taylor expansion")]
    UseTaylor(usize),
    #[error("Taylor E[ln C] requires all density ratios equal to 1, got a mixed-ratio scenario with {0} operators")]
    UnequalRatiosUnsupported(usize),
    #[error("gain is below 1 already at p = 0; sharing never pays in this scenario")]
    NoBenefit,
    #[error("coverage target must lie in [0, 1), got {0}")]
    InvalidCoverageTarget(f64),
    #[error("coverage target 1 needs an infinite radius")]
    InfiniteRadius,
}

/// Effective tower and user intensities of the pooled network.
///
/// lambda_tower = (1 + (1-p) * sum(beta_k)) * lambda_bs
/// lambda_user  = (1 + sum(beta_k)) * lambda_u
pub fn effective_densities(
    colocation_p: f64,
    betas: &[f64],
    lambda_bs: f64,
    lambda_u: f64,
) -> (f64, f64) {
    let beta_sum: f64 = betas.iter().sum();
    let lambda_tower = (1.0 + (1.0 - colocation_p) * beta_sum) * lambda_bs;
    let lambda_user = (1.0 + beta_sum) * lambda_u;
    (lambda_tower, lambda_user)
}

/// Exact pmf of a sum of independent Bernoulli(probs[i]) variables, by the
/// standard convolution recurrence. `pmf[i] = P(X = i)`.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &q in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (i, &m) in pmf.iter().enumerate() {
            next[i] += m * (1.0 - q);
            next[i + 1] += m * q;
        }
        pmf = next;
    }
    pmf
}

/// Which route produced an E[ln C] value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElogCMethod {
    Exact,
    Taylor,
    ClosedN2,
}

impl std::fmt::Display for ElogCMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ElogCMethod::Exact => write!(f, "exact"),
            ElogCMethod::Taylor => write!(f, "taylor"),
            ElogCMethod::ClosedN2 => write!(f, "closed_n2"),
        }
    }
}

/// Exact expected log resource count per tower.
///
/// Towers split into standalone non-anchor towers (share `s`, C = 1) and
/// anchor towers whose extra BS count is PoissonBinomial({p * beta_k}):
///
/// E[ln C] = (1 - s) * sum_i ln(1 + i) * P(C1 = i),
/// s = (1-p) * sum(beta_k) / (1 + (1-p) * sum(beta_k))
pub fn e_log_c_exact(
    n_operators: usize,
    colocation_p: f64,
    betas: &[f64],
) -> Result<f64, AnalyticsError> {
    if n_operators > EXACT_E_LOG_C_MAX_OPERATORS {
        return Err(AnalyticsError::UseTaylor(n_operators));
    }
    debug_assert_eq!(betas.len(), n_operators.saturating_sub(1));
    if n_operators <= 1 {
        return Ok(0.0);
    }
    let beta_sum: f64 = betas.iter().sum();
    let standalone_share =
        (1.0 - colocation_p) * beta_sum / (1.0 + (1.0 - colocation_p) * beta_sum);
    let probs: Vec<f64> = betas.iter().map(|b| colocation_p * b).collect();
    let pmf = poisson_binomial_pmf(&probs);
    let mean_log: f64 = pmf
        .iter()
        .enumerate()
        .map(|(i, &m)| ((1 + i) as f64).ln() * m)
        .sum();
    Ok((1.0 - standalone_share) * mean_log)
}

/// Second-order expansion of E[ln C] for equal density ratios:
///
/// [ln(1 + p(N-1)) - p(1-p)(N-1) / (1 + p(N-1))^2] / (1 + (1-p)(N-1))
pub fn e_log_c_taylor(n_operators: usize, colocation_p: f64) -> f64 {
    if n_operators <= 1 {
        return 0.0;
    }
    let m = (n_operators - 1) as f64;
    let p = colocation_p;
    ((1.0 + p * m).ln() - p * (1.0 - p) * m / (1.0 + p * m).powi(2)) / (1.0 + (1.0 - p) * m)
}

/// Closed form for two operators: beta2 * p * ln 2 / (1 + (1-p) * beta2).
pub fn e_log_c_closed_n2(beta2: f64, colocation_p: f64) -> f64 {
    beta2 * colocation_p * std::f64::consts::LN_2 / (1.0 + (1.0 - colocation_p) * beta2)
}

/// Scenario parameters plus the derived effective densities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticInputs {
    pub n_operators: usize,
    pub colocation_p: f64,
    /// Density ratios of operators 2..N relative to operator 1.
    pub betas: Vec<f64>,
    pub lambda_bs: f64,
    pub lambda_u: f64,
    pub bandwidth_w: f64,
    pub lambda_tower_eff: f64,
    pub lambda_user_eff: f64,
}

impl AnalyticInputs {
    pub fn new(
        n_operators: usize,
        colocation_p: f64,
        betas: Vec<f64>,
        lambda_bs: f64,
        lambda_u: f64,
        bandwidth_w: f64,
    ) -> Self {
        let (lambda_tower_eff, lambda_user_eff) =
            effective_densities(colocation_p, &betas, lambda_bs, lambda_u);
        Self {
            n_operators,
            colocation_p,
            betas,
            lambda_bs,
            lambda_u,
            bandwidth_w,
            lambda_tower_eff,
            lambda_user_eff,
        }
    }

    pub fn single_operator(lambda_bs: f64, lambda_u: f64, bandwidth_w: f64) -> Self {
        Self::new(1, 0.0, Vec::new(), lambda_bs, lambda_u, bandwidth_w)
    }

    pub fn equal_ratios(&self) -> bool {
        self.betas.iter().all(|&b| b == 1.0)
    }

    /// E[ln C] by the method hierarchy: exact Poisson-binomial when the
    /// operator count allows it, the Taylor expansion otherwise (equal
    /// ratios only).
    pub fn e_log_c(&self) -> Result<(f64, ElogCMethod), AnalyticsError> {
        if self.n_operators <= EXACT_E_LOG_C_MAX_OPERATORS {
            Ok((
                e_log_c_exact(self.n_operators, self.colocation_p, &self.betas)?,
                ElogCMethod::Exact,
            ))
        } else if self.equal_ratios() {
            Ok((
                e_log_c_taylor(self.n_operators, self.colocation_p),
                ElogCMethod::Taylor,
            ))
        } else {
            Err(AnalyticsError::UnequalRatiosUnsupported(self.n_operators))
        }
    }
}

/// A value from an expansion that assumes `lambda_user_eff * pi * r^2 > 1`,
/// carrying the regime parameter so callers can flag out-of-regime use.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeValue {
    pub value: f64,
    /// Mean user count in a connection disk: lambda_user_eff * pi * r^2.
    pub mu: f64,
}

impl RegimeValue {
    pub fn in_regime(&self) -> bool {
        self.mu > 1.0
    }
}

/// Expected log of the size-biased tower degree:
/// ln(1 + mu) - mu / (2 (1 + mu)^2) with mu = lambda_user_eff * pi * r^2.
pub fn e_log_sb_degree(lambda_user_eff: f64, radius: f64) -> RegimeValue {
    let mu = lambda_user_eff * std::f64::consts::PI * radius * radius;
    RegimeValue {
        value: (1.0 + mu).ln() - mu / (2.0 * (1.0 + mu).powi(2)),
        mu,
    }
}

/// Expected per-user strength at connection radius `r`:
///
/// lambda_tower_eff * pi * r^2 * (ln w + E[ln C] - ln(lambda_user_eff * pi * r^3) + 1/2)
pub fn expected_strength(
    radius: f64,
    inputs: &AnalyticInputs,
) -> Result<RegimeValue, AnalyticsError> {
    let (e_log_c, _) = inputs.e_log_c()?;
    Ok(expected_strength_with(radius, inputs, e_log_c))
}

/// Same as [`expected_strength`] with a caller-chosen E[ln C].
pub fn expected_strength_with(radius: f64, inputs: &AnalyticInputs, e_log_c: f64) -> RegimeValue {
    let pi = std::f64::consts::PI;
    let mu = inputs.lambda_user_eff * pi * radius * radius;
    let disk_towers = inputs.lambda_tower_eff * pi * radius * radius;
    let bracket = inputs.bandwidth_w.ln() + e_log_c
        - (inputs.lambda_user_eff * pi * radius.powi(3)).ln()
        + 0.5;
    RegimeValue {
        value: disk_towers * bracket,
        mu,
    }
}

/// Strength-maximizing connection radius:
/// cbrt(w / (lambda_user_eff * pi) * exp(-1 + E[ln C])).
pub fn optimal_radius(inputs: &AnalyticInputs) -> Result<f64, AnalyticsError> {
    let (e_log_c, _) = inputs.e_log_c()?;
    Ok(optimal_radius_with(inputs, e_log_c))
}

pub fn optimal_radius_with(inputs: &AnalyticInputs, e_log_c: f64) -> f64 {
    (inputs.bandwidth_w / (inputs.lambda_user_eff * std::f64::consts::PI) * (-1.0 + e_log_c).exp())
        .cbrt()
}

/// Expected strength at the optimal radius:
/// (3 e^{-2/3} lambda_tower_eff / 2) * cbrt(e^{2 E[ln C]} pi w^2 / lambda_user_eff^2).
pub fn optimal_strength(inputs: &AnalyticInputs) -> Result<f64, AnalyticsError> {
    let (e_log_c, _) = inputs.e_log_c()?;
    Ok(optimal_strength_with(inputs, e_log_c))
}

pub fn optimal_strength_with(inputs: &AnalyticInputs, e_log_c: f64) -> f64 {
    1.5 * (-2.0 / 3.0_f64).exp()
        * inputs.lambda_tower_eff
        * ((2.0 * e_log_c).exp() * std::f64::consts::PI * inputs.bandwidth_w.powi(2)
            / inputs.lambda_user_eff.powi(2))
        .cbrt()
}

/// Sharing gain for the larger of two operators:
/// (1 + (1-p) beta2) * cbrt(2^(2 beta2 p / (1 + beta2 (1-p))) / (1 + beta2)^2).
pub fn gain_type1(beta2: f64, colocation_p: f64) -> f64 {
    let p = colocation_p;
    let exponent = 2.0 * beta2 * p / (1.0 + beta2 * (1.0 - p));
    (1.0 + (1.0 - p) * beta2) * (2.0_f64.powf(exponent) / (1.0 + beta2).powi(2)).cbrt()
}

/// Sharing gain for the smaller operator: beta2^(-1/3) * gain_type1.
pub fn gain_type2(beta2: f64, colocation_p: f64) -> f64 {
    (1.0 / beta2).cbrt() * gain_type1(beta2, colocation_p)
}

/// Sharing gain for N equal operators:
/// (1 + (1-p)(N-1)) / N^(2/3) * exp(-(2/3) E[ln C]).
///
/// E[ln C] is exact up to [`EXACT_E_LOG_C_MAX_OPERATORS`], Taylor above.
pub fn gain_n(n_operators: usize, colocation_p: f64) -> f64 {
    let e_log_c = if n_operators <= EXACT_E_LOG_C_MAX_OPERATORS {
        let betas = vec![1.0; n_operators.saturating_sub(1)];
        e_log_c_exact(n_operators, colocation_p, &betas).expect("within exact range")
    } else {
        e_log_c_taylor(n_operators, colocation_p)
    };
    let n = n_operators as f64;
    (1.0 + (1.0 - colocation_p) * (n - 1.0)) / n.cbrt().powi(2) * (-(2.0 / 3.0) * e_log_c).exp()
}

/// A closed-form bound on the benefit threshold, evaluated verbatim; it
/// can leave [0, 1] (flagged), in which case the numeric
/// [`threshold_numeric`] solver is the authoritative threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdBound {
    pub value: f64,
    pub in_unit_interval: bool,
}

impl ThresholdBound {
    fn new(value: f64) -> Self {
        Self {
            value,
            in_unit_interval: (0.0..=1.0).contains(&value),
        }
    }
}

/// Two-operator benefit bound, evaluated as printed:
/// 1 - 3 (1 + (1+b)^(2/3) 4^(-b/3)) / (b ((1+b) ln 4 - 3)).
pub fn threshold_bound_n2(beta2: f64) -> ThresholdBound {
    let b = beta2;
    let ln4 = 4.0_f64.ln();
    ThresholdBound::new(
        1.0 - 3.0 * (1.0 + (1.0 + b).powf(2.0 / 3.0) * 4.0_f64.powf(-b / 3.0))
            / (b * ((1.0 + b) * ln4 - 3.0)),
    )
}

/// N-operator benefit bound: (N - N^(2/3)) / (N - 1).
pub fn threshold_bound_n(n_operators: usize) -> ThresholdBound {
    let n = n_operators as f64;
    ThresholdBound::new((n - n.cbrt().powi(2)) / (n - 1.0))
}

/// Largest co-location factor p in [0, 1] with `gain(p) >= 1`, by bisection
/// to [`THRESHOLD_BISECTION_TOL`]. `Ok(None)` means the gain stays >= 1 on
/// the whole interval; a gain already below 1 at p = 0 is an error.
pub fn threshold_numeric(gain: impl Fn(f64) -> f64) -> Result<Option<f64>, AnalyticsError> {
    if gain(0.0) < 1.0 {
        return Err(AnalyticsError::NoBenefit);
    }
    if gain(1.0) >= 1.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > THRESHOLD_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if gain(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Probability that a point sees no tower within `r`: exp(-pi lambda r^2).
pub fn not_covered_probability(lambda_tower_eff: f64, radius: f64) -> f64 {
    (-std::f64::consts::PI * lambda_tower_eff * radius * radius).exp()
}

/// Smallest radius meeting coverage target theta:
/// sqrt(-ln(1 - theta) / (pi lambda_tower_eff)).
pub fn coverage_min_radius(theta: f64, lambda_tower_eff: f64) -> Result<f64, AnalyticsError> {
    if theta == 1.0 {
        return Err(AnalyticsError::InfiniteRadius);
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(AnalyticsError::InvalidCoverageTarget(theta));
    }
    Ok((-(1.0 - theta).ln() / (std::f64::consts::PI * lambda_tower_eff)).sqrt())
}

/// Bandwidth needed so the optimal radius reaches the coverage target:
/// (-ln(1-theta) / (pi lambda_tower_eff))^(3/2) * lambda_user_eff * pi / e^{-1 + E[ln C]}.
pub fn required_bandwidth(theta: f64, inputs: &AnalyticInputs) -> Result<f64, AnalyticsError> {
    let r_min = coverage_min_radius(theta, inputs.lambda_tower_eff)?;
    let (e_log_c, _) = inputs.e_log_c()?;
    Ok(r_min.powi(3) * inputs.lambda_user_eff * std::f64::consts::PI / (-1.0 + e_log_c).exp())
}

/// Large-N diagnostics: scaled optimal radius and gain against their limits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingDiagnostics {
    pub n_operators: usize,
    pub colocation_p: f64,
    /// N^(1/3) * r_opt.
    pub scaled_r_opt: f64,
    /// cbrt(w / (lambda_u * pi * e)), the p < 1 limit of the above.
    pub r_opt_limit: f64,
    /// G^N(p) / N^(1/3).
    pub gain_ratio: f64,
    /// 1 - p, the limit of the above.
    pub gain_limit: f64,
}

/// Evaluate the large-N scaling of `r_opt` and the sharing gain for N equal
/// operators with per-operator densities (lambda_bs, lambda_u).
pub fn scaling_limits(
    n_operators: usize,
    colocation_p: f64,
    lambda_bs: f64,
    lambda_u: f64,
    bandwidth_w: f64,
) -> ScalingDiagnostics {
    let betas = vec![1.0; n_operators.saturating_sub(1)];
    let inputs = AnalyticInputs::new(
        n_operators,
        colocation_p,
        betas,
        lambda_bs,
        lambda_u,
        bandwidth_w,
    );
    let e_log_c = if n_operators <= EXACT_E_LOG_C_MAX_OPERATORS {
        e_log_c_exact(n_operators, colocation_p, &inputs.betas).expect("within exact range")
    } else {
        e_log_c_taylor(n_operators, colocation_p)
    };
    let n = n_operators as f64;
    ScalingDiagnostics {
        n_operators,
        colocation_p,
        scaled_r_opt: n.cbrt() * optimal_radius_with(&inputs, e_log_c),
        r_opt_limit: (bandwidth_w / (lambda_u * std::f64::consts::PI * std::f64::consts::E)).cbrt(),
        gain_ratio: gain_n(n_operators, colocation_p) / n.cbrt(),
        gain_limit: 1.0 - colocation_p,
    }
}

/// Sharing gains where the scenario admits them.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Gains {
    pub g_type1: Option<f64>,
    pub g_type2: Option<f64>,
    pub g_n: Option<f64>,
}

/// Benefit thresholds: closed-form bounds plus the numeric solver result.
#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    pub p_bound_n2: Option<ThresholdBound>,
    pub p_bound_n: Option<ThresholdBound>,
    /// Largest p with gain >= 1; `None` with `benefit_everywhere = true`
    /// means the gain never drops below 1.
    pub p_star_numeric: Option<f64>,
    pub benefit_everywhere: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub theta: f64,
    pub r_min_m: f64,
    pub w_required_hz: f64,
}

/// Full analytic characterization of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    pub n_operators: usize,
    pub colocation_p: f64,
    pub betas: Vec<f64>,
    pub lambda_bs: f64,
    pub lambda_u: f64,
    pub bandwidth_w: f64,
    pub lambda_tower_eff: f64,
    pub lambda_user_eff: f64,
    pub e_log_c: f64,
    pub e_log_c_method: ElogCMethod,
    pub r_opt_m: f64,
    pub s_opt: f64,
    pub gains: Gains,
    pub thresholds: Option<Thresholds>,
    pub coverage: CoverageReport,
}

/// Build the analytic report for a scenario; `theta` is the coverage target
/// used for the coverage block.
pub fn build_report(inputs: &AnalyticInputs, theta: f64) -> Result<AnalyticReport, AnalyticsError> {
    let (e_log_c, method) = inputs.e_log_c()?;
    let r_opt = optimal_radius_with(inputs, e_log_c);
    let s_opt = optimal_strength_with(inputs, e_log_c);

    let equal = inputs.equal_ratios();
    let n = inputs.n_operators;
    let gains = if n == 1 {
        Gains {
            g_type1: Some(1.0),
            g_type2: Some(1.0),
            g_n: Some(1.0),
        }
    } else {
        Gains {
            g_type1: (n == 2).then(|| gain_type1(inputs.betas[0], inputs.colocation_p)),
            g_type2: (n == 2).then(|| gain_type2(inputs.betas[0], inputs.colocation_p)),
            g_n: equal.then(|| gain_n(n, inputs.colocation_p)),
        }
    };

    let thresholds = if n == 1 {
        None
    } else {
        let gain_at = |p: f64| -> Option<f64> {
            if n == 2 {
                Some(gain_type1(inputs.betas[0], p))
            } else if equal {
                Some(gain_n(n, p))
            } else {
                None
            }
        };
        let (p_star, everywhere) = match gain_at(0.0) {
            Some(_) => match threshold_numeric(|p| gain_at(p).unwrap()) {
                Ok(Some(p)) => (Some(p), false),
                Ok(None) => (None, true),
                Err(_) => (None, false),
            },
            None => (None, false),
        };
        Some(Thresholds {
            p_bound_n2: (n == 2).then(|| threshold_bound_n2(inputs.betas[0])),
            p_bound_n: Some(threshold_bound_n(n)),
            p_star_numeric: p_star,
            benefit_everywhere: everywhere,
        })
    };

    let coverage = CoverageReport {
        theta,
        r_min_m: coverage_min_radius(theta, inputs.lambda_tower_eff)?,
        w_required_hz: required_bandwidth(theta, inputs)?,
    };

    Ok(AnalyticReport {
        n_operators: inputs.n_operators,
        colocation_p: inputs.colocation_p,
        betas: inputs.betas.clone(),
        lambda_bs: inputs.lambda_bs,
        lambda_u: inputs.lambda_u,
        bandwidth_w: inputs.bandwidth_w,
        lambda_tower_eff: inputs.lambda_tower_eff,
        lambda_user_eff: inputs.lambda_user_eff,
        e_log_c,
        e_log_c_method: method,
        r_opt_m: r_opt,
        s_opt,
        gains,
        thresholds,
        coverage,
    })
}

impl AnalyticReport {
    pub const CSV_HEADER: &'static str = "n_operators,colocation_p,betas,e_log_c,e_log_c_method,r_opt_m,s_opt,g_type1,g_type2,g_n,p_star_numeric,benefit_everywhere,p_bound_n2,p_bound_n2_in_unit,p_bound_n,theta,r_min_m,w_required_hz";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let betas = self
            .betas
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join("|");
        let (p_star, everywhere, bound2, bound2_in, bound_n) = match &self.thresholds {
            Some(t) => (
                opt(t.p_star_numeric),
                t.benefit_everywhere.to_string(),
                opt(t.p_bound_n2.map(|b| b.value)),
                t.p_bound_n2
                    .map(|b| b.in_unit_interval.to_string())
                    .unwrap_or_default(),
                opt(t.p_bound_n.map(|b| b.value)),
            ),
            None => Default::default(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n_operators,
            self.colocation_p,
            betas,
            self.e_log_c,
            self.e_log_c_method,
            self.r_opt_m,
            self.s_opt,
            opt(self.gains.g_type1),
            opt(self.gains.g_type2),
            opt(self.gains.g_n),
            p_star,
            everywhere,
            bound2,
            bound2_in,
            bound_n,
            self.coverage.theta,
            self.coverage.r_min_m,
            self.coverage.w_required_hz,
        )
    }
}

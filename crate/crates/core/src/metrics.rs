//! Per-user quality measures on a realized network.
//!
//! Strength is the proportional-fair logarithmic utility
//! `S_i = sum over towers in range of ln(w C / (D R^alpha))` in nats;
//! capacity is the Shannon rate `(w C / D) ln(1 + K R^-alpha)`. Means are
//! taken over all users, with disconnected users contributing zero.

use crate::network::NetworkGraph;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metric undefined on a network without users")]
    EmptyNetwork,
    #[error("user {user} and tower {tower} are co-located; the SNR is singular at zero distance")]
    SingularGeometry { user: usize, tower: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KConvention {
    /// `k_factor` is the linear SNR scale.
    Linear,
    /// `k_factor` is in dB: linear = 10^(k/10).
    Db,
}

/// SNR scale and path-loss exponent for the channel-capacity metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub k_factor: f64,
    pub k_convention: KConvention,
    pub alpha: f64,
}

impl Default for RadioParams {
    /// 111 dB SNR scale and free-space-like exponent 2.
    fn default() -> Self {
        Self {
            k_factor: 111.0,
            k_convention: KConvention::Db,
            alpha: 2.0,
        }
    }
}

impl RadioParams {
    pub fn linear(k: f64, alpha: f64) -> Self {
        Self {
            k_factor: k,
            k_convention: KConvention::Linear,
            alpha,
        }
    }

    pub fn k_linear(&self) -> f64 {
        match self.k_convention {
            KConvention::Linear => self.k_factor,
            KConvention::Db => 10f64.powf(self.k_factor / 10.0),
        }
    }
}

/// Strength of one user: sum over its in-range towers of
/// `ln(w C / (D R^alpha))`; zero when disconnected.
pub fn user_strength(net: &NetworkGraph, user: usize, bandwidth_w: f64, alpha: f64) -> f64 {
    net.edges[user]
        .iter()
        .map(|&(t, dist)| {
            let c = net.towers[t].resource_count() as f64;
            let d = net.tower_degrees[t] as f64;
            (bandwidth_w * c / (d * dist.powf(alpha))).ln()
        })
        .sum()
}

/// Shannon capacity of a single link: `(w C / D) ln(1 + K R^-alpha)`.
pub fn link_capacity(
    resource_count: usize,
    degree: usize,
    distance: f64,
    bandwidth_w: f64,
    radio: &RadioParams,
) -> f64 {
    let snr = radio.k_linear() * distance.powf(-radio.alpha);
    bandwidth_w * resource_count as f64 / degree as f64 * (1.0 + snr).ln()
}

/// Total capacity of one user across its links; zero when disconnected.
/// A zero-distance link is a singular geometry.
pub fn user_capacity(
    net: &NetworkGraph,
    user: usize,
    bandwidth_w: f64,
    radio: &RadioParams,
) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    for &(t, dist) in &net.edges[user] {
        if dist == 0.0 {
            return Err(MetricsError::SingularGeometry { user, tower: t });
        }
        total += link_capacity(
            net.towers[t].resource_count(),
            net.tower_degrees[t],
            dist,
            bandwidth_w,
            radio,
        );
    }
    Ok(total)
}

/// Fraction of users connected to at least one tower.
pub fn coverage_fraction(net: &NetworkGraph) -> Result<f64, MetricsError> {
    if net.n_users() == 0 {
        return Err(MetricsError::EmptyNetwork);
    }
    let covered = net.edges.iter().filter(|links| !links.is_empty()).count();
    Ok(covered as f64 / net.n_users() as f64)
}

/// Empirical aggregates of one realization. All per-user means run over the
/// full user population, disconnected users included.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsSummary {
    pub n_users: usize,
    pub n_towers: usize,
    pub mean_user_degree: f64,
    pub mean_tower_degree: f64,
    pub coverage_fraction: f64,
    /// Mean strength per user, nats.
    pub mean_strength: f64,
    /// Mean strength restricted to each operator's users.
    pub mean_strength_by_type: BTreeMap<u16, f64>,
    /// Mean summed link capacity per user.
    pub mean_capacity: f64,
}

/// Compute every summary field of a realization.
pub fn summarize(
    net: &NetworkGraph,
    bandwidth_w: f64,
    alpha: f64,
    radio: &RadioParams,
) -> Result<MetricsSummary, MetricsError> {
    if net.n_users() == 0 {
        return Err(MetricsError::EmptyNetwork);
    }
    let n = net.n_users() as f64;
    let mut strength_sum = 0.0;
    let mut capacity_sum = 0.0;
    let mut by_type: BTreeMap<u16, (f64, usize)> = BTreeMap::new();
    for (i, user) in net.users.iter().enumerate() {
        let s = user_strength(net, i, bandwidth_w, alpha);
        strength_sum += s;
        capacity_sum += user_capacity(net, i, bandwidth_w, radio)?;
        let slot = by_type.entry(user.operator).or_insert((0.0, 0));
        slot.0 += s;
        slot.1 += 1;
    }
    let mean_tower_degree = if net.n_towers() == 0 {
        0.0
    } else {
        net.tower_degrees.iter().sum::<usize>() as f64 / net.n_towers() as f64
    };
    Ok(MetricsSummary {
        n_users: net.n_users(),
        n_towers: net.n_towers(),
        mean_user_degree: net.total_edges() as f64 / n,
        mean_tower_degree,
        coverage_fraction: coverage_fraction(net)?,
        mean_strength: strength_sum / n,
        mean_strength_by_type: by_type
            .into_iter()
            .map(|(k, (sum, count))| (k, sum / count as f64))
            .collect(),
        mean_capacity: capacity_sum / n,
    })
}

impl MetricsSummary {
    /// Column names for [`csv_row`](Self::csv_row); per-type strength columns
    /// follow for operators `1..=n_operators`.
    pub fn csv_header(n_operators: usize) -> String {
        let mut header = String::from(
            "n_users,n_towers,mean_user_degree,mean_tower_degree,coverage_fraction,mean_strength,mean_capacity",
        );
        for k in 1..=n_operators {
            header.push_str(&format!(",mean_strength_type_{k}"));
        }
        header
    }

    pub fn csv_row(&self, n_operators: usize) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{}",
            self.n_users,
            self.n_towers,
            self.mean_user_degree,
            self.mean_tower_degree,
            self.coverage_fraction,
            self.mean_strength,
            self.mean_capacity,
        );
        for k in 1..=n_operators {
            let v = self
                .mean_strength_by_type
                .get(&(k as u16))
                .copied()
                .unwrap_or(0.0);
            row.push_str(&format!(",{v}"));
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Region};
    use crate::network::{associate, AssociationMode, Tower, TypedUser};
    use proptest::prelude::*;

    fn tiny_net(towers: Vec<Tower>, users: Vec<TypedUser>, radius: f64) -> NetworkGraph {
        let region = Region::truncate(1000.0, 1000.0);
        associate(towers, users, radius, region, AssociationMode::Shared).unwrap()
    }

    fn user_at(x: f64, y: f64) -> TypedUser {
        TypedUser {
            location: Point::new(x, y),
            operator: 1,
        }
    }

    #[test]
    fn disconnected_user_has_zero_strength_and_capacity() {
        let net = tiny_net(
            vec![Tower::new(Point::new(900.0, 900.0), vec![1])],
            vec![user_at(10.0, 10.0)],
            50.0,
        );
        assert_eq!(user_strength(&net, 0, 1e7, 1.0), 0.0);
        assert_eq!(
            user_capacity(&net, 0, 1e7, &RadioParams::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn unit_argument_gives_zero_strength() {
        // One tower: w=10, C=2, D=4, R=5 -> ln(10*2 / (4*5)) = ln 1 = 0.
        let towers = vec![Tower::new(Point::new(0.0, 0.0), vec![1, 2])];
        let users = vec![
            user_at(5.0, 0.0),
            user_at(0.0, 5.0),
            user_at(3.0, 4.0),
            user_at(4.0, 3.0),
        ];
        let net = tiny_net(towers, users, 5.0);
        assert_eq!(net.tower_degrees[0], 4);
        assert!(user_strength(&net, 0, 10.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_tower_strength_matches_hand_evaluation() {
        // ln(1e7 * 1 / (100 * 200)) + ln(1e7 * 2 / (50 * 100)) = ln 500 + ln 4000.
        let net = NetworkGraph {
            towers: vec![
                Tower::new(Point::new(0.0, 0.0), vec![1]),
                Tower::new(Point::new(10.0, 0.0), vec![1, 2]),
            ],
            users: vec![user_at(0.0, 0.0)],
            edges: vec![vec![(0, 200.0), (1, 100.0)]],
            tower_degrees: vec![100, 50],
            radius: 300.0,
            region: Region::truncate(1000.0, 1000.0),
        };
        let s = user_strength(&net, 0, 1e7, 1.0);
        assert!((s - 14.5086).abs() < 1e-4);
        assert!((s - (500f64.ln() + 4000f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn capacity_examples_and_monotonicity() {
        let radio = RadioParams::linear(1.0, 2.0);
        // w=1e7, C=1, D=1, R=1, alpha=2, K=1 -> 1e7 ln 2.
        let c = link_capacity(1, 1, 1.0, 1e7, &radio);
        assert!((c - 1e7 * std::f64::consts::LN_2).abs() < 1e-3);

        // Zero SNR scale: zero capacity.
        assert_eq!(
            link_capacity(1, 1, 1.0, 1e7, &RadioParams::linear(0.0, 2.0)),
            0.0
        );

        // Non-increasing in distance and in degree.
        let radio = RadioParams::default();
        let mut prev = f64::INFINITY;
        for r in [1.0, 10.0, 100.0, 1000.0] {
            let v = link_capacity(1, 10, r, 1e7, &radio);
            assert!(v < prev);
            prev = v;
        }
        assert!(link_capacity(1, 20, 50.0, 1e7, &radio) < link_capacity(1, 10, 50.0, 1e7, &radio));
    }

    #[test]
    fn zero_distance_link_is_singular() {
        let net = NetworkGraph {
            towers: vec![Tower::new(Point::new(1.0, 1.0), vec![1])],
            users: vec![user_at(1.0, 1.0)],
            edges: vec![vec![(0, 0.0)]],
            tower_degrees: vec![1],
            radius: 1.0,
            region: Region::truncate(10.0, 10.0),
        };
        assert!(matches!(
            user_capacity(&net, 0, 1e7, &RadioParams::default()),
            Err(MetricsError::SingularGeometry { .. })
        ));
    }

    #[test]
    fn db_convention_converts_to_linear() {
        let radio = RadioParams::default();
        assert!((radio.k_linear() - 10f64.powf(11.1)).abs() / 10f64.powf(11.1) < 1e-12);
        assert_eq!(RadioParams::linear(2.5, 1.0).k_linear(), 2.5);
    }

    #[test]
    fn coverage_edges() {
        let towers = vec![Tower::new(Point::new(100.0, 100.0), vec![1])];
        let users = vec![user_at(100.0, 120.0), user_at(500.0, 500.0)];
        let net = tiny_net(towers.clone(), users.clone(), 0.0);
        assert_eq!(coverage_fraction(&net).unwrap(), 0.0);
        let net = tiny_net(towers.clone(), users.clone(), 2000.0);
        assert_eq!(coverage_fraction(&net).unwrap(), 1.0);
        let empty = tiny_net(towers, vec![], 10.0);
        assert!(matches!(
            coverage_fraction(&empty),
            Err(MetricsError::EmptyNetwork)
        ));
    }

    #[test]
    fn summary_of_single_link_equals_that_user() {
        let towers = vec![Tower::new(Point::new(0.0, 0.0), vec![1])];
        let users = vec![user_at(30.0, 40.0)]; // distance 50
        let net = tiny_net(towers, users, 100.0);
        let summary = summarize(&net, 1e7, 1.0, &RadioParams::default()).unwrap();
        assert!((summary.mean_strength - user_strength(&net, 0, 1e7, 1.0)).abs() < 1e-15);
        assert_eq!(summary.coverage_fraction, 1.0);
        assert_eq!(summary.mean_user_degree, 1.0);
    }

    #[test]
    fn summary_of_fully_disconnected_network_is_zero() {
        let towers = vec![Tower::new(Point::new(0.0, 0.0), vec![1])];
        let users = vec![user_at(500.0, 500.0), user_at(600.0, 600.0)];
        let net = tiny_net(towers, users, 1.0);
        let summary = summarize(&net, 1e7, 1.0, &RadioParams::default()).unwrap();
        assert_eq!(summary.mean_strength, 0.0);
        assert_eq!(summary.coverage_fraction, 0.0);
        assert_eq!(summary.mean_capacity, 0.0);
    }

    #[test]
    fn by_type_means_average_to_the_overall_mean() {
        let towers = vec![
            Tower::new(Point::new(100.0, 100.0), vec![1, 2]),
            Tower::new(Point::new(300.0, 100.0), vec![2]),
        ];
        let users = vec![
            TypedUser {
                location: Point::new(120.0, 100.0),
                operator: 1,
            },
            TypedUser {
                location: Point::new(140.0, 110.0),
                operator: 1,
            },
            TypedUser {
                location: Point::new(290.0, 110.0),
                operator: 2,
            },
            TypedUser {
                location: Point::new(700.0, 700.0),
                operator: 2,
            },
        ];
        let net = tiny_net(towers, users, 80.0);
        let summary = summarize(&net, 1e7, 1.0, &RadioParams::default()).unwrap();
        let weighted: f64 = summary
            .mean_strength_by_type
            .iter()
            .map(|(&k, &mean)| {
                let count = net.users.iter().filter(|u| u.operator == k).count() as f64;
                mean * count
            })
            .sum::<f64>()
            / net.n_users() as f64;
        assert!((weighted - summary.mean_strength).abs() < 1e-12);
    }

    #[test]
    fn summary_is_invariant_under_user_permutation() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let towers = vec![
            Tower::new(Point::new(100.0, 100.0), vec![1]),
            Tower::new(Point::new(400.0, 400.0), vec![1, 2]),
            Tower::new(Point::new(800.0, 200.0), vec![2]),
        ];
        let mut users: Vec<TypedUser> = (0..200)
            .map(|i| TypedUser {
                location: Point::new((i * 37 % 1000) as f64, (i * 173 % 1000) as f64),
                operator: 1 + (i % 2) as u16,
            })
            .collect();
        let base = summarize(
            &tiny_net(towers.clone(), users.clone(), 250.0),
            1e7,
            1.0,
            &RadioParams::default(),
        )
        .unwrap();
        users.shuffle(&mut rng);
        let shuffled = summarize(
            &tiny_net(towers, users, 250.0),
            1e7,
            1.0,
            &RadioParams::default(),
        )
        .unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        assert!(rel(base.mean_strength, shuffled.mean_strength));
        assert!(rel(base.mean_capacity, shuffled.mean_capacity));
        assert_eq!(base.coverage_fraction, shuffled.coverage_fraction);
        assert_eq!(
            base.mean_strength_by_type.len(),
            shuffled.mean_strength_by_type.len()
        );
        for (k, v) in &base.mean_strength_by_type {
            assert!(rel(*v, shuffled.mean_strength_by_type[k]));
        }
    }

    #[test]
    fn csv_row_matches_header_arity() {
        let towers = vec![Tower::new(Point::new(0.0, 0.0), vec![1])];
        let net = tiny_net(towers, vec![user_at(10.0, 0.0)], 20.0);
        let summary = summarize(&net, 1e7, 1.0, &RadioParams::default()).unwrap();
        assert_eq!(
            summary.csv_row(2).split(',').count(),
            MetricsSummary::csv_header(2).split(',').count()
        );
    }

    proptest! {
        #[test]
        fn strength_summand_decomposes_into_logs(
            w in 1e3f64..1e9,
            c in 1usize..8,
            d in 1usize..2000,
            dist in 0.1f64..5e3,
            alpha in 0.5f64..3.0,
        ) {
            // ln(w C / (D R^alpha)) = ln w + ln C - ln D - alpha ln R.
            let net = NetworkGraph {
                towers: vec![Tower::new(Point::new(0.0, 0.0), vec![1; c])],
                users: vec![user_at(0.0, 0.0)],
                edges: vec![vec![(0, dist)]],
                tower_degrees: vec![d],
                radius: dist,
                region: Region::truncate(1e4, 1e4),
            };
            let s = user_strength(&net, 0, w, alpha);
            let decomposed = w.ln() + (c as f64).ln() - (d as f64).ln() - alpha * dist.ln();
            let tol = 1e-12 * s.abs().max(1.0);
            prop_assert!((s - decomposed).abs() <= tol);
        }
    }
}

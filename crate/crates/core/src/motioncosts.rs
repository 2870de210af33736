//! Preferred-speed cost, logistic squashing and the two social grouping
//! terms between pairs of hypotheses.

use serde::{Deserialize, Serialize};

use crate::trackdata::{dist, Hypothesis, Scenario, Track};

/// Lower bound on a camera's speed deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Normal model of boundary walking speeds in one camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedStats {
    pub mu: f64,
    pub sigma: f64,
    /// Fewer than two tracks had a measurable step.
    pub degenerate: bool,
}

/// Mean and population deviation of all entry and exit step speeds.
pub fn camera_speed_stats(tracks: &[Track]) -> SpeedStats {
    let mut steps = Vec::with_capacity(2 * tracks.len());
    let mut usable = 0;
    for t in tracks {
        if let (Some(entry), Some(exit)) = (t.entry_speed(), t.exit_speed()) {
            steps.push(exit);
            steps.push(entry);
            usable += 1;
        }
    }
    if steps.is_empty() {
        return SpeedStats {
            mu: 0.0,
            sigma: SIGMA_FLOOR,
            degenerate: true,
        };
    }
    let n = steps.len() as f64;
    let mu = steps.iter().sum::<f64>() / n;
    let var = steps.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / n;
    SpeedStats {
        mu,
        sigma: var.sqrt().max(SIGMA_FLOOR),
        degenerate: usable < 2,
    }
}

/// `|z(exit speed of a) - z(entry speed of b)|`, each z-scored against its
/// own camera. `None` when either track has a single point.
pub fn speed_cost(a: &Track, b: &Track, sa: &SpeedStats, sb: &SpeedStats) -> Option<f64> {
    let exit = (a.exit_speed()? - sa.mu) / sa.sigma;
    let entry = (b.entry_speed()? - sb.mu) / sb.sigma;
    Some((exit - entry).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquashParams {
    pub alpha: f64,
    pub beta: f64,
}

/// `alpha / (1 + exp(-beta * phi))`, evaluated without overflow.
pub fn squash(phi: f64, p: SquashParams) -> f64 {
    p.alpha * logistic(p.beta * phi)
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Travel-distance consistency between two hypotheses whose exits and
/// entries are both close. Speeds are raw step lengths per frame.
pub fn spatial_grouping_cost(m1: Hypothesis, m2: Hypothesis, s: &Scenario) -> f64 {
    let (a1, b1) = (&s.tracks_a[m1.i_a], &s.tracks_b[m1.j_b]);
    let (a2, b2) = (&s.tracks_a[m2.i_a], &s.tracks_b[m2.j_b]);
    let gate = (-dist(a1.exit_point(), a2.exit_point())).exp()
        * (-dist(b1.entry_point(), b2.entry_point())).exp();
    if gate == 0.0 {
        return 0.0;
    }
    let travelled = |a: &Track, b: &Track, m: Hypothesis| {
        let speed = a.exit_speed().unwrap_or(0.0) + b.entry_speed().unwrap_or(0.0);
        speed * s.gap(m) as f64
    };
    gate * (travelled(a1, b1, m1) - travelled(a2, b2, m2)).abs()
}

/// Reward for exiting and entering together: `exp(-(|d exit| + |d entry| +
/// |d entry time| + |d exit time|))`, in `(0, 1]`.
pub fn social_grouping_cost(m1: Hypothesis, m2: Hypothesis, s: &Scenario) -> f64 {
    let (a1, b1) = (&s.tracks_a[m1.i_a], &s.tracks_b[m1.j_b]);
    let (a2, b2) = (&s.tracks_a[m2.i_a], &s.tracks_b[m2.j_b]);
    let spread = dist(a1.exit_point(), a2.exit_point())
        + dist(b1.entry_point(), b2.entry_point())
        + (b1.entry_time() - b2.entry_time()).abs() as f64
        + (a1.exit_time() - a2.exit_time()).abs() as f64;
    (-spread).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{scenario_from, track_pts};
    use proptest::prelude::*;

    #[test]
    fn uniform_steps_floor_sigma() {
        let tracks = vec![
            track_pts("a0", "a", &[(0, 0.0, 0.0), (1, 2.0, 0.0), (2, 4.0, 0.0)]),
            track_pts("a1", "a", &[(5, 0.0, 0.0), (6, 0.0, 2.0)]),
        ];
        let st = camera_speed_stats(&tracks);
        assert_eq!(st.mu, 2.0);
        assert_eq!(st.sigma, SIGMA_FLOOR);
        assert!(!st.degenerate);
    }

    #[test]
    fn steps_one_and_three() {
        let tracks = vec![
            track_pts("a0", "a", &[(0, 0.0, 0.0), (1, 1.0, 0.0)]),
            track_pts("a1", "a", &[(0, 0.0, 0.0), (1, 3.0, 0.0)]),
        ];
        let st = camera_speed_stats(&tracks);
        assert!((st.mu - 2.0).abs() < 1e-12);
        assert!((st.sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_tracks_are_degenerate() {
        let tracks = vec![track_pts("a0", "a", &[(0, 0.0, 0.0)])];
        let st = camera_speed_stats(&tracks);
        assert!(st.degenerate);
        assert_eq!((st.mu, st.sigma), (0.0, SIGMA_FLOOR));
    }

    #[test]
    fn speed_cost_zero_at_means() {
        let sa = SpeedStats { mu: 1.5, sigma: 0.5, degenerate: false };
        let sb = SpeedStats { mu: 3.0, sigma: 1.0, degenerate: false };
        let a = track_pts("a0", "a", &[(0, 0.0, 0.0), (1, 1.5, 0.0)]);
        let b = track_pts("b0", "b", &[(9, 0.0, 0.0), (10, 0.0, 3.0)]);
        assert!(speed_cost(&a, &b, &sa, &sb).unwrap().abs() < 1e-12);
    }

    #[test]
    fn speed_cost_subtracts_z_scores() {
        let sa = SpeedStats { mu: 1.0, sigma: 0.2, degenerate: false };
        let sb = SpeedStats { mu: 2.0, sigma: 0.4, degenerate: false };
        // exit z = (1.3 - 1.0)/0.2 = 1.5, entry z = (1.8 - 2.0)/0.4 = -0.5
        let a = track_pts("a0", "a", &[(0, 0.0, 0.0), (1, 1.3, 0.0)]);
        let b = track_pts("b0", "b", &[(9, 0.0, 0.0), (10, 0.0, 1.8)]);
        assert!((speed_cost(&a, &b, &sa, &sb).unwrap() - 2.0).abs() < 1e-12);
        let lone = track_pts("b1", "b", &[(3, 0.0, 0.0)]);
        assert_eq!(speed_cost(&a, &lone, &sa, &sb), None);
    }

    #[test]
    fn squash_values() {
        let p = SquashParams { alpha: 1.0, beta: 1.0 };
        assert_eq!(squash(0.0, p), 0.5);
        assert_eq!(squash(1e6, p), 1.0);
        assert_eq!(squash(-1e6, p), 0.0);
        let v = squash(1.0, SquashParams { alpha: 1.0, beta: 2.0 });
        assert!((v - 0.880_797_077_977_882_4).abs() < 1e-12);
    }

    fn pair_scenario(exit2: [f64; 2], entry2: [f64; 2], t_exit2: i64, t_entry2: i64) -> Scenario {
        scenario_from(
            vec![
                track_pts("a0", "a", &[(0, -1.0, 0.0), (10, 0.0, 0.0)]),
                track_pts("a1", "a", &[(0, exit2[0] - 1.0, exit2[1]), (t_exit2, exit2[0], exit2[1])]),
            ],
            vec![
                track_pts("b0", "b", &[(40, 5.0, 5.0), (50, 5.0, 6.0)]),
                track_pts("b1", "b", &[(t_entry2, entry2[0], entry2[1]), (t_entry2 + 10, entry2[0], entry2[1] + 1.0)]),
            ],
        )
    }

    #[test]
    fn social_grouping_values() {
        let m1 = Hypothesis::new(0, 0);
        let m2 = Hypothesis::new(1, 1);
        let s = pair_scenario([0.0, 0.0], [5.0, 5.0], 10, 40);
        assert_eq!(social_grouping_cost(m1, m2, &s), 1.0);
        let s = pair_scenario([1.0, 0.0], [5.0, 6.0], 11, 41);
        assert!((social_grouping_cost(m1, m2, &s) - (-4.0f64).exp()).abs() < 1e-15);
        let s = pair_scenario([1e4, 0.0], [5.0, 5.0], 10, 40);
        assert_eq!(social_grouping_cost(m1, m2, &s), 0.0);
    }

    #[test]
    fn spatial_grouping_identical_pairs_is_zero() {
        let s = pair_scenario([0.0, 0.0], [5.0, 5.0], 10, 40);
        assert_eq!(spatial_grouping_cost(Hypothesis::new(0, 0), Hypothesis::new(1, 1), &s), 0.0);
        assert_eq!(spatial_grouping_cost(Hypothesis::new(0, 0), Hypothesis::new(0, 0), &s), 0.0);
    }

    #[test]
    fn spatial_grouping_exponential_gate() {
        let s = pair_scenario([10.0, 0.0], [5.0, 5.0], 10, 70);
        let m1 = Hypothesis::new(0, 0);
        let m2 = Hypothesis::new(1, 1);
        // Speeds are 0.1 per frame everywhere; gaps 30 and 60.
        let third = ((0.1 + 0.1) * 30.0 - (0.1f64 + 0.1) * 60.0).abs();
        let v = spatial_grouping_cost(m1, m2, &s);
        assert!(v <= (-10.0f64).exp() * third + 1e-15);
        assert!((v - (-10.0f64).exp() * third).abs() < 1e-12);
    }

    #[test]
    fn spatial_grouping_travel_difference() {
        // Co-located exits and entries; travel distances 30 vs 50 units.
        let s = scenario_from(
            vec![
                track_pts("a0", "a", &[(0, 0.0, 0.0), (1, 0.5, 0.0)]),
                track_pts("a1", "a", &[(0, 0.0, 0.0), (1, 0.5, 0.0)]),
            ],
            vec![
                track_pts("b0", "b", &[(31, 0.0, 0.0), (32, 0.5, 0.0)]),
                track_pts("b1", "b", &[(51, 0.0, 0.0), (52, 0.5, 0.0)]),
            ],
        );
        let v = spatial_grouping_cost(Hypothesis::new(0, 0), Hypothesis::new(1, 1), &s);
        assert!((v - 20.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn squash_monotone_and_bounded(x in -50.0f64..50.0, dx in 1e-3f64..10.0, alpha in 0.1f64..10.0, beta in 0.1f64..5.0) {
            let p = SquashParams { alpha, beta };
            let (lo, hi) = (squash(x, p), squash(x + dx, p));
            prop_assert!(lo < hi || (hi - alpha).abs() < 1e-12);
            prop_assert!(lo > 0.0 && hi <= alpha);
        }

        #[test]
        fn grouping_costs_symmetric(
            e2 in prop::array::uniform2(-5.0f64..5.0),
            n2 in prop::array::uniform2(0.0f64..10.0),
            tx in 5i64..20,
            tn in 25i64..60,
        ) {
            let s = pair_scenario(e2, n2, tx, tn);
            let m1 = Hypothesis::new(0, 0);
            let m2 = Hypothesis::new(1, 1);
            let spt = spatial_grouping_cost(m1, m2, &s);
            let grp = social_grouping_cost(m1, m2, &s);
            prop_assert_eq!(spt, spatial_grouping_cost(m2, m1, &s));
            prop_assert_eq!(grp, social_grouping_cost(m2, m1, &s));
            prop_assert!(spt >= 0.0);
            prop_assert!(grp > 0.0 || grp == 0.0);
            prop_assert!(grp <= 1.0);
        }
    }
}

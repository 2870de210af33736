//! Gate-to-gate transition model: where people exiting camera a reappear in
//! camera b, and how long the trip takes.
//!
//! Destinations are a row-stochastic exit-gate by entry-gate matrix. Travel
//! times per gate pair are Gaussian mixtures (up to five components, count
//! chosen by BIC) blended with a uniform prior. [`em_refine`] alternates
//! between solving the matching with the current model and re-estimating the
//! model from the confident part of that matching.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evaluation::cmc_linear;
use crate::objective::{Assignment, CostModel, Term};
use crate::trackdata::{Hypothesis, Scenario};

/// Lower bound on component variance, in frames squared.
pub const VARIANCE_FLOOR: f64 = 1.0;
/// Default cap on mixture components.
pub const MAX_COMPONENTS: usize = 5;
/// Fraction of the fresh estimate mixed into the travel-time density each round.
pub const MOMENTUM: f64 = 0.15;

const GMM_SEED: u64 = 0x7261_7665_6c00;
const EM_MAX_ITERS: usize = 500;
const EM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    pub fn pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        (-0.5 * d * d / self.variance).exp() / (2.0 * std::f64::consts::PI * self.variance).sqrt()
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * d * d / self.variance - 0.5 * (2.0 * std::f64::consts::PI * self.variance).ln()
    }
}

/// Travel-time density: a uniform prior on `[0, span]` plus Gaussian
/// components. Weights (uniform plus components) sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeDensity {
    pub uniform_weight: f64,
    pub span: f64,
    pub components: Vec<Gaussian>,
}

impl TravelTimeDensity {
    pub fn uniform(span: f64) -> Self {
        TravelTimeDensity {
            uniform_weight: 1.0,
            span,
            components: Vec::new(),
        }
    }

    pub fn mixture(span: f64, components: Vec<Gaussian>) -> Self {
        TravelTimeDensity {
            uniform_weight: 0.0,
            span,
            components,
        }
    }

    pub fn density(&self, dt: f64) -> f64 {
        let flat = if (0.0..=self.span).contains(&dt) && self.span > 0.0 {
            self.uniform_weight / self.span
        } else {
            0.0
        };
        flat + self.components.iter().map(|g| g.weight * g.pdf(dt)).sum::<f64>()
    }

    pub fn total_weight(&self) -> f64 {
        self.uniform_weight + self.components.iter().map(|g| g.weight).sum::<f64>()
    }

    /// Pointwise convex blend `(1 - momentum) * self + momentum * fresh`.
    pub fn blend(&self, fresh: &TravelTimeDensity, momentum: f64) -> Self {
        let keep = 1.0 - momentum;
        let mut components: Vec<Gaussian> = self
            .components
            .iter()
            .map(|g| Gaussian { weight: keep * g.weight, ..*g })
            .chain(fresh.components.iter().map(|g| Gaussian {
                weight: momentum * g.weight,
                ..*g
            }))
            .collect();
        components.retain(|g| g.weight > 1e-9);
        TravelTimeDensity {
            uniform_weight: keep * self.uniform_weight + momentum * fresh.uniform_weight,
            span: self.span,
            components,
        }
    }
}

/// Outcome of a single-K EM run.
#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub components: Vec<Gaussian>,
    /// Log-likelihood before each M-step, then the final value.
    pub log_likelihood: Vec<f64>,
}

impl EmFit {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood.last().expect("at least one evaluation")
    }

    pub fn bic(&self, n: usize) -> f64 {
        let params = 3 * self.components.len() - 1;
        -2.0 * self.final_log_likelihood() + params as f64 * (n as f64).ln()
    }
}

fn log_likelihood(samples: &[f64], comps: &[Gaussian]) -> f64 {
    samples
        .iter()
        .map(|&x| log_sum_exp(comps.iter().filter(|g| g.weight > 0.0).map(|g| g.weight.ln() + g.ln_pdf(x))))
        .sum()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// k-means++ seeding followed by a few Lloyd passes, in one dimension.
fn kmeans_init(samples: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = vec![samples[rng.random_range(0..samples.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = samples
            .iter()
            .map(|x| centers.iter().map(|c| (x - c).powi(2)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            centers.push(centers[0]);
            continue;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = samples.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        centers.push(samples[pick]);
    }
    for _ in 0..10 {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &x in samples {
            let c = nearest(&centers, x);
            sums[c] += x;
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c] / counts[c] as f64;
            }
        }
    }
    centers
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (c, v) in centers.iter().enumerate() {
        if (x - v).abs() < (x - centers[best]).abs() {
            best = c;
        }
    }
    best
}

/// Fits a `k`-component 1-D Gaussian mixture by EM.
pub fn fit_gmm_em(samples: &[f64], k: usize, seed: u64) -> EmFit {
    assert!(!samples.is_empty() && k >= 1);
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeans_init(samples, k, &mut rng);
    let mut comps: Vec<Gaussian> = centers
        .iter()
        .map(|&c| Gaussian {
            weight: 1.0 / k as f64,
            mean: c,
            variance: var / (k * k) as f64,
        })
        .map(|g| Gaussian { variance: g.variance.max(VARIANCE_FLOOR), ..g })
        .collect();

    let mut trace = Vec::new();
    let mut resp = vec![0.0; samples.len() * k];
    for _ in 0..EM_MAX_ITERS {
        // E-step
        let mut ll = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut m = f64::NEG_INFINITY;
            for (r, g) in row.iter_mut().zip(&comps) {
                *r = if g.weight > 0.0 { g.weight.ln() + g.ln_pdf(x) } else { f64::NEG_INFINITY };
                m = m.max(*r);
            }
            let mut s = 0.0;
            for r in row.iter_mut() {
                *r = (*r - m).exp();
                s += *r;
            }
            for r in row.iter_mut() {
                *r /= s;
            }
            ll += m + s.ln();
        }
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= EM_TOL * ll.abs().max(1.0));
        trace.push(ll);
        if converged {
            return EmFit { components: comps, log_likelihood: trace };
        }
        // M-step
        for (c, g) in comps.iter_mut().enumerate() {
            let nk: f64 = (0..samples.len()).map(|i| resp[i * k + c]).sum();
            if nk < 1e-12 {
                g.weight = 0.0;
                continue;
            }
            let mu = samples.iter().enumerate().map(|(i, x)| resp[i * k + c] * x).sum::<f64>() / nk;
            let v = samples
                .iter()
                .enumerate()
                .map(|(i, x)| resp[i * k + c] * (x - mu).powi(2))
                .sum::<f64>()
                / nk;
            *g = Gaussian {
                weight: nk / n,
                mean: mu,
                variance: v.max(VARIANCE_FLOOR),
            };
        }
    }
    trace.push(log_likelihood(samples, &comps));
    EmFit { components: comps, log_likelihood: trace }
}

/// Travel-time density for one gate pair. No samples gives the uniform
/// density on `[0, span]`; fewer than five a single floored Gaussian;
/// otherwise the BIC-best mixture with `1..=min(k_max, n / 5)` components.
pub fn fit_travel_time_gmm(samples: &[f64], k_max: usize, span: f64) -> TravelTimeDensity {
    let n = samples.len();
    if n == 0 {
        return TravelTimeDensity::uniform(span);
    }
    if n < 5 {
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        return TravelTimeDensity::mixture(
            span,
            vec![Gaussian {
                weight: 1.0,
                mean,
                variance: var.max(VARIANCE_FLOOR),
            }],
        );
    }
    let k_top = k_max.max(1).min(n / 5);
    let best = (1..=k_top)
        .map(|k| fit_gmm_em(samples, k, GMM_SEED + k as u64))
        .min_by(|x, y| x.bic(n).total_cmp(&y.bic(n)))
        .expect("at least one candidate K");
    let mut comps = best.components;
    comps.retain(|g| g.weight > 0.0);
    comps.sort_by(|x, y| x.mean.total_cmp(&y.mean));
    TravelTimeDensity::mixture(span, comps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatePairModel {
    /// Blended density used for costs.
    pub density: TravelTimeDensity,
    /// Components of the most recent fresh fit, before blending.
    pub latest_fit: Vec<Gaussian>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateTransitionModel {
    /// `dest[u_a][u_b]`: probability of entering `u_b` after exiting `u_a`.
    pub dest: Vec<Vec<f64>>,
    /// `travel_times[u_a][u_b]`.
    pub travel_times: Vec<Vec<GatePairModel>>,
    /// Refinement rounds applied so far.
    pub iteration: usize,
}

impl GateTransitionModel {
    /// Uniform destinations and travel times on `[0, tau]`.
    pub fn uniform(u_a: usize, u_b: usize, tau: i64) -> Self {
        let pair = GatePairModel {
            density: TravelTimeDensity::uniform(tau as f64),
            latest_fit: Vec::new(),
        };
        GateTransitionModel {
            dest: vec![vec![1.0 / u_b as f64; u_b]; u_a],
            travel_times: vec![vec![pair; u_b]; u_a],
            iteration: 0,
        }
    }

    pub fn for_scenario(s: &Scenario, tau: i64) -> Self {
        Self::uniform(s.camera_a.gates.len(), s.camera_b.gates.len(), tau)
    }

    pub fn travel_density(&self, u_a: usize, u_b: usize, dt: f64) -> f64 {
        self.travel_times[u_a][u_b].density.density(dt)
    }
}

/// Row-normalized exit-gate by entry-gate counts; empty rows are uniform.
pub fn estimate_destination_distribution(matches: &[Hypothesis], s: &Scenario) -> Vec<Vec<f64>> {
    let (u_a, u_b) = (s.camera_a.gates.len(), s.camera_b.gates.len());
    let mut counts = vec![vec![0.0; u_b]; u_a];
    for m in matches {
        counts[s.exit_gate(m.i_a)][s.entry_gate(m.j_b)] += 1.0;
    }
    for row in &mut counts {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|c| *c /= total);
        } else {
            row.iter_mut().for_each(|c| *c = 1.0 / u_b as f64);
        }
    }
    counts
}

/// Negative product of the destination probability and the travel-time
/// density; more negative is more plausible.
pub fn transition_cost(m: Hypothesis, model: &GateTransitionModel, s: &Scenario) -> f64 {
    let (ga, gb) = (s.exit_gate(m.i_a), s.entry_gate(m.j_b));
    -model.dest[ga][gb] * model.travel_density(ga, gb, s.gap(m) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmParams {
    pub rounds: usize,
    pub momentum: f64,
    /// Share of solved matches, cheapest first, used for re-estimation.
    pub confidence_quantile: f64,
    pub max_components: usize,
    pub tau: i64,
}

impl Default for EmParams {
    fn default() -> Self {
        EmParams {
            rounds: 5,
            momentum: MOMENTUM,
            confidence_quantile: 0.5,
            max_components: MAX_COMPONENTS,
            tau: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    /// Number of model updates applied before this round's costs were built.
    pub round: usize,
    /// Linear-cost CMC AUC over ranks 1..=50, when ground truth exists.
    pub cmc_auc_50: Option<f64>,
    /// Matches in this round's solution (absent for the final evaluation).
    pub selected: Option<usize>,
    pub confident: Option<usize>,
    /// Largest total-variation change of a destination row in this update.
    pub dest_change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmOutcome {
    pub model: GateTransitionModel,
    /// One entry per round plus a final entry for the returned model.
    pub diagnostics: Vec<RoundDiagnostics>,
}

/// Re-estimates destinations and travel times from confident matches.
pub fn update_model(
    old: &GateTransitionModel,
    confident: &[Hypothesis],
    s: &Scenario,
    params: &EmParams,
) -> GateTransitionModel {
    let dest = estimate_destination_distribution(confident, s);
    let (u_a, u_b) = (dest.len(), dest[0].len());
    let mut samples = vec![vec![Vec::new(); u_b]; u_a];
    for &m in confident {
        samples[s.exit_gate(m.i_a)][s.entry_gate(m.j_b)].push(s.gap(m) as f64);
    }
    let span = params.tau as f64;
    let fits: Vec<Vec<TravelTimeDensity>> = samples
        .iter()
        .map(|row| {
            row.iter()
                .map(|xs| fit_travel_time_gmm(xs, params.max_components, span))
                .collect()
        })
        .collect();
    let travel_times = old
        .travel_times
        .iter()
        .zip(&fits)
        .map(|(row_old, row_fit)| {
            row_old
                .iter()
                .zip(row_fit)
                .map(|(o, f)| GatePairModel {
                    density: o.density.blend(f, params.momentum),
                    latest_fit: f.components.clone(),
                })
                .collect()
        })
        .collect();
    GateTransitionModel {
        dest,
        travel_times,
        iteration: old.iteration + 1,
    }
}

/// Alternates matching and transition estimation, starting from the uniform
/// model. `build` assembles costs for a model, `solve` matches them.
pub fn em_refine<B, S>(s: &Scenario, mut build: B, mut solve: S, params: &EmParams) -> Result<EmOutcome>
where
    B: FnMut(&GateTransitionModel) -> Result<CostModel>,
    S: FnMut(&CostModel) -> Result<Assignment>,
{
    let mut model = GateTransitionModel::for_scenario(s, params.tau);
    let mut diagnostics = Vec::with_capacity(params.rounds + 1);
    for round in 0..=params.rounds {
        let cm = build(&model)?;
        let cmc_auc_50 = s
            .ground_truth
            .as_ref()
            .map(|gt| cmc_linear(&cm.hypotheses, &cm.linear, gt).auc_50);
        if round == params.rounds {
            diagnostics.push(RoundDiagnostics {
                round,
                cmc_auc_50,
                selected: None,
                confident: None,
                dest_change: None,
            });
            break;
        }
        let z = solve(&cm)?;
        // Confidence leaves out the transition term so the update does not
        // feed on its own previous estimate.
        let tr = cm.linear_terms.get(&Term::Tr);
        let confidence = |k: usize| cm.linear[k] - tr.map_or(0.0, |v| v[k]);
        let mut chosen: Vec<usize> = z.selected().collect();
        chosen.sort_by(|&x, &y| confidence(x).total_cmp(&confidence(y)).then(x.cmp(&y)));
        let keep = ((chosen.len() as f64) * params.confidence_quantile).ceil() as usize;
        let confident: Vec<Hypothesis> = chosen[..keep.min(chosen.len())]
            .iter()
            .map(|&k| cm.hypotheses[k])
            .collect();
        let next = update_model(&model, &confident, s, params);
        let dest_change = model
            .dest
            .iter()
            .zip(&next.dest)
            .map(|(r0, r1)| total_variation(r0, r1))
            .fold(0.0, f64::max);
        diagnostics.push(RoundDiagnostics {
            round,
            cmc_auc_50,
            selected: Some(chosen.len()),
            confident: Some(confident.len()),
            dest_change: Some(dest_change),
        });
        model = next;
    }
    Ok(EmOutcome { model, diagnostics })
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{scenario_with_gates, track_pts};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn gate_scenario() -> Scenario {
        // Camera a gates at x = 0, 10, 20; camera b gates at y = 0, 10, 20.
        let ga = vec![[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]];
        let gb = vec![[0.0, 0.0], [0.0, 10.0], [0.0, 20.0]];
        let exit = |id: &str, x: f64, t: i64| track_pts(id, "a", &[(t - 1, x, 1.0), (t, x, 0.0)]);
        let entry = |id: &str, y: f64, t: i64| track_pts(id, "b", &[(t, 0.0, y), (t + 1, 1.0, y)]);
        scenario_with_gates(
            ga,
            gb,
            vec![
                exit("a0", 10.2, 10),
                exit("a1", 9.7, 12),
                exit("a2", 10.0, 14),
                exit("a3", 10.4, 16),
                exit("a4", 0.3, 18),
            ],
            vec![
                entry("b0", 10.1, 50),
                entry("b1", 9.9, 52),
                entry("b2", 10.3, 54),
                entry("b3", 19.5, 56),
                entry("b4", 0.2, 58),
            ],
        )
    }

    #[test]
    fn destination_counts_are_row_normalized() {
        let s = gate_scenario();
        // Four exits from gate 1; three enter gate 1, one enters gate 2.
        let matches = [(0, 0), (1, 1), (2, 2), (3, 3)].map(|(i, j)| Hypothesis::new(i, j));
        let d = estimate_destination_distribution(&matches, &s);
        assert_eq!(d[1], vec![0.0, 0.75, 0.25]);
        assert_eq!(d[0], vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn no_matches_means_uniform_rows() {
        let s = gate_scenario();
        let d = estimate_destination_distribution(&[], &s);
        assert!(d.iter().all(|row| row.iter().all(|&p| p == 1.0 / 3.0)));
    }

    #[test]
    fn uniform_model_cost() {
        let s = gate_scenario();
        let model = GateTransitionModel::for_scenario(&s, 400);
        let c = transition_cost(Hypothesis::new(0, 0), &model, &s);
        assert!((c + (1.0 / 3.0) * (1.0 / 400.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_destination_probability_gives_no_reward() {
        let s = gate_scenario();
        let mut model = GateTransitionModel::for_scenario(&s, 400);
        model.dest[1] = vec![0.0, 1.0, 0.0];
        assert_eq!(transition_cost(Hypothesis::new(0, 4), &model, &s), 0.0);
        assert!(transition_cost(Hypothesis::new(0, 0), &model, &s) < 0.0);
    }

    #[test]
    fn point_mass_fits_single_floored_component() {
        let d = fit_travel_time_gmm(&[40.0; 12], 5, 1000.0);
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].mean, 40.0);
        assert_eq!(d.components[0].variance, VARIANCE_FLOOR);
        assert_eq!(d.uniform_weight, 0.0);
    }

    #[test]
    fn few_and_no_samples() {
        let d = fit_travel_time_gmm(&[10.0, 14.0], 5, 300.0);
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].mean, 12.0);
        assert_eq!(d.components[0].variance, 4.0);
        let u = fit_travel_time_gmm(&[], 5, 300.0);
        assert_eq!(u, TravelTimeDensity::uniform(300.0));
        assert!((u.density(150.0) - 1.0 / 300.0).abs() < 1e-15);
        assert_eq!(u.density(301.0), 0.0);
    }

    fn bimodal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = Normal::new(30.0, 2.0).unwrap();
        let hi = Normal::new(80.0, 3.0).unwrap();
        (0..n)
            .map(|_| if rng.random::<bool>() { lo.sample(&mut rng) } else { hi.sample(&mut rng) })
            .collect()
    }

    #[test]
    fn planted_bimodal_mixture_is_recovered() {
        for seed in 0..5 {
            let d = fit_travel_time_gmm(&bimodal(200, seed), 5, 1000.0);
            assert_eq!(d.components.len(), 2, "seed {seed}: {:?}", d.components);
            let (c0, c1) = (d.components[0], d.components[1]);
            assert!((c0.mean - 30.0).abs() < 2.0 && (c1.mean - 80.0).abs() < 2.0);
            assert!((c0.weight - 0.5).abs() < 0.1 && (c1.weight - 0.5).abs() < 0.1);
        }
    }

    #[test]
    fn mixture_integrates_to_one() {
        let fit = fit_travel_time_gmm(&bimodal(120, 9), 5, 500.0);
        let blended = TravelTimeDensity::uniform(500.0).blend(&fit, MOMENTUM).blend(&fit, MOMENTUM);
        assert!((blended.total_weight() - 1.0).abs() < 1e-12);
        // Trapezoid rule on a fine grid wide enough for every component.
        let (lo, hi, n) = (-100.0, 700.0, 160_000);
        let h = (hi - lo) / n as f64;
        let mut area = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            area += w * blended.density(x);
        }
        assert!((area * h - 1.0).abs() < 1e-3, "area {}", area * h);
    }

    proptest! {
        #[test]
        fn em_log_likelihood_never_decreases(
            xs in prop::collection::vec(0.0f64..300.0, 5..60),
            k in 1usize..5,
            seed in 0u64..1000,
        ) {
            let fit = fit_gmm_em(&xs, k, seed);
            for w in fit.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
            }
        }

        #[test]
        fn blending_stays_nonnegative(
            xs in prop::collection::vec(0.0f64..300.0, 0..40),
            m in 0.0f64..1.0,
            t in -50.0f64..400.0,
        ) {
            let fresh = fit_travel_time_gmm(&xs, 5, 300.0);
            let b = TravelTimeDensity::uniform(300.0).blend(&fresh, m);
            prop_assert!(b.density(t) >= 0.0);
            prop_assert!((b.total_weight() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn destination_rows_are_stochastic(pairs in prop::collection::vec((0usize..5, 0usize..5), 0..30)) {
            let s = gate_scenario();
            let matches: Vec<Hypothesis> = pairs.into_iter().map(|(i, j)| Hypothesis::new(i, j)).collect();
            for row in estimate_destination_distribution(&matches, &s) {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}

//! Size-K marginal samples from calibrated predictive distributions.
//!
//! Three schemes generate the per-lead samples that the reordering methods
//! rearrange: random inverse-transform draws (R), equidistant quantiles (Q)
//! and stratified draws with one uniform per stratum (S). Samples are kept
//! sorted ascending; ties keep their order of generation.

use crate::dists::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::reorder::TrajectoryEnsemble;
use rand::Rng;

/// Sampling scheme tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Random,
    Quantile,
    Stratified,
}

impl Scheme {
    pub fn letter(&self) -> char {
        match self {
            Scheme::Random => 'R',
            Scheme::Quantile => 'Q',
            Scheme::Stratified => 'S',
        }
    }
}

/// Sorted size-K sample from one lead time's predictive distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSample {
    pub lead_days: u32,
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

impl MarginalSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Uniform draw in the open interval (0, 1).
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        // 1 - U maps [0,1) to (0,1]; reject the endpoint 1.
        let u = 1.0 - rng.random::<f64>();
        if u < 1.0 {
            return u;
        }
    }
}

fn stable_sort(values: &mut [f64]) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite sample values"));
}

/// K iid inverse-transform draws, sorted ascending.
pub fn sample_random<R: Rng + ?Sized>(
    dist: &PredictiveDistribution,
    lead_days: u32,
    k: usize,
    rng: &mut R,
) -> MarginalSample {
    let mut values: Vec<f64> = (0..k).map(|_| dist.sample(rng)).collect();
    stable_sort(&mut values);
    MarginalSample { lead_days, values, scheme: Scheme::Random }
}

/// Equidistant quantiles at k/(K+1), k = 1..K. Deterministic and sorted by
/// construction.
pub fn sample_quantiles(dist: &PredictiveDistribution, lead_days: u32, k: usize) -> MarginalSample {
    let denom = (k + 1) as f64;
    let values: Vec<f64> = (1..=k)
        .map(|i| dist.quantile(i as f64 / denom).expect("p strictly inside (0,1)"))
        .collect();
    MarginalSample { lead_days, values, scheme: Scheme::Quantile }
}

/// Stratified sampling: one quantile draw per stratum `]((k-1)/K, k/K]`.
pub fn sample_stratified<R: Rng + ?Sized>(
    dist: &PredictiveDistribution,
    lead_days: u32,
    k: usize,
    rng: &mut R,
) -> MarginalSample {
    let draws: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
    sample_stratified_with(dist, lead_days, &draws)
}

/// Stratified sampling from explicit per-stratum uniforms in (0, 1].
///
/// Stratum k maps its uniform `u` to the probability `(k - 1 + u)/K`; a
/// value of exactly 1 hits the upper stratum boundary. Exposed so tests can
/// force stratum midpoints.
pub fn sample_stratified_with(
    dist: &PredictiveDistribution,
    lead_days: u32,
    unit_draws: &[f64],
) -> MarginalSample {
    let k = unit_draws.len();
    let mut values: Vec<f64> = unit_draws
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let p = ((i as f64 + u) / k as f64).min(1.0 - f64::EPSILON / 2.0);
            dist.quantile(p).expect("p strictly inside (0,1)")
        })
        .collect();
    stable_sort(&mut values);
    MarginalSample { lead_days, values, scheme: Scheme::Stratified }
}

/// Draw one sample per lead with the given scheme.
pub fn sample_all_leads<R: Rng + ?Sized>(
    dists: &[(u32, PredictiveDistribution)],
    scheme: Scheme,
    k: usize,
    rng: &mut R,
) -> Vec<MarginalSample> {
    dists
        .iter()
        .map(|(lead, dist)| match scheme {
            Scheme::Random => sample_random(dist, *lead, k, rng),
            Scheme::Quantile => sample_quantiles(dist, *lead, k),
            Scheme::Stratified => sample_stratified(dist, *lead, k, rng),
        })
        .collect()
}

/// Rank-aligned multivariate baseline: member k takes the k-th sorted value
/// at every lead, without any reordering step.
pub fn independent_baseline(samples: &[MarginalSample]) -> Result<TrajectoryEnsemble> {
    let Some(first) = samples.first() else {
        return Err(Error::Usage("independent baseline requires at least one lead".into()));
    };
    let k = first.len();
    if samples.iter().any(|s| s.len() != k) {
        return Err(Error::Usage("inconsistent sample sizes across leads".into()));
    }
    let members = (0..k)
        .map(|m| samples.iter().map(|s| s.values[m]).collect())
        .collect();
    Ok(TrajectoryEnsemble::new(members))
}

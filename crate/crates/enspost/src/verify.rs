//! Univariate and multivariate verification.
//!
//! Proper scores (empirical CRPS, energy score, variogram score), rank
//! histograms with reliability indices, multivariate L1 medians with their
//! Euclidean errors, skill scores and the Diebold-Mariano test for equal
//! predictive performance.

use crate::error::{Error, Result};
use crate::reorder::TrajectoryEnsemble;
use rand::Rng;

/// Empirical CRPS of a K-member sample against observation `y`:
/// `(1/K) sum |f_j - y| - (1/(2K^2)) sum sum |f_j - f_k|`.
pub fn crps_empirical(ensemble: &[f64], y: f64) -> f64 {
    let k = ensemble.len() as f64;
    let mae: f64 = ensemble.iter().map(|f| (f - y).abs()).sum::<f64>() / k;
    let mut spread = 0.0;
    for a in ensemble {
        for b in ensemble {
            spread += (a - b).abs();
        }
    }
    mae - spread / (2.0 * k * k)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ensemble energy score
/// `(1/K) sum ||f_j - y|| - (1/(2K^2)) sum sum ||f_j - f_k||`.
pub fn energy_score(ens: &TrajectoryEnsemble, y: &[f64]) -> Result<f64> {
    if ens.dims() != y.len() {
        return Err(Error::Usage(format!(
            "energy score dimension mismatch: ensemble has {} leads, observation {}",
            ens.dims(),
            y.len()
        )));
    }
    let members = ens.members();
    let k = members.len() as f64;
    let first: f64 = members.iter().map(|m| euclidean(m, y)).sum::<f64>() / k;
    let mut spread = 0.0;
    for a in members {
        for b in members {
            spread += euclidean(a, b);
        }
    }
    Ok(first - spread / (2.0 * k * k))
}

/// Pairwise weights for the variogram score; `None` means uniform weight 1.
pub type VsWeights<'a> = Option<&'a [Vec<f64>]>;

/// Ensemble variogram score of order `p`:
/// `sum_ij w_ij (|y_i - y_j|^p - (1/K) sum_k |f_k_i - f_k_j|^p)^2`.
pub fn variogram_score(
    ens: &TrajectoryEnsemble,
    y: &[f64],
    p: f64,
    weights: VsWeights<'_>,
) -> Result<f64> {
    let dims = ens.dims();
    if dims != y.len() {
        return Err(Error::Usage("variogram score dimension mismatch".into()));
    }
    if let Some(w) = weights {
        if w.len() != dims || w.iter().any(|row| row.len() != dims) {
            return Err(Error::Usage("variogram weights must be L x L".into()));
        }
    }
    let members = ens.members();
    let k = members.len() as f64;
    let mut total = 0.0;
    for i in 0..dims {
        for j in 0..dims {
            let w = weights.map_or(1.0, |w| w[i][j]);
            if w == 0.0 {
                continue;
            }
            let obs_term = pow_abs(y[i] - y[j], p);
            let ens_term: f64 =
                members.iter().map(|m| pow_abs(m[i] - m[j], p)).sum::<f64>() / k;
            let d = obs_term - ens_term;
            total += w * d * d;
        }
    }
    Ok(total)
}

#[inline]
fn pow_abs(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v.abs()
    } else {
        v.abs().powf(p)
    }
}

/// Skill score `1 - mean_score/mean_ref` of a forecast against a reference.
pub fn skill_score(mean_score: f64, mean_ref: f64) -> Result<f64> {
    if mean_ref == 0.0 {
        return Err(Error::UndefinedSkill);
    }
    Ok(1.0 - mean_score / mean_ref)
}

/// Multivariate rank of the observation among the members by average
/// ranking: each point's pre-rank is the mean over leads of its univariate
/// rank among all K+1 values at that lead (ties random); the returned value
/// is the observation's rank among the K+1 pre-ranks, in `1..=K+1`.
pub fn average_rank<R: Rng + ?Sized>(
    ens: &TrajectoryEnsemble,
    y: &[f64],
    rng: &mut R,
) -> Result<usize> {
    let dims = ens.dims();
    if dims != y.len() {
        return Err(Error::Usage("average rank dimension mismatch".into()));
    }
    let k = ens.size();
    // pre-ranks of members and observation (index k)
    let mut pre_ranks = vec![0.0f64; k + 1];
    let mut column = vec![0.0f64; k + 1];
    for l in 0..dims {
        for (m, member) in ens.members().iter().enumerate() {
            column[m] = member[l];
        }
        column[k] = y[l];
        let ranks = crate::reorder::ranks_with_random_ties(&column, rng);
        for (idx, r) in ranks.iter().enumerate() {
            pre_ranks[idx] += (r + 1) as f64;
        }
    }
    for r in &mut pre_ranks {
        *r /= dims as f64;
    }
    let final_ranks = crate::reorder::ranks_with_random_ties(&pre_ranks, rng);
    Ok(final_ranks[k] + 1)
}

/// Rank histogram counts with the reliability index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankHistogram {
    pub counts: Vec<u64>,
    pub reliability_index: f64,
}

impl RankHistogram {
    /// Accumulate a histogram from 1-based ranks over `bins` bins.
    pub fn from_ranks(ranks: &[usize], bins: usize) -> Result<Self> {
        let mut counts = vec![0u64; bins];
        for &r in ranks {
            if r < 1 || r > bins {
                return Err(Error::Usage(format!("rank {r} outside 1..={bins}")));
            }
            counts[r - 1] += 1;
        }
        let reliability_index = reliability_index(&counts)?;
        Ok(RankHistogram { counts, reliability_index })
    }
}

/// Reliability index `sum_r |rho_r - 1/(K+1)|` of a rank histogram.
pub fn reliability_index(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Usage("empty rank histogram".into()));
    }
    let uniform = 1.0 / counts.len() as f64;
    Ok(counts.iter().map(|&c| (c as f64 / total as f64 - uniform).abs()).sum())
}

/// Geometric (L1) median of K points in R^L by the Vardi-Zhang modified
/// Weiszfeld iteration, with exact handling of iterates that coincide with
/// data points.
pub fn l1_median(points: &[Vec<f64>]) -> Vec<f64> {
    let k = points.len();
    let dims = points[0].len();
    if k == 1 {
        return points[0].clone();
    }
    // start at the coordinate-wise mean
    let mut current = vec![0.0f64; dims];
    for p in points {
        for (c, v) in current.iter_mut().zip(p) {
            *c += v;
        }
    }
    for c in &mut current {
        *c /= k as f64;
    }

    for _ in 0..1000 {
        // weighted average of points not at the current iterate, plus the
        // multiplicity eta of coincident points
        let mut weight_sum = 0.0;
        let mut weighted = vec![0.0f64; dims];
        let mut residual = vec![0.0f64; dims];
        let mut eta = 0.0f64;
        for p in points {
            let d = euclidean(p, &current);
            if d == 0.0 {
                eta += 1.0;
                continue;
            }
            let w = 1.0 / d;
            weight_sum += w;
            for i in 0..dims {
                weighted[i] += w * p[i];
                residual[i] += (p[i] - current[i]) * w;
            }
        }
        if weight_sum == 0.0 {
            // all points coincide with the iterate
            return current;
        }
        let r_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        if eta > 0.0 && r_norm <= eta {
            // optimality condition at a data point
            return current;
        }
        let t: Vec<f64> = weighted.iter().map(|v| v / weight_sum).collect();
        let step_scale = if eta > 0.0 { (1.0 - eta / r_norm).max(0.0) } else { 1.0 };
        let keep = 1.0 - step_scale;
        let next: Vec<f64> =
            t.iter().zip(&current).map(|(tv, cv)| step_scale * tv + keep * cv).collect();
        let step = euclidean(&next, &current);
        current = next;
        if step < 1e-10 {
            break;
        }
    }
    current
}

/// Euclidean distance between a median vector and the observation.
pub fn euclidean_error(median: &[f64], y: &[f64]) -> f64 {
    euclidean(median, y)
}

/// Diebold-Mariano comparison outcome at the 5% level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DmDecision {
    /// Negative statistic beyond the critical value: first forecast better.
    FirstBetter,
    /// Positive statistic beyond the critical value: second forecast better.
    SecondBetter,
    /// Inside the acceptance region.
    Equal,
}

/// Diebold-Mariano test result.
#[derive(Debug, Clone, PartialEq)]
pub enum DmOutcome {
    Statistic {
        t: f64,
        n: usize,
        decision: DmDecision,
        /// Fewer than 30 aligned cases.
        small_sample: bool,
    },
    /// Zero variance of the score differences (identical series): reported
    /// as equal predictive performance, no statistic defined.
    Degenerate,
}

impl DmOutcome {
    pub fn decision(&self) -> DmDecision {
        match self {
            DmOutcome::Statistic { decision, .. } => *decision,
            DmOutcome::Degenerate => DmDecision::Equal,
        }
    }

    pub fn statistic(&self) -> Option<f64> {
        match self {
            DmOutcome::Statistic { t, .. } => Some(*t),
            DmOutcome::Degenerate => None,
        }
    }
}

const DM_CRITICAL: f64 = 1.96;

/// Diebold-Mariano test statistic `sqrt(N) (mean_f - mean_g) / sigma_N` on
/// aligned score series, with a Bartlett-kernel HAC estimator of the
/// long-run standard deviation (truncation lag `ceil(N^(1/3))`). Negative
/// values favor the first series.
pub fn dm_test(scores_f: &[f64], scores_g: &[f64]) -> Result<DmOutcome> {
    if scores_f.len() != scores_g.len() {
        return Err(Error::Usage("score series are not aligned".into()));
    }
    let n = scores_f.len();
    if n == 0 {
        return Err(Error::Usage("empty score series".into()));
    }
    let diffs: Vec<f64> = scores_f.iter().zip(scores_g).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = diffs.iter().map(|d| d - mean).collect();
    let gamma0 = centered.iter().map(|d| d * d).sum::<f64>() / n as f64;
    if gamma0 == 0.0 {
        return Ok(DmOutcome::Degenerate);
    }
    let lag = (n as f64).powf(1.0 / 3.0).ceil() as usize;
    let mut long_run = gamma0;
    for j in 1..=lag.min(n - 1) {
        let cov: f64 =
            centered[j..].iter().zip(&centered[..n - j]).map(|(a, b)| a * b).sum::<f64>()
                / n as f64;
        let bartlett = 1.0 - j as f64 / (lag + 1) as f64;
        long_run += 2.0 * bartlett * cov;
    }
    if long_run <= 0.0 {
        // HAC estimate collapsed; fall back to the iid variance
        long_run = gamma0;
    }
    let t = (n as f64).sqrt() * mean / long_run.sqrt();
    let decision = if t <= -DM_CRITICAL {
        DmDecision::FirstBetter
    } else if t >= DM_CRITICAL {
        DmDecision::SecondBetter
    } else {
        DmDecision::Equal
    };
    Ok(DmOutcome::Statistic { t, n, decision, small_sample: n < 30 })
}

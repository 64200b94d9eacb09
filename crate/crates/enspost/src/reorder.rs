//! Empirical-copula reordering engines.
//!
//! All methods share one mechanic: per lead time, a sorted marginal sample
//! is rearranged into the rank order of a dependence template. ECC takes
//! the template from the raw ensemble, dual ECC from an error-adjusted
//! ensemble, and the Schaake shuffle family from historical observation
//! trajectories (selected at random, by prediction-interval coverage, or
//! by ensemble-statistics similarity).

use crate::dists::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::marginals::{sample_quantiles, MarginalSample};
use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::seq::index::sample as index_sample;
use rand::Rng;

/// K multivariate forecast scenarios over L lead times, member-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    members: Vec<Vec<f64>>,
}

impl TrajectoryEnsemble {
    pub fn new(members: Vec<Vec<f64>>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0].len() == w[1].len()));
        Self { members }
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    /// Number of members K.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Number of lead times L.
    pub fn dims(&self) -> usize {
        self.members.first().map_or(0, Vec::len)
    }

    /// Values of all members at one lead.
    pub fn lead_values(&self, lead_idx: usize) -> Vec<f64> {
        self.members.iter().map(|m| m[lead_idx]).collect()
    }
}

/// Per-lead rank permutations encoding an empirical copula.
///
/// `permutations[l][k]` is the 0-based rank of template point `k` at lead
/// `l`; each row is a bijection on `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceTemplate {
    pub permutations: Vec<Vec<usize>>,
}

impl DependenceTemplate {
    pub fn size(&self) -> usize {
        self.permutations.first().map_or(0, Vec::len)
    }

    /// Template whose rows are all the identity permutation.
    pub fn identity(dims: usize, k: usize) -> Self {
        Self { permutations: vec![(0..k).collect(); dims] }
    }

    /// Build a template from the per-lead rank orders of K trajectories.
    pub fn from_trajectories<R: Rng + ?Sized>(rows: &[Vec<f64>], rng: &mut R) -> Self {
        let dims = rows.first().map_or(0, Vec::len);
        let permutations = (0..dims)
            .map(|l| {
                let column: Vec<f64> = rows.iter().map(|r| r[l]).collect();
                ranks_with_random_ties(&column, rng)
            })
            .collect();
        Self { permutations }
    }
}

/// 0-based ranks of `values`, ties resolved uniformly at random.
///
/// Distinct values get their exact sorted position; tied values get a
/// uniformly random relative order. One tiebreaker per entry is always
/// drawn, so stream consumption does not depend on the data.
pub fn ranks_with_random_ties<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<usize> {
    let tiebreak: Vec<f64> = (0..values.len()).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite values")
            .then(tiebreak[a].partial_cmp(&tiebreak[b]).expect("finite tiebreaks"))
    });
    let mut ranks = vec![0usize; values.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank;
    }
    ranks
}

/// Rearrange sorted marginal samples into the template's rank order:
/// member k at lead l receives the sorted sample's entry at the template
/// rank of point k.
pub fn apply_template(
    samples: &[MarginalSample],
    template: &DependenceTemplate,
) -> Result<TrajectoryEnsemble> {
    if samples.len() != template.permutations.len() {
        return Err(Error::Usage(format!(
            "template has {} leads but {} samples were supplied",
            template.permutations.len(),
            samples.len()
        )));
    }
    let k = template.size();
    if samples.iter().any(|s| s.len() != k) {
        return Err(Error::Usage("sample size does not match template width".into()));
    }
    let members = (0..k)
        .map(|m| {
            samples
                .iter()
                .zip(&template.permutations)
                .map(|(s, perm)| s.values[perm[m]])
                .collect()
        })
        .collect();
    Ok(TrajectoryEnsemble::new(members))
}

/// Ensemble copula coupling with pre-drawn marginal samples: the template
/// is the per-lead rank order of the raw ensemble.
pub fn ecc_with_samples<R: Rng + ?Sized>(
    raw: &TrajectoryEnsemble,
    samples: &[MarginalSample],
    rng: &mut R,
) -> Result<TrajectoryEnsemble> {
    let template = DependenceTemplate::from_trajectories(raw.members(), rng);
    apply_template(samples, &template)
}

/// Ensemble copula coupling: draw scheme samples from the per-lead
/// predictive distributions and reorder them by the raw ensemble's ranks.
pub fn ecc<R: Rng + ?Sized>(
    raw: &TrajectoryEnsemble,
    dists: &[(u32, PredictiveDistribution)],
    scheme: crate::marginals::Scheme,
    rng: &mut R,
) -> Result<TrajectoryEnsemble> {
    if dists.len() != raw.dims() {
        return Err(Error::Usage("one predictive distribution per lead is required".into()));
    }
    let samples = crate::marginals::sample_all_leads(dists, scheme, raw.size(), rng);
    ecc_with_samples(raw, &samples, rng)
}

/// Estimated lead-by-lead autocorrelation of the ensemble-mean forecast
/// error, with its symmetric PSD square root.
#[derive(Debug, Clone)]
pub struct ErrorAutocorrelation {
    pub matrix: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    /// True when there was not enough data and the identity was used.
    pub fallback_identity: bool,
}

impl ErrorAutocorrelation {
    pub fn identity(dims: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dims, dims),
            sqrt: DMatrix::identity(dims, dims),
            fallback_identity: true,
        }
    }

    /// Dimension L.
    pub fn dims(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Pearson correlation matrix of per-lead forecast errors
/// `e = obs - ensemble mean` across training days, projected to PSD
/// (eigenvalue floor at zero) with unit diagonal, and its symmetric square
/// root. Fewer than L+1 complete days falls back to the identity.
pub fn estimate_error_autocorrelation(errors: &[Vec<f64>], dims: usize) -> ErrorAutocorrelation {
    let n = errors.len();
    if n < dims + 1 {
        return ErrorAutocorrelation::identity(dims);
    }
    let nf = n as f64;
    let mut mean = vec![0.0; dims];
    for e in errors {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let mut cov = DMatrix::<f64>::zeros(dims, dims);
    for e in errors {
        for i in 0..dims {
            let di = e[i] - mean[i];
            for j in i..dims {
                cov[(i, j)] += di * (e[j] - mean[j]);
            }
        }
    }
    // correlation with a guard for constant-error leads
    let mut corr = DMatrix::identity(dims, dims);
    for i in 0..dims {
        for j in (i + 1)..dims {
            let denom = (cov[(i, i)] * cov[(j, j)]).sqrt();
            let r = if denom > 0.0 { (cov[(i, j)] / denom).clamp(-1.0, 1.0) } else { 0.0 };
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    psd_with_sqrt(corr)
}

/// Clip eigenvalues at zero, rescale the diagonal back to one and compute
/// the symmetric PSD square root.
fn psd_with_sqrt(corr: DMatrix<f64>) -> ErrorAutocorrelation {
    let dims = corr.nrows();
    let eig = corr.clone().symmetric_eigen();
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let q = &eig.eigenvectors;
    let mut projected = DMatrix::<f64>::zeros(dims, dims);
    for (idx, &lambda) in clipped.iter().enumerate() {
        let col = q.column(idx);
        for i in 0..dims {
            for j in 0..dims {
                projected[(i, j)] += lambda * col[i] * col[j];
            }
        }
    }
    // unit diagonal: D^(-1/2) P D^(-1/2); degenerate diagonals keep identity rows
    let scale: Vec<f64> =
        (0..dims).map(|i| if projected[(i, i)] > 1e-300 { projected[(i, i)].sqrt() } else { 0.0 }).collect();
    let mut matrix = DMatrix::identity(dims, dims);
    for i in 0..dims {
        for j in 0..dims {
            if i != j && scale[i] > 0.0 && scale[j] > 0.0 {
                matrix[(i, j)] = projected[(i, j)] / (scale[i] * scale[j]);
            }
        }
    }
    let eig2 = matrix.clone().symmetric_eigen();
    let mut sqrt = DMatrix::zeros(dims, dims);
    for (idx, &lambda) in eig2.eigenvalues.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        let col = eig2.eigenvectors.column(idx);
        for i in 0..dims {
            for j in 0..dims {
                sqrt[(i, j)] += root * col[i] * col[j];
            }
        }
    }
    ErrorAutocorrelation { matrix, sqrt, fallback_identity: false }
}

/// Dual ensemble copula coupling with pre-drawn quantile samples.
///
/// Step 1 applies ECC-Q; step 2 forms the correction
/// `c_k = sqrt(autocorr) * (reordered_k - raw_k)`; step 3 adjusts the raw
/// ensemble by the correction; step 4 reorders the same quantile samples by
/// the adjusted ensemble's ranks.
pub fn decc_with_samples<R: Rng + ?Sized>(
    raw: &TrajectoryEnsemble,
    q_samples: &[MarginalSample],
    autocorr: &ErrorAutocorrelation,
    rng: &mut R,
) -> Result<TrajectoryEnsemble> {
    let dims = raw.dims();
    if autocorr.dims() != dims {
        return Err(Error::Usage("autocorrelation dimension does not match lead count".into()));
    }
    let initial = ecc_with_samples(raw, q_samples, rng)?;
    let adjusted: Vec<Vec<f64>> = raw
        .members()
        .iter()
        .zip(initial.members())
        .map(|(raw_m, reordered_m)| {
            let diff: Vec<f64> = reordered_m.iter().zip(raw_m).map(|(a, b)| a - b).collect();
            (0..dims)
                .map(|i| {
                    let corr_term: f64 = (0..dims).map(|j| autocorr.sqrt[(i, j)] * diff[j]).sum();
                    raw_m[i] + corr_term
                })
                .collect()
        })
        .collect();
    let template = DependenceTemplate::from_trajectories(&adjusted, rng);
    apply_template(q_samples, &template)
}

/// Dual ECC drawing its own equidistant-quantile samples.
pub fn decc<R: Rng + ?Sized>(
    raw: &TrajectoryEnsemble,
    dists: &[(u32, PredictiveDistribution)],
    autocorr: &ErrorAutocorrelation,
    rng: &mut R,
) -> Result<TrajectoryEnsemble> {
    if dists.len() != raw.dims() {
        return Err(Error::Usage("one predictive distribution per lead is required".into()));
    }
    let samples: Vec<MarginalSample> =
        dists.iter().map(|(lead, d)| sample_quantiles(d, *lead, raw.size())).collect();
    decc_with_samples(raw, &samples, autocorr, rng)
}

/// One dated record of a historical archive: a complete observation
/// trajectory over the L leads plus the per-lead ensemble mean and variance
/// of the forecast issued on that date.
#[derive(Debug, Clone)]
pub struct ArchiveRecord {
    pub date: NaiveDate,
    pub obs: Vec<f64>,
    pub ens_stats: Vec<(f64, f64)>,
}

/// Time-indexed list of complete historical trajectories.
#[derive(Debug, Clone, Default)]
pub struct HistoricalArchive {
    pub records: Vec<ArchiveRecord>,
}

impl HistoricalArchive {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn template_from_archive_rows<R: Rng + ?Sized>(
    archive: &HistoricalArchive,
    chosen: &[usize],
    rng: &mut R,
) -> (Vec<NaiveDate>, DependenceTemplate) {
    let rows: Vec<Vec<f64>> = chosen.iter().map(|&i| archive.records[i].obs.clone()).collect();
    let dates = chosen.iter().map(|&i| archive.records[i].date).collect();
    (dates, DependenceTemplate::from_trajectories(&rows, rng))
}

/// A reordered ensemble together with the archive dates that provided the
/// dependence template.
#[derive(Debug, Clone)]
pub struct ShuffleOutcome {
    pub ensemble: TrajectoryEnsemble,
    pub template_dates: Vec<NaiveDate>,
}

/// Schaake shuffle: K historical observation trajectories drawn uniformly
/// without replacement provide the dependence template.
pub fn ssh_with_samples<R: Rng + ?Sized>(
    samples: &[MarginalSample],
    archive: &HistoricalArchive,
    rng: &mut R,
) -> Result<ShuffleOutcome> {
    let k = samples.first().map_or(0, MarginalSample::len);
    if archive.len() < k {
        return Err(Error::Config(format!(
            "archive holds {} complete trajectories but {} are required",
            archive.len(),
            k
        )));
    }
    let chosen: Vec<usize> = index_sample(rng, archive.len(), k).into_iter().collect();
    let (template_dates, template) = template_from_archive_rows(archive, &chosen, rng);
    Ok(ShuffleOutcome { ensemble: apply_template(samples, &template)?, template_dates })
}

/// Schaake shuffle drawing its own scheme samples.
pub fn ssh<R: Rng + ?Sized>(
    dists: &[(u32, PredictiveDistribution)],
    archive: &HistoricalArchive,
    scheme: crate::marginals::Scheme,
    k: usize,
    rng: &mut R,
) -> Result<ShuffleOutcome> {
    let samples = crate::marginals::sample_all_leads(dists, scheme, k, rng);
    ssh_with_samples(&samples, archive, rng)
}

/// Minimum-divergence Schaake shuffle.
///
/// Per lead, the 99% central prediction interval
/// `[quantile(0.005), quantile(0.995)]` screens the archive: a trajectory
/// is retained when at least `m` of its observations fall inside their
/// interval. The threshold starts at `m_start` and decrements until at
/// least `max(K, m_min_retained)` trajectories survive; a random K-subset
/// of the survivors provides the template for quantile samples.
pub fn mdssh_with_samples<R: Rng + ?Sized>(
    q_samples: &[MarginalSample],
    dists: &[(u32, PredictiveDistribution)],
    archive: &HistoricalArchive,
    m_start: usize,
    m_min_retained: usize,
    rng: &mut R,
) -> Result<ShuffleOutcome> {
    let dims = q_samples.len();
    let k = q_samples.first().map_or(0, MarginalSample::len);
    if dists.len() != dims {
        return Err(Error::Usage("one predictive distribution per lead is required".into()));
    }
    let intervals: Vec<(f64, f64)> = dists
        .iter()
        .map(|(_, d)| Ok((d.quantile(0.005)?, d.quantile(0.995)?)))
        .collect::<Result<_>>()?;
    let coverage: Vec<usize> = archive
        .records
        .iter()
        .map(|rec| {
            rec.obs
                .iter()
                .zip(&intervals)
                .filter(|(y, (lo, hi))| **y >= *lo && **y <= *hi)
                .count()
        })
        .collect();
    let target = k.max(m_min_retained);
    let mut m = m_start.min(dims);
    let retained = loop {
        let retained: Vec<usize> =
            (0..archive.len()).filter(|&i| coverage[i] >= m).collect();
        if retained.len() >= target {
            break retained;
        }
        if m == 0 {
            return Err(Error::Config(format!(
                "archive retains only {} trajectories at m=0 but {} are required",
                retained.len(),
                target
            )));
        }
        m -= 1;
    };
    let subset = index_sample(rng, retained.len(), k);
    let chosen: Vec<usize> = subset.into_iter().map(|i| retained[i]).collect();
    let (template_dates, template) = template_from_archive_rows(archive, &chosen, rng);
    Ok(ShuffleOutcome { ensemble: apply_template(q_samples, &template)?, template_dates })
}

/// Minimum-divergence Schaake shuffle drawing its own quantile samples.
pub fn mdssh<R: Rng + ?Sized>(
    dists: &[(u32, PredictiveDistribution)],
    archive: &HistoricalArchive,
    k: usize,
    m_start: usize,
    m_min_retained: usize,
    rng: &mut R,
) -> Result<ShuffleOutcome> {
    let samples: Vec<MarginalSample> =
        dists.iter().map(|(lead, d)| sample_quantiles(d, *lead, k)).collect();
    mdssh_with_samples(&samples, dists, archive, m_start, m_min_retained, rng)
}

/// Similarity between a current per-lead (mean, variance) profile and an
/// archived one: `sqrt( sum (mean diff)^2 + (1/L) sum (var diff)^2 )`.
pub fn similarity_delta(current: &[(f64, f64)], historical: &[(f64, f64)]) -> f64 {
    let dims = current.len() as f64;
    let (mut mean_part, mut var_part) = (0.0, 0.0);
    for ((m, v), (hm, hv)) in current.iter().zip(historical) {
        mean_part += (m - hm) * (m - hm);
        var_part += (v - hv) * (v - hv);
    }
    (mean_part + var_part / dims).sqrt()
}

/// Similarity-based Schaake shuffle: the K archive dates whose ensemble
/// mean/variance profile is closest to the current ensemble (ties broken by
/// earlier date) provide the template for quantile samples.
pub fn simssh_with_samples<R: Rng + ?Sized>(
    q_samples: &[MarginalSample],
    current_stats: &[(f64, f64)],
    archive: &HistoricalArchive,
    rng: &mut R,
) -> Result<ShuffleOutcome> {
    let k = q_samples.first().map_or(0, MarginalSample::len);
    if archive.len() < k {
        return Err(Error::Config(format!(
            "archive holds {} records but {} are required",
            archive.len(),
            k
        )));
    }
    let mut scored: Vec<(f64, usize)> = archive
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| (similarity_delta(current_stats, &rec.ens_stats), i))
        .collect();
    // records are time-indexed, so the index tiebreak selects earlier dates
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite deltas").then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = scored[..k].iter().map(|&(_, i)| i).collect();
    let (template_dates, template) = template_from_archive_rows(archive, &chosen, rng);
    Ok(ShuffleOutcome { ensemble: apply_template(q_samples, &template)?, template_dates })
}

/// Similarity-based Schaake shuffle drawing its own quantile samples.
pub fn simssh<R: Rng + ?Sized>(
    dists: &[(u32, PredictiveDistribution)],
    current_stats: &[(f64, f64)],
    archive: &HistoricalArchive,
    k: usize,
    rng: &mut R,
) -> Result<ShuffleOutcome> {
    let samples: Vec<MarginalSample> =
        dists.iter().map(|(lead, d)| sample_quantiles(d, *lead, k)).collect();
    simssh_with_samples(&samples, current_stats, archive, rng)
}

//! Univariate EMOS calibration.
//!
//! Per lead time, ensemble statistics are linked to the parameters of a
//! predictive distribution whose family depends on the weather variable:
//! Gaussian for temperature (with a sinusoidal seasonal mean), zero-truncated
//! Gaussian on the square-root scale for wind speed, zero-censored GEV for
//! precipitation. Parameters minimize the mean closed-form CRPS over a
//! rolling training window.

use crate::dists::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::optim::nelder_mead;
use chrono::{Datelike, NaiveDate};
use std::sync::LazyLock;

/// Weather variable determining the EMOS family and link functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableKind {
    T2m,
    V10,
    Ppt24,
}

impl VariableKind {
    /// Rolling training window length used operationally for this variable.
    pub fn default_window_days(&self) -> u32 {
        match self {
            VariableKind::T2m => 720,
            VariableKind::V10 => 365,
            VariableKind::Ppt24 => 1816,
        }
    }

    /// Wind and precipitation members must be nonnegative.
    pub fn requires_nonnegative(&self) -> bool {
        !matches!(self, VariableKind::T2m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            VariableKind::T2m => "T2M",
            VariableKind::V10 => "V10",
            VariableKind::Ppt24 => "PPT24",
        }
    }
}

impl std::str::FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T2M" => Ok(VariableKind::T2m),
            "V10" => Ok(VariableKind::V10),
            "PPT24" => Ok(VariableKind::Ppt24),
            other => Err(Error::Config(format!("unknown variable kind '{other}'"))),
        }
    }
}

/// GEV shape used for precipitation; fixed, never estimated.
pub const GEV_SHAPE: f64 = 0.2;

/// One ensemble forecast: high-resolution member, control run, exchangeable
/// members, and the verifying observation when available.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    pub station: String,
    pub init_date: NaiveDate,
    pub lead_days: u32,
    pub hres: f64,
    pub ctrl: f64,
    pub ens: Vec<f64>,
    pub obs: Option<f64>,
}

impl EnsembleForecast {
    /// Total member count K (HRES + CTRL + exchangeable members).
    pub fn member_count(&self) -> usize {
        2 + self.ens.len()
    }

    /// Members in canonical order: HRES, CTRL, exchangeable members.
    pub fn members(&self) -> impl Iterator<Item = f64> + '_ {
        [self.hres, self.ctrl].into_iter().chain(self.ens.iter().copied())
    }

    /// The day the forecast verifies on.
    pub fn valid_date(&self) -> NaiveDate {
        self.init_date + chrono::Days::new(self.lead_days as u64)
    }
}

/// Summary statistics of one ensemble forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    /// Mean of the exchangeable members.
    pub ens_mean: f64,
    /// Variance (1/n) of the exchangeable members.
    pub ens_var: f64,
    /// Mean over all K members.
    pub all_mean: f64,
    /// Variance (1/K) over all K members.
    pub all_var: f64,
    /// Mean absolute difference over all member pairs.
    pub md: f64,
    /// Mean absolute difference of square-rooted members.
    pub md_sqrt: f64,
    /// Fraction of members exactly zero.
    pub pi0: f64,
}

/// Compute all ensemble statistics for one forecast.
pub fn compute_stats(fc: &EnsembleForecast) -> EnsembleStats {
    let all: Vec<f64> = fc.members().collect();
    let k = all.len() as f64;
    let n_ens = fc.ens.len() as f64;

    let ens_mean = fc.ens.iter().sum::<f64>() / n_ens;
    let ens_var = fc.ens.iter().map(|v| (v - ens_mean) * (v - ens_mean)).sum::<f64>() / n_ens;
    let all_mean = all.iter().sum::<f64>() / k;
    let all_var = all.iter().map(|v| (v - all_mean) * (v - all_mean)).sum::<f64>() / k;

    let sqrts: Vec<f64> = all.iter().map(|v| v.max(0.0).sqrt()).collect();
    let (mut md, mut md_sqrt) = (0.0, 0.0);
    for i in 0..all.len() {
        for j in 0..all.len() {
            md += (all[i] - all[j]).abs();
            md_sqrt += (sqrts[i] - sqrts[j]).abs();
        }
    }
    md /= k * k;
    md_sqrt /= k * k;
    let pi0 = all.iter().filter(|v| **v == 0.0).count() as f64 / k;

    EnsembleStats { ens_mean, ens_var, all_mean, all_var, md, md_sqrt, pi0 }
}

/// Sinusoidal regression coefficients `y = c0 + c1 sin(2 pi t/365) + c2 cos(2 pi t/365)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonalFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

static SEASONAL_BASIS: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| {
    (0..=365)
        .map(|t| {
            let angle = 2.0 * std::f64::consts::PI * t as f64 / 365.0;
            (angle.sin(), angle.cos())
        })
        .collect()
});

#[inline]
fn seasonal_basis(t: u32) -> (f64, f64) {
    SEASONAL_BASIS[(t % 366) as usize]
}

/// Day-of-year index on a 365-day cycle; leap days map to 365.
pub fn day_of_year_365(date: NaiveDate) -> u32 {
    let ordinal = date.ordinal();
    if date.leap_year() {
        match ordinal.cmp(&60) {
            std::cmp::Ordering::Less => ordinal,
            std::cmp::Ordering::Equal => 365, // Feb 29
            std::cmp::Ordering::Greater => ordinal - 1,
        }
    } else {
        ordinal
    }
}

/// Least-squares fit of the sinusoidal model to `(day index, value)` pairs.
pub fn fit_seasonal(series: &[(u32, f64)]) -> Result<SeasonalFit> {
    let doys: Vec<u32> = series.iter().map(|(t, _)| *t).collect();
    fit_seasonal_arrays(&doys, series.iter().map(|(_, y)| *y))
}

/// Evaluate a seasonal fit at day index `t`.
pub fn predict_seasonal(fit: &SeasonalFit, t: u32) -> f64 {
    let (s, c) = seasonal_basis(t);
    fit.c0 + fit.c1 * s + fit.c2 * c
}

/// Seasonal fits for the four dependent series used by the temperature model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonalFits {
    pub obs: SeasonalFit,
    pub hres: SeasonalFit,
    pub ctrl: SeasonalFit,
    pub ens_mean: SeasonalFit,
}

/// EMOS coefficients. Link functions square every weight, so the stored
/// values are unconstrained; `a[0]` is unused for T2M (the seasonal
/// prediction provides the intercept) and `a[4]` is only used for PPT24.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmosParams {
    pub kind: VariableKind,
    pub a: [f64; 5],
    pub b: [f64; 2],
}

impl EmosParams {
    /// Stable near-climatology starting point.
    pub fn default_init(kind: VariableKind) -> Self {
        let a4 = if kind == VariableKind::Ppt24 { 0.1 } else { 0.0 };
        EmosParams { kind, a: [0.0, 0.1, 0.1, 0.9, a4], b: [1.0, 1.0] }
    }

    /// Free-parameter dimension of the optimization problem.
    pub fn dim(kind: VariableKind) -> usize {
        match kind {
            VariableKind::T2m => 5,
            VariableKind::V10 => 6,
            VariableKind::Ppt24 => 7,
        }
    }

    fn to_vec(self) -> Vec<f64> {
        match self.kind {
            VariableKind::T2m => vec![self.a[1], self.a[2], self.a[3], self.b[0], self.b[1]],
            VariableKind::V10 => {
                vec![self.a[0], self.a[1], self.a[2], self.a[3], self.b[0], self.b[1]]
            }
            VariableKind::Ppt24 => {
                vec![self.a[0], self.a[1], self.a[2], self.a[3], self.a[4], self.b[0], self.b[1]]
            }
        }
    }

    fn from_vec(kind: VariableKind, v: &[f64]) -> Self {
        match kind {
            VariableKind::T2m => EmosParams {
                kind,
                a: [0.0, v[0], v[1], v[2], 0.0],
                b: [v[3], v[4]],
            },
            VariableKind::V10 => EmosParams {
                kind,
                a: [v[0], v[1], v[2], v[3], 0.0],
                b: [v[4], v[5]],
            },
            VariableKind::Ppt24 => EmosParams {
                kind,
                a: [v[0], v[1], v[2], v[3], v[4]],
                b: [v[5], v[6]],
            },
        }
    }
}

/// Precomputed per-pair features feeding the estimation objective.
///
/// The location link is `offset + a0 + a1^2 x1 + a2^2 x2 + a3^2 x3 (+ a4^2 x4)`
/// and the squared-scale link is `b0^2 + b1^2 spread`; `obs` is already on
/// the model scale (square-rooted for wind).
#[derive(Debug, Clone, Copy)]
pub struct TrainingCase {
    pub offset: f64,
    pub x: [f64; 4],
    pub spread: f64,
    pub obs: f64,
}

/// Observation transform onto the scale the predictive distribution lives on.
#[inline]
pub fn obs_to_model_scale(kind: VariableKind, y: f64) -> f64 {
    match kind {
        VariableKind::V10 => y.max(0.0).sqrt(),
        _ => y,
    }
}

/// Transform a model-scale value back to physical units.
#[inline]
pub fn model_to_physical(kind: VariableKind, v: f64) -> f64 {
    match kind {
        VariableKind::V10 => v * v,
        _ => v,
    }
}

/// Probability integral transform of the observation under a calibrated
/// predictive distribution (observations are square-rooted for wind).
pub fn pit_value(kind: VariableKind, dist: &PredictiveDistribution, obs: f64) -> f64 {
    dist.cdf(obs_to_model_scale(kind, obs))
}

fn location_link(kind: VariableKind, params: &EmosParams, offset: f64, x: &[f64; 4]) -> f64 {
    let a = &params.a;
    let base = if kind == VariableKind::T2m { offset } else { a[0] };
    base + a[1] * a[1] * x[0] + a[2] * a[2] * x[1] + a[3] * a[3] * x[2] + a[4] * a[4] * x[3]
}

fn predictive_from_features(
    kind: VariableKind,
    params: &EmosParams,
    offset: f64,
    x: &[f64; 4],
    spread: f64,
) -> Result<PredictiveDistribution> {
    let location = location_link(kind, params, offset, x);
    let b = &params.b;
    let var = b[0] * b[0] + b[1] * b[1] * spread;
    if !location.is_finite() || !var.is_finite() {
        return Err(Error::Estimation("non-finite link output".into()));
    }
    let scale = var.sqrt();
    match kind {
        VariableKind::T2m => PredictiveDistribution::gaussian(location, scale),
        VariableKind::V10 => PredictiveDistribution::trunc_gaussian(location, scale),
        VariableKind::Ppt24 => PredictiveDistribution::censored_gev(location, scale, GEV_SHAPE),
    }
}

/// Features of one forecast given the (optional) seasonal fits evaluated at
/// the forecast's valid date.
fn forecast_features(
    kind: VariableKind,
    stats: &EnsembleStats,
    hres: f64,
    ctrl: f64,
    seasonal: Option<&SeasonalFits>,
    t: u32,
) -> Result<(f64, [f64; 4], f64)> {
    match kind {
        VariableKind::T2m => {
            let fits = seasonal
                .ok_or_else(|| Error::Usage("temperature EMOS requires seasonal fits".into()))?;
            let offset = predict_seasonal(&fits.obs, t);
            let x = [
                hres - predict_seasonal(&fits.hres, t),
                ctrl - predict_seasonal(&fits.ctrl, t),
                stats.ens_mean - predict_seasonal(&fits.ens_mean, t),
                0.0,
            ];
            Ok((offset, x, stats.all_var))
        }
        VariableKind::V10 => {
            if seasonal.is_some() {
                return Err(Error::Usage("seasonal fits are only used for temperature".into()));
            }
            if hres < 0.0 || ctrl < 0.0 || stats.ens_mean < 0.0 {
                return Err(Error::Estimation("negative wind forecast".into()));
            }
            let x = [hres.sqrt(), ctrl.sqrt(), stats.ens_mean.sqrt(), 0.0];
            Ok((0.0, x, stats.md_sqrt))
        }
        VariableKind::Ppt24 => {
            if seasonal.is_some() {
                return Err(Error::Usage("seasonal fits are only used for temperature".into()));
            }
            let x = [hres, ctrl, stats.ens_mean, stats.pi0];
            Ok((0.0, x, stats.md))
        }
    }
}

/// EMOS predictive distribution for one forecast. Seasonal fits are
/// required for temperature (and rejected otherwise); `t` is the day index
/// of the verification day.
pub fn emos_predictive(
    params: &EmosParams,
    fc: &EnsembleForecast,
    seasonal: Option<&SeasonalFits>,
    t: u32,
) -> Result<PredictiveDistribution> {
    let stats = compute_stats(fc);
    let (offset, x, spread) = forecast_features(params.kind, &stats, fc.hres, fc.ctrl, seasonal, t)?;
    predictive_from_features(params.kind, params, offset, &x, spread)
}

/// Mean CRPS over the training cases at a raw parameter vector. The
/// temperature family gets a specialized loop; this is the innermost hot
/// path of every rolling calibration.
fn mean_crps(kind: VariableKind, cases: &[TrainingCase], v: &[f64]) -> f64 {
    let params = EmosParams::from_vec(kind, v);
    if kind == VariableKind::T2m {
        return mean_crps_gaussian(cases, &params);
    }
    let mut total = 0.0;
    for case in cases {
        match predictive_from_features(kind, &params, case.offset, &case.x, case.spread) {
            Ok(dist) => {
                let crps = dist.crps(case.obs);
                if !crps.is_finite() {
                    return f64::INFINITY;
                }
                total += crps;
            }
            Err(_) => return f64::INFINITY,
        }
    }
    total / cases.len() as f64
}

fn mean_crps_gaussian(cases: &[TrainingCase], params: &EmosParams) -> f64 {
    const FRAC_1_SQRT_PI: f64 = 0.564189583547756286948079451561;
    const FRAC_1_SQRT_2PI: f64 = 0.398942280401432677939946059934;
    let w1 = params.a[1] * params.a[1];
    let w2 = params.a[2] * params.a[2];
    let w3 = params.a[3] * params.a[3];
    let b0sq = params.b[0] * params.b[0];
    let b1sq = params.b[1] * params.b[1];
    let mut total = 0.0;
    for case in cases {
        let mu = case.offset + w1 * case.x[0] + w2 * case.x[1] + w3 * case.x[2];
        let var = b0sq + b1sq * case.spread;
        if !(var > 0.0) {
            return f64::INFINITY;
        }
        let sigma = var.sqrt();
        let z = (case.obs - mu) / sigma;
        let cdf = 0.5 * statrs::function::erf::erfc(-z * std::f64::consts::FRAC_1_SQRT_2);
        let pdf = FRAC_1_SQRT_2PI * (-0.5 * z * z).exp();
        total += sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - FRAC_1_SQRT_PI);
    }
    if total.is_finite() {
        total / cases.len() as f64
    } else {
        f64::INFINITY
    }
}

/// Result of one CRPS-minimum estimation.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: EmosParams,
    pub mean_crps: f64,
    pub converged: bool,
    pub iterations: usize,
}

const SIMPLEX_TOL: f64 = 1e-6;
const SIMPLEX_MAX_ITER: usize = 500;
const WARM_STEP: f64 = 0.01;
const COLD_STEP: f64 = 0.25;

/// Minimize the mean CRPS over precomputed training cases. Two simplex runs
/// are performed, one from `init_guess` and one from the fixed default; the
/// better optimum is kept, so the result never scores worse than the guess.
pub fn estimate_params(
    kind: VariableKind,
    cases: &[TrainingCase],
    init_guess: &EmosParams,
) -> Result<FitOutcome> {
    if cases.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if kind == VariableKind::Ppt24 && cases.iter().all(|c| c.obs == 0.0) {
        return Err(Error::DegenerateClimate);
    }
    let objective = |v: &[f64]| mean_crps(kind, cases, v);
    let warm_start = init_guess.to_vec();
    let cold_start = EmosParams::default_init(kind).to_vec();
    let warm = nelder_mead(objective, &warm_start, WARM_STEP, SIMPLEX_TOL, SIMPLEX_MAX_ITER);
    let best = if warm_start == cold_start {
        warm
    } else {
        let cold = nelder_mead(objective, &cold_start, COLD_STEP, SIMPLEX_TOL, SIMPLEX_MAX_ITER);
        if cold.value < warm.value {
            cold
        } else {
            warm
        }
    };
    if !best.value.is_finite() {
        return Err(Error::Estimation("objective not finite at every explored point".into()));
    }
    Ok(FitOutcome {
        params: EmosParams::from_vec(kind, &best.point),
        mean_crps: best.value,
        converged: best.converged,
        iterations: best.iterations,
    })
}

/// Training cases (and seasonal fits, for temperature) from raw forecasts;
/// pairs with missing observations are dropped.
pub fn build_training_cases(
    kind: VariableKind,
    training: &[&EnsembleForecast],
) -> Result<(Vec<TrainingCase>, Option<SeasonalFits>)> {
    let usable: Vec<(&EnsembleForecast, f64)> =
        training.iter().filter_map(|fc| fc.obs.map(|y| (*fc, y))).collect();
    if usable.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let seasonal = if kind == VariableKind::T2m {
        let mut obs_series = Vec::with_capacity(usable.len());
        let mut hres_series = Vec::with_capacity(usable.len());
        let mut ctrl_series = Vec::with_capacity(usable.len());
        let mut ens_series = Vec::with_capacity(usable.len());
        for (fc, y) in &usable {
            let t = day_of_year_365(fc.valid_date());
            let stats = compute_stats(fc);
            obs_series.push((t, *y));
            hres_series.push((t, fc.hres));
            ctrl_series.push((t, fc.ctrl));
            ens_series.push((t, stats.ens_mean));
        }
        Some(SeasonalFits {
            obs: fit_seasonal(&obs_series)?,
            hres: fit_seasonal(&hres_series)?,
            ctrl: fit_seasonal(&ctrl_series)?,
            ens_mean: fit_seasonal(&ens_series)?,
        })
    } else {
        None
    };
    let cases = usable
        .iter()
        .map(|(fc, y)| {
            let stats = compute_stats(fc);
            let t = day_of_year_365(fc.valid_date());
            let (offset, x, spread) =
                forecast_features(kind, &stats, fc.hres, fc.ctrl, seasonal.as_ref(), t)?;
            Ok(TrainingCase { offset, x, spread, obs: obs_to_model_scale(kind, *y) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cases, seasonal))
}

/// A fitted EMOS model: parameters plus the seasonal fits they were trained
/// against (temperature only).
#[derive(Debug, Clone)]
pub struct EmosFit {
    pub outcome: FitOutcome,
    pub seasonal: Option<SeasonalFits>,
}

/// Fit EMOS on a training set of forecasts at a fixed station and lead.
pub fn fit_emos(
    kind: VariableKind,
    training: &[&EnsembleForecast],
    init_guess: Option<&EmosParams>,
) -> Result<EmosFit> {
    let (cases, seasonal) = build_training_cases(kind, training)?;
    let default = EmosParams::default_init(kind);
    let outcome = estimate_params(kind, &cases, init_guess.unwrap_or(&default))?;
    Ok(EmosFit { outcome, seasonal })
}

/// Per-lead calibration outcome for one verification day.
pub struct CalibratedDay {
    pub init_date: NaiveDate,
    /// One entry per lead time, in ascending lead order.
    pub leads: Vec<(u32, Result<PredictiveDistribution>)>,
}

/// One lead's training material with statistics precomputed once, so daily
/// window slicing costs two binary searches instead of O(K^2) stat passes.
struct PreparedLead<'a> {
    lead: u32,
    /// Ascending by date; only pairs with an observation.
    train_dates: Vec<NaiveDate>,
    train_doys: Vec<u32>,
    train_hres: Vec<f64>,
    train_ctrl: Vec<f64>,
    train_ens_mean: Vec<f64>,
    /// Ready-made cases (exact for V10/PPT24; T2M rebuilds offsets daily).
    train_cases: Vec<TrainingCase>,
    current: std::collections::BTreeMap<NaiveDate, &'a EnsembleForecast>,
}

impl<'a> PreparedLead<'a> {
    fn build(kind: VariableKind, lead: u32, forecasts: &mut Vec<&'a EnsembleForecast>) -> Self {
        forecasts.sort_by_key(|fc| fc.init_date);
        let mut prepared = PreparedLead {
            lead,
            train_dates: Vec::new(),
            train_doys: Vec::new(),
            train_hres: Vec::new(),
            train_ctrl: Vec::new(),
            train_ens_mean: Vec::new(),
            train_cases: Vec::new(),
            current: forecasts.iter().map(|fc| (fc.init_date, *fc)).collect(),
        };
        for fc in forecasts.iter() {
            let Some(obs) = fc.obs else { continue };
            let stats = compute_stats(fc);
            let t = day_of_year_365(fc.valid_date());
            let case = match kind {
                VariableKind::T2m => TrainingCase {
                    offset: 0.0, // filled in daily from the seasonal fits
                    x: [fc.hres, fc.ctrl, stats.ens_mean, 0.0],
                    spread: stats.all_var,
                    obs,
                },
                VariableKind::V10 => TrainingCase {
                    offset: 0.0,
                    x: [
                        fc.hres.max(0.0).sqrt(),
                        fc.ctrl.max(0.0).sqrt(),
                        stats.ens_mean.max(0.0).sqrt(),
                        0.0,
                    ],
                    spread: stats.md_sqrt,
                    obs: obs_to_model_scale(kind, obs),
                },
                VariableKind::Ppt24 => TrainingCase {
                    offset: 0.0,
                    x: [fc.hres, fc.ctrl, stats.ens_mean, stats.pi0],
                    spread: stats.md,
                    obs,
                },
            };
            prepared.train_dates.push(fc.init_date);
            prepared.train_doys.push(t);
            prepared.train_hres.push(fc.hres);
            prepared.train_ctrl.push(fc.ctrl);
            prepared.train_ens_mean.push(stats.ens_mean);
            prepared.train_cases.push(case);
        }
        prepared
    }

    fn window_range(&self, day: NaiveDate, window_days: u32) -> (usize, usize) {
        let start = day - chrono::Days::new(window_days as u64);
        let lo = self.train_dates.partition_point(|d| *d < start);
        let hi = self.train_dates.partition_point(|d| *d < day);
        (lo, hi)
    }

    /// Fit the window ending right before `day` and return the predictive
    /// distribution for `day`'s forecast.
    fn calibrate_day(
        &self,
        kind: VariableKind,
        day: NaiveDate,
        window_days: u32,
        warm: &mut Option<EmosParams>,
        scratch: &mut Vec<TrainingCase>,
    ) -> Result<PredictiveDistribution> {
        let (lo, hi) = self.window_range(day, window_days);
        if lo == hi {
            return Err(Error::EmptyWindow);
        }
        let (cases, seasonal): (&[TrainingCase], Option<SeasonalFits>) =
            if kind == VariableKind::T2m {
                let doys = &self.train_doys[lo..hi];
                let fits = SeasonalFits {
                    obs: fit_seasonal_arrays(
                        doys,
                        self.train_cases[lo..hi].iter().map(|c| c.obs),
                    )?,
                    hres: fit_seasonal_arrays(doys, self.train_hres[lo..hi].iter().copied())?,
                    ctrl: fit_seasonal_arrays(doys, self.train_ctrl[lo..hi].iter().copied())?,
                    ens_mean: fit_seasonal_arrays(
                        doys,
                        self.train_ens_mean[lo..hi].iter().copied(),
                    )?,
                };
                scratch.clear();
                scratch.extend(self.train_cases[lo..hi].iter().zip(doys).map(|(case, &t)| {
                    TrainingCase {
                        offset: predict_seasonal(&fits.obs, t),
                        x: [
                            case.x[0] - predict_seasonal(&fits.hres, t),
                            case.x[1] - predict_seasonal(&fits.ctrl, t),
                            case.x[2] - predict_seasonal(&fits.ens_mean, t),
                            0.0,
                        ],
                        spread: case.spread,
                        obs: case.obs,
                    }
                }));
                (scratch.as_slice(), Some(fits))
            } else {
                (&self.train_cases[lo..hi], None)
            };
        let init = warm.unwrap_or_else(|| EmosParams::default_init(kind));
        let outcome = estimate_params(kind, cases, &init)?;
        *warm = Some(outcome.params);
        let fc = self.current.get(&day).copied().ok_or_else(|| {
            Error::Estimation(format!("no forecast issued on {day} for lead {}", self.lead))
        })?;
        let t = day_of_year_365(fc.valid_date());
        emos_predictive(&outcome.params, fc, seasonal.as_ref(), t)
    }
}

/// Seasonal least squares over parallel day-index/value iterators.
fn fit_seasonal_arrays<I: Iterator<Item = f64>>(doys: &[u32], values: I) -> Result<SeasonalFit> {
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    let mut n = 0usize;
    for (&t, y) in doys.iter().zip(values) {
        let (s, c) = seasonal_basis(t);
        xtx[0][0] += 1.0;
        xtx[0][1] += s;
        xtx[0][2] += c;
        xtx[1][1] += s * s;
        xtx[1][2] += s * c;
        xtx[2][2] += c * c;
        xty[0] += y;
        xty[1] += s * y;
        xty[2] += c * y;
        n += 1;
    }
    if n < 3 {
        return Err(Error::Estimation(format!("seasonal fit needs at least 3 points, got {n}")));
    }
    xtx[1][0] = xtx[0][1];
    xtx[2][0] = xtx[0][2];
    xtx[2][1] = xtx[1][2];
    let m = nalgebra::Matrix3::from_fn(|i, j| xtx[i][j]);
    let v = nalgebra::Vector3::from_row_slice(&xty);
    let solved = m
        .lu()
        .solve(&v)
        .ok_or_else(|| Error::Estimation("singular seasonal design matrix".into()))?;
    let fit = SeasonalFit { c0: solved[0], c1: solved[1], c2: solved[2] };
    if !(fit.c0.is_finite() && fit.c1.is_finite() && fit.c2.is_finite()) {
        return Err(Error::Estimation("non-finite seasonal coefficients".into()));
    }
    Ok(fit)
}

/// Calibrate every day of a single-station archive against its preceding
/// rolling window, independently per lead time. Estimation failures are
/// recorded per (day, lead) without aborting the run. Each lead's fits are
/// warm-started from the previous day's optimum.
pub fn rolling_calibrate(
    archive: &[EnsembleForecast],
    window_days: u32,
    kind: VariableKind,
) -> Vec<CalibratedDay> {
    use rayon::prelude::*;
    use std::collections::BTreeMap;

    let mut by_lead: BTreeMap<u32, Vec<&EnsembleForecast>> = BTreeMap::new();
    for fc in archive {
        by_lead.entry(fc.lead_days).or_default().push(fc);
    }
    let Some(first_date) = archive.iter().map(|fc| fc.init_date).min() else {
        return Vec::new();
    };
    let start = first_date + chrono::Days::new(window_days as u64);
    let mut days: Vec<NaiveDate> =
        archive.iter().map(|fc| fc.init_date).filter(|d| *d >= start).collect();
    days.sort();
    days.dedup();

    // each lead is an independent warm-started chain
    let per_lead: Vec<(u32, Vec<Result<PredictiveDistribution>>)> = by_lead
        .into_par_iter()
        .map(|(lead, mut forecasts)| {
            let prepared = PreparedLead::build(kind, lead, &mut forecasts);
            let mut warm: Option<EmosParams> = None;
            let mut scratch = Vec::new();
            let results = days
                .iter()
                .map(|&day| prepared.calibrate_day(kind, day, window_days, &mut warm, &mut scratch))
                .collect();
            (lead, results)
        })
        .collect();

    days.iter()
        .enumerate()
        .map(|(i, &day)| CalibratedDay {
            init_date: day,
            leads: per_lead
                .iter()
                .map(|(lead, results)| {
                    let r = match &results[i] {
                        Ok(d) => Ok(*d),
                        Err(e) => Err(Error::Estimation(e.to_string())),
                    };
                    (*lead, r)
                })
                .collect(),
        })
        .collect()
}

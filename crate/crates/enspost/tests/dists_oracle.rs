//! Closed-form CRPS and quantile/CDF behaviour checked against independent
//! numerical oracles.

mod common;

use common::crps_quadrature;
use enspost::dists::PredictiveDistribution;
use enspost::rng::substream;
use rand::Rng;

fn relative_gap(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (1.0 + analytic.abs())
}

#[test]
fn gaussian_crps_matches_quadrature() {
    let mut rng = substream(101, &[1]);
    for _ in 0..300 {
        let mu = 20.0 * rng.random::<f64>() - 10.0;
        let sigma = 0.1 + 5.0 * rng.random::<f64>();
        let y = mu + 8.0 * sigma * (rng.random::<f64>() - 0.5);
        let dist = PredictiveDistribution::gaussian(mu, sigma).unwrap();
        let gap = relative_gap(dist.crps(y), crps_quadrature(&dist, y));
        assert!(gap < 1e-6, "mu={mu} sigma={sigma} y={y} gap={gap:e}");
    }
}

#[test]
fn trunc_gaussian_crps_matches_quadrature() {
    let mut rng = substream(101, &[2]);
    for i in 0..300 {
        // cover deeply truncated (negative location) and barely truncated cases
        let scale = 0.1 + 4.0 * rng.random::<f64>();
        let ratio = 27.0 * rng.random::<f64>() - 15.0;
        let location = ratio * scale;
        let y = if i % 7 == 0 { 0.0 } else { (location + 6.0 * scale * rng.random::<f64>()).max(0.0) };
        let dist = PredictiveDistribution::trunc_gaussian(location, scale).unwrap();
        let gap = relative_gap(dist.crps(y), crps_quadrature(&dist, y));
        assert!(gap < 1e-6, "loc={location} scale={scale} y={y} gap={gap:e}");
    }
}

#[test]
fn censored_gev_crps_matches_quadrature() {
    let mut rng = substream(101, &[3]);
    for i in 0..300 {
        let location = 6.0 * rng.random::<f64>() - 2.0;
        let scale = 0.2 + 3.0 * rng.random::<f64>();
        let shape = 0.2;
        let y = match i % 5 {
            0 => 0.0,
            1 => 0.05 * rng.random::<f64>(),
            _ => 10.0 * rng.random::<f64>(),
        };
        let dist = PredictiveDistribution::censored_gev(location, scale, shape).unwrap();
        let gap = relative_gap(dist.crps(y), crps_quadrature(&dist, y));
        assert!(gap < 1e-6, "loc={location} scale={scale} y={y} gap={gap:e}");
    }
}

#[test]
fn censored_gev_crps_at_zero_observation_hand_case() {
    let dist = PredictiveDistribution::censored_gev(1.0, 1.0, 0.2).unwrap();
    let analytic = dist.crps(0.0);
    let numeric = crps_quadrature(&dist, 0.0);
    assert!(
        (analytic - numeric).abs() < 1e-6,
        "analytic={analytic} numeric={numeric}"
    );
}

#[test]
fn crps_negative_observation_extension() {
    // the formulas extend below zero as |y| + crps(0)
    for dist in [
        PredictiveDistribution::trunc_gaussian(1.0, 2.0).unwrap(),
        PredictiveDistribution::censored_gev(0.5, 1.0, 0.2).unwrap(),
    ] {
        let gap = relative_gap(dist.crps(-1.5), crps_quadrature(&dist, -1.5));
        assert!(gap < 1e-6, "gap={gap:e}");
    }
}

#[test]
fn quantile_cdf_roundtrip_on_continuous_support() {
    let mut rng = substream(102, &[4]);
    let dists = [
        PredictiveDistribution::gaussian(2.0, 3.0).unwrap(),
        PredictiveDistribution::trunc_gaussian(1.0, 2.0).unwrap(),
        PredictiveDistribution::censored_gev(1.0, 1.0, 0.2).unwrap(),
    ];
    for dist in &dists {
        for _ in 0..2000 {
            let p = 1e-5 + (1.0 - 2e-5) * rng.random::<f64>();
            let x = dist.quantile(p).unwrap();
            if x <= 0.0 && !matches!(dist, PredictiveDistribution::Gaussian(_)) {
                // atom or truncation boundary: only cdf(quantile) >= p is required
                assert!(dist.cdf(x) >= p - 1e-12);
                continue;
            }
            let p2 = dist.cdf(x);
            let x2 = dist.quantile(p2).unwrap();
            assert!(
                (x2 - x).abs() <= 1e-9 * (1.0 + x.abs()),
                "roundtrip {x} -> {p2} -> {x2}"
            );
            assert!(p2 >= p - 1e-9, "cdf(quantile(p)) = {p2} < p = {p}");
        }
    }
}

#[test]
fn crps_is_continuous_and_minimized_near_median() {
    let dists = [
        PredictiveDistribution::gaussian(1.0, 2.0).unwrap(),
        PredictiveDistribution::trunc_gaussian(1.5, 1.0).unwrap(),
        PredictiveDistribution::censored_gev(1.0, 1.0, 0.2).unwrap(),
    ];
    for dist in &dists {
        // continuity: small steps in y change the score by O(step)
        let mut prev = dist.crps(-1.0);
        let step = 1e-4;
        let mut y = -1.0 + step;
        while y < 8.0 {
            let cur = dist.crps(y);
            assert!((cur - prev).abs() < 2.0 * step, "jump at y={y}");
            prev = cur;
            y += step;
        }
    }
    // symmetric case: grid argmin of crps(y) sits at mu within one grid step
    let gauss = PredictiveDistribution::gaussian(1.0, 2.0).unwrap();
    let grid: Vec<f64> = (0..=400).map(|i| -3.0 + i as f64 * 0.02).collect();
    let argmin = grid
        .iter()
        .copied()
        .min_by(|a, b| gauss.crps(*a).partial_cmp(&gauss.crps(*b)).unwrap())
        .unwrap();
    assert!((argmin - 1.0).abs() <= 0.02 + 1e-12, "argmin {argmin}");
}

#[test]
fn empirical_cdf_of_samples_matches_cdf() {
    // Kolmogorov-Smirnov distance below 0.01 at 1e5 draws
    let dists = [
        PredictiveDistribution::gaussian(0.0, 1.0).unwrap(),
        PredictiveDistribution::trunc_gaussian(0.5, 1.0).unwrap(),
        PredictiveDistribution::censored_gev(0.3, 1.0, 0.2).unwrap(),
    ];
    for (i, dist) in dists.iter().enumerate() {
        let mut rng = substream(103, &[i as u64]);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // sup |F_n - F| over distinct values; the censored family has an
        // atom at zero where the left limit of the CDF is zero
        let mut ks = 0.0f64;
        let mut j = 0usize;
        while j < n {
            let x = draws[j];
            let mut j_end = j;
            while j_end + 1 < n && draws[j_end + 1] == x {
                j_end += 1;
            }
            let f = dist.cdf(x);
            let f_left = if x == 0.0 { 0.0 } else { f };
            let hi = (j_end + 1) as f64 / n as f64;
            let lo = j as f64 / n as f64;
            ks = ks.max((f - hi).abs()).max((f_left - lo).abs());
            j = j_end + 1;
        }
        assert!(ks < 0.01, "dist {i}: KS distance {ks}");
    }
}

#[test]
fn crps_random_pairs_all_families_bulk_oracle() {
    // the per-module invariant: 1000 random (dist, y) pairs per family
    let mut rng = substream(104, &[0]);
    for case in 0..1000 {
        let family = case % 3;
        let (dist, y) = match family {
            0 => {
                let mu = 30.0 * rng.random::<f64>() - 15.0;
                let sigma = 0.05 + 6.0 * rng.random::<f64>();
                (PredictiveDistribution::gaussian(mu, sigma).unwrap(),
                 mu + 10.0 * sigma * (rng.random::<f64>() - 0.5))
            }
            1 => {
                let scale = 0.05 + 5.0 * rng.random::<f64>();
                let loc = (30.0 * rng.random::<f64>() - 18.0) * scale;
                (PredictiveDistribution::trunc_gaussian(loc, scale).unwrap(),
                 (loc + 8.0 * scale * rng.random::<f64>()).max(0.0))
            }
            _ => {
                let loc = 8.0 * rng.random::<f64>() - 3.0;
                let scale = 0.1 + 4.0 * rng.random::<f64>();
                (PredictiveDistribution::censored_gev(loc, scale, 0.2).unwrap(),
                 12.0 * rng.random::<f64>())
            }
        };
        let analytic = dist.crps(y);
        assert!(analytic >= 0.0, "negative crps {analytic} case {case}");
        let numeric = crps_quadrature(&dist, y);
        let gap = relative_gap(analytic, numeric);
        assert!(gap < 1e-6, "case {case}: analytic {analytic} vs numeric {numeric}");
    }
}

//! Shared independent oracles for integration tests. Everything here is
//! deliberately dumb and slow: brute-force numerics that do not share code
//! with the implementation paths they check.

#![allow(dead_code)]

use enspost::dists::PredictiveDistribution;

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// CRPS by direct numerical integration of `(F(x) - 1{x >= y})^2`.
///
/// The bracket is `[center - 12 s, center + 12 s]` around the distribution's
/// location with its scale proxy `s`, widened to include the observation,
/// and split at the observation and at zero where the integrand kinks.
pub fn crps_quadrature(dist: &PredictiveDistribution, y: f64) -> f64 {
    let scale = dist.scale_equivalent();
    let center = dist.location_equivalent();
    let lo = (center - 12.0 * scale).min(y - 2.0 * scale);
    let hi = (center + 12.0 * scale).max(y + 2.0 * scale);
    let f = |x: f64| {
        let step = if x >= y { 1.0 } else { 0.0 };
        let d = dist.cdf(x) - step;
        d * d
    };
    let mut cuts = vec![lo, hi, y];
    if lo < 0.0 && hi > 0.0 {
        cuts.push(0.0);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0].max(lo), pair[1].min(hi));
        if b > a {
            total += adaptive_simpson(&f, a, b, 1e-9);
        }
    }
    total
}

/// Geometric-median objective: total Euclidean distance to all points.
pub fn l1_objective(points: &[Vec<f64>], candidate: &[f64]) -> f64 {
    points
        .iter()
        .map(|p| {
            p.iter()
                .zip(candidate)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// Brute-force geometric median: a dense grid over the bounding box,
/// repeatedly recentered and refined around the best point. The objective
/// is convex, so refinement converges to the global minimum value.
pub fn l1_median_grid_oracle(points: &[Vec<f64>]) -> f64 {
    let dims = points[0].len();
    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for p in points {
        for d in 0..dims {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let mut center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut span: f64 = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| b - a)
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 0.5;
    let grid = 7i64; // points per side per dimension, offsets -3..=3
    let mut best = l1_objective(points, &center);
    for _ in 0..40 {
        let mut improved_center = center.clone();
        let mut offsets = vec![-grid / 2; dims];
        loop {
            let candidate: Vec<f64> = center
                .iter()
                .zip(&offsets)
                .map(|(c, o)| c + *o as f64 * span / (grid / 2) as f64)
                .collect();
            let value = l1_objective(points, &candidate);
            if value < best {
                best = value;
                improved_center = candidate;
            }
            // odometer over the dims-dimensional offset grid
            let mut d = 0;
            loop {
                if d == dims {
                    break;
                }
                offsets[d] += 1;
                if offsets[d] <= grid / 2 {
                    break;
                }
                offsets[d] = -grid / 2;
                d += 1;
            }
            if d == dims {
                break;
            }
        }
        center = improved_center;
        span *= 0.45;
        if span < 1e-9 {
            break;
        }
    }
    best
}

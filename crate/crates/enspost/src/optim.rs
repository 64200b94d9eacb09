//! Derivative-free simplex minimization (Nelder-Mead).
//!
//! Small fixed-dimension problems only (EMOS has at most 7 parameters).
//! Objectives may return non-finite values for infeasible points; those are
//! treated as worse than any finite value.

/// Outcome of one simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Simplex diameter fell below the tolerance before the iteration cap.
    pub converged: bool,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

fn ordered_value(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Minimize `f` starting from `start`, with an initial simplex built by
/// perturbing each coordinate by `step`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    diameter_tol: f64,
    max_iterations: usize,
) -> SimplexResult {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if v[i].abs() > 1.0 { step * v[i].abs() } else { step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| ordered_value(f(v))).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        // order best..worst
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if diameter < diameter_tol {
            converged = true;
            break;
        }

        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> =
            centroid.iter().zip(&worst).map(|(c, w)| c + ALPHA * (c - w)).collect();
        let f_reflect = ordered_value(f(&reflect));

        if f_reflect < values[0] {
            let expand: Vec<f64> =
                centroid.iter().zip(&reflect).map(|(c, r)| c + GAMMA * (r - c)).collect();
            let f_expand = ordered_value(f(&expand));
            if f_expand < f_reflect {
                simplex[n] = expand;
                values[n] = f_expand;
            } else {
                simplex[n] = reflect;
                values[n] = f_reflect;
            }
        } else if f_reflect < values[n - 1] {
            simplex[n] = reflect;
            values[n] = f_reflect;
        } else {
            // contraction, outside or inside of the worst point
            let (base, f_base) = if f_reflect < values[n] {
                (reflect.clone(), f_reflect)
            } else {
                (worst.clone(), values[n])
            };
            let contract: Vec<f64> =
                centroid.iter().zip(&base).map(|(c, b)| c + RHO * (b - c)).collect();
            let f_contract = ordered_value(f(&contract));
            if f_contract < f_base {
                simplex[n] = contract;
                values[n] = f_contract;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + SIGMA * (v - b))
                        .collect();
                    values[i] = ordered_value(f(&shrunk));
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    SimplexResult {
        point: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimizes_shifted_quadratic() {
        let f = |x: &[f64]| {
            x.iter().enumerate().map(|(i, v)| (v - i as f64) * (v - i as f64)).sum::<f64>()
        };
        let r = nelder_mead(f, &[5.0; 4], 0.5, 1e-8, 2000);
        assert!(r.converged);
        for (i, v) in r.point.iter().enumerate() {
            assert_abs_diff_eq!(*v, i as f64, epsilon = 1e-6);
        }
    }

    #[test]
    fn minimizes_rosenbrock_2d() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-10, 5000);
        assert_abs_diff_eq!(r.point[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.point[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn never_returns_worse_than_start() {
        let f = |x: &[f64]| x[0].sin() + x[1].cos() * 3.0;
        let start = [0.3f64, 0.7f64];
        let f0 = start[0].sin() + start[1].cos() * 3.0;
        let r = nelder_mead(f, &start, 0.25, 1e-8, 50);
        assert!(r.value <= f0);
    }

    #[test]
    fn survives_infeasible_regions() {
        // objective undefined left of x = 0
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) + x[0].ln().powi(2) };
        let r = nelder_mead(f, &[0.5], 0.25, 1e-9, 1000);
        assert!(r.value.is_finite());
        assert!(r.point[0] > 0.0);
    }

    #[test]
    fn respects_iteration_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = nelder_mead(f, &[100.0; 6], 0.5, 1e-14, 10);
        assert_eq!(r.iterations, 10);
        assert!(!r.converged);
    }
}

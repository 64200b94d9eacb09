use std::time::Instant;
use std::hint::black_box;

/// Cephes-style erf/erfc via Abramowitz-Stegun 26.2.17-like rational (Hart).
/// Quick A&S 7.1.26 variant for comparison (|eps| <= 1.5e-7).
#[inline]
fn erf_as(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - y * (-x * x).exp())
}

fn main() {
    let xs: Vec<f64> = (0..720).map(|i| -4.0 + 8.0 * (i as f64) / 720.0).collect();
    let reps = 20000;

    let t0 = Instant::now();
    let mut acc = 0.0;
    for _ in 0..reps {
        for &x in &xs {
            acc += statrs::function::erf::erfc(black_box(x));
        }
    }
    let statrs_t = t0.elapsed().as_nanos() as f64 / (reps * xs.len()) as f64;
    println!("statrs erfc: {statrs_t:.1} ns/call (acc {acc:.1})");

    let t1 = Instant::now();
    let mut acc2 = 0.0;
    for _ in 0..reps {
        for &x in &xs {
            acc2 += erf_as(black_box(x));
        }
    }
    let as_t = t1.elapsed().as_nanos() as f64 / (reps * xs.len()) as f64;
    println!("A&S erf: {as_t:.1} ns/call (acc {acc2:.1})");

    let t2 = Instant::now();
    let mut acc3 = 0.0;
    for _ in 0..reps {
        for &x in &xs {
            acc3 += black_box(x).exp();
        }
    }
    let exp_t = t2.elapsed().as_nanos() as f64 / (reps * xs.len()) as f64;
    println!("bare exp: {exp_t:.1} ns/call (acc {acc3:.1})");

    // max error of A&S against statrs
    let mut maxerr = 0.0f64;
    for i in 0..100000 {
        let x = -8.0 + 16.0 * (i as f64) / 100000.0;
        let e = (erf_as(x) - statrs::function::erf::erf(x)).abs();
        maxerr = maxerr.max(e);
    }
    println!("A&S max abs err vs statrs: {maxerr:.2e}");
}

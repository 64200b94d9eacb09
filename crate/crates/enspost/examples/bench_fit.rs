use enspost::emos::*;
use rand::Rng;
use std::time::Instant;

fn main() {
    let mut rng = enspost::rng::substream(1, &[0]);
    let cases: Vec<TrainingCase> = (0..720)
        .map(|_| {
            let signal = 8.0 * (rng.random::<f64>() - 0.5);
            let hres = signal + 1.0 + 0.9 * (rng.random::<f64>() - 0.5);
            let ctrl = signal + 1.0 + 0.9 * (rng.random::<f64>() - 0.5);
            let ens = signal + 1.0 + 0.2 * (rng.random::<f64>() - 0.5);
            TrainingCase {
                offset: 0.0,
                x: [hres, ctrl, ens, 0.0],
                spread: 0.5 + 0.2 * rng.random::<f64>(),
                obs: signal + 0.8 * (rng.random::<f64>() - 0.5),
            }
        })
        .collect();

    let kind = VariableKind::T2m;
    let default = EmosParams::default_init(kind);

    let t0 = Instant::now();
    let mut fit = estimate_params(kind, &cases, &default).unwrap();
    let cold_time = t0.elapsed();
    println!("cold fit: {:?}, iters {}, crps {:.5}", cold_time, fit.iterations, fit.mean_crps);

    let t1 = Instant::now();
    for _ in 0..50 {
        fit = estimate_params(kind, &cases, &fit.params).unwrap();
    }
    let warm_time = t1.elapsed() / 50;
    println!("warm+cold fit avg: {:?}, iters {}", warm_time, fit.iterations);
    println!(
        "estimated criterion-6 cost: 156000 fits x {:?} / 2 cores = {:.1} min",
        warm_time,
        156000.0 * warm_time.as_secs_f64() / 2.0 / 60.0
    );
}

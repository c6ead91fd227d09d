//! Builds the (n=50, k=20, d=30) balanced code and checks weighted decoding
//! over sampled responder sets, then contrasts a spread and a contiguous set.

use num_complex::Complex64;
use rand::Rng;

use weighted_gc::cli::{identity_residual, responder_sets};
use weighted_gc::coding::{balanced_scheme, decode_identity_error, weight_scheme};
use weighted_gc::rng::seeded;

fn main() -> weighted_gc::error::Result<()> {
    let scheme = balanced_scheme(50, 20, 30)?;
    let p = scheme.params;
    println!("n={} k={} d={} parts/worker={} stragglers={} responders={}", p.n, p.k, p.d, p.parts_per_worker, p.stragglers, p.responders);
    println!("worker 0 holds parts {:?}", scheme.mask.row_support(0));

    let mut rng = seeded(7);
    let (sets, _) = responder_sets(p.n, p.responders, 0, 100, &mut rng);
    let weights: Vec<f64> = (0..p.k).map(|_| rng.random_range(0.0..4.0)).collect();
    let (unit, _) = identity_residual(&scheme, &sets, &vec![1.0; p.k])?;
    let (weighted, flagged) = identity_residual(&scheme, &sets, &weights)?;
    println!("100 random sets: residual unit {unit:.2e}, weighted {weighted:.2e}, flagged {flagged}");

    let w: Vec<Complex64> = weights.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let bt = weight_scheme(&scheme, &w)?;
    for (name, set) in [("every other worker", (0..42).step_by(2).collect::<Vec<_>>()), ("first 21 workers", (0..21).collect())] {
        let a = scheme.decode_vector(&set)?;
        let largest = a.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        println!("{name:>18}: max|a| {largest:.2e}, identity error {:.2e}", decode_identity_error(&a, &bt, &w));
    }
    Ok(())
}

//! The row-sampling sketch and the deduplicated weighted sketch built from
//! the same draws give the same least-squares gradient.

use rand::Rng;

use weighted_gc::numkit::{leverage_scores, normalize_scores, Mat};
use weighted_gc::optimize::{sketched_ls_gradient, weighted_gradient, LossModel};
use weighted_gc::rng::seeded;
use weighted_gc::sketch::{build_classic_sketch, build_shat, make_partition, sample_weighted};

fn main() -> weighted_gc::error::Result<()> {
    let mut rng = seeded(5);
    let x = Mat::from_fn(32, 4, |_, _| rng.random_range(-2.0..2.0));
    let y: Vec<f64> = (0..32).map(|_| rng.random_range(-2.0..2.0)).collect();
    let theta = vec![0.3, -0.2, 0.5, 0.1];
    let model = LossModel::least_squares(x, y)?;
    let pi = normalize_scores(&leverage_scores(&model.x)?)?;

    let singletons = make_partition(32, 32, &pi)?;
    let sp = sample_weighted(&singletons, 24, &mut seeded(11))?;
    let classic = build_classic_sketch(&pi, 24, &mut seeded(11))?;
    let shat = build_shat(&singletons, &sp)?;
    println!("classic sketch {}x{}, weighted sketch {}x{}", classic.rows(), classic.cols(), shat.rows(), shat.cols());
    println!("classic  {:?}", sketched_ls_gradient(&classic, &model, &theta)?);
    println!("weighted {:?}", sketched_ls_gradient(&shat, &model, &theta)?);
    println!("by parts {:?}", weighted_gradient(&model, &singletons, &sp, &theta)?);
    Ok(())
}

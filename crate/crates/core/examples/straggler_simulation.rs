//! Gradient descent through the coded network with 29 of 50 workers erased
//! each round, against the same descent computed directly.

use weighted_gc::coding::balanced_scheme;
use weighted_gc::data::synth_regression;
use weighted_gc::numkit::{leverage_scores, normalize_scores};
use weighted_gc::optimize::{gd, weighted_objective, GdConfig, LossModel};
use weighted_gc::rng::seeded;
use weighted_gc::simulate::{run_distributed_gd, StragglerModel};
use weighted_gc::sketch::{make_partition, sample_weighted};

fn main() -> weighted_gc::error::Result<()> {
    let data = synth_regression(1).dataset;
    let pi = normalize_scores(&leverage_scores(&data.x)?)?;
    let plan = make_partition(1000, 40, &pi)?;
    let sp = sample_weighted(&plan, 20, &mut seeded(2))?;
    let model = LossModel::least_squares(data.x, data.y)?;
    let scheme = balanced_scheme(50, 20, 30)?;
    let config = GdConfig::new(1e-7, 1000, 0.1)?;

    let run = run_distributed_gd(&model, &plan, &sp, &scheme, &config, &StragglerModel::uniform(29), &mut seeded(3))?;
    let direct = gd(model.dim(), &config, weighted_objective(&model, &plan, &sp))?;
    let gap = run.trace.theta.iter().zip(&direct.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("network: {} iterations, converged {}", run.trace.iterations, run.trace.converged);
    println!("direct:  {} iterations, converged {}", direct.iterations, direct.converged);
    println!("final iterate gap {gap:.2e}");
    println!("responders in round 0: {:?}", run.trace.records[0].responders);
    println!("padded code columns {}", run.padded_columns);
    println!("rows per worker per round {:?}", run.rows_per_round);
    Ok(())
}

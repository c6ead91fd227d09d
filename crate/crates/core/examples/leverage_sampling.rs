//! Leverage scores of the block-scaled synthetic design, block scores over
//! 40 parts and one weighted draw of 20 parts.

use weighted_gc::data::synth_regression;
use weighted_gc::numkit::{leverage_scores, normalize_scores};
use weighted_gc::rng::seeded;
use weighted_gc::sketch::{make_partition, sample_weighted, score_ratio};

fn main() -> weighted_gc::error::Result<()> {
    let data = synth_regression(1).dataset;
    let lev = leverage_scores(&data.x)?;
    let pi = normalize_scores(&lev)?;
    println!("sum of leverage scores {:.6} (p = {})", lev.iter().sum::<f64>(), data.dim());
    println!("row score ratio max/min {:.1}", score_ratio(&pi));

    let plan = make_partition(data.num_rows(), 40, &pi)?;
    println!("40 parts of {} rows, block score ratio {:.3}", plan.part_size(), plan.nonuniformity());

    let sp = sample_weighted(&plan, 20, &mut seeded(3))?;
    println!("draws     {:?}", sp.draws);
    println!("distinct  {:?}", sp.distinct_parts);
    println!("weights   {:?}", sp.weights);
    println!(
        "rows kept {} of budget {} ({} distinct parts for {} draws)",
        sp.retained_rows(),
        sp.budget,
        sp.num_distinct(),
        sp.num_draws()
    );
    Ok(())
}

//! One binary test at fixed N, then the smallest N meeting a 10% error target,
//! for the delta-mixture pair under Bell and homodyne readout.

use qsl::harness::{delta_pair, empirical_sample_complexity, run_binary_test, ChannelPlan, DecisionRule, SearchOptions, TestSpec};
use std::f64::consts::FRAC_PI_2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, q) = delta_pair(0.35, 0.35, 0.1);
    let bell = TestSpec::new(p.clone(), q.clone(), ChannelPlan::Bell { r: 1.2 }, DecisionRule::QuadrantSign);
    let hom = TestSpec::new(p, q, ChannelPlan::Homodyne { angles: vec![0.0, FRAC_PI_2], r: 1.2 }, DecisionRule::SignCorrectedMeanThreshold);

    let res = run_binary_test(&bell, 8, 400, 1)?;
    println!("bell, N = 8: max error {:.3} [{:.3}, {:.3}]", res.max.rate(), res.max.lo, res.max.hi);

    let opts = SearchOptions::default();
    for (name, spec) in [("bell", &bell), ("homodyne", &hom)] {
        let ns = empirical_sample_complexity(spec, &opts, 2)?;
        let (lo, hi) = ns.band();
        println!("{name:>8}: N* = {} (band {lo}..{hi}, {} evaluations)", ns.n_star, ns.evaluations);
    }
    Ok(())
}

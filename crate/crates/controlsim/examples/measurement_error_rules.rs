//! Three ways to read a no-intervention arm that should sit at zero: a
//! strict count of large values, a count allowed to grow with the sample,
//! and a test of the mean. One wild meter reading trips them differently
//! depending on how many clean readings surround it.

use std::collections::BTreeMap;

use controlsim::diagnostics::{
    abs_mean_null_tc, evaluate_rule, mean_null_tc, threshold_count, DecisionRule, TestMethod,
};
use controlsim::{Assignment, ObservedDataset};

fn null_arm(values: &[f64]) -> ObservedDataset {
    let mut w = BTreeMap::new();
    let mut measured = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        let id = format!("s{i:02}");
        w.insert(id.clone(), "nothing".to_string());
        measured.insert((id, "bp".to_string()), *v);
    }
    ObservedDataset {
        assignment: Assignment { w, mechanism_tag: "fixed".into() },
        measured,
        measurement_time: None,
        seed: 0,
        scenario_tag: "meter-check".into(),
    }
}

fn main() -> controlsim::Result<()> {
    let rules = [
        ("strict count (any |bp| > 4)", DecisionRule::StrictCount { threshold_a: 4.0 }),
        (
            "fraction count (> 10% of arm)",
            DecisionRule::FractionCount { threshold_a: 4.0, fraction: 0.10 },
        ),
        (
            "mean test (alpha 0.05)",
            DecisionRule::MeanTest { alpha: 0.05, method: TestMethod::SignPermutation },
        ),
    ];

    // The same contamination, one wild +6 reading, in arms of 10 and 20.
    for n in [10usize, 20] {
        let mut values = vec![0.1; n - 1];
        values.push(6.0);
        let data = null_arm(&values);
        println!(
            "arm of {n}: mean {:+.3}, mean |bp| {:.3}, readings past 4: {}",
            mean_null_tc(&data, "bp", "nothing")?,
            abs_mean_null_tc(&data, "bp", "nothing")?,
            threshold_count(&data, "bp", "nothing", 4.0)?,
        );
        for (label, rule) in &rules {
            println!("  {label:<32} {:?}", evaluate_rule(&data, "bp", "nothing", rule)?);
        }
    }

    // A drift that shifts every unit a little never produces a large
    // reading, so only the mean test can see it.
    let drifted = null_arm(&vec![0.8; 20]);
    println!("\narm of 20 with a uniform +0.8 drift:");
    for (label, rule) in &rules {
        println!("  {label:<32} {:?}", evaluate_rule(&drifted, "bp", "nothing", rule)?);
    }
    Ok(())
}

//! When the waiting room decides the arm (stressed units always get coffee,
//! calm units never do), the stress artifact rides entirely on the active
//! arm and masquerades as a treatment effect. A second outcome that no
//! treatment can touch catches it in two stages: first the pooled sample
//! deviates, then the deviation splits unevenly between the arms.

use std::collections::BTreeMap;

use controlsim::diagnostics::{diagnose_confounding, ConfoundingConfig, TestMethod};
use controlsim::sim::{simulate_experiment, AssignmentMechanism, FactorEffect, NoiseModel};
use controlsim::{OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind, TreatmentLevel, Unit};

fn main() -> controlsim::Result<()> {
    let units: Vec<Unit> = (0..12)
        .map(|i| {
            Unit::new(&format!("s{i:02}")).with_factor("room", if i < 6 { "stress" } else { "calm" })
        })
        .collect();
    // Coffee raises bp by 1. Skin temperature is the canary: no treatment
    // moves it, so any arm imbalance there implicates the assignment.
    let table = ScienceTable::new(
        units,
        vec![
            OutcomeDef::new("bp", "Blood pressure change", "mmHg", OutcomeRole::Primary),
            OutcomeDef::new("skin_temp", "Skin temperature change", "deg C", OutcomeRole::Secondary),
        ],
        vec![
            TreatmentLevel::new("coffee", "Caffeinated coffee", TreatmentKind::Active),
            TreatmentLevel::new("decaf", "Decaffeinated coffee", TreatmentKind::ControlTreatment),
        ],
        |_, o, t| if (o.id.as_str(), t.id.as_str()) == ("bp", "coffee") { 1.0 } else { 0.0 },
    )?;

    // Stress shifts both outcomes by 4, and the mechanism hands every
    // stressed unit coffee: perfect confounding.
    let stress = |outcome: &str| FactorEffect {
        factor: "room".into(),
        level: "stress".into(),
        outcome: outcome.into(),
        shift: 4.0,
    };
    let mechanism = AssignmentMechanism::FactorConfounded {
        factor: "room".into(),
        arm_probs: BTreeMap::from([
            (
                "stress".to_string(),
                BTreeMap::from([("coffee".to_string(), 1.0), ("decaf".to_string(), 0.0)]),
            ),
            (
                "calm".to_string(),
                BTreeMap::from([("coffee".to_string(), 0.0), ("decaf".to_string(), 1.0)]),
            ),
        ]),
    };
    let data = simulate_experiment(
        &table,
        &mechanism,
        &[stress("bp"), stress("skin_temp")],
        &NoiseModel::None,
        &["bp".to_string(), "skin_temp".to_string()],
        17,
        "confounded",
    )?;

    let dim = data.difference_in_means("bp", "coffee", "decaf")?;
    let tau = table.average_effect("bp", "coffee", "decaf")?;
    println!("difference in means on bp: {dim:+.1} (true effect {tau:+.1}, bias {:+.1})", dim - tau);

    let finding = diagnose_confounding(
        &data,
        &ConfoundingConfig {
            outcome: "skin_temp".into(),
            active: "coffee".into(),
            control: "decaf".into(),
            alpha: 0.05,
            method: TestMethod::SignPermutation,
        },
    )?;
    println!(
        "stage 1: pooled skin-temp mean {:+.2} over {} units, p = {:.4}{}",
        finding.pooled_mean,
        finding.pooled_n,
        finding.pooled_p,
        if finding.pooled_flagged { " -- flagged" } else { "" }
    );
    match (finding.arm_difference, finding.arm_difference_p) {
        (Some(diff), Some(p)) => {
            println!("stage 2: arm difference {diff:+.1}, p = {p:.4}");
        }
        _ => println!("stage 2: not reached (pool looks clean)"),
    }
    println!(
        "verdict: {}",
        if finding.implicates_assignment(0.05) {
            "the assignment mechanism itself is confounded"
        } else if finding.pooled_flagged {
            "a shared artifact touches everyone, but arms agree"
        } else {
            "no artifact detected"
        }
    );
    Ok(())
}

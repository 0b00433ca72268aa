//! Compliance checking through an outcome that cannot stay still: caffeine
//! raises heart rate in anyone who actually drinks it, so an active-arm
//! unit whose heart rate never moved did not take the treatment.

use std::collections::BTreeMap;

use controlsim::controls::{ControlDeclaration, ControlKind};
use controlsim::pretrial::{identify_compliers, PretrialProtocol, ProtocolPurpose, SubgroupCall};
use controlsim::sim::{simulate_experiment, AssignmentMechanism, NoiseModel};
use controlsim::{OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind, TreatmentLevel, Unit};

fn main() -> controlsim::Result<()> {
    // Every fifth unit quietly skips the cup. Their bodies see the
    // no-intervention column no matter what the assignment sheet says.
    let n = 20usize;
    let units: Vec<Unit> = (0..n)
        .map(|i| Unit::new(&format!("s{i:02}")).with_complier_truth(i % 5 != 0))
        .collect();
    let table = ScienceTable::new(
        units,
        vec![
            OutcomeDef::new("alertness", "Alertness change", "points", OutcomeRole::Primary),
            OutcomeDef::new("heart_rate", "Heart rate change", "bpm", OutcomeRole::Secondary),
        ],
        vec![
            TreatmentLevel::new("coffee", "Caffeinated coffee", TreatmentKind::Active),
            TreatmentLevel::new("nothing", "No intervention", TreatmentKind::NullTreatmentControl),
        ],
        |_, o, t| match (o.id.as_str(), t.id.as_str()) {
            ("alertness", "coffee") => 4.0,
            ("heart_rate", "coffee") => 8.0,
            _ => 0.0,
        },
    )?;

    let data = simulate_experiment(
        &table,
        &AssignmentMechanism::CompleteRandomization {
            arm_sizes: BTreeMap::from([("coffee".to_string(), 15), ("nothing".to_string(), 5)]),
        },
        &[],
        &NoiseModel::AdditiveGaussian {
            sigma: BTreeMap::from([("alertness".to_string(), 0.5), ("heart_rate".to_string(), 1.0)]),
        },
        &["alertness".to_string(), "heart_rate".to_string()],
        11,
        "compliance",
    )?;

    // The check reads one non-null outcome control: heart rate must move
    // under coffee. A coffee-arm unit still within 4 bpm of zero is called
    // a noncomplier.
    let heart_rate_moves = ControlDeclaration::new(ControlKind::NonNullOutcomeControl, "heart_rate")
        .with_treatment("coffee")
        .with_min_magnitude(4.0);
    let protocol = PretrialProtocol {
        id: "compliance_check".into(),
        purpose: ProtocolPurpose::Compliers,
        controls: Vec::new(),
        per_unit_replicates: 1,
        decision_threshold: 4.0,
        alpha: 0.05,
        call_mode: Default::default(),
        registered: true,
    };
    let report = identify_compliers(&data, &heart_rate_moves, &protocol)?;

    let mut wrong = 0usize;
    for (unit, call) in &report.per_unit_calls {
        let truth = table.units().iter().find(|u| &u.id == unit).unwrap().complier_truth.unwrap();
        let verdict = match call {
            SubgroupCall::Complier => "complied",
            SubgroupCall::Noncomplier => "skipped the cup",
            _ => "not in the coffee arm",
        };
        let mark = match call {
            SubgroupCall::Complier if !truth => {
                wrong += 1;
                "  <- wrong"
            }
            SubgroupCall::Noncomplier if truth => {
                wrong += 1;
                "  <- wrong"
            }
            _ => "",
        };
        println!("  {unit}: {verdict}{mark}");
    }
    println!(
        "complier fraction among the coffee arm: {:.2} ({wrong} calls disagree with the planted truth)",
        report.responder_fraction
    );
    Ok(())
}

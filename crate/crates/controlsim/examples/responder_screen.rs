//! A crossover pilot measures every unit under both coffee and decaf, calls
//! each one responder or nonresponder, and splits the population effect into
//! the two subgroup effects it is actually made of.

use std::collections::BTreeMap;

use controlsim::controls::{ControlDeclaration, ControlKind, NamedControl};
use controlsim::pretrial::{
    decompose_effect, default_responder_threshold, identify_responders, simulate_crossover,
    PretrialProtocol, ProtocolPurpose, ResponderCallMode, SubgroupCall,
};
use controlsim::sim::NoiseModel;
use controlsim::{OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind, TreatmentLevel, Unit};

fn main() -> controlsim::Result<()> {
    // Two of every three units respond to caffeine with +6 alertness; the
    // rest barely register it. The pilot does not know who is who.
    let n = 18usize;
    let units: Vec<Unit> = (0..n)
        .map(|i| Unit::new(&format!("s{i:02}")).with_responder_truth(i % 3 != 2))
        .collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("alertness", "Alertness change", "points", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("coffee", "Caffeinated coffee", TreatmentKind::Active),
            TreatmentLevel::new("decaf", "Decaffeinated coffee", TreatmentKind::ControlTreatment),
        ],
        |u, _, t| {
            if t.id == "coffee" && u.responder_truth == Some(true) {
                6.0
            } else {
                0.0
            }
        },
    )?;

    let screen_control = NamedControl::new(
        "caffeine_response",
        ControlDeclaration::new(ControlKind::NonNullContrastControl, "alertness")
            .with_contrast("coffee", "decaf")
            .with_min_magnitude(2.0),
    );
    let noise_sd = 0.5;
    let replicates = 4;
    let protocol = PretrialProtocol {
        id: "responder_screen".into(),
        purpose: ProtocolPurpose::Responders,
        controls: vec![screen_control.clone()],
        per_unit_replicates: replicates,
        decision_threshold: default_responder_threshold(noise_sd, replicates),
        alpha: 0.05,
        call_mode: ResponderCallMode::ThresholdBand,
        registered: true,
    };
    println!(
        "band half-width for sd {noise_sd} and {replicates} replicates per side: {:.3}",
        protocol.decision_threshold
    );

    let pilot = simulate_crossover(
        &table,
        &[screen_control],
        replicates,
        &NoiseModel::AdditiveGaussian { sigma: BTreeMap::from([("alertness".to_string(), noise_sd)]) },
        23,
    )?;
    let calls = identify_responders(&pilot, &protocol)?;

    let mut wrong = 0usize;
    for u in table.units() {
        let called = calls.per_unit_calls[&u.id] == SubgroupCall::Responder;
        if called != u.responder_truth.unwrap() {
            wrong += 1;
        }
    }
    println!(
        "called {:.0}% responders ({} of {n} calls disagree with the planted truth)",
        100.0 * calls.responder_fraction,
        wrong
    );
    println!(
        "estimated effects: responders {:+.2}, nonresponders {:+.2}, population {:+.2}",
        calls.responder_effect.unwrap(),
        calls.nonresponder_effect.unwrap(),
        calls.population_effect.unwrap()
    );

    // Back on the science table, the calls split the true average effect
    // into its parts exactly.
    let split = decompose_effect(&table, &calls.per_unit_calls)?;
    println!(
        "true decomposition: {:.3} = {:.3} x {:+.2} + {:.3} x {:+.2}",
        split.population_effect.unwrap(),
        split.responder_fraction,
        split.responder_effect.unwrap(),
        1.0 - split.responder_fraction,
        split.nonresponder_effect.unwrap()
    );
    Ok(())
}

//! The experiment pipeline: one dataset from one seed.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::{Assignment, ObservedDataset, ScienceTable};
use crate::sim::{apply_factor_effects, measure, AssignmentMechanism, FactorEffect, NoiseModel};

/// Realize one assignment from the mechanism.
pub fn assign(table: &ScienceTable, mechanism: &AssignmentMechanism, seed: u64) -> Result<Assignment> {
    super::assign::draw_assignment(table, mechanism, seed)
}

/// Run the whole pipeline: shift the table by the factor effects, draw an
/// assignment, reveal each unit's column, measure with noise.
///
/// Units with `complier_truth == Some(false)` never take what they are
/// assigned: their observations come from the no-intervention column for
/// every measured outcome, while the recorded assignment keeps the assigned
/// level. Noise substreams are keyed by (seed, unit, outcome), so one
/// outcome's draws never depend on which other outcomes are measured.
pub fn simulate_experiment(
    table: &ScienceTable,
    mechanism: &AssignmentMechanism,
    effects: &[FactorEffect],
    noise: &NoiseModel,
    measured_outcomes: &[String],
    seed: u64,
    scenario_tag: &str,
) -> Result<ObservedDataset> {
    let shifted = apply_factor_effects(table, effects)?;
    simulate_shifted(&shifted, mechanism, noise, measured_outcomes, seed, scenario_tag)
}

/// Pipeline tail for a table whose factor effects are already applied.
/// Power loops hoist the shift out of the replication loop through this.
pub(crate) fn simulate_shifted(
    shifted: &ScienceTable,
    mechanism: &AssignmentMechanism,
    noise: &NoiseModel,
    measured_outcomes: &[String],
    seed: u64,
    scenario_tag: &str,
) -> Result<ObservedDataset> {
    if measured_outcomes.is_empty() {
        return Err(Error::domain("no outcomes declared measured"));
    }
    for outcome in measured_outcomes {
        shifted.outcome(outcome)?;
    }
    noise.validate(measured_outcomes)?;

    let assignment = assign(shifted, mechanism, seed)?;
    let noncompliers_exist = shifted.units().iter().any(|u| u.complier_truth == Some(false));
    let null_level = shifted.null_treatment_control().map(|t| t.id.clone());
    if noncompliers_exist && null_level.is_none() {
        return Err(Error::domain(
            "the table has noncompliers but no null_treatment_control level to observe them under",
        ));
    }

    let noise_key = StreamKey::new(seed).tag("noise");
    let mut measured = BTreeMap::new();
    for unit in shifted.units() {
        let assigned = assignment.assigned(&unit.id)?.to_string();
        // Noncompliers leave the intervention untaken; their bodies see the
        // no-intervention column.
        let effective = if unit.complier_truth == Some(false) {
            null_level.clone().expect("checked above")
        } else {
            assigned
        };
        for outcome in measured_outcomes {
            let latent = shifted.potential_outcome(&unit.id, outcome, &effective)?;
            let mut rng = noise_key.tag(&unit.id).tag(outcome).rng();
            let value = measure(latent, noise, outcome, &mut rng)?;
            measured.insert((unit.id.clone(), outcome.clone()), value);
        }
    }

    Ok(ObservedDataset {
        assignment,
        measured,
        measurement_time: None,
        seed,
        scenario_tag: scenario_tag.into(),
    })
}

use serde::{Deserialize, Serialize};

use super::{evaluate_rule, DecisionRule, Verdict};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::ScienceTable;
use crate::sim::{apply_factor_effects, simulate_shifted, AssignmentMechanism, FactorEffect, NoiseModel};

/// A full experiment description, reusable across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSetup {
    pub table: ScienceTable,
    pub mechanism: AssignmentMechanism,
    pub effects: Vec<FactorEffect>,
    pub noise: NoiseModel,
    pub measured_outcomes: Vec<String>,
    /// Outcome the decision rule inspects.
    pub outcome: String,
    /// Arm the decision rule inspects.
    pub null_treatment_control: String,
    pub scenario_tag: String,
}

/// Optional corruption injected on top of the setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Flaw {
    /// Leave the setup untouched; the power against this is the rule's
    /// false-rejection rate.
    None,
    /// Add one more factor effect.
    Factor(FactorEffect),
    /// Replace the noise model.
    Noise(NoiseModel),
}

/// Fraction of replicated experiments the rule rejects when the flaw is
/// present. Each replication re-draws assignment and noise from a seed
/// keyed by the replicate index, so two calls that differ only in the flaw
/// share their random streams and compare cleanly.
pub fn diagnostic_power(
    setup: &ExperimentSetup,
    rule: &DecisionRule,
    flaw: &Flaw,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if replications == 0 {
        return Err(Error::domain("power needs at least one replication"));
    }
    rule.validate()?;

    let mut effects = setup.effects.clone();
    let mut noise = &setup.noise;
    match flaw {
        Flaw::None => {}
        Flaw::Factor(extra) => effects.push(extra.clone()),
        Flaw::Noise(model) => noise = model,
    }
    // the shifted table is assignment-independent, so build it once
    let shifted = apply_factor_effects(&setup.table, &effects)?;

    let key = StreamKey::new(seed).tag("power");
    let mut rejects = 0usize;
    for rep in 0..replications {
        let rep_seed = key.index(rep as u64).seed();
        let data = simulate_shifted(
            &shifted,
            &setup.mechanism,
            noise,
            &setup.measured_outcomes,
            rep_seed,
            &setup.scenario_tag,
        )?;
        if evaluate_rule(&data, &setup.outcome, &setup.null_treatment_control, rule)? == Verdict::RejectExperiment {
            rejects += 1;
        }
    }
    Ok(rejects as f64 / replications as f64)
}

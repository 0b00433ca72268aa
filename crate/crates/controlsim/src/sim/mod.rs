//! Generative side of the framework: tables in, observed datasets out.
//!
//! The pipeline is apply_factor_effects -> assign -> observe -> measure.
//! Factor effects model design flaws (a stressful waiting room) by shifting
//! potential outcomes; the assignment mechanism realizes one column per
//! unit; measurement adds noise. Every random draw uses a keyed substream,
//! so a dataset is a pure function of (table, mechanism, noise, seed).

mod assign;
mod pipeline;
mod timecourse;

pub use assign::{enumerate_assignments, AssignmentMechanism, DEFAULT_ENUMERATION_CAP};
pub use pipeline::{assign, simulate_experiment};
pub(crate) use pipeline::simulate_shifted;
pub use timecourse::{simulate_timecourse, ResponseCurve, Timecourse};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::science::ScienceTable;

/// An additive shift applied to one outcome for every unit carrying a given
/// factor level, across all treatment columns. This is how unintended
/// influences enter a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEffect {
    pub factor: String,
    pub level: String,
    pub outcome: String,
    pub shift: f64,
}

/// Measurement noise. Sigma never defaults: a scenario either declares a
/// noiseless design or says what the noise is, per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    AdditiveGaussian { sigma: BTreeMap<String, f64> },
}

impl NoiseModel {
    pub fn validate(&self, measured_outcomes: &[String]) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::AdditiveGaussian { sigma } => {
                for (outcome, sd) in sigma {
                    if !(sd.is_finite() && *sd >= 0.0) {
                        return Err(Error::domain(format!("noise sd for `{outcome}` must be finite and >= 0")));
                    }
                }
                for outcome in measured_outcomes {
                    if !sigma.contains_key(outcome) {
                        return Err(Error::domain(format!(
                            "additive_gaussian noise declares no sd for measured outcome `{outcome}`"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// One measurement of a latent value under the noise model, consuming draws
/// from the caller's substream.
pub fn measure(latent: f64, noise: &NoiseModel, outcome: &str, rng: &mut ChaCha8Rng) -> Result<f64> {
    match noise {
        NoiseModel::None => Ok(latent),
        NoiseModel::AdditiveGaussian { sigma } => {
            let sd = sigma
                .get(outcome)
                .copied()
                .ok_or_else(|| Error::domain(format!("no noise sd declared for outcome `{outcome}`")))?;
            let z: f64 = rng.sample(StandardNormal);
            Ok(latent + sd * z)
        }
    }
}

/// New table with every applicable shift added in. Shifts for the same
/// (unit, outcome) accumulate; values under every treatment level move
/// together, which is what makes a factor a property of the unit rather
/// than of the assignment.
pub fn apply_factor_effects(table: &ScienceTable, effects: &[FactorEffect]) -> Result<ScienceTable> {
    for effect in effects {
        if !effect.shift.is_finite() {
            return Err(Error::domain(format!(
                "factor effect on `{}` for {}={} has a non-finite shift",
                effect.outcome, effect.factor, effect.level
            )));
        }
        table.outcome(&effect.outcome)?;
        let mut seen = false;
        let mut known_factor = false;
        for unit in table.units() {
            if let Some(level) = unit.factors.get(&effect.factor) {
                known_factor = true;
                seen |= level == &effect.level;
            }
        }
        if !known_factor {
            return Err(Error::UnknownFactor(effect.factor.clone()));
        }
        if !seen {
            return Err(Error::UnknownFactorLevel { factor: effect.factor.clone(), level: effect.level.clone() });
        }
    }
    ScienceTable::new(
        table.units().to_vec(),
        table.outcomes().to_vec(),
        table.treatments().to_vec(),
        |u, o, t| {
            let base = table.potential_outcome(&u.id, &o.id, &t.id).expect("same ids");
            let shift: f64 = effects
                .iter()
                .filter(|e| e.outcome == o.id && u.factors.get(&e.factor) == Some(&e.level))
                .map(|e| e.shift)
                .sum();
            base + shift
        },
    )
}

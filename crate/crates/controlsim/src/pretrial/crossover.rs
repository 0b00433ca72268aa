use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controls::NamedControl;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::ScienceTable;
use crate::sim::{measure, NoiseModel};

/// Replicated measurements of one unit under both levels of one contrast
/// control: the unit serves as its own comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverSample {
    pub active: Vec<f64>,
    pub reference: Vec<f64>,
}

impl CrossoverSample {
    /// Estimated per-unit contrast: mean of active minus mean of reference
    /// replicates.
    pub fn estimated_contrast(&self) -> Result<f64> {
        if self.active.is_empty() || self.reference.is_empty() {
            return Err(Error::Protocol("crossover sample is missing replicates on one side".into()));
        }
        let a = self.active.iter().sum::<f64>() / self.active.len() as f64;
        let r = self.reference.iter().sum::<f64>() / self.reference.len() as f64;
        Ok(a - r)
    }
}

/// Crossover measurements for every unit of a pilot, keyed by unit and
/// control id. The insertion order of units is preserved so reports list
/// them the way the pilot enrolled them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossoverData {
    units: Vec<String>,
    samples: BTreeMap<(String, String), CrossoverSample>,
    /// Seed of the process that produced the data; test-based responder
    /// calls derive their permutation streams from it.
    pub seed: u64,
}

impl CrossoverData {
    pub fn new(seed: u64) -> Self {
        CrossoverData { units: Vec::new(), samples: BTreeMap::new(), seed }
    }

    pub fn insert(&mut self, unit: &str, control: &str, sample: CrossoverSample) {
        if !self.units.iter().any(|u| u == unit) {
            self.units.push(unit.to_string());
        }
        self.samples.insert((unit.to_string(), control.to_string()), sample);
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn sample(&self, unit: &str, control: &str) -> Option<&CrossoverSample> {
        self.samples.get(&(unit.to_string(), control.to_string()))
    }
}

/// Run a crossover pilot against the table: measure each unit
/// `per_unit_replicates` times under both levels of every listed contrast
/// control.
pub fn simulate_crossover(
    table: &ScienceTable,
    controls: &[NamedControl],
    per_unit_replicates: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CrossoverData> {
    if controls.is_empty() {
        return Err(Error::domain("a crossover pilot needs at least one contrast control"));
    }
    if per_unit_replicates == 0 {
        return Err(Error::domain("a crossover pilot needs at least one replicate per side"));
    }
    let mut outcomes: Vec<String> = Vec::new();
    for named in controls {
        named.decl.validate(table)?;
        if !named.decl.kind.is_contrast() {
            return Err(Error::domain(format!(
                "crossover control `{}` must be a contrast control",
                named.id
            )));
        }
        if controls.iter().filter(|c| c.id == named.id).count() > 1 {
            return Err(Error::domain(format!("duplicate crossover control id `{}`", named.id)));
        }
        if !outcomes.contains(&named.decl.outcome) {
            outcomes.push(named.decl.outcome.clone());
        }
    }
    noise.validate(&outcomes)?;

    let mut data = CrossoverData::new(seed);
    for unit in table.units() {
        for named in controls {
            let pair = named.decl.contrast.as_ref().expect("validated contrast");
            let latent_active = table.potential_outcome(&unit.id, &named.decl.outcome, &pair.active)?;
            let latent_reference = table.potential_outcome(&unit.id, &named.decl.outcome, &pair.control)?;
            let key = StreamKey::new(seed).tag("crossover").tag(&unit.id).tag(&named.id);
            let mut sample = CrossoverSample {
                active: Vec::with_capacity(per_unit_replicates),
                reference: Vec::with_capacity(per_unit_replicates),
            };
            let mut rng = key.tag("active").rng();
            for _ in 0..per_unit_replicates {
                sample.active.push(measure(latent_active, noise, &named.decl.outcome, &mut rng)?);
            }
            let mut rng = key.tag("reference").rng();
            for _ in 0..per_unit_replicates {
                sample.reference.push(measure(latent_reference, noise, &named.decl.outcome, &mut rng)?);
            }
            data.insert(&unit.id, &named.id, sample);
        }
    }
    Ok(data)
}

//! Response-over-time simulation for timing pilots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::ScienceTable;
use crate::sim::{measure, NoiseModel};

/// Piecewise-linear response shape: zero up to `onset`, rising to
/// `peak_amplitude` at `peak_time`, falling back to zero at `decay_time`,
/// zero afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseCurve {
    pub onset: f64,
    pub peak_time: f64,
    pub decay_time: f64,
    #[serde(default = "one")]
    pub peak_amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl ResponseCurve {
    pub fn new(onset: f64, peak_time: f64, decay_time: f64, peak_amplitude: f64) -> Result<Self> {
        let curve = ResponseCurve { onset, peak_time, decay_time, peak_amplitude };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = self.onset >= 0.0 && self.onset < self.peak_time && self.peak_time < self.decay_time;
        if !ordered || !self.peak_amplitude.is_finite() || !self.decay_time.is_finite() {
            return Err(Error::domain(format!(
                "response curve needs 0 <= onset < peak_time < decay_time and finite amplitude, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Raw curve value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        if t <= self.onset || t >= self.decay_time {
            0.0
        } else if t <= self.peak_time {
            self.peak_amplitude * (t - self.onset) / (self.peak_time - self.onset)
        } else {
            self.peak_amplitude * (self.decay_time - t) / (self.decay_time - self.peak_time)
        }
    }
}

/// Per-unit responses sampled on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timecourse {
    pub outcome: String,
    pub treatment: String,
    pub times: Vec<f64>,
    /// unit id -> one response per entry of `times`
    pub responses: BTreeMap<String, Vec<f64>>,
}

/// Measure every unit's response to `treatment` on `outcome` at each sampled
/// time. Each unit's curve is rescaled so its value at `peak_time` equals
/// that unit's tabulated potential outcome; shape comes from the curve,
/// size from the science table.
pub fn simulate_timecourse(
    table: &ScienceTable,
    curves: &BTreeMap<String, ResponseCurve>,
    treatment: &str,
    outcome: &str,
    times: &[f64],
    noise: &NoiseModel,
    seed: u64,
) -> Result<Timecourse> {
    table.treatment(treatment)?;
    table.outcome(outcome)?;
    if times.is_empty() {
        return Err(Error::domain("timecourse needs at least one sampled time"));
    }
    for pair in times.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::domain("sampled times must be strictly increasing"));
        }
    }
    if !times.iter().all(|t| t.is_finite() && *t >= 0.0) {
        return Err(Error::domain("sampled times must be finite and non-negative"));
    }
    for unit in table.units() {
        let curve = curves
            .get(&unit.id)
            .ok_or_else(|| Error::domain(format!("no response curve for unit `{}`", unit.id)))?;
        curve.validate()?;
    }

    let key = StreamKey::new(seed).tag("timecourse").tag(outcome).tag(treatment);
    let mut responses = BTreeMap::new();
    for unit in table.units() {
        let curve = &curves[&unit.id];
        let latent = table.potential_outcome(&unit.id, outcome, treatment)?;
        let mut series = Vec::with_capacity(times.len());
        for (i, t) in times.iter().enumerate() {
            let shape = if curve.peak_amplitude == 0.0 { 0.0 } else { curve.value(*t) / curve.peak_amplitude };
            let mut rng = key.tag(&unit.id).index(i as u64).rng();
            series.push(measure(shape * latent, noise, outcome, &mut rng)?);
        }
        responses.insert(unit.id.clone(), series);
    }
    Ok(Timecourse { outcome: outcome.into(), treatment: treatment.into(), times: times.to_vec(), responses })
}

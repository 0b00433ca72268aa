//! Pre-trial procedures: small studies run before the main experiment to
//! pick a measurement time, find the units an effect can show up in at all,
//! verify units actually take their treatment, and size the placebo
//! response. All of them produce unit lists or constants the main study
//! consumes; the protocol object fixes the procedure so those lists cannot
//! be tuned after unblinding.

mod crossover;
mod timing;

pub use crossover::{simulate_crossover, CrossoverData, CrossoverSample};
pub use timing::{optimal_timing, TimingCriterion, TimingRecommendation, TIMESCALE_ASSUMPTION};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controls::{ControlDeclaration, ControlKind, NamedControl};
use crate::diagnostics::two_sample_permutation_p;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::{ObservedDataset, ScienceTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolPurpose {
    Timing,
    Responders,
    Compliers,
    Placebo,
}

/// How responder calls are made from crossover estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponderCallMode {
    /// A unit responds on a control when its estimated contrast leaves the
    /// band |estimate| <= decision_threshold. Default, because per-unit
    /// hypothesis tests are underpowered at pilot replicate counts.
    #[default]
    ThresholdBand,
    /// A unit responds on a control when a two-sample permutation test of
    /// its active vs reference replicates rejects at level alpha.
    MeanTest,
}

/// A fixed description of a pre-trial procedure. Write it down, mark it
/// registered, then run it; exclusion lists from unregistered protocols
/// cannot be consumed by a main-study scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrialProtocol {
    pub id: String,
    pub purpose: ProtocolPurpose,
    /// The contrast controls a responder call must consult (listed
    /// explicitly; the procedure never infers them), or the single non-null
    /// outcome control a complier call reads.
    #[serde(default)]
    pub controls: Vec<NamedControl>,
    #[serde(default = "one")]
    pub per_unit_replicates: usize,
    pub decision_threshold: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub call_mode: ResponderCallMode,
    #[serde(default)]
    pub registered: bool,
}

fn one() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.05
}

impl PretrialProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Protocol("protocol id must be non-empty".into()));
        }
        if self.per_unit_replicates == 0 {
            return Err(Error::Protocol(format!("protocol `{}` needs per_unit_replicates >= 1", self.id)));
        }
        if !(self.decision_threshold.is_finite() && self.decision_threshold >= 0.0) {
            return Err(Error::Protocol(format!(
                "protocol `{}` needs a finite decision_threshold >= 0",
                self.id
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Protocol(format!("protocol `{}` needs alpha in (0, 1)", self.id)));
        }
        let mut ids: Vec<&str> = self.controls.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.controls.len() {
            return Err(Error::Protocol(format!("protocol `{}` lists a control id twice", self.id)));
        }
        match self.purpose {
            ProtocolPurpose::Responders => {
                if self.controls.is_empty() {
                    return Err(Error::Protocol(format!(
                        "responder protocol `{}` must list at least one contrast control",
                        self.id
                    )));
                }
                for c in &self.controls {
                    if !(c.decl.kind.is_contrast() && c.decl.contrast.is_some()) {
                        return Err(Error::Protocol(format!(
                            "responder protocol `{}` control `{}` must be a contrast control",
                            self.id, c.id
                        )));
                    }
                }
            }
            ProtocolPurpose::Compliers => {
                for c in &self.controls {
                    if c.decl.kind != ControlKind::NonNullOutcomeControl || c.decl.treatment.is_none() {
                        return Err(Error::Protocol(format!(
                            "complier protocol `{}` control `{}` must be a non-null outcome control with a treatment",
                            self.id, c.id
                        )));
                    }
                }
            }
            ProtocolPurpose::Timing | ProtocolPurpose::Placebo => {}
        }
        Ok(())
    }
}

/// Band half-width for responder calls when the per-replicate noise sd is
/// known. The estimated contrast of a true-zero unit is a difference of two
/// replicate means, so its sd is sd*sqrt(2/replicates); three of those keep
/// the misclassification rate per control under 0.3%.
pub fn default_responder_threshold(noise_sd: f64, replicates: usize) -> f64 {
    3.0 * noise_sd * (2.0 / replicates.max(1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupCall {
    Responder,
    Nonresponder,
    Complier,
    Noncomplier,
    /// The data cannot speak about this unit (wrong arm, for complier
    /// calls).
    Indeterminate,
}

/// Result of splitting a population on pre-trial calls.
///
/// Effects are `None` when their group is empty or when the procedure has
/// no per-unit effect estimate to aggregate (complier calls). When all
/// three are present, `population_effect` equals
/// `responder_fraction * responder_effect + (1 - responder_fraction) *
/// nonresponder_effect` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupReport {
    /// Fraction of callable units in the positive group (responders, or
    /// compliers).
    pub responder_fraction: f64,
    pub responder_effect: Option<f64>,
    pub nonresponder_effect: Option<f64>,
    pub population_effect: Option<f64>,
    pub per_unit_calls: BTreeMap<String, SubgroupCall>,
    /// Units beyond threshold on some but not all listed controls. They are
    /// counted as responders, with a warning, rather than silently assumed
    /// away.
    pub partial_units: Vec<String>,
    pub warnings: Vec<String>,
}

fn check_decomposition(report: &SubgroupReport) -> Result<()> {
    let (Some(pop), Some(f)) = (report.population_effect, Some(report.responder_fraction)) else {
        return Ok(());
    };
    let combined = match (report.responder_effect, report.nonresponder_effect) {
        (Some(r), Some(n)) => f * r + (1.0 - f) * n,
        (Some(r), None) => f * r,
        (None, Some(n)) => (1.0 - f) * n,
        (None, None) => return Ok(()),
    };
    if (pop - combined).abs() > 1e-9 * (1.0 + pop.abs()) {
        return Err(Error::domain(format!(
            "subgroup decomposition failed to reconstruct the population effect: {pop} vs {combined}"
        )));
    }
    Ok(())
}

/// Call each pilot unit responder or nonresponder from crossover data.
///
/// A unit is a nonresponder only when every listed contrast control stays
/// inside the no-effect band; showing a response anywhere makes it a
/// responder. The reported effects aggregate the first listed control's
/// per-unit estimates, so the decomposition identity holds exactly.
pub fn identify_responders(data: &CrossoverData, protocol: &PretrialProtocol) -> Result<SubgroupReport> {
    protocol.validate()?;
    if protocol.purpose != ProtocolPurpose::Responders {
        return Err(Error::Protocol(format!(
            "protocol `{}` has purpose {:?}, not responders",
            protocol.id, protocol.purpose
        )));
    }
    if data.units().is_empty() {
        return Err(Error::Protocol("crossover data contains no units".into()));
    }

    let mut per_unit_calls = BTreeMap::new();
    let mut partial_units = Vec::new();
    let mut warnings = Vec::new();
    let mut first_estimates: BTreeMap<String, f64> = BTreeMap::new();

    for unit in data.units() {
        let mut responding = Vec::new();
        let mut silent = Vec::new();
        for (pos, named) in protocol.controls.iter().enumerate() {
            let sample = data.sample(unit, &named.id).ok_or_else(|| {
                Error::Protocol(format!("unit `{unit}` has no crossover sample for control `{}`", named.id))
            })?;
            if sample.active.len() != protocol.per_unit_replicates
                || sample.reference.len() != protocol.per_unit_replicates
            {
                return Err(Error::Protocol(format!(
                    "unit `{unit}` control `{}` has {}+{} replicates, protocol requires {} per side",
                    named.id,
                    sample.active.len(),
                    sample.reference.len(),
                    protocol.per_unit_replicates
                )));
            }
            let estimate = sample.estimated_contrast()?;
            if pos == 0 {
                first_estimates.insert(unit.clone(), estimate);
            }
            let responds = match protocol.call_mode {
                ResponderCallMode::ThresholdBand => estimate.abs() > protocol.decision_threshold,
                ResponderCallMode::MeanTest => {
                    let key = StreamKey::new(data.seed).tag("responder-test").tag(unit).tag(&named.id);
                    let (p, _) = two_sample_permutation_p(&sample.active, &sample.reference, key)?;
                    p < protocol.alpha
                }
            };
            if responds {
                responding.push(named.id.clone());
            } else {
                silent.push(named.id.clone());
            }
        }
        let call = if responding.is_empty() {
            SubgroupCall::Nonresponder
        } else {
            if !silent.is_empty() {
                partial_units.push(unit.clone());
                warnings.push(format!(
                    "unit `{unit}` responds on [{}] but not [{}]; counted as responder",
                    responding.join(", "),
                    silent.join(", ")
                ));
            }
            SubgroupCall::Responder
        };
        per_unit_calls.insert(unit.clone(), call);
    }

    let n = data.units().len() as f64;
    let responders: Vec<&String> =
        data.units().iter().filter(|u| per_unit_calls[*u] == SubgroupCall::Responder).collect();
    let nonresponders: Vec<&String> =
        data.units().iter().filter(|u| per_unit_calls[*u] == SubgroupCall::Nonresponder).collect();
    let mean_over = |units: &[&String]| -> Option<f64> {
        if units.is_empty() {
            None
        } else {
            Some(units.iter().map(|u| first_estimates[*u]).sum::<f64>() / units.len() as f64)
        }
    };

    let report = SubgroupReport {
        responder_fraction: responders.len() as f64 / n,
        responder_effect: mean_over(&responders),
        nonresponder_effect: mean_over(&nonresponders),
        population_effect: Some(first_estimates.values().sum::<f64>() / n),
        per_unit_calls,
        partial_units,
        warnings,
    };
    check_decomposition(&report)?;
    Ok(report)
}

/// Call each active-arm unit complier or noncomplier from a non-null
/// outcome control: an outcome guaranteed to move under the treatment. A
/// unit still sitting at the null value did not take its treatment. Units
/// in other arms never touched the treatment, so they are indeterminate.
pub fn identify_compliers(
    dataset: &ObservedDataset,
    nno_control: &ControlDeclaration,
    protocol: &PretrialProtocol,
) -> Result<SubgroupReport> {
    protocol.validate()?;
    if protocol.purpose != ProtocolPurpose::Compliers {
        return Err(Error::Protocol(format!(
            "protocol `{}` has purpose {:?}, not compliers",
            protocol.id, protocol.purpose
        )));
    }
    if nno_control.kind != ControlKind::NonNullOutcomeControl {
        return Err(Error::Protocol(
            "complier calls need a non-null outcome control (an outcome guaranteed to move)".into(),
        ));
    }
    let treatment = nno_control
        .treatment
        .as_deref()
        .ok_or_else(|| Error::Protocol("the non-null outcome control must name its treatment".into()))?;

    let mut per_unit_calls = BTreeMap::new();
    let mut compliers = 0usize;
    let mut callable = 0usize;
    for (unit, arm) in &dataset.assignment.w {
        if arm != treatment {
            per_unit_calls.insert(unit.clone(), SubgroupCall::Indeterminate);
            continue;
        }
        callable += 1;
        let observed = dataset.value(unit, &nno_control.outcome).map_err(|_| {
            Error::Protocol(format!(
                "unit `{unit}` is in arm `{treatment}` but has no `{}` measurement",
                nno_control.outcome
            ))
        })?;
        let call = if (observed - nno_control.null_value).abs() <= protocol.decision_threshold {
            SubgroupCall::Noncomplier
        } else {
            compliers += 1;
            SubgroupCall::Complier
        };
        per_unit_calls.insert(unit.clone(), call);
    }
    if callable == 0 {
        return Err(Error::EmptyArm(treatment.into()));
    }

    Ok(SubgroupReport {
        responder_fraction: compliers as f64 / callable as f64,
        responder_effect: None,
        nonresponder_effect: None,
        population_effect: None,
        per_unit_calls,
        partial_units: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Mean outcome in the blinded arm minus the unblinded arm. In a placebo
/// design both arms receive the control treatment; they differ only in what
/// the units were told, so this difference is the causal effect of
/// disclosure itself.
pub fn placebo_effect(
    dataset: &ObservedDataset,
    outcome: &str,
    blinded_arm: &str,
    unblinded_arm: &str,
) -> Result<f64> {
    dataset.difference_in_means(outcome, blinded_arm, unblinded_arm)
}

/// Split a table's average effect by responder calls: the primary outcome's
/// active-vs-control effect within each group, weighted back together.
pub fn decompose_effect(
    table: &ScienceTable,
    calls: &BTreeMap<String, SubgroupCall>,
) -> Result<SubgroupReport> {
    let outcome = table.primary_outcome().id.clone();
    let active = table.active_treatment().id.clone();
    let control = table.control_treatment()?.id.clone();

    let mut responders = Vec::new();
    let mut nonresponders = Vec::new();
    for unit in table.units() {
        match calls.get(&unit.id) {
            Some(SubgroupCall::Responder) => responders.push(unit.id.as_str()),
            Some(SubgroupCall::Nonresponder) => nonresponders.push(unit.id.as_str()),
            Some(other) => {
                return Err(Error::Protocol(format!(
                    "unit `{}` has call {other:?}; decomposition needs responder or nonresponder",
                    unit.id
                )))
            }
            None => return Err(Error::Protocol(format!("no call for unit `{}`", unit.id))),
        }
    }

    let effect_among = |units: &[&str]| -> Result<Option<f64>> {
        if units.is_empty() {
            Ok(None)
        } else {
            table.average_effect_among(units, &outcome, &active, &control).map(Some)
        }
    };
    let report = SubgroupReport {
        responder_fraction: responders.len() as f64 / table.units().len() as f64,
        responder_effect: effect_among(&responders)?,
        nonresponder_effect: effect_among(&nonresponders)?,
        population_effect: Some(table.average_effect(&outcome, &active, &control)?),
        per_unit_calls: calls.clone(),
        partial_units: Vec::new(),
        warnings: Vec::new(),
    };
    check_decomposition(&report)?;
    Ok(report)
}

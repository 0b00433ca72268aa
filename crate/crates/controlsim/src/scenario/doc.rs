//! The on-disk scenario schema, before cross-references are resolved.
//!
//! Everything here mirrors the file format one-to-one; `deny_unknown_fields`
//! turns typos into parse errors instead of silently ignored keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controls::ControlKind;
use crate::diagnostics::TestMethod;
use crate::pretrial::{ProtocolPurpose, ResponderCallMode};
use crate::science::{OutcomeRole, TreatmentKind};
use crate::sim::{AssignmentMechanism, FactorEffect, NoiseModel, ResponseCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub measured_outcomes: Vec<String>,
    /// Path (relative to the scenario file) of an exclusion list produced by
    /// a registered pre-trial run; its units are dropped before assignment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_list: Option<String>,
    pub outcomes: Vec<OutcomeDoc>,
    pub treatments: Vec<TreatmentDoc>,
    pub table: TableDoc,
    pub assignment: AssignmentMechanism,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factor_effects: Vec<FactorEffect>,
    #[serde(default = "no_noise")]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<ControlDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protocols: Vec<ProtocolDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timecourse: Option<TimecourseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placebo: Option<PlaceboDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerDoc>,
}

fn no_noise() -> NoiseModel {
    NoiseModel::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    pub role: OutcomeRole,
    #[serde(default)]
    pub null_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: TreatmentKind,
}

/// Exactly one of `generator` or `units`+`cells` describes the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDoc {
    /// Value of any (unit, outcome, treatment) cell not covered explicitly.
    #[serde(default)]
    pub default_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Vec<UnitDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<CellDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub n_units: usize,
    #[serde(default = "default_prefix")]
    pub unit_prefix: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<FactorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truths: Option<TruthsDoc>,
    /// One entry per (outcome, treatment) column that differs from
    /// `default_value`; the value applies to every unit, with an optional
    /// override for units whose responder truth is false.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<GeneratorCellDoc>,
}

fn default_prefix() -> String {
    "u".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorAssign {
    /// Cycle through the levels in unit order, skipping exhausted ones.
    #[default]
    RoundRobin,
    /// Shuffle the level pool with a stream keyed by the scenario seed and
    /// the factor name.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub name: String,
    pub levels: Vec<String>,
    /// Exact level counts; must sum to n_units. Mutually exclusive with
    /// `fractions`. With neither, levels split as evenly as possible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub assign: FactorAssign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthsDoc {
    /// First round(fraction * n_units) generated units are responders, the
    /// rest nonresponders. Mutually exclusive with `responders`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responder_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responders: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complier_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compliers: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorCellDoc {
    pub outcome: String,
    pub treatment: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonresponder_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responder: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complier: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub factors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    pub unit: String,
    pub outcome: String,
    pub treatment: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlDoc {
    pub id: String,
    pub kind: ControlKind,
    /// Defaults to the primary outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    /// Required for treatment-control kinds; defaults to the active
    /// treatment for outcome-control kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment: Option<String>,
    /// Defaults to the outcome's declared null value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<ContrastDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastDoc {
    /// Defaults to the active treatment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<String>,
    pub control: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKindDoc {
    StrictCount,
    FractionCount,
    MeanTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    pub id: String,
    pub kind: RuleKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<TestMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsDoc {
    /// Defaults to the table's null treatment-control level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_treatment_control: Option<String>,
    /// Defaults to the first count rule's threshold, else 1.0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_method: Option<TestMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confounding: Option<ConfoundingDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfoundingDoc {
    pub outcome: String,
    /// Defaults to the active treatment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<String>,
    /// Defaults to the control treatment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<TestMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDoc {
    pub id: String,
    pub purpose: ProtocolPurpose,
    /// Ids of declarations from `controls`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<String>,
    #[serde(default = "one")]
    pub per_unit_replicates: usize,
    pub decision_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub call_mode: ResponderCallMode,
    #[serde(default)]
    pub registered: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimecourseDoc {
    pub outcome: String,
    pub treatment: String,
    pub times: Vec<f64>,
    /// Shared response shape; `curves` overrides it per unit.
    pub curve: ResponseCurve,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub curves: BTreeMap<String, ResponseCurve>,
    /// Pilot measurement noise; defaults to none so a pilot's peak is exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceboDoc {
    /// Defaults to the primary outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    pub blinded_arm: String,
    pub unblinded_arm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDoc {
    /// Defaults to the first declared rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Per-arm sizes; each grid row rebuilds the generated table with
    /// n_units = arm size x number of arms.
    pub arm_sizes: Vec<usize>,
    pub flaw_magnitudes: Vec<f64>,
    pub flaw: FlawDoc,
}

fn default_replications() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlawDoc {
    pub factor: String,
    pub level: String,
    pub outcome: String,
}

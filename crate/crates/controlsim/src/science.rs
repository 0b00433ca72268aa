//! Science tables: the complete bookkeeping of potential outcomes.
//!
//! A table holds one real value for every (unit, outcome, treatment level)
//! triple. Everything downstream, from unit effects to observed datasets, is
//! a lookup or an average over this map. Keeping the map total is what lets
//! noiseless checks be exact.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role a treatment level plays in the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentKind {
    /// The intervention under study.
    Active,
    /// The designated comparison arm of the primary contrast.
    ControlTreatment,
    /// A level under which the outcome should show no change.
    NullTreatmentControl,
    /// A level with a known nonzero effect on the outcome.
    NonNullTreatmentControl,
    /// Present in the table but not playing a named role.
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentLevel {
    pub id: String,
    pub label: String,
    pub kind: TreatmentKind,
}

impl TreatmentLevel {
    pub fn new(id: &str, label: &str, kind: TreatmentKind) -> Self {
        TreatmentLevel { id: id.into(), label: label.into(), kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeRole {
    Primary,
    Secondary,
}

/// A measured quantity, stored as change from baseline (or any scale on
/// which "no effect" is a single number, `null_value`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeDef {
    pub id: String,
    pub label: String,
    pub units: String,
    pub role: OutcomeRole,
    /// The no-effect point for this outcome; 0 for differences, 1 for ratios.
    #[serde(default)]
    pub null_value: f64,
}

impl OutcomeDef {
    pub fn new(id: &str, label: &str, units: &str, role: OutcomeRole) -> Self {
        OutcomeDef { id: id.into(), label: label.into(), units: units.into(), role, null_value: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Unit {
    pub id: String,
    /// Background attributes (sex, waiting room, disclosure, ...). All units
    /// of one table share the same key set.
    #[serde(default)]
    pub factors: BTreeMap<String, String>,
    /// Ground truth for pre-trial checks; `None` when the scenario takes no
    /// stance.
    #[serde(default)]
    pub responder_truth: Option<bool>,
    #[serde(default)]
    pub complier_truth: Option<bool>,
}

impl Unit {
    pub fn new(id: &str) -> Self {
        Unit { id: id.into(), factors: BTreeMap::new(), responder_truth: None, complier_truth: None }
    }

    pub fn with_factor(mut self, name: &str, level: &str) -> Self {
        self.factors.insert(name.into(), level.into());
        self
    }

    pub fn with_responder_truth(mut self, value: bool) -> Self {
        self.responder_truth = Some(value);
        self
    }

    pub fn with_complier_truth(mut self, value: bool) -> Self {
        self.complier_truth = Some(value);
        self
    }
}

/// Total map from (unit, outcome, treatment) to the value the unit would
/// show on that outcome under that treatment. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ScienceTable {
    units: Vec<Unit>,
    outcomes: Vec<OutcomeDef>,
    treatments: Vec<TreatmentLevel>,
    // unit-major, then outcome, then treatment
    values: Vec<f64>,
    unit_index: HashMap<String, usize>,
    outcome_index: HashMap<String, usize>,
    treatment_index: HashMap<String, usize>,
}

fn build_index<T>(items: &[T], id: impl Fn(&T) -> &str, what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if index.insert(id(item).to_string(), i).is_some() {
            return Err(Error::domain(format!("duplicate {what} id `{}`", id(item))));
        }
    }
    Ok(index)
}

impl ScienceTable {
    /// Build a table, computing each cell from the closure. Totality holds by
    /// construction; ids, roles, and factor keys are validated here.
    pub fn new(
        units: Vec<Unit>,
        outcomes: Vec<OutcomeDef>,
        treatments: Vec<TreatmentLevel>,
        value: impl Fn(&Unit, &OutcomeDef, &TreatmentLevel) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(units.len() * outcomes.len() * treatments.len());
        for u in &units {
            for o in &outcomes {
                for t in &treatments {
                    values.push(value(u, o, t));
                }
            }
        }
        Self::from_parts(units, outcomes, treatments, values)
    }

    fn from_parts(
        units: Vec<Unit>,
        outcomes: Vec<OutcomeDef>,
        treatments: Vec<TreatmentLevel>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::domain("a science table needs at least one unit"));
        }
        if outcomes.is_empty() || treatments.is_empty() {
            return Err(Error::domain("a science table needs at least one outcome and one treatment level"));
        }
        let unit_index = build_index(&units, |u| &u.id, "unit")?;
        let outcome_index = build_index(&outcomes, |o| &o.id, "outcome")?;
        let treatment_index = build_index(&treatments, |t| &t.id, "treatment")?;

        let actives = treatments.iter().filter(|t| t.kind == TreatmentKind::Active).count();
        if actives != 1 {
            return Err(Error::domain(format!("expected exactly one active treatment level, found {actives}")));
        }
        let primaries = outcomes.iter().filter(|o| o.role == OutcomeRole::Primary).count();
        if primaries != 1 {
            return Err(Error::domain(format!("expected exactly one primary outcome, found {primaries}")));
        }
        let controls = treatments.iter().filter(|t| t.kind == TreatmentKind::ControlTreatment).count();
        if controls > 1 {
            return Err(Error::domain("at most one treatment level may be the designated control treatment"));
        }

        let keys: Vec<&String> = units[0].factors.keys().collect();
        for u in &units[1..] {
            if u.factors.keys().ne(keys.iter().copied()) {
                return Err(Error::domain(format!("unit `{}` does not share the common factor key set", u.id)));
            }
        }

        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                let nt = treatments.len();
                let no = outcomes.len();
                let (ui, oi, ti) = (i / (no * nt), (i / nt) % no, i % nt);
                return Err(Error::domain(format!(
                    "non-finite value for unit `{}`, outcome `{}`, treatment `{}`",
                    units[ui].id, outcomes[oi].id, treatments[ti].id
                )));
            }
        }

        Ok(ScienceTable { units, outcomes, treatments, values, unit_index, outcome_index, treatment_index })
    }

    /// Build from an explicit cell list; every triple must appear exactly once.
    pub fn from_cells(
        units: Vec<Unit>,
        outcomes: Vec<OutcomeDef>,
        treatments: Vec<TreatmentLevel>,
        cells: &[(String, String, String, f64)],
    ) -> Result<Self> {
        let mut map: HashMap<(&str, &str, &str), f64> = HashMap::with_capacity(cells.len());
        for (u, o, t, v) in cells {
            if !units.iter().any(|x| &x.id == u) {
                return Err(Error::UnknownUnit(u.clone()));
            }
            if !outcomes.iter().any(|x| &x.id == o) {
                return Err(Error::UnknownOutcome(o.clone()));
            }
            if !treatments.iter().any(|x| &x.id == t) {
                return Err(Error::UnknownTreatment(t.clone()));
            }
            if map.insert((u.as_str(), o.as_str(), t.as_str()), *v).is_some() {
                return Err(Error::domain(format!("duplicate cell for (`{u}`, `{o}`, `{t}`)")));
            }
        }
        for u in &units {
            for o in &outcomes {
                for t in &treatments {
                    if !map.contains_key(&(u.id.as_str(), o.id.as_str(), t.id.as_str())) {
                        return Err(Error::domain(format!(
                            "missing cell for (`{}`, `{}`, `{}`)",
                            u.id, o.id, t.id
                        )));
                    }
                }
            }
        }
        Self::new(units, outcomes, treatments, |u, o, t| {
            map[&(u.id.as_str(), o.id.as_str(), t.id.as_str())]
        })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn outcomes(&self) -> &[OutcomeDef] {
        &self.outcomes
    }

    pub fn treatments(&self) -> &[TreatmentLevel] {
        &self.treatments
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn unit(&self, id: &str) -> Result<&Unit> {
        self.unit_index.get(id).map(|&i| &self.units[i]).ok_or_else(|| Error::UnknownUnit(id.into()))
    }

    pub fn outcome(&self, id: &str) -> Result<&OutcomeDef> {
        self.outcome_index.get(id).map(|&i| &self.outcomes[i]).ok_or_else(|| Error::UnknownOutcome(id.into()))
    }

    pub fn treatment(&self, id: &str) -> Result<&TreatmentLevel> {
        self.treatment_index.get(id).map(|&i| &self.treatments[i]).ok_or_else(|| Error::UnknownTreatment(id.into()))
    }

    pub fn primary_outcome(&self) -> &OutcomeDef {
        self.outcomes.iter().find(|o| o.role == OutcomeRole::Primary).expect("validated at construction")
    }

    pub fn active_treatment(&self) -> &TreatmentLevel {
        self.treatments.iter().find(|t| t.kind == TreatmentKind::Active).expect("validated at construction")
    }

    /// The designated comparison arm, when the table declares one.
    pub fn control_treatment(&self) -> Result<&TreatmentLevel> {
        self.treatments
            .iter()
            .find(|t| t.kind == TreatmentKind::ControlTreatment)
            .ok_or_else(|| Error::domain("no treatment level has kind control_treatment"))
    }

    /// First declared no-intervention level, if any.
    pub fn null_treatment_control(&self) -> Option<&TreatmentLevel> {
        self.treatments.iter().find(|t| t.kind == TreatmentKind::NullTreatmentControl)
    }

    fn indices(&self, unit: &str, outcome: &str, treatment: &str) -> Result<(usize, usize, usize)> {
        let ui = *self.unit_index.get(unit).ok_or_else(|| Error::UnknownUnit(unit.into()))?;
        let oi = *self.outcome_index.get(outcome).ok_or_else(|| Error::UnknownOutcome(outcome.into()))?;
        let ti = *self.treatment_index.get(treatment).ok_or_else(|| Error::UnknownTreatment(treatment.into()))?;
        Ok((ui, oi, ti))
    }

    pub(crate) fn value_at(&self, ui: usize, oi: usize, ti: usize) -> f64 {
        self.values[(ui * self.outcomes.len() + oi) * self.treatments.len() + ti]
    }

    /// Y_unit(outcome; treatment): the tabulated potential outcome.
    pub fn potential_outcome(&self, unit: &str, outcome: &str, treatment: &str) -> Result<f64> {
        let (ui, oi, ti) = self.indices(unit, outcome, treatment)?;
        Ok(self.value_at(ui, oi, ti))
    }

    /// Unit-level causal effect: Y(active) minus Y(control). The same level
    /// on both sides is allowed and gives exactly zero.
    pub fn unit_effect(&self, unit: &str, outcome: &str, active: &str, control: &str) -> Result<f64> {
        Ok(self.potential_outcome(unit, outcome, active)? - self.potential_outcome(unit, outcome, control)?)
    }

    /// Finite-population average of `unit_effect` over all units.
    pub fn average_effect(&self, outcome: &str, active: &str, control: &str) -> Result<f64> {
        let ids: Vec<&str> = self.units.iter().map(|u| u.id.as_str()).collect();
        self.average_effect_among(&ids, outcome, active, control)
    }

    /// Average of `unit_effect` over a subset of units.
    pub fn average_effect_among(&self, units: &[&str], outcome: &str, active: &str, control: &str) -> Result<f64> {
        if units.is_empty() {
            return Err(Error::domain("average effect over an empty unit set is undefined"));
        }
        let mut sum = 0.0;
        for unit in units {
            sum += self.unit_effect(unit, outcome, active, control)?;
        }
        Ok(sum / units.len() as f64)
    }

    /// The value actually revealed for a unit under an assignment: the
    /// potential outcome at its assigned level, all other columns hidden.
    pub fn observed_outcome(&self, assignment: &Assignment, unit: &str, outcome: &str) -> Result<f64> {
        self.unit(unit)?;
        let level = assignment.w.get(unit).ok_or_else(|| Error::UnitNotAssigned(unit.into()))?;
        self.potential_outcome(unit, outcome, level)
    }

    /// Copy of the table with one cell replaced.
    pub fn with_value(&self, unit: &str, outcome: &str, treatment: &str, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::domain("table values must be finite"));
        }
        let (ui, oi, ti) = self.indices(unit, outcome, treatment)?;
        let mut next = self.clone();
        next.values[(ui * self.outcomes.len() + oi) * self.treatments.len() + ti] = value;
        Ok(next)
    }

    /// Copy of the table keeping only the named units, in table order.
    pub fn retain_units(&self, keep: &[String]) -> Result<Self> {
        for id in keep {
            self.unit(id)?;
        }
        let units: Vec<Unit> = self.units.iter().filter(|u| keep.contains(&u.id)).cloned().collect();
        let outcomes = self.outcomes.clone();
        let treatments = self.treatments.clone();
        Self::new(units, outcomes, treatments, |u, o, t| {
            self.potential_outcome(&u.id, &o.id, &t.id).expect("ids come from this table")
        })
    }
}

/// One realized treatment assignment: every unit mapped to a level id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub w: BTreeMap<String, String>,
    pub mechanism_tag: String,
}

impl Assignment {
    pub fn assigned(&self, unit: &str) -> Result<&str> {
        self.w.get(unit).map(String::as_str).ok_or_else(|| Error::UnitNotAssigned(unit.into()))
    }

    /// Units assigned to `treatment`, in id order.
    pub fn arm_units(&self, treatment: &str) -> Vec<&str> {
        self.w.iter().filter(|(_, t)| t.as_str() == treatment).map(|(u, _)| u.as_str()).collect()
    }
}

/// What an experiment actually records: one value per measured
/// (unit, outcome) pair, plus the assignment that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    pub assignment: Assignment,
    pub measured: BTreeMap<(String, String), f64>,
    pub measurement_time: Option<f64>,
    pub seed: u64,
    pub scenario_tag: String,
}

impl ObservedDataset {
    pub fn value(&self, unit: &str, outcome: &str) -> Result<f64> {
        self.measured
            .get(&(unit.to_string(), outcome.to_string()))
            .copied()
            .ok_or_else(|| Error::MissingMeasurement { unit: unit.into(), outcome: outcome.into() })
    }

    /// Measured values of `outcome` for the arm assigned to `treatment`,
    /// in unit-id order.
    pub fn arm_values(&self, outcome: &str, treatment: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (unit, level) in &self.assignment.w {
            if level == treatment {
                out.push(self.value(unit, outcome)?);
            }
        }
        Ok(out)
    }

    /// Mean of `outcome` over the arm assigned to `treatment`.
    pub fn group_mean(&self, outcome: &str, treatment: &str) -> Result<f64> {
        let values = self.arm_values(outcome, treatment)?;
        if values.is_empty() {
            return Err(Error::EmptyArm(treatment.into()));
        }
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }

    /// The difference-in-means estimator between two arms.
    pub fn difference_in_means(&self, outcome: &str, active: &str, control: &str) -> Result<f64> {
        Ok(self.group_mean(outcome, active)? - self.group_mean(outcome, control)?)
    }
}

//! The six-cell control taxonomy.
//!
//! A control declaration names a belief about the science table: that some
//! treatment level leaves an outcome at its no-effect value (null treatment
//! control), that the active treatment leaves some other outcome alone (null
//! outcome control), that a pair of levels has no differential effect (null
//! contrast control), or the non-null versions of each, where the value is
//! known to sit far from the no-effect point. `validate_control` checks the
//! belief unit by unit against the table; nothing here requires it to hold
//! for every unit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::science::ScienceTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    NullTreatmentControl,
    NonNullTreatmentControl,
    NullOutcomeControl,
    NonNullOutcomeControl,
    NullContrastControl,
    NonNullContrastControl,
}

impl ControlKind {
    pub fn is_null(self) -> bool {
        matches!(
            self,
            ControlKind::NullTreatmentControl
                | ControlKind::NullOutcomeControl
                | ControlKind::NullContrastControl
        )
    }

    pub fn is_contrast(self) -> bool {
        matches!(self, ControlKind::NullContrastControl | ControlKind::NonNullContrastControl)
    }
}

/// An ordered pair of treatment levels whose differential effect a contrast
/// control speaks about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastPair {
    pub active: String,
    pub control: String,
}

/// One cell of the taxonomy bound to concrete ids, with the tolerance bands
/// that make "null" and "non-null" checkable on real numbers: null means
/// within `epsilon` of `null_value`, non-null means at least `min_magnitude`
/// away from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDeclaration {
    pub kind: ControlKind,
    /// Outcome the control speaks about. For treatment-control kinds this is
    /// the primary outcome.
    pub outcome: String,
    /// For treatment-control kinds, the control level; for outcome-control
    /// kinds, the active level the outcome is measured under.
    pub treatment: Option<String>,
    /// The level pair, for contrast kinds only.
    pub contrast: Option<ContrastPair>,
    pub null_value: f64,
    pub epsilon: f64,
    pub min_magnitude: f64,
}

/// Smallest representable value above `epsilon`: the default non-null
/// magnitude when the author does not set one, keeping the bands disjoint.
pub fn default_min_magnitude(epsilon: f64) -> f64 {
    f64::from_bits(epsilon.to_bits() + 1)
}

impl ControlDeclaration {
    pub fn new(kind: ControlKind, outcome: &str) -> Self {
        ControlDeclaration {
            kind,
            outcome: outcome.into(),
            treatment: None,
            contrast: None,
            null_value: 0.0,
            epsilon: 0.0,
            min_magnitude: default_min_magnitude(0.0),
        }
    }

    pub fn with_treatment(mut self, id: &str) -> Self {
        self.treatment = Some(id.into());
        self
    }

    pub fn with_contrast(mut self, active: &str, control: &str) -> Self {
        self.contrast = Some(ContrastPair { active: active.into(), control: control.into() });
        self
    }

    pub fn with_null_value(mut self, v: f64) -> Self {
        self.null_value = v;
        self
    }

    /// Set the null band half-width, widening `min_magnitude` if the bands
    /// would otherwise overlap.
    pub fn with_epsilon(mut self, v: f64) -> Self {
        self.epsilon = v;
        if self.min_magnitude <= v {
            self.min_magnitude = default_min_magnitude(v);
        }
        self
    }

    pub fn with_min_magnitude(mut self, v: f64) -> Self {
        self.min_magnitude = v;
        self
    }

    /// Field coherence for the kind, band shape, and id resolution against a
    /// table. The bands must be disjoint: epsilon < min_magnitude.
    pub fn validate(&self, table: &ScienceTable) -> Result<()> {
        if !self.null_value.is_finite() {
            return Err(Error::domain("control null_value must be finite"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain("control epsilon must be finite and >= 0"));
        }
        if !(self.min_magnitude > self.epsilon) {
            return Err(Error::domain(format!(
                "min_magnitude ({}) must exceed epsilon ({}) so the null and non-null bands are disjoint",
                self.min_magnitude, self.epsilon
            )));
        }
        table.outcome(&self.outcome)?;
        if self.kind.is_contrast() {
            let pair = self
                .contrast
                .as_ref()
                .ok_or_else(|| Error::domain("contrast-control declarations need a contrast pair"))?;
            table.treatment(&pair.active)?;
            table.treatment(&pair.control)?;
            if self.treatment.is_some() {
                return Err(Error::domain("contrast-control declarations take a contrast pair, not a treatment"));
            }
        } else {
            let t = self
                .treatment
                .as_deref()
                .ok_or_else(|| Error::domain("treatment- and outcome-control declarations need a treatment"))?;
            table.treatment(t)?;
            if self.contrast.is_some() {
                return Err(Error::domain("only contrast-control declarations take a contrast pair"));
            }
        }
        Ok(())
    }

    /// Does `value` satisfy this declaration for one unit?
    pub fn holds_for(&self, value: f64) -> bool {
        let gap = (value - self.null_value).abs();
        if self.kind.is_null() {
            gap <= self.epsilon
        } else {
            gap >= self.min_magnitude
        }
    }
}

/// A declaration together with the id it is registered under, the form
/// protocols and scenario files carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedControl {
    pub id: String,
    #[serde(flatten)]
    pub decl: ControlDeclaration,
}

impl NamedControl {
    pub fn new(id: &str, decl: ControlDeclaration) -> Self {
        NamedControl { id: id.into(), decl }
    }
}

/// The quantity a declaration constrains, for one unit: a tabulated
/// potential outcome for treatment and outcome kinds, a unit effect for
/// contrast kinds.
pub fn control_value(table: &ScienceTable, decl: &ControlDeclaration, unit: &str) -> Result<f64> {
    decl.validate(table)?;
    match (&decl.contrast, &decl.treatment) {
        (Some(pair), _) => table.unit_effect(unit, &decl.outcome, &pair.active, &pair.control),
        (None, Some(t)) => table.potential_outcome(unit, &decl.outcome, t),
        (None, None) => unreachable!("validate() requires one of treatment or contrast"),
    }
}

/// Per-unit check of one declaration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitCheck {
    pub value: f64,
    pub holds: bool,
}

/// Unit-by-unit verdicts for a declaration against a table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlValidationReport {
    pub per_unit: BTreeMap<String, UnitCheck>,
    pub fraction_holding: f64,
    pub holds_for_all: bool,
}

/// Check a declaration for every unit in the table.
pub fn validate_control(table: &ScienceTable, decl: &ControlDeclaration) -> Result<ControlValidationReport> {
    decl.validate(table)?;
    let mut per_unit = BTreeMap::new();
    let mut holding = 0usize;
    for unit in table.units() {
        let value = control_value(table, decl, &unit.id)?;
        let holds = decl.holds_for(value);
        holding += holds as usize;
        per_unit.insert(unit.id.clone(), UnitCheck { value, holds });
    }
    let n = table.n_units();
    let fraction_holding = holding as f64 / n as f64;
    Ok(ControlValidationReport { per_unit, fraction_holding, holds_for_all: holding == n })
}

/// Unit effect at a contrast declaration's level pair. Errors for
/// non-contrast declarations.
pub fn contrast_control_effect(table: &ScienceTable, decl: &ControlDeclaration, unit: &str) -> Result<f64> {
    if !decl.kind.is_contrast() {
        return Err(Error::domain("contrast_control_effect needs a contrast-control declaration"));
    }
    control_value(table, decl, unit)
}

/// How a declaration lines up with the negative/positive-control vocabulary
/// used in observational and epidemiological work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NcxClass {
    NegativeControlExposure,
    PositiveControlExposure,
    NegativeControlOutcome,
    PositiveControlOutcome,
    GenericContrastControl,
    NotAContrastControl,
}

/// Classify a declaration relative to the primary estimand: same outcome but
/// an alternative level pair is an exposure control, a different outcome
/// under the primary pair is an outcome control. Treatment and outcome
/// control kinds do not translate into this vocabulary at all.
pub fn classify_ncx(
    decl: &ControlDeclaration,
    primary_outcome: &str,
    primary_active: &str,
    primary_control: &str,
) -> NcxClass {
    let pair = match &decl.contrast {
        Some(pair) if decl.kind.is_contrast() => pair,
        _ => return NcxClass::NotAContrastControl,
    };
    let primary_pair = pair.active == primary_active && pair.control == primary_control;
    let primary_out = decl.outcome == primary_outcome;
    match (primary_out, primary_pair, decl.kind.is_null()) {
        (true, false, true) => NcxClass::NegativeControlExposure,
        (true, false, false) => NcxClass::PositiveControlExposure,
        (false, true, true) => NcxClass::NegativeControlOutcome,
        (false, true, false) => NcxClass::PositiveControlOutcome,
        _ => NcxClass::GenericContrastControl,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::science::{OutcomeDef, OutcomeRole, TreatmentKind, TreatmentLevel, Unit};

    // Coffee-style table: active raises bp by 8 and electrolytes by 2;
    // decaf raises electrolytes by 2 (fluid) and nothing else; the drug
    // raises bp by 12; nothing touches flexibility.
    fn table() -> ScienceTable {
        let units = vec![Unit::new("u1"), Unit::new("u2"), Unit::new("u3")];
        let outcomes = vec![
            OutcomeDef::new("bp", "", "mmHg", OutcomeRole::Primary),
            OutcomeDef::new("flex", "", "cm", OutcomeRole::Secondary),
            OutcomeDef::new("lytes", "", "mmol/L", OutcomeRole::Secondary),
        ];
        let treatments = vec![
            TreatmentLevel::new("coffee", "", TreatmentKind::Active),
            TreatmentLevel::new("decaf", "", TreatmentKind::ControlTreatment),
            TreatmentLevel::new("nothing", "", TreatmentKind::NullTreatmentControl),
            TreatmentLevel::new("drug", "", TreatmentKind::NonNullTreatmentControl),
        ];
        ScienceTable::new(units, outcomes, treatments, |_, o, t| match (o.id.as_str(), t.id.as_str()) {
            ("bp", "coffee") => 8.0,
            ("bp", "drug") => 12.0,
            ("lytes", "coffee") | ("lytes", "decaf") => 2.0,
            _ => 0.0,
        })
        .unwrap()
    }

    fn null_tc() -> ControlDeclaration {
        ControlDeclaration::new(ControlKind::NullTreatmentControl, "bp").with_treatment("nothing")
    }

    #[test]
    fn all_six_kinds_validate_on_the_coffee_table() {
        let t = table();
        let decls = vec![
            null_tc(),
            ControlDeclaration::new(ControlKind::NonNullTreatmentControl, "bp")
                .with_treatment("drug")
                .with_min_magnitude(1.0),
            ControlDeclaration::new(ControlKind::NullOutcomeControl, "flex").with_treatment("coffee"),
            ControlDeclaration::new(ControlKind::NonNullOutcomeControl, "lytes")
                .with_treatment("coffee")
                .with_min_magnitude(0.5),
            ControlDeclaration::new(ControlKind::NullContrastControl, "lytes").with_contrast("coffee", "decaf"),
            ControlDeclaration::new(ControlKind::NonNullContrastControl, "bp")
                .with_contrast("coffee", "decaf")
                .with_min_magnitude(1.0),
        ];
        for decl in &decls {
            let report = validate_control(&t, decl).unwrap();
            assert!(report.holds_for_all, "{:?} should hold for every unit", decl.kind);
            assert_eq!(report.fraction_holding, 1.0);
        }
    }

    #[test]
    fn control_values_are_lookups_or_contrasts() {
        let t = table();
        assert_eq!(control_value(&t, &null_tc(), "u1").unwrap(), 0.0);
        let nnc = ControlDeclaration::new(ControlKind::NonNullContrastControl, "bp")
            .with_contrast("coffee", "decaf")
            .with_min_magnitude(1.0);
        assert_eq!(control_value(&t, &nnc, "u2").unwrap(), 8.0);
        assert_eq!(contrast_control_effect(&t, &nnc, "u2").unwrap(), t.unit_effect("u2", "bp", "coffee", "decaf").unwrap());
        assert!(contrast_control_effect(&t, &null_tc(), "u1").is_err());
    }

    #[test]
    fn band_edges_count_as_holding() {
        let decl = ControlDeclaration::new(ControlKind::NullTreatmentControl, "bp")
            .with_treatment("nothing")
            .with_epsilon(0.5)
            .with_min_magnitude(2.0);
        assert!(decl.holds_for(0.5));
        assert!(!decl.holds_for(0.5000001));
        let non_null = ControlDeclaration { kind: ControlKind::NonNullTreatmentControl, ..decl };
        assert!(non_null.holds_for(2.0));
        assert!(!non_null.holds_for(1.9999999));
    }

    #[test]
    fn null_value_recenters_the_band() {
        // Ratio-scale outcome: no effect means a ratio of 1.
        let decl = ControlDeclaration::new(ControlKind::NullTreatmentControl, "bp")
            .with_treatment("nothing")
            .with_null_value(1.0)
            .with_epsilon(0.01);
        assert!(decl.holds_for(1.005));
        assert!(!decl.holds_for(0.0));
    }

    #[test]
    fn perturbing_one_unit_flips_exactly_that_unit() {
        let t = table();
        let decl = null_tc();
        let before = validate_control(&t, &decl).unwrap();
        assert!(before.holds_for_all);

        let t2 = t.with_value("u2", "bp", "nothing", 3.0).unwrap();
        let after = validate_control(&t2, &decl).unwrap();
        assert!(!after.holds_for_all);
        assert!((after.fraction_holding - 2.0 / 3.0).abs() < 1e-15);
        for (unit, check) in &after.per_unit {
            assert_eq!(check.holds, unit != "u2");
        }
    }

    #[test]
    fn incoherent_declarations_are_rejected() {
        let t = table();
        // contrast kind without a pair
        let d1 = ControlDeclaration::new(ControlKind::NullContrastControl, "bp");
        assert!(d1.validate(&t).is_err());
        // treatment kind without a treatment
        let d2 = ControlDeclaration::new(ControlKind::NullTreatmentControl, "bp");
        assert!(d2.validate(&t).is_err());
        // overlapping bands
        let d3 = null_tc().with_epsilon(1.0).with_min_magnitude(0.5);
        assert!(d3.validate(&t).is_err());
        // unresolved ids
        let d4 = ControlDeclaration::new(ControlKind::NullTreatmentControl, "nope").with_treatment("nothing");
        assert_eq!(d4.validate(&t), Err(Error::UnknownOutcome("nope".into())));
        let d5 = ControlDeclaration::new(ControlKind::NullContrastControl, "bp").with_contrast("coffee", "zz");
        assert_eq!(d5.validate(&t), Err(Error::UnknownTreatment("zz".into())));
    }

    #[test]
    fn classification_follows_outcome_and_pair() {
        let classify = |decl: &ControlDeclaration| classify_ncx(decl, "bp", "coffee", "decaf");

        // Null contrast on the primary outcome, alternative pair: the
        // caffeinated-water comparison is a negative control exposure.
        let nce = ControlDeclaration::new(ControlKind::NullContrastControl, "bp").with_contrast("coffee", "caffwater");
        assert_eq!(classify(&nce), NcxClass::NegativeControlExposure);
        let pce = ControlDeclaration::new(ControlKind::NonNullContrastControl, "bp").with_contrast("drug", "nothing");
        assert_eq!(classify(&pce), NcxClass::PositiveControlExposure);

        // Secondary outcome under the primary pair.
        let nco = ControlDeclaration::new(ControlKind::NullContrastControl, "lytes").with_contrast("coffee", "decaf");
        assert_eq!(classify(&nco), NcxClass::NegativeControlOutcome);
        let pco = ControlDeclaration::new(ControlKind::NonNullContrastControl, "lytes").with_contrast("coffee", "decaf");
        assert_eq!(classify(&pco), NcxClass::PositiveControlOutcome);

        // Same outcome and same pair, or different outcome and different
        // pair: no translation.
        let generic1 = ControlDeclaration::new(ControlKind::NullContrastControl, "bp").with_contrast("coffee", "decaf");
        assert_eq!(classify(&generic1), NcxClass::GenericContrastControl);
        let generic2 = ControlDeclaration::new(ControlKind::NullContrastControl, "lytes").with_contrast("drug", "nothing");
        assert_eq!(classify(&generic2), NcxClass::GenericContrastControl);

        assert_eq!(classify(&null_tc()), NcxClass::NotAContrastControl);
    }
}

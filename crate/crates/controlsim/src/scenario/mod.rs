//! Scenario files: a complete experiment description in one TOML document.
//!
//! Parsing resolves every cross-reference and reports all problems at once
//! rather than stopping at the first, so a scenario author gets one round
//! trip per edit. The parsed `Scenario` keeps the raw document for lossless
//! re-serialization and the source text for content hashing.

mod doc;
mod exclusion;

pub use doc::*;
pub use exclusion::{apply_exclusions, protocol_digest, ExclusionList};

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::controls::{default_min_magnitude, ControlDeclaration, NamedControl};
use crate::diagnostics::{ConfoundingConfig, DecisionRule, DiagnosticsConfig, NamedRule};
use crate::error::{Error, Result};
use crate::pretrial::{PretrialProtocol, ProtocolPurpose};
use crate::rng::StreamKey;
use crate::science::{OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind, TreatmentLevel, Unit};
use crate::sim::{AssignmentMechanism, FactorEffect, NoiseModel, ResponseCurve};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// A timing pilot ready to run: one response curve per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TimecoursePlan {
    pub outcome: String,
    pub treatment: String,
    pub times: Vec<f64>,
    pub curves: BTreeMap<String, ResponseCurve>,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceboPlan {
    pub outcome: String,
    pub blinded_arm: String,
    pub unblinded_arm: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPlan {
    pub rule: String,
    pub replications: usize,
    pub arm_sizes: Vec<usize>,
    pub flaw_magnitudes: Vec<f64>,
    pub flaw_factor: String,
    pub flaw_level: String,
    pub flaw_outcome: String,
}

/// A fully resolved scenario: every id checked, every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub table: ScienceTable,
    pub mechanism: AssignmentMechanism,
    pub factor_effects: Vec<FactorEffect>,
    pub noise: NoiseModel,
    pub measured_outcomes: Vec<String>,
    pub controls: Vec<NamedControl>,
    pub rules: Vec<NamedRule>,
    pub diagnostics: Option<DiagnosticsConfig>,
    pub protocols: Vec<PretrialProtocol>,
    pub timecourse: Option<TimecoursePlan>,
    pub placebo: Option<PlaceboPlan>,
    pub power: Option<PowerPlan>,
    pub exclusion_list: Option<String>,
    doc: ScenarioDoc,
    source_text: String,
}

impl Scenario {
    /// Serialize back to the file format; `parse_scenario` on the result
    /// yields an equal scenario.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(&self.doc).map_err(|e| Error::domain(format!("serialize scenario: {e}")))
    }

    /// Content hash of the scenario text this was parsed from.
    pub fn digest(&self) -> String {
        sha256_hex(self.source_text.as_bytes())
    }

    pub fn protocol(&self, id: &str) -> Result<&PretrialProtocol> {
        self.protocols
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::Protocol(format!("scenario declares no protocol `{id}`")))
    }

    pub fn rule(&self, id: &str) -> Result<&NamedRule> {
        self.rules
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::domain(format!("scenario declares no decision rule `{id}`")))
    }

    /// Rebuild the generated table at a different population size. Factor
    /// splits, truth fractions, and cell values all rescale; power grids use
    /// this to sweep arm sizes. Errors for inline (non-generated) tables.
    pub fn regenerate_table(&self, n_units: usize) -> Result<ScienceTable> {
        let Some(gen) = &self.doc.table.generator else {
            return Err(Error::domain("only generated tables can be rebuilt at a new size"));
        };
        let mut gen = gen.clone();
        gen.n_units = n_units;
        let mut issues = Issues(Vec::new());
        let units = generate_units(&gen, self.seed, &mut issues);
        if !issues.0.is_empty() {
            return Err(Error::Scenario(issues.0));
        }
        let values = generator_cell_values(&gen, &units);
        let default_value = self.doc.table.default_value;
        ScienceTable::new(
            units,
            self.table.outcomes().to_vec(),
            self.table.treatments().to_vec(),
            |u, o, t| {
                values.get(&(u.id.clone(), o.id.clone(), t.id.clone())).copied().unwrap_or(default_value)
            },
        )
    }
}

/// Parse and fully validate a scenario from text. All validation problems
/// come back together in one `Error::Scenario`.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc =
        toml::from_str(text).map_err(|e| Error::Scenario(vec![format!("parse error: {e}")]))?;
    resolve(doc, text)
}

/// Read a scenario file, then apply its exclusion list (resolved relative
/// to the scenario's directory) if it names one.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read scenario {}: {e}", path.display())))?;
    let scenario = parse_scenario(&text)?;
    match &scenario.exclusion_list {
        None => Ok(scenario),
        Some(rel) => {
            let list_path = path.parent().unwrap_or_else(|| Path::new(".")).join(rel);
            let list_text = std::fs::read_to_string(&list_path)
                .map_err(|e| Error::Io(format!("cannot read exclusion list {}: {e}", list_path.display())))?;
            let list = ExclusionList::from_json(&list_text)?;
            apply_exclusions(&scenario, &list)
        }
    }
}

struct Issues(Vec<String>);

impl Issues {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn push_err(&mut self, context: &str, err: Error) {
        self.0.push(format!("{context}: {err}"));
    }
}

fn resolve(doc: ScenarioDoc, text: &str) -> Result<Scenario> {
    let mut issues = Issues(Vec::new());

    if doc.schema_version != 1 {
        issues.push(format!("unsupported schema_version {} (this tool reads version 1)", doc.schema_version));
    }
    if doc.name.is_empty() {
        issues.push("name must be non-empty");
    }

    let before_structure = issues.0.len();
    let outcomes = resolve_outcomes(&doc, &mut issues);
    let treatments = resolve_treatments(&doc, &mut issues);
    let structure_ok = issues.0.len() == before_structure;
    let outcome_ids: Vec<String> = outcomes.iter().map(|o| o.id.clone()).collect();
    let treatment_ids: Vec<String> = treatments.iter().map(|t| t.id.clone()).collect();
    let primary = outcomes.iter().find(|o| o.role == OutcomeRole::Primary).map(|o| o.id.clone());
    let active = treatments.iter().find(|t| t.kind == TreatmentKind::Active).map(|t| t.id.clone());
    let control_level =
        treatments.iter().find(|t| t.kind == TreatmentKind::ControlTreatment).map(|t| t.id.clone());
    let null_tc_level =
        treatments.iter().find(|t| t.kind == TreatmentKind::NullTreatmentControl).map(|t| t.id.clone());

    let check_outcome = |id: &str, what: &str, issues: &mut Issues| {
        if !outcome_ids.iter().any(|o| o == id) {
            issues.push(format!("{what}: unknown outcome id `{id}`"));
        }
    };
    let check_treatment = |id: &str, what: &str, issues: &mut Issues| {
        if !treatment_ids.iter().any(|t| t == id) {
            issues.push(format!("{what}: unknown treatment id `{id}`"));
        }
    };

    let table =
        resolve_table(&doc, &outcomes, &treatments, &outcome_ids, &treatment_ids, structure_ok, &mut issues);

    // measured outcomes and noise
    if doc.measured_outcomes.is_empty() {
        issues.push("measured_outcomes must list at least one outcome");
    }
    for (i, id) in doc.measured_outcomes.iter().enumerate() {
        check_outcome(id, "measured_outcomes", &mut issues);
        if doc.measured_outcomes[..i].contains(id) {
            issues.push(format!("measured_outcomes lists `{id}` twice"));
        }
    }
    if let Err(e) = doc.noise.validate(&doc.measured_outcomes) {
        issues.push_err("noise", e);
    }
    if let Some(p) = &primary {
        if !doc.measured_outcomes.contains(p) {
            issues.push(format!("measured_outcomes must include the primary outcome `{p}`"));
        }
    }
    if let Some(c) = doc.diagnostics.as_ref().and_then(|d| d.confounding.as_ref()) {
        if !doc.measured_outcomes.contains(&c.outcome) {
            issues.push(format!("measured_outcomes must include the confounding outcome `{}`", c.outcome));
        }
    }

    // factor effects, validated with a dry run against the real table
    if let Some(table) = &table {
        for effect in &doc.factor_effects {
            if let Err(e) = crate::sim::apply_factor_effects(table, std::slice::from_ref(effect)) {
                issues.push_err(
                    &format!("factor_effects ({}={} on {})", effect.factor, effect.level, effect.outcome),
                    e,
                );
            }
        }
    }

    let controls = resolve_controls(
        &doc,
        primary.as_deref(),
        active.as_deref(),
        &outcomes,
        &outcome_ids,
        &treatment_ids,
        table.as_ref(),
        &mut issues,
    );
    let rules = resolve_rules(&doc, &mut issues);
    let diagnostics = resolve_diagnostics(
        &doc,
        &rules,
        null_tc_level.as_deref(),
        active.as_deref(),
        control_level.as_deref(),
        &outcome_ids,
        &treatment_ids,
        &mut issues,
    );
    let protocols = resolve_protocols(&doc, &controls, &mut issues);

    let timecourse = doc.timecourse.as_ref().and_then(|tc| {
        let what = "timecourse";
        check_outcome(&tc.outcome, what, &mut issues);
        check_treatment(&tc.treatment, what, &mut issues);
        if tc.times.is_empty() {
            issues.push("timecourse: times must be non-empty");
        }
        if tc.times.windows(2).any(|w| w[0] >= w[1]) || tc.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            issues.push("timecourse: times must be finite, non-negative, strictly increasing");
        }
        if let Err(e) = tc.curve.validate() {
            issues.push_err(what, e);
        }
        for (unit, curve) in &tc.curves {
            if let Err(e) = curve.validate() {
                issues.push_err(&format!("timecourse curve for `{unit}`"), e);
            }
        }
        let table = table.as_ref()?;
        let mut curves = BTreeMap::new();
        for unit in table.units() {
            curves.insert(unit.id.clone(), *tc.curves.get(&unit.id).unwrap_or(&tc.curve));
        }
        for unit in tc.curves.keys() {
            if table.unit(unit).is_err() {
                issues.push(format!("timecourse: curve override for unknown unit `{unit}`"));
            }
        }
        Some(TimecoursePlan {
            outcome: tc.outcome.clone(),
            treatment: tc.treatment.clone(),
            times: tc.times.clone(),
            curves,
            noise: tc.noise.clone().unwrap_or(NoiseModel::None),
        })
    });

    let placebo = doc.placebo.as_ref().and_then(|p| {
        check_treatment(&p.blinded_arm, "placebo", &mut issues);
        check_treatment(&p.unblinded_arm, "placebo", &mut issues);
        if p.blinded_arm == p.unblinded_arm {
            issues.push("placebo: blinded_arm and unblinded_arm must differ");
        }
        if let Some(o) = &p.outcome {
            check_outcome(o, "placebo", &mut issues);
        }
        let outcome = p.outcome.clone().or_else(|| primary.clone())?;
        Some(PlaceboPlan {
            outcome,
            blinded_arm: p.blinded_arm.clone(),
            unblinded_arm: p.unblinded_arm.clone(),
        })
    });

    let power = resolve_power(&doc, &rules, &mut issues);

    // cross-section requirements of protocols
    for p in &protocols {
        match p.purpose {
            ProtocolPurpose::Timing if doc.timecourse.is_none() => {
                issues.push(format!("protocol `{}` needs a [timecourse] section", p.id));
            }
            ProtocolPurpose::Placebo if doc.placebo.is_none() => {
                issues.push(format!("protocol `{}` needs a [placebo] section", p.id));
            }
            ProtocolPurpose::Compliers if p.controls.len() != 1 => {
                issues.push(format!(
                    "protocol `{}` must list exactly one non-null outcome control, found {}",
                    p.id,
                    p.controls.len()
                ));
            }
            _ => {}
        }
    }

    // arm sizes are checked against the post-exclusion population, so the
    // mechanism can only be validated here when no exclusion list applies
    if let Some(table) = &table {
        if doc.exclusion_list.is_none() {
            if let Err(e) = doc.assignment.validate(table) {
                issues.push_err("assignment", e);
            }
        }
    }

    if !issues.0.is_empty() {
        return Err(Error::Scenario(issues.0));
    }
    let table = table.ok_or_else(|| Error::Scenario(vec!["table could not be built".into()]))?;
    Ok(Scenario {
        schema_version: doc.schema_version,
        name: doc.name.clone(),
        seed: doc.seed,
        table,
        mechanism: doc.assignment.clone(),
        factor_effects: doc.factor_effects.clone(),
        noise: doc.noise.clone(),
        measured_outcomes: doc.measured_outcomes.clone(),
        controls,
        rules,
        diagnostics,
        protocols,
        timecourse,
        placebo,
        power,
        exclusion_list: doc.exclusion_list.clone(),
        doc,
        source_text: text.to_string(),
    })
}

fn resolve_outcomes(doc: &ScenarioDoc, issues: &mut Issues) -> Vec<OutcomeDef> {
    if doc.outcomes.is_empty() {
        issues.push("at least one outcome is required");
    }
    for (i, o) in doc.outcomes.iter().enumerate() {
        if doc.outcomes[..i].iter().any(|p| p.id == o.id) {
            issues.push(format!("duplicate outcome id `{}`", o.id));
        }
    }
    let primaries: Vec<&str> =
        doc.outcomes.iter().filter(|o| o.role == OutcomeRole::Primary).map(|o| o.id.as_str()).collect();
    if primaries.len() != 1 {
        issues.push(format!(
            "exactly one outcome must have role = \"primary\"; found {}: [{}]",
            primaries.len(),
            primaries.join(", ")
        ));
    }
    doc.outcomes
        .iter()
        .map(|o| {
            let mut def = OutcomeDef::new(
                &o.id,
                o.label.as_deref().unwrap_or(&o.id),
                o.units.as_deref().unwrap_or(""),
                o.role,
            );
            def.null_value = o.null_value;
            def
        })
        .collect()
}

fn resolve_treatments(doc: &ScenarioDoc, issues: &mut Issues) -> Vec<TreatmentLevel> {
    if doc.treatments.is_empty() {
        issues.push("at least one treatment is required");
    }
    for (i, t) in doc.treatments.iter().enumerate() {
        if doc.treatments[..i].iter().any(|p| p.id == t.id) {
            issues.push(format!("duplicate treatment id `{}`", t.id));
        }
    }
    let actives: Vec<&str> =
        doc.treatments.iter().filter(|t| t.kind == TreatmentKind::Active).map(|t| t.id.as_str()).collect();
    if actives.len() != 1 {
        issues.push(format!(
            "exactly one treatment must have kind = \"active\"; found {}: [{}]",
            actives.len(),
            actives.join(", ")
        ));
    }
    let controls =
        doc.treatments.iter().filter(|t| t.kind == TreatmentKind::ControlTreatment).count();
    if controls > 1 {
        issues.push("at most one treatment may have kind = \"control_treatment\"");
    }
    doc.treatments
        .iter()
        .map(|t| TreatmentLevel::new(&t.id, t.label.as_deref().unwrap_or(&t.id), t.kind))
        .collect()
}

fn resolve_table(
    doc: &ScenarioDoc,
    outcomes: &[OutcomeDef],
    treatments: &[TreatmentLevel],
    outcome_ids: &[String],
    treatment_ids: &[String],
    structure_ok: bool,
    issues: &mut Issues,
) -> Option<ScienceTable> {
    let before = issues.0.len();
    let inline = doc.table.units.is_some() || doc.table.cells.is_some();
    let units = match (&doc.table.generator, inline) {
        (Some(_), true) => {
            issues.push("table: use either generator or units+cells, not both");
            return None;
        }
        (None, false) => {
            issues.push("table: one of generator or units+cells is required");
            return None;
        }
        (Some(gen), false) => generate_units(gen, doc.seed, issues),
        (None, true) => {
            let docs = doc.table.units.as_deref().unwrap_or(&[]);
            if docs.is_empty() {
                issues.push("table: units must be non-empty");
            }
            for (i, u) in docs.iter().enumerate() {
                if docs[..i].iter().any(|p| p.id == u.id) {
                    issues.push(format!("table: duplicate unit id `{}`", u.id));
                }
            }
            docs.iter()
                .map(|u| {
                    let mut unit = Unit::new(&u.id);
                    unit.factors = u.factors.clone();
                    unit.responder_truth = u.responder;
                    unit.complier_truth = u.complier;
                    unit
                })
                .collect()
        }
    };

    // explicit cell values, from whichever source supplied them
    let mut values: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    if let Some(gen) = &doc.table.generator {
        for (i, cell) in gen.cells.iter().enumerate() {
            if gen.cells[..i].iter().any(|p| p.outcome == cell.outcome && p.treatment == cell.treatment) {
                issues.push(format!("table cell ({}, {}) is declared twice", cell.outcome, cell.treatment));
            }
            if !outcome_ids.contains(&cell.outcome) {
                issues.push(format!("table cell: unknown outcome id `{}`", cell.outcome));
            }
            if !treatment_ids.contains(&cell.treatment) {
                issues.push(format!("table cell: unknown treatment id `{}`", cell.treatment));
            }
            if !cell.value.is_finite() || cell.nonresponder_value.is_some_and(|v| !v.is_finite()) {
                issues.push(format!("table cell ({}, {}): values must be finite", cell.outcome, cell.treatment));
            }
        }
        values.extend(generator_cell_values(gen, &units));
    }
    if let Some(cells) = &doc.table.cells {
        for cell in cells {
            if !units.iter().any(|u| u.id == cell.unit) {
                issues.push(format!("table cell: unknown unit id `{}`", cell.unit));
                continue;
            }
            if !outcome_ids.contains(&cell.outcome) {
                issues.push(format!("table cell: unknown outcome id `{}`", cell.outcome));
                continue;
            }
            if !treatment_ids.contains(&cell.treatment) {
                issues.push(format!("table cell: unknown treatment id `{}`", cell.treatment));
                continue;
            }
            if !cell.value.is_finite() {
                issues.push(format!(
                    "table cell ({}, {}, {}): value must be finite",
                    cell.unit, cell.outcome, cell.treatment
                ));
            }
            let key = (cell.unit.clone(), cell.outcome.clone(), cell.treatment.clone());
            if values.insert(key, cell.value).is_some() {
                issues.push(format!(
                    "table cell ({}, {}, {}) is declared twice",
                    cell.unit, cell.outcome, cell.treatment
                ));
            }
        }
    }
    if !doc.table.default_value.is_finite() {
        issues.push("table: default_value must be finite");
    }

    // outcome/treatment structure problems were already reported; building
    // the table anyway would only repeat them
    if issues.0.len() > before || !structure_ok {
        return None;
    }
    match ScienceTable::new(units, outcomes.to_vec(), treatments.to_vec(), |u, o, t| {
        values
            .get(&(u.id.clone(), o.id.clone(), t.id.clone()))
            .copied()
            .unwrap_or(doc.table.default_value)
    }) {
        Ok(table) => Some(table),
        Err(e) => {
            issues.push_err("table", e);
            None
        }
    }
}

fn generator_cell_values(gen: &GeneratorDoc, units: &[Unit]) -> BTreeMap<(String, String, String), f64> {
    let mut values = BTreeMap::new();
    for cell in &gen.cells {
        for unit in units {
            let v = match (unit.responder_truth, cell.nonresponder_value) {
                (Some(false), Some(nv)) => nv,
                _ => cell.value,
            };
            values.insert((unit.id.clone(), cell.outcome.clone(), cell.treatment.clone()), v);
        }
    }
    values
}

fn generate_units(gen: &GeneratorDoc, seed: u64, issues: &mut Issues) -> Vec<Unit> {
    if gen.n_units == 0 {
        issues.push("table generator: n_units must be >= 1");
        return Vec::new();
    }
    let width = (gen.n_units.saturating_sub(1)).to_string().len();
    let mut units: Vec<Unit> =
        (0..gen.n_units).map(|i| Unit::new(&format!("{}{i:0width$}", gen.unit_prefix))).collect();

    for factor in &gen.factors {
        if factor.levels.is_empty() {
            issues.push(format!("factor `{}`: levels must be non-empty", factor.name));
            continue;
        }
        let counts = match (&factor.counts, &factor.fractions) {
            (Some(_), Some(_)) => {
                issues.push(format!("factor `{}`: counts and fractions are mutually exclusive", factor.name));
                continue;
            }
            (Some(counts), None) => {
                if counts.len() != factor.levels.len() || counts.iter().sum::<usize>() != gen.n_units {
                    issues.push(format!(
                        "factor `{}`: counts must match levels and sum to n_units",
                        factor.name
                    ));
                    continue;
                }
                counts.clone()
            }
            (None, Some(fractions)) => {
                let ok = fractions.len() == factor.levels.len()
                    && fractions.iter().all(|f| f.is_finite() && *f >= 0.0)
                    && (fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
                if !ok {
                    issues.push(format!(
                        "factor `{}`: fractions must match levels, be non-negative, and sum to 1",
                        factor.name
                    ));
                    continue;
                }
                counts_from_fractions(fractions, gen.n_units)
            }
            (None, None) => even_counts(factor.levels.len(), gen.n_units),
        };

        let mut pool: Vec<&str> = Vec::with_capacity(gen.n_units);
        match factor.assign {
            FactorAssign::RoundRobin => {
                let mut remaining = counts.clone();
                let mut level = 0usize;
                for _ in 0..gen.n_units {
                    while remaining[level % counts.len()] == 0 {
                        level += 1;
                    }
                    remaining[level % counts.len()] -= 1;
                    pool.push(&factor.levels[level % counts.len()]);
                    level += 1;
                }
            }
            FactorAssign::Shuffled => {
                for (lvl, count) in factor.levels.iter().zip(&counts) {
                    for _ in 0..*count {
                        pool.push(lvl);
                    }
                }
                let mut rng = StreamKey::new(seed).tag("generator").tag(&factor.name).rng();
                pool.shuffle(&mut rng);
            }
        }
        for (unit, level) in units.iter_mut().zip(&pool) {
            unit.factors.insert(factor.name.clone(), level.to_string());
        }
    }

    if let Some(truths) = &gen.truths {
        apply_truths(&mut units, truths, issues);
    }
    units
}

fn even_counts(levels: usize, n: usize) -> Vec<usize> {
    let base = n / levels;
    let extra = n % levels;
    (0..levels).map(|i| base + usize::from(i < extra)).collect()
}

/// Largest-remainder rounding so the counts are deterministic and sum to n.
fn counts_from_fractions(fractions: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = fractions.iter().map(|f| (f * n as f64).floor() as usize).collect();
    let mut leftover = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|a, b| {
        let ra = fractions[*a] * n as f64 - (fractions[*a] * n as f64).floor();
        let rb = fractions[*b] * n as f64 - (fractions[*b] * n as f64).floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(b))
    });
    for i in order {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

fn apply_truths(units: &mut [Unit], truths: &TruthsDoc, issues: &mut Issues) {
    let n = units.len();
    let fill = |what: &str,
                    fraction: &Option<f64>,
                    listed: &Option<Vec<String>>,
                    set: &mut dyn FnMut(&mut Unit, bool),
                    units: &mut [Unit],
                    issues: &mut Issues| {
        match (fraction, listed) {
            (Some(_), Some(_)) => {
                issues.push(format!("truths: {what} fraction and explicit list are mutually exclusive"))
            }
            (Some(f), None) => {
                if !(f.is_finite() && (0.0..=1.0).contains(f)) {
                    issues.push(format!("truths: {what} fraction must lie in [0, 1]"));
                    return;
                }
                let k = (f * n as f64).round() as usize;
                for (i, unit) in units.iter_mut().enumerate() {
                    set(unit, i < k);
                }
            }
            (None, Some(ids)) => {
                for id in ids {
                    if !units.iter().any(|u| &u.id == id) {
                        issues.push(format!("truths: {what} list names unknown unit `{id}`"));
                    }
                }
                for unit in units.iter_mut() {
                    let truth = ids.contains(&unit.id);
                    set(unit, truth);
                }
            }
            (None, None) => {}
        }
    };
    fill(
        "responder",
        &truths.responder_fraction,
        &truths.responders,
        &mut |u, v| u.responder_truth = Some(v),
        units,
        issues,
    );
    fill(
        "complier",
        &truths.complier_fraction,
        &truths.compliers,
        &mut |u, v| u.complier_truth = Some(v),
        units,
        issues,
    );
}

#[allow(clippy::too_many_arguments)]
fn resolve_controls(
    doc: &ScenarioDoc,
    primary: Option<&str>,
    active: Option<&str>,
    outcomes: &[OutcomeDef],
    outcome_ids: &[String],
    treatment_ids: &[String],
    table: Option<&ScienceTable>,
    issues: &mut Issues,
) -> Vec<NamedControl> {
    let mut out = Vec::new();
    for (i, c) in doc.controls.iter().enumerate() {
        if doc.controls[..i].iter().any(|p| p.id == c.id) {
            issues.push(format!("duplicate control id `{}`", c.id));
        }
        let mut refs_ok = true;
        let check_ref = |id: &str, ids: &[String], what: &str, issues: &mut Issues| {
            if !ids.iter().any(|k| k == id) {
                issues.push(format!("control `{}`: unknown {what} id `{id}`", c.id));
                false
            } else {
                true
            }
        };
        if let Some(o) = &c.outcome {
            refs_ok &= check_ref(o, outcome_ids, "outcome", issues);
        }
        if let Some(t) = &c.treatment {
            refs_ok &= check_ref(t, treatment_ids, "treatment", issues);
        }
        if let Some(pair) = &c.contrast {
            if let Some(a) = &pair.active {
                refs_ok &= check_ref(a, treatment_ids, "treatment", issues);
            }
            refs_ok &= check_ref(&pair.control, treatment_ids, "treatment", issues);
        }
        let Some(outcome) = c.outcome.as_deref().or(primary) else {
            issues.push(format!("control `{}`: no outcome given and no primary outcome to default to", c.id));
            continue;
        };
        let null_value = c
            .null_value
            .or_else(|| outcomes.iter().find(|o| o.id == outcome).map(|o| o.null_value))
            .unwrap_or(0.0);
        let epsilon = c.epsilon.unwrap_or(0.0);
        let min_magnitude = c.min_magnitude.unwrap_or_else(|| default_min_magnitude(epsilon));

        let is_contrast = c.kind.is_contrast();
        let treatment = if is_contrast {
            if c.treatment.is_some() {
                issues.push(format!("control `{}`: contrast kinds take a contrast pair, not a treatment", c.id));
            }
            None
        } else {
            if c.contrast.is_some() {
                issues.push(format!("control `{}`: only contrast kinds take a contrast pair", c.id));
            }
            match (&c.treatment, c.kind) {
                (Some(t), _) => Some(t.clone()),
                (None, crate::controls::ControlKind::NullOutcomeControl)
                | (None, crate::controls::ControlKind::NonNullOutcomeControl) => match active {
                    Some(a) => Some(a.to_string()),
                    None => {
                        issues.push(format!("control `{}`: no treatment given", c.id));
                        None
                    }
                },
                (None, _) => {
                    issues.push(format!("control `{}`: treatment-control kinds need a treatment", c.id));
                    None
                }
            }
        };
        let contrast = if is_contrast {
            match &c.contrast {
                Some(pair) => {
                    let pair_active = pair.active.as_deref().or(active);
                    match pair_active {
                        Some(a) => Some((a.to_string(), pair.control.clone())),
                        None => {
                            issues.push(format!(
                                "control `{}`: contrast has no active level and no active treatment to default to",
                                c.id
                            ));
                            None
                        }
                    }
                }
                None => {
                    issues.push(format!("control `{}`: contrast kinds need a contrast pair", c.id));
                    None
                }
            }
        } else {
            None
        };

        let mut decl = ControlDeclaration::new(c.kind, outcome)
            .with_null_value(null_value)
            .with_epsilon(epsilon)
            .with_min_magnitude(min_magnitude);
        if let Some(t) = treatment {
            decl = decl.with_treatment(&t);
        }
        if let Some((a, r)) = contrast {
            decl = decl.with_contrast(&a, &r);
        }
        if let (Some(table), true) = (table, refs_ok) {
            if let Err(e) = decl.validate(table) {
                issues.push_err(&format!("control `{}`", c.id), e);
            }
        }
        out.push(NamedControl::new(&c.id, decl));
    }
    out
}

fn resolve_rules(doc: &ScenarioDoc, issues: &mut Issues) -> Vec<NamedRule> {
    let mut out = Vec::new();
    for (i, r) in doc.rules.iter().enumerate() {
        if doc.rules[..i].iter().any(|p| p.id == r.id) {
            issues.push(format!("duplicate rule id `{}`", r.id));
        }
        let forbid = |field: &str, set: bool, issues: &mut Issues| {
            if set {
                issues.push(format!("rule `{}`: `{field}` does not apply to {:?} rules", r.id, r.kind));
            }
        };
        let rule = match r.kind {
            RuleKindDoc::StrictCount | RuleKindDoc::FractionCount => {
                forbid("alpha", r.alpha.is_some(), issues);
                forbid("method", r.method.is_some(), issues);
                let Some(threshold_a) = r.threshold_a else {
                    issues.push(format!("rule `{}`: count rules need threshold_a", r.id));
                    continue;
                };
                if r.kind == RuleKindDoc::StrictCount {
                    forbid("fraction", r.fraction.is_some(), issues);
                    DecisionRule::StrictCount { threshold_a }
                } else {
                    DecisionRule::FractionCount { threshold_a, fraction: r.fraction.unwrap_or(0.10) }
                }
            }
            RuleKindDoc::MeanTest => {
                forbid("threshold_a", r.threshold_a.is_some(), issues);
                forbid("fraction", r.fraction.is_some(), issues);
                DecisionRule::MeanTest {
                    alpha: r.alpha.unwrap_or(0.05),
                    method: r.method.unwrap_or_default(),
                }
            }
        };
        if let Err(e) = rule.validate() {
            issues.push_err(&format!("rule `{}`", r.id), e);
        }
        out.push(NamedRule { id: r.id.clone(), rule });
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn resolve_diagnostics(
    doc: &ScenarioDoc,
    rules: &[NamedRule],
    null_tc_level: Option<&str>,
    active: Option<&str>,
    control_level: Option<&str>,
    outcome_ids: &[String],
    treatment_ids: &[String],
    issues: &mut Issues,
) -> Option<DiagnosticsConfig> {
    let ddoc = doc.diagnostics.as_ref();
    let arm = ddoc.and_then(|d| d.null_treatment_control.clone()).or_else(|| null_tc_level.map(String::from));
    let Some(arm) = arm else {
        if ddoc.is_some() || !rules.is_empty() {
            issues.push(
                "diagnostics need a null treatment-control arm: declare a treatment with that kind \
                 or set diagnostics.null_treatment_control",
            );
        }
        return None;
    };
    if !treatment_ids.iter().any(|t| t == &arm) {
        issues.push(format!("diagnostics: unknown treatment id `{arm}`"));
    }
    let first_count_threshold = rules.iter().find_map(|r| match r.rule {
        DecisionRule::StrictCount { threshold_a } | DecisionRule::FractionCount { threshold_a, .. } => {
            Some(threshold_a)
        }
        _ => None,
    });
    let confounding = ddoc.and_then(|d| d.confounding.as_ref()).and_then(|c| {
        if !outcome_ids.iter().any(|o| o == &c.outcome) {
            issues.push(format!("diagnostics.confounding: unknown outcome id `{}`", c.outcome));
        }
        let active = match c.active.as_deref().or(active) {
            Some(a) => a.to_string(),
            None => {
                issues.push("diagnostics.confounding: no active arm to default to".to_string());
                return None;
            }
        };
        let control = match c.control.as_deref().or(control_level) {
            Some(v) => v.to_string(),
            None => {
                issues.push(
                    "diagnostics.confounding: no control arm given and the table declares no \
                     control treatment"
                        .to_string(),
                );
                return None;
            }
        };
        for arm in [&active, &control] {
            if !treatment_ids.iter().any(|t| t == arm) {
                issues.push(format!("diagnostics.confounding: unknown treatment id `{arm}`"));
            }
        }
        Some(ConfoundingConfig {
            outcome: c.outcome.clone(),
            active,
            control,
            alpha: c.alpha.unwrap_or(0.05),
            method: c.method.unwrap_or_default(),
        })
    });
    Some(DiagnosticsConfig {
        null_treatment_control: arm,
        threshold_a: ddoc.and_then(|d| d.threshold_a).or(first_count_threshold).unwrap_or(1.0),
        test_method: ddoc.and_then(|d| d.test_method).unwrap_or_default(),
        rules: rules.to_vec(),
        confounding,
    })
}

fn resolve_protocols(doc: &ScenarioDoc, controls: &[NamedControl], issues: &mut Issues) -> Vec<PretrialProtocol> {
    let mut out = Vec::new();
    for (i, p) in doc.protocols.iter().enumerate() {
        if doc.protocols[..i].iter().any(|q| q.id == p.id) {
            issues.push(format!("duplicate protocol id `{}`", p.id));
        }
        let mut resolved = Vec::new();
        for id in &p.controls {
            match controls.iter().find(|c| &c.id == id) {
                Some(c) => resolved.push(c.clone()),
                None => issues.push(format!("protocol `{}`: unknown control id `{id}`", p.id)),
            }
        }
        let protocol = PretrialProtocol {
            id: p.id.clone(),
            purpose: p.purpose,
            controls: resolved,
            per_unit_replicates: p.per_unit_replicates,
            decision_threshold: p.decision_threshold,
            alpha: p.alpha.unwrap_or(0.05),
            call_mode: p.call_mode,
            registered: p.registered,
        };
        if let Err(e) = protocol.validate() {
            issues.push_err(&format!("protocol `{}`", p.id), e);
        }
        out.push(protocol);
    }
    out
}

fn resolve_power(doc: &ScenarioDoc, rules: &[NamedRule], issues: &mut Issues) -> Option<PowerPlan> {
    let p = doc.power.as_ref()?;
    let rule = match p.rule.clone().or_else(|| rules.first().map(|r| r.id.clone())) {
        Some(id) => {
            if !rules.iter().any(|r| r.id == id) {
                issues.push(format!("power: unknown rule id `{id}`"));
            }
            id
        }
        None => {
            issues.push("power: no decision rules declared to measure");
            return None;
        }
    };
    if p.replications == 0 {
        issues.push("power: replications must be >= 1");
    }
    if p.arm_sizes.is_empty() || p.arm_sizes.iter().any(|n| *n == 0) {
        issues.push("power: arm_sizes must be non-empty and positive");
    }
    if p.flaw_magnitudes.is_empty() || p.flaw_magnitudes.iter().any(|f| !f.is_finite()) {
        issues.push("power: flaw_magnitudes must be non-empty and finite");
    }
    let Some(gen) = &doc.table.generator else {
        issues.push("power: arm-size grids need a generated table (fractions rescale with n_units)");
        return None;
    };
    match gen.factors.iter().find(|f| f.name == p.flaw.factor) {
        None => issues.push(format!("power: flaw factor `{}` is not generated", p.flaw.factor)),
        Some(f) => {
            if !f.levels.contains(&p.flaw.level) {
                issues.push(format!(
                    "power: flaw level `{}` is not a level of factor `{}`",
                    p.flaw.level, p.flaw.factor
                ));
            }
        }
    }
    // the grid rebuilds the table at several sizes, so fixed counts cannot work
    for f in &gen.factors {
        if f.counts.is_some() {
            issues.push(format!(
                "power: factor `{}` must use fractions (or neither), not counts, so it rescales \
                 with arm size",
                f.name
            ));
        }
    }
    if !doc.outcomes.iter().any(|o| o.id == p.flaw.outcome) {
        issues.push(format!("power: unknown outcome id `{}`", p.flaw.outcome));
    }
    if !matches!(doc.assignment, AssignmentMechanism::CompleteRandomization { .. }) {
        issues.push("power: arm-size grids need complete_randomization assignment");
    }
    Some(PowerPlan {
        rule,
        replications: p.replications,
        arm_sizes: p.arm_sizes.clone(),
        flaw_magnitudes: p.flaw_magnitudes.clone(),
        flaw_factor: p.flaw.factor.clone(),
        flaw_level: p.flaw.level.clone(),
        flaw_outcome: p.flaw.outcome.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::ControlKind;

    fn mini_toml() -> String {
        r#"
schema_version = 1
name = "mini"
seed = 7
measured_outcomes = ["rt", "tremor"]

[[outcomes]]
id = "rt"
role = "primary"

[[outcomes]]
id = "tremor"
role = "secondary"

[[treatments]]
id = "coffee"
kind = "active"

[[treatments]]
id = "water"
kind = "control_treatment"

[[treatments]]
id = "none"
kind = "null_treatment_control"

[table.generator]
n_units = 6

[[table.generator.cells]]
outcome = "rt"
treatment = "coffee"
value = 3.0

[assignment]
kind = "complete_randomization"

[assignment.arm_sizes]
coffee = 2
water = 2
none = 2

[[controls]]
id = "coffee_moves_rt"
kind = "non_null_outcome_control"
min_magnitude = 1.0

[[controls]]
id = "rt_responds"
kind = "non_null_contrast_control"
min_magnitude = 1.0

[controls.contrast]
control = "water"

[[rules]]
id = "strict"
kind = "strict_count"
threshold_a = 1.0

[[protocols]]
id = "screen"
purpose = "responders"
controls = ["rt_responds"]
per_unit_replicates = 4
decision_threshold = 1.0
registered = true
"#
        .to_string()
    }

    #[test]
    fn minimal_scenario_resolves_defaults() {
        let s = parse_scenario(&mini_toml()).unwrap();
        assert_eq!(s.table.n_units(), 6);
        assert_eq!(s.table.unit("u0").unwrap().id, "u0");

        let c = &s.controls[0];
        assert_eq!(c.decl.outcome, "rt");
        assert_eq!(c.decl.treatment.as_deref(), Some("coffee"));
        assert_eq!(c.decl.epsilon, 0.0);

        let pair = s.controls[1].decl.contrast.as_ref().unwrap();
        assert_eq!(pair.active, "coffee");
        assert_eq!(pair.control, "water");

        let d = s.diagnostics.as_ref().unwrap();
        assert_eq!(d.null_treatment_control, "none");
        assert_eq!(d.threshold_a, 1.0);
        assert_eq!(d.rules.len(), 1);

        assert_eq!(s.protocols[0].controls[0].id, "rt_responds");
        assert_eq!(s.protocols[0].alpha, 0.05);
    }

    #[test]
    fn serialization_round_trips() {
        let s1 = parse_scenario(&mini_toml()).unwrap();
        let t1 = s1.to_toml().unwrap();
        let s2 = parse_scenario(&t1).unwrap();
        let t2 = s2.to_toml().unwrap();
        assert_eq!(t1, t2);
        assert_eq!(s2, parse_scenario(&t2).unwrap());
        assert_eq!(s1.table, s2.table);
        assert_eq!(s1.controls, s2.controls);
        assert_eq!(s1.rules, s2.rules);
        assert_eq!(s1.protocols, s2.protocols);
    }

    #[test]
    fn all_problems_are_reported_together() {
        let text = mini_toml()
            .replace("role = \"secondary\"", "role = \"primary\"")
            .replace("threshold_a = 1.0", "")
            + r#"
[[controls]]
id = "bad"
kind = "null_outcome_control"
outcome = "nope"
"#;
        let err = parse_scenario(&text).unwrap_err();
        let Error::Scenario(issues) = err else { panic!("expected scenario error, got {err}") };
        assert!(issues.len() >= 3, "collected {issues:?}");
        let all = issues.join("\n");
        assert!(all.contains("rt") && all.contains("tremor"), "primaries named: {all}");
        assert!(all.contains("threshold_a"), "{all}");
        assert!(all.contains("nope"), "{all}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = mini_toml() + "\nbogus_key = 1\n";
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::Scenario(ref v) if v[0].contains("parse error")), "{err}");
    }

    #[test]
    fn generated_factors_split_deterministically() {
        let text = mini_toml()
            .replace("coffee = 2\nwater = 2\nnone = 2", "coffee = 4\nwater = 3\nnone = 3")
            .replace(
                "[table.generator]\nn_units = 6\n",
                r#"[table.generator]
n_units = 10

[[table.generator.factors]]
name = "room"
levels = ["quiet", "noisy"]
fractions = [0.3, 0.7]
assign = "shuffled"
"#,
            );
        let s1 = parse_scenario(&text).unwrap();
        let s2 = parse_scenario(&text).unwrap();
        assert_eq!(s1.table, s2.table);
        let quiet =
            s1.table.units().iter().filter(|u| u.factors["room"] == "quiet").count();
        assert_eq!(quiet, 3);
        // a different seed reshuffles
        let s3 = parse_scenario(&text.replace("seed = 7", "seed = 8")).unwrap();
        let layout = |s: &Scenario| {
            s.table.units().iter().map(|u| u.factors["room"].clone()).collect::<Vec<_>>()
        };
        assert_ne!(layout(&s1), layout(&s3));
    }

    #[test]
    fn round_robin_factors_cycle_in_unit_order() {
        let text = mini_toml().replace(
            "[table.generator]\nn_units = 6\n",
            r#"[table.generator]
n_units = 6

[[table.generator.factors]]
name = "room"
levels = ["quiet", "noisy"]
counts = [4, 2]
"#,
        );
        let s = parse_scenario(&text).unwrap();
        let rooms: Vec<&str> =
            s.table.units().iter().map(|u| u.factors["room"].as_str()).collect();
        // alternates until noisy's count is spent, then falls back to quiet
        assert_eq!(rooms, ["quiet", "noisy", "quiet", "noisy", "quiet", "quiet"]);
    }

    #[test]
    fn truth_fractions_mark_a_prefix_and_value_overrides_apply() {
        let text = mini_toml().replace(
            "[[table.generator.cells]]\noutcome = \"rt\"\ntreatment = \"coffee\"\nvalue = 3.0\n",
            r#"[table.generator.truths]
responder_fraction = 0.75

[[table.generator.cells]]
outcome = "rt"
treatment = "coffee"
value = 3.0
nonresponder_value = 0.5
"#,
        );
        let text = text
            .replace("n_units = 6", "n_units = 4")
            .replace("coffee = 2\nwater = 2\nnone = 2", "coffee = 2\nwater = 1\nnone = 1");
        let s = parse_scenario(&text).unwrap();
        let truths: Vec<Option<bool>> =
            s.table.units().iter().map(|u| u.responder_truth).collect();
        assert_eq!(truths, [Some(true), Some(true), Some(true), Some(false)]);
        assert_eq!(s.table.potential_outcome("u0", "rt", "coffee").unwrap(), 3.0);
        assert_eq!(s.table.potential_outcome("u3", "rt", "coffee").unwrap(), 0.5);
        // arm sizes no longer fit the 4-unit table, so that issue surfaces too
        let bad = parse_scenario(&text.replace("responder_fraction = 0.75", "responder_fraction = 1.5"));
        assert!(bad.is_err());
    }

    #[test]
    fn control_kind_field_requirements_are_enforced() {
        let text = mini_toml().replace(
            "id = \"coffee_moves_rt\"\nkind = \"non_null_outcome_control\"\nmin_magnitude = 1.0",
            "id = \"coffee_moves_rt\"\nkind = \"null_treatment_control\"\nepsilon = 0.1",
        );
        let err = parse_scenario(&text).unwrap_err();
        let Error::Scenario(issues) = err else { panic!() };
        assert!(issues.iter().any(|i| i.contains("treatment-control kinds need a treatment")), "{issues:?}");
    }

    #[test]
    fn exclusion_lists_refuse_unregistered_protocols() {
        let s = parse_scenario(&mini_toml()).unwrap();
        let mut protocol = s.protocols[0].clone();
        protocol.registered = false;
        let err = ExclusionList::new(&protocol, vec!["u0".into()]).unwrap_err();
        assert!(matches!(err, Error::Unregistered(_)), "{err}");

        let mut list = ExclusionList::new(&s.protocols[0], vec!["u0".into()]).unwrap();
        list.registered = false;
        assert!(matches!(apply_exclusions(&s, &list), Err(Error::Unregistered(_))));
    }

    #[test]
    fn exclusions_drop_units_and_check_the_digest() {
        // arm sizes are written for the post-exclusion population of 6
        let text = mini_toml()
            .replace("n_units = 6", "n_units = 8")
            .replace("seed = 7\n", "seed = 7\nexclusion_list = \"ex.json\"\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.table.n_units(), 8);

        let list = ExclusionList::new(&s.protocols[0], vec!["u1".into(), "u5".into()]).unwrap();
        let kept = apply_exclusions(&s, &list).unwrap();
        assert_eq!(kept.table.n_units(), 6);
        assert!(kept.table.unit("u1").is_err());

        let mut tampered = list.clone();
        tampered.protocol_digest = "0".repeat(64);
        assert!(matches!(apply_exclusions(&s, &tampered), Err(Error::Protocol(_))));

        let mut unknown = list.clone();
        unknown.excluded_units.push("zz".into());
        assert!(apply_exclusions(&s, &unknown).is_err());

        // without the exclusion the mechanism no longer covers all 8 units
        let undeferred = parse_scenario(&text.replace("exclusion_list = \"ex.json\"\n", ""));
        assert!(undeferred.is_err());
    }

    #[test]
    fn load_scenario_applies_sibling_exclusion_files() {
        let dir = tempfile::tempdir().unwrap();
        let text = mini_toml()
            .replace("n_units = 6", "n_units = 8")
            .replace("seed = 7\n", "seed = 7\nexclusion_list = \"ex.json\"\n");
        let s = parse_scenario(&text).unwrap();
        let list = ExclusionList::new(&s.protocols[0], vec!["u0".into(), "u7".into()]).unwrap();
        std::fs::write(dir.path().join("study.toml"), &text).unwrap();
        std::fs::write(dir.path().join("ex.json"), list.to_json()).unwrap();

        let loaded = load_scenario(&dir.path().join("study.toml")).unwrap();
        assert_eq!(loaded.table.n_units(), 6);
        assert!(loaded.table.unit("u7").is_err());
        let round = ExclusionList::from_json(&list.to_json()).unwrap();
        assert_eq!(round, list);
    }

    #[test]
    fn power_plan_requires_a_generator_and_scaling_factors() {
        let text = mini_toml()
            + r#"
[power]
arm_sizes = [2, 4]
flaw_magnitudes = [1.0, 2.0]

[power.flaw]
factor = "room"
level = "noisy"
outcome = "rt"
"#;
        let err = parse_scenario(&text).unwrap_err();
        let Error::Scenario(issues) = err else { panic!() };
        assert!(issues.iter().any(|i| i.contains("flaw factor `room`")), "{issues:?}");

        let with_factor = text.replace(
            "[table.generator]\nn_units = 6\n",
            r#"[table.generator]
n_units = 6

[[table.generator.factors]]
name = "room"
levels = ["quiet", "noisy"]
fractions = [0.5, 0.5]
"#,
        );
        let s = parse_scenario(&with_factor).unwrap();
        let p = s.power.as_ref().unwrap();
        assert_eq!(p.rule, "strict");
        assert_eq!(p.replications, 1000);
        assert_eq!(p.arm_sizes, [2, 4]);
    }

    #[test]
    fn contrast_declarations_reject_stray_treatment_fields() {
        let decl = ControlDeclaration::new(ControlKind::NullContrastControl, "rt");
        assert!(decl.contrast.is_none());
        let text = mini_toml().replace(
            "[controls.contrast]\ncontrol = \"water\"",
            "treatment = \"water\"",
        );
        let err = parse_scenario(&text).unwrap_err();
        let Error::Scenario(issues) = err else { panic!() };
        assert!(issues.iter().any(|i| i.contains("contrast")), "{issues:?}");
    }
}

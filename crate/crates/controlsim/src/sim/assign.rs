//! Assignment mechanisms and exhaustive enumeration.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::{Assignment, ScienceTable};

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// How treatment levels get attached to units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssignmentMechanism {
    /// Exact arm sizes, a uniformly random partition of the units.
    CompleteRandomization { arm_sizes: BTreeMap<String, usize> },
    /// Independent per-unit draws with fixed arm probabilities.
    Bernoulli { arm_probs: BTreeMap<String, f64> },
    /// Per-unit draws whose arm probabilities depend on the unit's level of
    /// one factor. This is the mechanism that builds confounding in.
    FactorConfounded { factor: String, arm_probs: BTreeMap<String, BTreeMap<String, f64>> },
}

impl AssignmentMechanism {
    pub fn tag(&self) -> &'static str {
        match self {
            AssignmentMechanism::CompleteRandomization { .. } => "complete_randomization",
            AssignmentMechanism::Bernoulli { .. } => "bernoulli",
            AssignmentMechanism::FactorConfounded { .. } => "factor_confounded",
        }
    }

    pub fn validate(&self, table: &ScienceTable) -> Result<()> {
        match self {
            AssignmentMechanism::CompleteRandomization { arm_sizes } => {
                for id in arm_sizes.keys() {
                    table.treatment(id)?;
                }
                let total: usize = arm_sizes.values().sum();
                if total != table.n_units() {
                    return Err(Error::domain(format!(
                        "arm sizes sum to {total} but the table has {} units",
                        table.n_units()
                    )));
                }
                Ok(())
            }
            AssignmentMechanism::Bernoulli { arm_probs } => {
                for id in arm_probs.keys() {
                    table.treatment(id)?;
                }
                check_probability_row(arm_probs, "arm_probs")
            }
            AssignmentMechanism::FactorConfounded { factor, arm_probs } => {
                let mut observed: Vec<&str> = Vec::new();
                let mut known = false;
                for unit in table.units() {
                    if let Some(level) = unit.factors.get(factor) {
                        known = true;
                        if !observed.contains(&level.as_str()) {
                            observed.push(level);
                        }
                    }
                }
                if !known {
                    return Err(Error::UnknownFactor(factor.clone()));
                }
                for level in observed {
                    let row = arm_probs.get(level).ok_or_else(|| {
                        Error::domain(format!("no arm probabilities for factor `{factor}` level `{level}`"))
                    })?;
                    for id in row.keys() {
                        table.treatment(id)?;
                    }
                    check_probability_row(row, &format!("arm_probs[{level}]"))?;
                }
                Ok(())
            }
        }
    }
}

fn check_probability_row(row: &BTreeMap<String, f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for (id, p) in row {
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::domain(format!("{what}: probability for `{id}` must be finite and >= 0")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("{what}: probabilities sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Arms in table treatment order; keeps enumeration and assignment output
/// deterministic regardless of map ordering.
fn canonical_arms<'a>(table: &'a ScienceTable, arm_sizes: &BTreeMap<String, usize>) -> Vec<(&'a str, usize)> {
    table
        .treatments()
        .iter()
        .filter_map(|t| arm_sizes.get(&t.id).map(|&n| (t.id.as_str(), n)))
        .filter(|(_, n)| *n > 0)
        .collect()
}

pub(super) fn draw_assignment(table: &ScienceTable, mechanism: &AssignmentMechanism, seed: u64) -> Result<Assignment> {
    mechanism.validate(table)?;
    let mut w = BTreeMap::new();
    match mechanism {
        AssignmentMechanism::CompleteRandomization { arm_sizes } => {
            let mut order: Vec<usize> = (0..table.n_units()).collect();
            order.shuffle(&mut StreamKey::new(seed).tag("assign").rng());
            let mut cursor = order.into_iter();
            for (arm, n) in canonical_arms(table, arm_sizes) {
                for _ in 0..n {
                    let ui = cursor.next().expect("sizes sum to n_units");
                    w.insert(table.units()[ui].id.clone(), arm.to_string());
                }
            }
        }
        AssignmentMechanism::Bernoulli { arm_probs } => {
            for unit in table.units() {
                let arm = categorical(table, arm_probs, seed, &unit.id);
                w.insert(unit.id.clone(), arm);
            }
        }
        AssignmentMechanism::FactorConfounded { factor, arm_probs } => {
            for unit in table.units() {
                let level = unit.factors.get(factor).expect("validated");
                let row = arm_probs.get(level).expect("validated");
                let arm = categorical(table, row, seed, &unit.id);
                w.insert(unit.id.clone(), arm);
            }
        }
    }
    Ok(Assignment { w, mechanism_tag: mechanism.tag().into() })
}

/// One draw from a per-unit categorical over arms, keyed by the unit id so
/// draws are independent of iteration order.
fn categorical(table: &ScienceTable, row: &BTreeMap<String, f64>, seed: u64, unit: &str) -> String {
    let mut rng = StreamKey::new(seed).tag("assign").tag(unit).rng();
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let arms: Vec<(&str, f64)> = table
        .treatments()
        .iter()
        .filter_map(|t| row.get(&t.id).map(|&p| (t.id.as_str(), p)))
        .collect();
    for (arm, p) in &arms {
        acc += p;
        if u < acc {
            return arm.to_string();
        }
    }
    // u landed in the rounding sliver past the last cumulative bound.
    arms.last().expect("validated non-empty row").0.to_string()
}

/// Number of distinct complete-randomization assignments, saturating.
fn multinomial_count(n: usize, arms: &[(&str, usize)]) -> u128 {
    let mut count: u128 = 1;
    let mut remaining = n as u128;
    for (_, k) in arms {
        // multiply by C(remaining, k)
        let k = *k as u128;
        let mut c: u128 = 1;
        for i in 0..k {
            c = c.saturating_mul(remaining - i) / (i + 1);
        }
        count = count.saturating_mul(c);
        remaining -= k;
    }
    count
}

/// Every complete-randomization assignment, in a canonical order: units are
/// chosen for each arm in table order, arms filled in table treatment order.
/// Errors when the count exceeds `cap` (default one million).
pub fn enumerate_assignments(
    table: &ScienceTable,
    mechanism: &AssignmentMechanism,
    cap: Option<usize>,
) -> Result<Vec<Assignment>> {
    let arm_sizes = match mechanism {
        AssignmentMechanism::CompleteRandomization { arm_sizes } => arm_sizes,
        _ => return Err(Error::domain("only complete randomization can be enumerated exhaustively")),
    };
    mechanism.validate(table)?;
    let arms = canonical_arms(table, arm_sizes);
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let count = multinomial_count(table.n_units(), &arms);
    if count > cap as u128 {
        return Err(Error::Resource(format!(
            "enumeration would produce {count} assignments, above the cap of {cap}"
        )));
    }

    let unit_ids: Vec<&str> = table.units().iter().map(|u| u.id.as_str()).collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut current: Vec<Option<&str>> = vec![None; unit_ids.len()];
    fill_arm(&unit_ids, &arms, 0, &mut current, &mut out);
    Ok(out)
}

fn fill_arm<'a>(
    unit_ids: &[&str],
    arms: &[(&'a str, usize)],
    arm_idx: usize,
    current: &mut Vec<Option<&'a str>>,
    out: &mut Vec<Assignment>,
) {
    if arm_idx == arms.len() {
        debug_assert!(current.iter().all(Option::is_some));
        let w: BTreeMap<String, String> =
            unit_ids.iter().zip(current.iter()).map(|(u, a)| (u.to_string(), a.unwrap().to_string())).collect();
        out.push(Assignment { w, mechanism_tag: "enumerated".into() });
        return;
    }
    let (arm, k) = arms[arm_idx];
    let free: Vec<usize> = (0..unit_ids.len()).filter(|&i| current[i].is_none()).collect();
    let mut choice: Vec<usize> = (0..k).collect();
    loop {
        for &c in &choice {
            current[free[c]] = Some(arm);
        }
        fill_arm(unit_ids, arms, arm_idx + 1, current, out);
        for &c in &choice {
            current[free[c]] = None;
        }
        // next k-combination of free positions, lexicographic
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if choice[i] != i + free.len() - k {
                break;
            }
        }
        choice[i] += 1;
        for j in i + 1..k {
            choice[j] = choice[j - 1] + 1;
        }
    }
}

//! Run-time checks built on null treatment-control arms.
//!
//! The statistics live on the arm that should show nothing: its mean, its
//! mean absolute value, and the count of values past a threshold. Decision
//! rules turn those into reject-or-pass verdicts for the whole experiment,
//! and the confounding cascade compares arms when the pooled sample already
//! looks wrong.

mod confound;
mod power;
mod stats;

pub use confound::{diagnose_confounding, ConfoundingConfig, ConfoundingFinding};
pub use mean_test::{
    mean_test_values, sign_permutation_p, test_mean_zero, two_sample_permutation_p, MeanTest, TestMethod,
    DEFAULT_MC_REPS, DEFAULT_PERM_EXACT_CAP, DEFAULT_SIGN_EXACT_CAP,
};
pub use power::{diagnostic_power, ExperimentSetup, Flaw};
pub use stats::{abs_mean_null_tc, mean_null_tc, threshold_count};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::science::ObservedDataset;

/// Verdict of one decision rule about one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    RejectExperiment,
}

/// A pre-registered rule for rejecting an experiment from its null
/// treatment-control arm. Pick `threshold_a` on the outcome's own scale,
/// as a multiple of the noise you expect; a strict count with a threshold
/// near the noise floor rejects almost everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionRule {
    /// Reject when any value sits beyond the threshold.
    StrictCount { threshold_a: f64 },
    /// Reject when at least `fraction` of the arm sits beyond the threshold
    /// (ties resolve toward rejection).
    FractionCount {
        threshold_a: f64,
        #[serde(default = "default_fraction")]
        fraction: f64,
    },
    /// Reject when a mean-zero test on the arm comes back below alpha.
    MeanTest {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        method: TestMethod,
    },
}

fn default_fraction() -> f64 {
    0.10
}

fn default_alpha() -> f64 {
    0.05
}

impl DecisionRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            DecisionRule::StrictCount { threshold_a } => check_threshold(*threshold_a),
            DecisionRule::FractionCount { threshold_a, fraction } => {
                check_threshold(*threshold_a)?;
                if !(fraction.is_finite() && *fraction > 0.0 && *fraction <= 1.0) {
                    return Err(Error::domain("fraction_count needs a fraction in (0, 1]"));
                }
                Ok(())
            }
            DecisionRule::MeanTest { alpha, .. } => {
                if !(alpha.is_finite() && *alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::domain("mean_test needs alpha in (0, 1)"));
                }
                Ok(())
            }
        }
    }
}

fn check_threshold(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain("count rules need a finite threshold_a > 0"));
    }
    Ok(())
}

/// Apply one rule to the null treatment-control arm of a dataset.
pub fn evaluate_rule(
    dataset: &ObservedDataset,
    outcome: &str,
    null_tc: &str,
    rule: &DecisionRule,
) -> Result<Verdict> {
    rule.validate()?;
    let reject = match rule {
        DecisionRule::StrictCount { threshold_a } => threshold_count(dataset, outcome, null_tc, *threshold_a)? > 0,
        DecisionRule::FractionCount { threshold_a, fraction } => {
            let count = threshold_count(dataset, outcome, null_tc, *threshold_a)?;
            let n = dataset.arm_values(outcome, null_tc)?.len();
            // reject iff count >= fraction * n, with float slack so an exact
            // tie lands on rejection
            let cutoff = ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
            count >= cutoff
        }
        DecisionRule::MeanTest { alpha, method } => {
            let test = test_mean_zero(dataset, outcome, null_tc, *method)?;
            test.p_value < *alpha
        }
    };
    Ok(if reject { Verdict::RejectExperiment } else { Verdict::Pass })
}

/// A rule with the id it is registered under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRule {
    pub id: String,
    #[serde(flatten)]
    pub rule: DecisionRule,
}

/// Evaluate every rule; ids must be unique.
pub fn evaluate_decision_rules(
    dataset: &ObservedDataset,
    outcome: &str,
    null_tc: &str,
    rules: &[NamedRule],
) -> Result<BTreeMap<String, Verdict>> {
    let mut verdicts = BTreeMap::new();
    for named in rules {
        let verdict = evaluate_rule(dataset, outcome, null_tc, &named.rule)?;
        if verdicts.insert(named.id.clone(), verdict).is_some() {
            return Err(Error::domain(format!("duplicate decision rule id `{}`", named.id)));
        }
    }
    Ok(verdicts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicityMethod {
    None,
    Bonferroni,
}

/// Adjust p-values for running several control checks at once.
pub fn adjust_multiplicity(p_values: &[f64], method: MultiplicityMethod) -> Vec<f64> {
    match method {
        MultiplicityMethod::None => p_values.to_vec(),
        MultiplicityMethod::Bonferroni => {
            let m = p_values.len() as f64;
            p_values.iter().map(|p| (m * p).min(1.0)).collect()
        }
    }
}

/// Everything the diagnostics stage needs besides the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Which null treatment-control arm to inspect.
    pub null_treatment_control: String,
    /// Threshold for the reported exceedance count.
    pub threshold_a: f64,
    /// Method behind the reported mean-zero test.
    pub test_method: TestMethod,
    pub rules: Vec<NamedRule>,
    pub confounding: Option<ConfoundingConfig>,
}

/// The diagnostics record for one observed dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub outcome: String,
    pub null_treatment_control: String,
    pub arm_size: usize,
    pub stat_mean: f64,
    pub stat_abs_mean: f64,
    pub threshold_a: f64,
    pub stat_threshold_count: usize,
    pub test: MeanTest,
    pub verdicts: BTreeMap<String, Verdict>,
    pub confounding: Option<ConfoundingFinding>,
}

impl DiagnosticReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| *v == Verdict::Pass)
    }
}

/// Compute the three arm statistics, the mean-zero test, every rule's
/// verdict, and (when configured) the confounding cascade.
pub fn run_diagnostics(
    dataset: &ObservedDataset,
    outcome: &str,
    cfg: &DiagnosticsConfig,
) -> Result<DiagnosticReport> {
    check_threshold(cfg.threshold_a)?;
    let null_tc = cfg.null_treatment_control.as_str();
    let arm_size = dataset.arm_values(outcome, null_tc)?.len();
    if arm_size == 0 {
        return Err(Error::EmptyArm(null_tc.into()));
    }
    let confounding = match &cfg.confounding {
        Some(ccfg) => Some(diagnose_confounding(dataset, ccfg)?),
        None => None,
    };
    Ok(DiagnosticReport {
        outcome: outcome.into(),
        null_treatment_control: null_tc.into(),
        arm_size,
        stat_mean: mean_null_tc(dataset, outcome, null_tc)?,
        stat_abs_mean: abs_mean_null_tc(dataset, outcome, null_tc)?,
        threshold_a: cfg.threshold_a,
        stat_threshold_count: threshold_count(dataset, outcome, null_tc, cfg.threshold_a)?,
        test: test_mean_zero(dataset, outcome, null_tc, cfg.test_method)?,
        verdicts: evaluate_decision_rules(dataset, outcome, null_tc, &cfg.rules)?,
        confounding,
    })
}

#[cfg(test)]
pub(crate) fn dataset_from_arms(arms: &[(&str, &[f64])], outcome: &str, seed: u64) -> ObservedDataset {
    let mut w = BTreeMap::new();
    let mut measured = BTreeMap::new();
    let mut i = 0usize;
    for (arm, values) in arms {
        for v in *values {
            let id = format!("u{i:03}");
            w.insert(id.clone(), arm.to_string());
            measured.insert((id, outcome.to_string()), *v);
            i += 1;
        }
    }
    ObservedDataset {
        assignment: crate::science::Assignment { w, mechanism_tag: "fixed".into() },
        measured,
        measurement_time: None,
        seed,
        scenario_tag: "fixture".into(),
    }
}

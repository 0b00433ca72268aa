//! Run reports: everything one invocation computed, in a machine-readable
//! JSON form and a human summary. Both renderings are deterministic down to
//! the byte for a fixed scenario, seed, and command.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::controls::ControlValidationReport;
use crate::diagnostics::{DiagnosticReport, TestMethod, Verdict};
use crate::pretrial::{SubgroupCall, SubgroupReport, TimingRecommendation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceboEstimate {
    pub outcome: String,
    pub blinded_arm: String,
    pub unblinded_arm: String,
    /// Mean(blinded arm) - mean(unblinded arm).
    pub effect: f64,
}

/// What one pre-trial protocol produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PretrialOutput {
    Timing(TimingRecommendation),
    Subgroups(SubgroupReport),
    Placebo(PlaceboEstimate),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCell {
    pub arm_size: usize,
    pub flaw_magnitude: f64,
    pub power: f64,
    /// Monte Carlo standard error sqrt(p (1 - p) / replications).
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTable {
    pub rule: String,
    pub replications: usize,
    /// Row-major over (arm size, flaw magnitude) in declared order.
    pub cells: Vec<PowerCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub command: String,
    pub scenario_name: String,
    /// SHA-256 of the scenario text this run was parsed from.
    pub scenario_digest: String,
    pub seed: u64,
    pub control_validation: BTreeMap<String, ControlValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub pretrial: BTreeMap<String, PretrialOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerTable>,
    pub all_rules_pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunReport {
    /// 0 when the run completed and every decision rule passed, 2 when at
    /// least one rule rejected the experiment. (Operational failures never
    /// reach a report; they exit 1.)
    pub fn exit_status(&self) -> i32 {
        if self.all_rules_pass {
            0
        } else {
            2
        }
    }

    pub fn to_machine(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn to_summary(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "{} v{} on scenario `{}`", self.command, self.tool_version, self.scenario_name);
        let _ = writeln!(w, "scenario digest {}  seed {}", &self.scenario_digest[..12], self.seed);

        if !self.control_validation.is_empty() {
            let _ = writeln!(w, "\ncontrol declarations checked against the science table:");
            for (id, rep) in &self.control_validation {
                let n = rep.per_unit.len();
                let holding = rep.per_unit.values().filter(|u| u.holds).count();
                let mark = if rep.holds_for_all { "ok " } else { "FAIL" };
                let _ = writeln!(w, "  [{mark}] {id}: holds for {holding}/{n} units");
            }
        }

        if let Some(d) = &self.diagnostics {
            let _ = writeln!(
                w,
                "\ndiagnostics on outcome `{}`, arm `{}` (n = {}):",
                d.outcome, d.null_treatment_control, d.arm_size
            );
            let _ = writeln!(
                w,
                "  mean {:+.4}   abs mean {:.4}   N(|y| > {}) = {}",
                d.stat_mean, d.stat_abs_mean, d.threshold_a, d.stat_threshold_count
            );
            let exact = if d.test.exact { "exact" } else { "monte carlo" };
            let _ = writeln!(
                w,
                "  mean-zero test ({}, {exact}): statistic {:+.4}, p = {:.4}",
                method_name(d.test.method),
                d.test.statistic,
                d.test.p_value
            );
            if let Some(c) = &d.confounding {
                let flag = if c.pooled_flagged { "flagged" } else { "not flagged" };
                let _ = writeln!(w, "  confounding stage 1: pooled mean {:+.4}, p = {:.4} ({flag})", c.pooled_mean, c.pooled_p);
                if let (Some(diff), Some(p)) = (c.arm_difference, c.arm_difference_p) {
                    let _ = writeln!(w, "  confounding stage 2: arm difference {diff:+.4}, p = {p:.4}");
                }
            }
            if !d.verdicts.is_empty() {
                let _ = writeln!(w, "  decision rules:");
                for (id, v) in &d.verdicts {
                    let text = match v {
                        Verdict::Pass => "pass",
                        Verdict::RejectExperiment => "REJECT EXPERIMENT",
                    };
                    let _ = writeln!(w, "    {id}: {text}");
                }
            }
        }

        for (id, out) in &self.pretrial {
            match out {
                PretrialOutput::Timing(rec) => {
                    let _ = writeln!(w, "\npre-trial `{id}` (timing):");
                    let _ = writeln!(w, "  measure at t = {}", rec.time);
                    if let Some((lo, hi)) = rec.window {
                        let _ = writeln!(w, "  acceptable window [{lo}, {hi}]");
                    }
                    let _ = writeln!(w, "  peak mean |response| = {:.4}", rec.peak_mean_response);
                    let _ = writeln!(w, "  caveat: {}", rec.assumption);
                }
                PretrialOutput::Subgroups(sub) => {
                    let _ = writeln!(w, "\npre-trial `{id}` (subgroups):");
                    summarize_subgroups(w, sub);
                }
                PretrialOutput::Placebo(p) => {
                    let _ = writeln!(w, "\npre-trial `{id}` (placebo):");
                    let _ = writeln!(
                        w,
                        "  {} changes by {:+.4} when `{}` is swapped for `{}`",
                        p.outcome, p.effect, p.blinded_arm, p.unblinded_arm
                    );
                }
            }
        }

        if let Some(p) = &self.power {
            let _ = writeln!(w, "\npower of rule `{}` ({} replications per cell):", p.rule, p.replications);
            let _ = writeln!(w, "  {:>8}  {:>9}  {:>6}  {:>6}", "arm_size", "flaw", "power", "mc_se");
            for c in &p.cells {
                let _ = writeln!(
                    w,
                    "  {:>8}  {:>9.3}  {:>6.3}  {:>6.3}",
                    c.arm_size, c.flaw_magnitude, c.power, c.mc_se
                );
            }
        }

        if !self.notes.is_empty() {
            let _ = writeln!(w, "\nnotes:");
            for n in &self.notes {
                let _ = writeln!(w, "  - {n}");
            }
        }

        let verdict = if self.all_rules_pass {
            "all decision rules pass"
        } else {
            "at least one decision rule rejects the experiment"
        };
        let _ = writeln!(w, "\nresult: {verdict}");
        s
    }
}

fn summarize_subgroups(w: &mut String, sub: &SubgroupReport) {
    let count = |call: SubgroupCall| sub.per_unit_calls.values().filter(|c| **c == call).count();
    let _ = writeln!(
        w,
        "  calls: {} responders, {} nonresponders, {} compliers, {} noncompliers, {} indeterminate",
        count(SubgroupCall::Responder),
        count(SubgroupCall::Nonresponder),
        count(SubgroupCall::Complier),
        count(SubgroupCall::Noncomplier),
        count(SubgroupCall::Indeterminate),
    );
    let _ = writeln!(w, "  called fraction: {:.4}", sub.responder_fraction);
    let fmt = |v: Option<f64>| match v {
        Some(v) => format!("{v:+.4}"),
        None => "n/a (empty group)".into(),
    };
    let _ = writeln!(
        w,
        "  effects: population {}, responders {}, nonresponders {}",
        fmt(sub.population_effect),
        fmt(sub.responder_effect),
        fmt(sub.nonresponder_effect)
    );
    if !sub.partial_units.is_empty() {
        let _ = writeln!(w, "  partial units: {}", sub.partial_units.join(", "));
    }
    for warning in &sub.warnings {
        let _ = writeln!(w, "  warning: {warning}");
    }
}

fn method_name(method: TestMethod) -> &'static str {
    match method {
        TestMethod::TOneSample => "t_one_sample",
        TestMethod::SignPermutation => "sign_permutation",
    }
}

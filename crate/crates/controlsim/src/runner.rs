//! Scenario execution: each function runs one subcommand's work against a
//! parsed scenario and returns a `RunReport`.

use std::collections::BTreeMap;

use crate::controls::validate_control;
use crate::diagnostics::{diagnostic_power, run_diagnostics, ExperimentSetup, Flaw};
use crate::error::{Error, Result};
use crate::pretrial::{
    identify_compliers, identify_responders, optimal_timing, simulate_crossover,
    ProtocolPurpose, SubgroupCall, TimingCriterion,
};
use crate::report::{PlaceboEstimate, PowerCell, PowerTable, PretrialOutput, RunReport};
use crate::scenario::{ExclusionList, Scenario};
use crate::science::ObservedDataset;
use crate::sim::{simulate_experiment, simulate_timecourse, AssignmentMechanism, FactorEffect};

fn base_report(scenario: &Scenario, command: &str, seed: u64) -> RunReport {
    RunReport {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        scenario_name: scenario.name.clone(),
        scenario_digest: scenario.digest(),
        seed,
        control_validation: BTreeMap::new(),
        diagnostics: None,
        pretrial: BTreeMap::new(),
        power: None,
        all_rules_pass: true,
        notes: Vec::new(),
    }
}

fn validate_controls_into(report: &mut RunReport, scenario: &Scenario) -> Result<()> {
    for control in &scenario.controls {
        let check = validate_control(&scenario.table, &control.decl)?;
        if !check.holds_for_all {
            report.notes.push(format!(
                "control `{}` does not hold for every unit of the science table \
                 (fraction holding {:.3}); the declaration and the table disagree",
                control.id, check.fraction_holding
            ));
        }
        report.control_validation.insert(control.id.clone(), check);
    }
    Ok(())
}

/// Check every control declaration against the science table without
/// simulating anything.
pub fn run_validate(scenario: &Scenario) -> Result<RunReport> {
    let mut report = base_report(scenario, "validate", scenario.seed);
    validate_controls_into(&mut report, scenario)?;
    Ok(report)
}

fn observe(scenario: &Scenario, seed: u64) -> Result<ObservedDataset> {
    simulate_experiment(
        &scenario.table,
        &scenario.mechanism,
        &scenario.factor_effects,
        &scenario.noise,
        &scenario.measured_outcomes,
        seed,
        &scenario.name,
    )
}

fn simulate_and_diagnose(scenario: &Scenario, command: &str, seed: Option<u64>) -> Result<RunReport> {
    let seed = seed.unwrap_or(scenario.seed);
    let mut report = base_report(scenario, command, seed);
    validate_controls_into(&mut report, scenario)?;
    let dataset = observe(scenario, seed)?;
    match &scenario.diagnostics {
        None => report.notes.push(
            "no null treatment-control arm is declared, so no within-arm diagnostics can run".into(),
        ),
        Some(cfg) => {
            let arm = &cfg.null_treatment_control;
            if dataset.assignment.w.values().any(|a| a == arm) {
                let primary = scenario.table.primary_outcome().id.clone();
                report.diagnostics = Some(run_diagnostics(&dataset, &primary, cfg)?);
            } else {
                report.notes.push(format!(
                    "assignment left arm `{arm}` empty this draw, so diagnostics were skipped"
                ));
            }
        }
    }
    report.all_rules_pass = report.diagnostics.as_ref().is_none_or(|d| d.all_pass());
    Ok(report)
}

/// Draw one assignment, measure the observed outcomes, and run every
/// configured diagnostic and decision rule on the result.
pub fn run_simulate(scenario: &Scenario, seed: Option<u64>) -> Result<RunReport> {
    simulate_and_diagnose(scenario, "simulate", seed)
}

/// Same computation as `run_simulate` under the diagnose name: the intent is
/// reading the diagnostics, not the dataset.
pub fn run_diagnose(scenario: &Scenario, seed: Option<u64>) -> Result<RunReport> {
    simulate_and_diagnose(scenario, "diagnose", seed)
}

/// Run one pre-trial protocol. For responder and complier protocols the
/// second return value carries the units the protocol would exclude; it is
/// `None` for unregistered protocols, which may be inspected but can never
/// produce an exclusion list.
pub fn run_pretrial(
    scenario: &Scenario,
    protocol_id: &str,
    seed: Option<u64>,
) -> Result<(RunReport, Option<ExclusionList>)> {
    let protocol = scenario.protocol(protocol_id)?;
    let seed = seed.unwrap_or(scenario.seed);
    let mut report = base_report(scenario, "pretrial", seed);

    let (output, excluded) = match protocol.purpose {
        ProtocolPurpose::Timing => {
            let plan = scenario
                .timecourse
                .as_ref()
                .ok_or_else(|| Error::Protocol(format!("protocol `{protocol_id}` needs a [timecourse] section")))?;
            let pilot = simulate_timecourse(
                &scenario.table,
                &plan.curves,
                &plan.treatment,
                &plan.outcome,
                &plan.times,
                &plan.noise,
                seed,
            )?;
            let rec = optimal_timing(&pilot, &TimingCriterion::PeakOfMean)?;
            (PretrialOutput::Timing(rec), None)
        }
        ProtocolPurpose::Responders => {
            let data = simulate_crossover(
                &scenario.table,
                &protocol.controls,
                protocol.per_unit_replicates,
                &scenario.noise,
                seed,
            )?;
            let sub = identify_responders(&data, protocol)?;
            let excluded = called_units(&sub.per_unit_calls, SubgroupCall::Nonresponder);
            (PretrialOutput::Subgroups(sub), Some(excluded))
        }
        ProtocolPurpose::Compliers => {
            let dataset = observe(scenario, seed)?;
            let sub = identify_compliers(&dataset, &protocol.controls[0].decl, protocol)?;
            let excluded = called_units(&sub.per_unit_calls, SubgroupCall::Noncomplier);
            (PretrialOutput::Subgroups(sub), Some(excluded))
        }
        ProtocolPurpose::Placebo => {
            let plan = scenario
                .placebo
                .as_ref()
                .ok_or_else(|| Error::Protocol(format!("protocol `{protocol_id}` needs a [placebo] section")))?;
            let dataset = observe(scenario, seed)?;
            let effect =
                crate::pretrial::placebo_effect(&dataset, &plan.outcome, &plan.blinded_arm, &plan.unblinded_arm)?;
            let estimate = PlaceboEstimate {
                outcome: plan.outcome.clone(),
                blinded_arm: plan.blinded_arm.clone(),
                unblinded_arm: plan.unblinded_arm.clone(),
                effect,
            };
            (PretrialOutput::Placebo(estimate), None)
        }
    };
    report.pretrial.insert(protocol.id.clone(), output);

    let exclusions = match excluded {
        Some(units) if protocol.registered => Some(ExclusionList::new(protocol, units)?),
        Some(units) => {
            report.notes.push(format!(
                "protocol `{}` is not registered: its {} exclusions are reported here but no \
                 exclusion list can be produced",
                protocol.id,
                units.len()
            ));
            None
        }
        None => None,
    };
    Ok((report, exclusions))
}

fn called_units(calls: &BTreeMap<String, SubgroupCall>, which: SubgroupCall) -> Vec<String> {
    calls.iter().filter(|(_, c)| **c == which).map(|(u, _)| u.clone()).collect()
}

/// Sweep the scenario's power grid: for every (arm size, flaw magnitude)
/// cell, rebuild the table at that size, inject the flaw, and estimate the
/// probability that the chosen rule rejects. Common random numbers across
/// cells make the grid monotone comparisons meaningful.
pub fn run_power(scenario: &Scenario, seed: Option<u64>, replications: Option<usize>) -> Result<RunReport> {
    let plan = scenario
        .power
        .as_ref()
        .ok_or_else(|| Error::domain("scenario has no [power] section"))?;
    let diag = scenario
        .diagnostics
        .as_ref()
        .ok_or_else(|| Error::domain("power needs a null treatment-control arm to diagnose"))?;
    let rule = scenario.rule(&plan.rule)?.rule.clone();
    let seed = seed.unwrap_or(scenario.seed);
    let replications = replications.unwrap_or(plan.replications);
    let mut report = base_report(scenario, "power", seed);

    let AssignmentMechanism::CompleteRandomization { arm_sizes } = &scenario.mechanism else {
        return Err(Error::domain("power grids need complete_randomization assignment"));
    };
    let arms: Vec<String> = arm_sizes.keys().cloned().collect();
    let primary = scenario.table.primary_outcome().id.clone();

    let mut cells = Vec::with_capacity(plan.arm_sizes.len() * plan.flaw_magnitudes.len());
    for &arm_size in &plan.arm_sizes {
        let table = scenario.regenerate_table(arm_size * arms.len())?;
        let mechanism = AssignmentMechanism::CompleteRandomization {
            arm_sizes: arms.iter().map(|a| (a.clone(), arm_size)).collect(),
        };
        let setup = ExperimentSetup {
            table,
            mechanism,
            effects: scenario.factor_effects.clone(),
            noise: scenario.noise.clone(),
            measured_outcomes: scenario.measured_outcomes.clone(),
            outcome: primary.clone(),
            null_treatment_control: diag.null_treatment_control.clone(),
            scenario_tag: scenario.name.clone(),
        };
        for &magnitude in &plan.flaw_magnitudes {
            let flaw = Flaw::Factor(FactorEffect {
                factor: plan.flaw_factor.clone(),
                level: plan.flaw_level.clone(),
                outcome: plan.flaw_outcome.clone(),
                shift: magnitude,
            });
            let power = diagnostic_power(&setup, &rule, &flaw, replications, seed)?;
            let mc_se = (power * (1.0 - power) / replications as f64).sqrt();
            cells.push(PowerCell { arm_size, flaw_magnitude: magnitude, power, mc_se });
        }
    }
    report.power = Some(PowerTable { rule: plan.rule.clone(), replications, cells });
    Ok(report)
}

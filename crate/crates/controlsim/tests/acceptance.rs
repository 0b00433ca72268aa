//! Release gate: one test per acceptance property, each pinned at its
//! stated tolerance. `cargo test --test acceptance` prints one pass/fail
//! line per property.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use controlsim::controls::{validate_control, ControlDeclaration, ControlKind, NamedControl};
use controlsim::diagnostics::{
    abs_mean_null_tc, diagnose_confounding, diagnostic_power, evaluate_rule, mean_null_tc,
    sign_permutation_p, threshold_count, ConfoundingConfig, DecisionRule, ExperimentSetup, Flaw,
    TestMethod, Verdict,
};
use controlsim::pretrial::{
    decompose_effect, identify_compliers, identify_responders, optimal_timing, placebo_effect,
    simulate_crossover, PretrialProtocol, ProtocolPurpose, ResponderCallMode, SubgroupCall,
    TimingCriterion,
};
use controlsim::rng::StreamKey;
use controlsim::runner::{run_power, run_simulate};
use controlsim::scenario::{load_scenario, parse_scenario};
use controlsim::sim::{
    apply_factor_effects, enumerate_assignments, simulate_experiment, simulate_timecourse,
    AssignmentMechanism, FactorEffect, NoiseModel, ResponseCurve,
};
use controlsim::{
    Assignment, ObservedDataset, OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind,
    TreatmentLevel, Unit,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn cr(arms: &[(&str, usize)]) -> AssignmentMechanism {
    AssignmentMechanism::CompleteRandomization {
        arm_sizes: arms.iter().map(|(a, n)| (a.to_string(), *n)).collect(),
    }
}

fn gaussian(outcome: &str, sd: f64) -> NoiseModel {
    NoiseModel::AdditiveGaussian { sigma: BTreeMap::from([(outcome.to_string(), sd)]) }
}

fn unit_index(u: &Unit) -> usize {
    u.id.trim_start_matches(|c: char| c.is_alphabetic()).parse().unwrap()
}

/// Reveal each unit's assigned column without measurement noise.
fn noiseless_dataset(table: &ScienceTable, a: &Assignment, outcomes: &[&str]) -> ObservedDataset {
    let mut measured = BTreeMap::new();
    for u in table.units() {
        for o in outcomes {
            let v = table.observed_outcome(a, &u.id, o).unwrap();
            measured.insert((u.id.clone(), o.to_string()), v);
        }
    }
    ObservedDataset {
        assignment: a.clone(),
        measured,
        measurement_time: None,
        seed: 0,
        scenario_tag: "enumeration".into(),
    }
}

/// A dataset that is nothing but named arms holding given values.
fn arm_dataset(arms: &[(&str, &[f64])], outcome: &str) -> ObservedDataset {
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
        assignment: Assignment { w, mechanism_tag: "fixed".into() },
        measured,
        measurement_time: None,
        seed: 0,
        scenario_tag: "fixture".into(),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Mean difference-in-means over every complete-randomization split equals
/// the table's average effect, to 1e-12, on twenty random tables.
#[test]
fn a01_difference_in_means_is_unbiased_over_all_assignments() {
    for case in 0..20u64 {
        let n = [4usize, 6, 8][case as usize % 3];
        let mut rng = StreamKey::new(90).tag("unbiased").index(case).rng();
        let draws: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let units: Vec<Unit> = (0..n).map(|i| Unit::new(&format!("u{i}"))).collect();
        let table = ScienceTable::new(
            units,
            vec![OutcomeDef::new("y", "", "", OutcomeRole::Primary)],
            vec![
                TreatmentLevel::new("at", "", TreatmentKind::Active),
                TreatmentLevel::new("ct", "", TreatmentKind::ControlTreatment),
            ],
            |u, _, t| {
                let (a, c) = draws[unit_index(u)];
                if t.id == "at" {
                    a
                } else {
                    c
                }
            },
        )
        .unwrap();

        let mech = cr(&[("at", n / 2), ("ct", n / 2)]);
        let all = enumerate_assignments(&table, &mech, None).unwrap();
        let dims: Vec<f64> = all
            .iter()
            .map(|a| noiseless_dataset(&table, a, &["y"]).difference_in_means("y", "at", "ct").unwrap())
            .collect();
        let tau = table.average_effect("y", "at", "ct").unwrap();
        let gap = (mean(&dims) - tau).abs();
        assert!(gap <= 1e-12, "case {case}: enumeration mean off by {gap}");
    }
}

/// Each of the six control kinds holds on a table built to satisfy it, and
/// perturbing one unit past the band flips exactly that unit's call.
#[test]
fn a02_six_control_kinds_validate_and_flip_per_unit() {
    // coffee raises bp by 8 and electrolytes by 2; decaf only the
    // electrolytes; the reference drug raises bp by 12; flexibility is
    // untouched by everything
    let units: Vec<Unit> = (0..5).map(|i| Unit::new(&format!("u{i}"))).collect();
    let table = ScienceTable::new(
        units,
        vec![
            OutcomeDef::new("bp", "", "mmHg", OutcomeRole::Primary),
            OutcomeDef::new("flex", "", "cm", OutcomeRole::Secondary),
            OutcomeDef::new("lytes", "", "mmol/L", OutcomeRole::Secondary),
        ],
        vec![
            TreatmentLevel::new("coffee", "", TreatmentKind::Active),
            TreatmentLevel::new("decaf", "", TreatmentKind::ControlTreatment),
            TreatmentLevel::new("nothing", "", TreatmentKind::NullTreatmentControl),
            TreatmentLevel::new("drug", "", TreatmentKind::NonNullTreatmentControl),
        ],
        |_, o, t| match (o.id.as_str(), t.id.as_str()) {
            ("bp", "coffee") => 8.0,
            ("bp", "drug") => 12.0,
            ("lytes", "coffee") | ("lytes", "decaf") => 2.0,
            _ => 0.0,
        },
    )
    .unwrap();

    // (declaration, cell to corrupt, value that leaves the band)
    let cases: Vec<(ControlDeclaration, &str, &str, &str, f64)> = vec![
        (
            ControlDeclaration::new(ControlKind::NullTreatmentControl, "bp")
                .with_treatment("nothing")
                .with_epsilon(0.5),
            "u2", "bp", "nothing", 0.6,
        ),
        (
            ControlDeclaration::new(ControlKind::NonNullTreatmentControl, "bp")
                .with_treatment("drug")
                .with_min_magnitude(5.0),
            "u0", "bp", "drug", 3.0,
        ),
        (
            ControlDeclaration::new(ControlKind::NullOutcomeControl, "flex")
                .with_treatment("coffee")
                .with_epsilon(0.5),
            "u4", "flex", "coffee", 1.0,
        ),
        (
            ControlDeclaration::new(ControlKind::NonNullOutcomeControl, "lytes")
                .with_treatment("coffee")
                .with_min_magnitude(1.0),
            "u1", "lytes", "coffee", 0.5,
        ),
        (
            ControlDeclaration::new(ControlKind::NullContrastControl, "lytes")
                .with_contrast("coffee", "decaf")
                .with_epsilon(0.5),
            "u3", "lytes", "coffee", 3.0,
        ),
        (
            ControlDeclaration::new(ControlKind::NonNullContrastControl, "bp")
                .with_contrast("coffee", "decaf")
                .with_min_magnitude(2.0),
            "u1", "bp", "coffee", 1.0,
        ),
    ];
    assert_eq!(
        cases.iter().map(|(d, ..)| d.kind).collect::<BTreeSet<_>>().len(),
        6,
        "the cases must cover all six kinds"
    );

    for (decl, unit, outcome, treatment, bad) in cases {
        let clean = validate_control(&table, &decl).unwrap();
        assert!(clean.holds_for_all, "{:?} should hold on the constructed table", decl.kind);
        assert!(clean.per_unit.values().all(|c| c.holds));

        let broken = table.with_value(unit, outcome, treatment, bad).unwrap();
        let report = validate_control(&broken, &decl).unwrap();
        assert!(!report.holds_for_all);
        for (id, check) in &report.per_unit {
            assert_eq!(check.holds, id != unit, "{:?}: wrong call for `{id}`", decl.kind);
        }
        assert_eq!(report.fraction_holding, 4.0 / 5.0);
    }
}

/// A stress shift of 4 on a random half of the units biases the
/// no-intervention arm's mean by 2, leaves the enumeration mean of the
/// difference in means on the true average effect, and strictly widens the
/// enumeration variance.
#[test]
fn a03_waiting_room_shift_biases_the_null_arm_but_not_the_mean() {
    let n = 12usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut StreamKey::new(31).tag("room-split").rng());
    let stressed: BTreeSet<usize> = order[..n / 2].iter().copied().collect();

    let mut rng = StreamKey::new(31).tag("baseline").rng();
    let at_values: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..3.0)).collect();
    let units: Vec<Unit> = (0..n)
        .map(|i| {
            Unit::new(&format!("u{i:02}"))
                .with_factor("room", if stressed.contains(&i) { "stress" } else { "calm" })
        })
        .collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("y", "", "", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("nt", "", TreatmentKind::NullTreatmentControl),
        ],
        |u, _, t| if t.id == "at" { at_values[unit_index(u)] } else { 0.0 },
    )
    .unwrap();
    let mech = cr(&[("at", n / 2), ("nt", n / 2)]);
    let shift =
        vec![FactorEffect { factor: "room".into(), level: "stress".into(), outcome: "y".into(), shift: 4.0 }];

    // (a) replicated with unit-sd noise, the null arm's mean sits at 2
    let reps = 10_000u64;
    let key = StreamKey::new(31).tag("replicate");
    let means: Vec<f64> = (0..reps)
        .map(|r| {
            let data = simulate_experiment(
                &table,
                &mech,
                &shift,
                &gaussian("y", 1.0),
                &["y".into()],
                key.index(r).seed(),
                "waiting-room",
            )
            .unwrap();
            mean_null_tc(&data, "y", "nt").unwrap()
        })
        .collect();
    let avg = mean(&means);
    let mc_se = sample_sd(&means) / (reps as f64).sqrt();
    assert!((avg - 2.0).abs() <= 4.0 * mc_se, "biased arm mean {avg}, MC se {mc_se}");

    // (b) noiseless enumeration: the estimator is still centered on the
    // average effect, which the uniform-column shift does not move
    let flawed = apply_factor_effects(&table, &shift).unwrap();
    let dims_of = |t: &ScienceTable| -> Vec<f64> {
        enumerate_assignments(t, &mech, None)
            .unwrap()
            .iter()
            .map(|a| noiseless_dataset(t, a, &["y"]).difference_in_means("y", "at", "nt").unwrap())
            .collect()
    };
    let flawed_dims = dims_of(&flawed);
    let tau_flawed = flawed.average_effect("y", "at", "nt").unwrap();
    let tau_base = table.average_effect("y", "at", "nt").unwrap();
    assert!((mean(&flawed_dims) - tau_flawed).abs() <= 1e-12);
    assert!((tau_flawed - tau_base).abs() <= 1e-12);

    // (c) what the flaw does buy is spread
    let base_dims = dims_of(&table);
    let var = |xs: &[f64]| {
        let m = mean(xs);
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
    };
    assert!(
        var(&flawed_dims) > var(&base_dims),
        "flawed variance {} must exceed clean variance {}",
        var(&flawed_dims),
        var(&base_dims)
    );
}

/// With the stress factor perfectly tied to the active arm, the cascade's
/// second stage reads the shift off the null outcome exactly, and the
/// difference in means is biased by exactly that shift.
#[test]
fn a04_perfect_confounding_is_measured_exactly_by_stage_two() {
    let n = 12usize;
    let units: Vec<Unit> = (0..n)
        .map(|i| Unit::new(&format!("u{i:02}")).with_factor("room", if i < n / 2 { "stress" } else { "calm" }))
        .collect();
    let table = ScienceTable::new(
        units,
        vec![
            OutcomeDef::new("y", "", "", OutcomeRole::Primary),
            OutcomeDef::new("z", "", "", OutcomeRole::Secondary),
        ],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("ct", "", TreatmentKind::ControlTreatment),
        ],
        |_, o, t| if (o.id.as_str(), t.id.as_str()) == ("y", "at") { 1.0 } else { 0.0 },
    )
    .unwrap();

    // stressed units are assigned active with probability one
    let row = |at: f64, ct: f64| BTreeMap::from([("at".to_string(), at), ("ct".to_string(), ct)]);
    let mech = AssignmentMechanism::FactorConfounded {
        factor: "room".into(),
        arm_probs: BTreeMap::from([("stress".to_string(), row(1.0, 0.0)), ("calm".to_string(), row(0.0, 1.0))]),
    };
    let delta = 4.0;
    let effects = vec![
        FactorEffect { factor: "room".into(), level: "stress".into(), outcome: "y".into(), shift: delta },
        FactorEffect { factor: "room".into(), level: "stress".into(), outcome: "z".into(), shift: delta },
    ];
    let data = simulate_experiment(
        &table,
        &mech,
        &effects,
        &NoiseModel::None,
        &["y".into(), "z".into()],
        17,
        "confounded",
    )
    .unwrap();

    let finding = diagnose_confounding(
        &data,
        &ConfoundingConfig {
            outcome: "z".into(),
            active: "at".into(),
            control: "ct".into(),
            alpha: 0.05,
            method: TestMethod::SignPermutation,
        },
    )
    .unwrap();
    assert_eq!(finding.pooled_n, n);
    // six 4s and six 0s: only the 2 * 2^6 sign patterns keeping all six
    // nonzero values on one side reach |sum| = 24
    assert_eq!(finding.pooled_p, 128.0 / 4096.0);
    assert!(finding.pooled_flagged);
    assert_eq!(finding.arm_difference, Some(delta));
    assert!(finding.arm_difference_p.unwrap() < 0.05);
    assert!(finding.implicates_assignment(0.05));

    let dim = data.difference_in_means("y", "at", "ct").unwrap();
    let tau = table.average_effect("y", "at", "ct").unwrap();
    assert_eq!(dim - tau, delta, "estimator bias must equal the confounded shift exactly");
}

/// The fixture arm {0.1, -0.1, 0.3} pins all three statistics, and the
/// fraction rule's boundary sits at one exceedance per ten units.
#[test]
fn a05_arm_statistics_and_fraction_rule_boundary() {
    let data = arm_dataset(&[("nt", &[0.1, -0.1, 0.3])], "y");
    assert!((mean_null_tc(&data, "y", "nt").unwrap() - 0.1).abs() <= 1e-12);
    assert!((abs_mean_null_tc(&data, "y", "nt").unwrap() - 0.5 / 3.0).abs() <= 1e-12);
    assert_eq!(threshold_count(&data, "y", "nt", 0.2).unwrap(), 1);

    let rule = DecisionRule::FractionCount { threshold_a: 0.2, fraction: 0.10 };
    let mut ten = vec![0.0; 9];
    ten.push(0.5);
    let data10 = arm_dataset(&[("nt", &ten)], "y");
    // one of ten is exactly the ten-percent boundary: the tie rejects
    assert_eq!(evaluate_rule(&data10, "y", "nt", &rule).unwrap(), Verdict::RejectExperiment);

    let mut twenty = vec![0.0; 19];
    twenty.push(0.5);
    let data20 = arm_dataset(&[("nt", &twenty)], "y");
    // one of twenty sits below the line and passes
    assert_eq!(evaluate_rule(&data20, "y", "nt", &rule).unwrap(), Verdict::Pass);
    // while the strict rule still rejects any exceedance at all
    let strict = DecisionRule::StrictCount { threshold_a: 0.2 };
    assert_eq!(evaluate_rule(&data20, "y", "nt", &strict).unwrap(), Verdict::RejectExperiment);
}

/// On a sound design both mean-test methods reject at their nominal rate,
/// and the small-sample sign permutation matches full enumeration.
#[test]
fn a06_mean_tests_are_calibrated_and_match_the_enumeration_oracle() {
    let n_per_arm = 10usize;
    let units: Vec<Unit> = (0..2 * n_per_arm).map(|i| Unit::new(&format!("u{i:02}"))).collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("y", "", "", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("nt", "", TreatmentKind::NullTreatmentControl),
        ],
        |_, _, _| 0.0,
    )
    .unwrap();
    let setup = ExperimentSetup {
        table,
        mechanism: cr(&[("at", n_per_arm), ("nt", n_per_arm)]),
        effects: Vec::new(),
        noise: gaussian("y", 1.0),
        measured_outcomes: vec!["y".into()],
        outcome: "y".into(),
        null_treatment_control: "nt".into(),
        scenario_tag: "calibration".into(),
    };
    for method in [TestMethod::TOneSample, TestMethod::SignPermutation] {
        let rule = DecisionRule::MeanTest { alpha: 0.05, method };
        let rate = diagnostic_power(&setup, &rule, &Flaw::None, 10_000, 29).unwrap();
        assert!((rate - 0.05).abs() <= 0.01, "{method:?} false-rejection rate {rate}");
    }

    // {1,1,1,1}: |sum| = 4 needs all four signs equal, 2 of 16 patterns
    let values = [1.0, 1.0, 1.0, 1.0];
    let hits = (0..16u32)
        .filter(|mask| {
            let s: f64 =
                values.iter().enumerate().map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -v }).sum();
            s.abs() >= 4.0
        })
        .count();
    let oracle = hits as f64 / 16.0;
    let (p, exact) = sign_permutation_p(&values, StreamKey::new(0));
    assert!(exact);
    assert_eq!(p, oracle);
    assert_eq!(p, 0.125);
}

/// Noiseless pre-trials recover the constructed ground truth exactly:
/// responder and complier calls, the peak measurement time, and the
/// disclosure shift (the latter also under noise, within Monte Carlo error).
#[test]
fn a07_pretrial_procedures_recover_constructed_truths() {
    // responders: 20 of 30 units move reaction time by 3 under coffee
    let n = 30usize;
    let units: Vec<Unit> =
        (0..n).map(|i| Unit::new(&format!("u{i:02}")).with_responder_truth(i % 3 != 2)).collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("rt", "", "ms", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("ct", "", TreatmentKind::ControlTreatment),
        ],
        |u, _, t| if t.id == "at" && u.responder_truth == Some(true) { 3.0 } else { 0.0 },
    )
    .unwrap();
    let controls = vec![NamedControl::new(
        "rt_moves",
        ControlDeclaration::new(ControlKind::NonNullContrastControl, "rt")
            .with_contrast("at", "ct")
            .with_min_magnitude(1.0),
    )];
    let protocol = PretrialProtocol {
        id: "screen".into(),
        purpose: ProtocolPurpose::Responders,
        controls: controls.clone(),
        per_unit_replicates: 2,
        decision_threshold: 1.0,
        alpha: 0.05,
        call_mode: ResponderCallMode::ThresholdBand,
        registered: true,
    };
    let pilot = simulate_crossover(&table, &controls, 2, &NoiseModel::None, 3).unwrap();
    let report = identify_responders(&pilot, &protocol).unwrap();
    for u in table.units() {
        let want =
            if u.responder_truth.unwrap() { SubgroupCall::Responder } else { SubgroupCall::Nonresponder };
        assert_eq!(report.per_unit_calls[&u.id], want, "responder call for {}", u.id);
    }
    assert_eq!(report.responder_fraction, 20.0 / 30.0);
    assert_eq!(report.responder_effect, Some(3.0));
    assert_eq!(report.nonresponder_effect, Some(0.0));

    // compliers: 6 of 30 never take the treatment, so the electrolyte
    // outcome that coffee must move stays put for exactly those units
    let units: Vec<Unit> =
        (0..n).map(|i| Unit::new(&format!("u{i:02}")).with_complier_truth(i % 5 != 0)).collect();
    let table = ScienceTable::new(
        units,
        vec![
            OutcomeDef::new("rt", "", "ms", OutcomeRole::Primary),
            OutcomeDef::new("elec", "", "mmol/L", OutcomeRole::Secondary),
        ],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("nt", "", TreatmentKind::NullTreatmentControl),
        ],
        |_, o, t| if (o.id.as_str(), t.id.as_str()) == ("elec", "at") { 2.0 } else { 0.0 },
    )
    .unwrap();
    let data = simulate_experiment(
        &table,
        &cr(&[("at", n)]),
        &[],
        &NoiseModel::None,
        &["rt".into(), "elec".into()],
        4,
        "compliance",
    )
    .unwrap();
    let decl = ControlDeclaration::new(ControlKind::NonNullOutcomeControl, "elec")
        .with_treatment("at")
        .with_min_magnitude(1.0);
    let protocol = PretrialProtocol {
        id: "compliance".into(),
        purpose: ProtocolPurpose::Compliers,
        controls: Vec::new(),
        per_unit_replicates: 1,
        decision_threshold: 0.5,
        alpha: 0.05,
        call_mode: ResponderCallMode::ThresholdBand,
        registered: true,
    };
    let report = identify_compliers(&data, &decl, &protocol).unwrap();
    for u in table.units() {
        let want = if u.complier_truth.unwrap() { SubgroupCall::Complier } else { SubgroupCall::Noncomplier };
        assert_eq!(report.per_unit_calls[&u.id], want, "complier call for {}", u.id);
    }
    assert_eq!(report.responder_fraction, 24.0 / 30.0);

    // timing: every curve peaks at t=30, a sampled time, so the noiseless
    // pilot recommends exactly that
    let units: Vec<Unit> = (0..n).map(|i| Unit::new(&format!("u{i:02}"))).collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("rt", "", "ms", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("ct", "", TreatmentKind::ControlTreatment),
        ],
        |u, _, t| if t.id == "at" && unit_index(u) % 3 != 2 { 3.0 } else { 0.0 },
    )
    .unwrap();
    let curve = ResponseCurve::new(5.0, 30.0, 60.0, 1.0).unwrap();
    let curves: BTreeMap<String, ResponseCurve> =
        table.units().iter().map(|u| (u.id.clone(), curve.clone())).collect();
    let pilot = simulate_timecourse(
        &table,
        &curves,
        "at",
        "rt",
        &[10.0, 20.0, 30.0, 45.0, 60.0],
        &NoiseModel::None,
        5,
    )
    .unwrap();
    let rec = optimal_timing(&pilot, &TimingCriterion::PeakOfMean).unwrap();
    assert_eq!(rec.time, 30.0);
    assert_eq!(rec.peak_mean_response, 2.0);

    // placebo: blinded and open control arms differ only by the constructed
    // disclosure shift of 1.5
    let m = 16usize;
    let units: Vec<Unit> = (0..m).map(|i| Unit::new(&format!("p{i:02}"))).collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("y", "", "", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("at", "", TreatmentKind::Active),
            TreatmentLevel::new("blind", "", TreatmentKind::ControlTreatment),
            TreatmentLevel::new("open", "", TreatmentKind::Other),
        ],
        |_, _, t| match t.id.as_str() {
            "blind" => 3.5,
            _ => 2.0,
        },
    )
    .unwrap();
    let mech = cr(&[("blind", m / 2), ("open", m / 2)]);
    let data =
        simulate_experiment(&table, &mech, &[], &NoiseModel::None, &["y".into()], 6, "placebo").unwrap();
    assert_eq!(placebo_effect(&data, "y", "blind", "open").unwrap(), 1.5);

    let reps = 10_000u64;
    let key = StreamKey::new(6).tag("placebo-noise");
    let estimates: Vec<f64> = (0..reps)
        .map(|r| {
            let data = simulate_experiment(
                &table,
                &mech,
                &[],
                &gaussian("y", 1.0),
                &["y".into()],
                key.index(r).seed(),
                "placebo",
            )
            .unwrap();
            placebo_effect(&data, "y", "blind", "open").unwrap()
        })
        .collect();
    let avg = mean(&estimates);
    let mc_se = sample_sd(&estimates) / (reps as f64).sqrt();
    assert!((avg - 1.5).abs() <= 4.0 * mc_se, "noisy placebo estimate {avg}, MC se {mc_se}");
}

/// fraction * responder effect + (1 - fraction) * nonresponder effect
/// rebuilds the population effect to 1e-12 on twenty random tables.
#[test]
fn a08_subgroup_decomposition_reconstructs_the_population_effect() {
    for case in 0..20u64 {
        let mut rng = StreamKey::new(77).tag("decompose").index(case).rng();
        let n = rng.gen_range(6..=30);
        let truths: Vec<bool> = (0..n).map(|i| i == 0 || (i != 1 && rng.gen_bool(0.5))).collect();
        let draws: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let units: Vec<Unit> =
            (0..n).map(|i| Unit::new(&format!("u{i:02}")).with_responder_truth(truths[i])).collect();
        let table = ScienceTable::new(
            units,
            vec![OutcomeDef::new("y", "", "", OutcomeRole::Primary)],
            vec![
                TreatmentLevel::new("at", "", TreatmentKind::Active),
                TreatmentLevel::new("ct", "", TreatmentKind::ControlTreatment),
            ],
            |u, _, t| {
                let (a, c) = draws[unit_index(u)];
                if t.id == "at" {
                    a
                } else {
                    c
                }
            },
        )
        .unwrap();

        let calls: BTreeMap<String, SubgroupCall> = table
            .units()
            .iter()
            .map(|u| {
                let call = if u.responder_truth.unwrap() {
                    SubgroupCall::Responder
                } else {
                    SubgroupCall::Nonresponder
                };
                (u.id.clone(), call)
            })
            .collect();
        let report = decompose_effect(&table, &calls).unwrap();
        let f = report.responder_fraction;
        let combined = f * report.responder_effect.unwrap() + (1.0 - f) * report.nonresponder_effect.unwrap();
        let pop = report.population_effect.unwrap();
        assert!((combined - pop).abs() <= 1e-12, "case {case}: {combined} vs {pop}");
    }
}

/// Same scenario, same seed, byte-identical reports; the shipped scenario
/// survives parse -> serialize -> parse and carries every control kind and
/// every named treatment role.
#[test]
fn a09_reports_are_deterministic_and_the_flagship_scenario_round_trips() {
    let path = format!("{}/scenarios/caffeine.toml", env!("CARGO_MANIFEST_DIR"));
    let scenario = load_scenario(Path::new(&path)).unwrap();

    let first = run_simulate(&scenario, None).unwrap();
    let second = run_simulate(&scenario, None).unwrap();
    assert_eq!(first.to_machine(), second.to_machine());
    assert_eq!(first.to_summary(), second.to_summary());

    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = parse_scenario(&text).unwrap();
    let serialized = parsed.to_toml().unwrap();
    let reparsed = parse_scenario(&serialized).unwrap();
    assert_eq!(serialized, reparsed.to_toml().unwrap(), "serialization must be a fixed point");
    assert_eq!(parsed.table, reparsed.table);
    assert_eq!(parsed.mechanism, reparsed.mechanism);
    assert_eq!(parsed.noise, reparsed.noise);
    assert_eq!(parsed.measured_outcomes, reparsed.measured_outcomes);
    assert_eq!(parsed.controls, reparsed.controls);
    assert_eq!(parsed.rules, reparsed.rules);
    assert_eq!(parsed.diagnostics, reparsed.diagnostics);
    assert_eq!(parsed.protocols, reparsed.protocols);
    assert_eq!(parsed.timecourse, reparsed.timecourse);
    assert_eq!(parsed.placebo, reparsed.placebo);
    assert_eq!(parsed.power, reparsed.power);

    let kinds: BTreeSet<ControlKind> = parsed.controls.iter().map(|c| c.decl.kind).collect();
    assert_eq!(kinds.len(), 6, "the flagship scenario must exercise all six control kinds");
    let roles: BTreeSet<TreatmentKind> = parsed.table.treatments().iter().map(|t| t.kind).collect();
    for role in [
        TreatmentKind::Active,
        TreatmentKind::ControlTreatment,
        TreatmentKind::NullTreatmentControl,
        TreatmentKind::NonNullTreatmentControl,
    ] {
        assert!(roles.contains(&role), "missing treatment role {role:?}");
    }
}

/// Across a 4x4 grid under common random numbers, detection power never
/// decreases in flaw magnitude or in arm size. The injected flaw shifts
/// every unit alike (a drifted meter), so the arm's spread stays at the
/// noise floor and the t statistic grows with the shift instead of
/// saturating.
#[test]
fn a10_power_grid_is_monotone_in_flaw_and_arm_size() {
    let toml = r#"
schema_version = 1
name = "meter-drift-power"
seed = 7
measured_outcomes = ["y"]

[[outcomes]]
id = "y"
label = "meter reading"
units = "units"
role = "primary"

[[treatments]]
id = "at"
label = "device active"
kind = "active"

[[treatments]]
id = "nt"
label = "device sham"
kind = "null_treatment_control"

[table.generator]
n_units = 8

[[table.generator.factors]]
name = "meter"
levels = ["drifted"]
fractions = [1.0]

[assignment]
kind = "complete_randomization"

[assignment.arm_sizes]
at = 4
nt = 4

[noise]
kind = "additive_gaussian"

[noise.sigma]
y = 1.0

[[controls]]
id = "sham_is_null"
kind = "null_treatment_control"
treatment = "nt"
epsilon = 0.5

[[rules]]
id = "mean_shift_t"
kind = "mean_test"
alpha = 0.05
method = "t_one_sample"

[diagnostics]
threshold_a = 4.0

[power]
rule = "mean_shift_t"
replications = 10000
arm_sizes = [4, 8, 16, 32]
flaw_magnitudes = [0.5, 1.0, 2.0, 4.0]

[power.flaw]
factor = "meter"
level = "drifted"
outcome = "y"
"#;
    let scenario = parse_scenario(toml).unwrap();
    let report = run_power(&scenario, None, None).unwrap();
    let table = report.power.unwrap();
    assert_eq!(table.replications, 10_000);
    assert_eq!(table.cells.len(), 16);

    let power = |row: usize, col: usize| table.cells[row * 4 + col].power;
    let dump = || {
        (0..4)
            .map(|r| (0..4).map(|c| format!("{:.4}", power(r, c))).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    for row in 0..4 {
        for col in 1..4 {
            assert!(
                power(row, col) >= power(row, col - 1),
                "power fell with flaw magnitude at arm row {row}:\n{}",
                dump()
            );
        }
    }
    for col in 0..4 {
        for row in 1..4 {
            assert!(
                power(row, col) >= power(row - 1, col),
                "power fell with arm size at flaw column {col}:\n{}",
                dump()
            );
        }
    }
    // the grid spans the interesting range rather than sitting saturated
    assert!(power(0, 0) < 0.3, "smallest cell {}", power(0, 0));
    assert!(power(3, 3) > 0.99, "largest cell {}", power(3, 3));
}

//! A timing pilot: measure a few units repeatedly over an afternoon, then
//! pick the single time the main study should measure at.

use std::collections::BTreeMap;

use controlsim::pretrial::{optimal_timing, TimingCriterion};
use controlsim::rng::StreamKey;
use controlsim::sim::{simulate_timecourse, NoiseModel, ResponseCurve};
use controlsim::{OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind, TreatmentLevel, Unit};
use rand::Rng;

fn main() -> controlsim::Result<()> {
    let units: Vec<Unit> = (0..8).map(|i| Unit::new(&format!("s{i}"))).collect();
    // Everyone responds to coffee by 4 to 8 points; how fast they get there
    // varies from person to person.
    let mut rng = StreamKey::new(40).tag("pilot-cohort").rng();
    let sizes: Vec<f64> = (0..8).map(|_| rng.gen_range(4.0..8.0)).collect();
    let table = ScienceTable::new(
        units,
        vec![OutcomeDef::new("alertness", "Alertness change", "points", OutcomeRole::Primary)],
        vec![
            TreatmentLevel::new("coffee", "Caffeinated coffee", TreatmentKind::Active),
            TreatmentLevel::new("nothing", "No intervention", TreatmentKind::NullTreatmentControl),
        ],
        |u, _, t| if t.id == "coffee" { sizes[u.id[1..].parse::<usize>().unwrap()] } else { 0.0 },
    )?;
    let curves: BTreeMap<String, ResponseCurve> = table
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let peak = 25.0 + 2.0 * i as f64;
            Ok((u.id.clone(), ResponseCurve::new(5.0, peak, 120.0, 1.0)?))
        })
        .collect::<controlsim::Result<_>>()?;

    let times: Vec<f64> = vec![10.0, 20.0, 30.0, 45.0, 60.0, 90.0];
    let pilot = simulate_timecourse(
        &table,
        &curves,
        "coffee",
        "alertness",
        &times,
        &NoiseModel::AdditiveGaussian { sigma: BTreeMap::from([("alertness".to_string(), 0.5)]) },
        40,
    )?;

    println!("mean |response| by sampled minute:");
    for (i, t) in pilot.times.iter().enumerate() {
        let m = pilot.responses.values().map(|s| s[i].abs()).sum::<f64>() / pilot.responses.len() as f64;
        println!("  t = {t:>4}  {m:>6.2}  {}", "#".repeat(m.round() as usize));
    }

    let peak = optimal_timing(&pilot, &TimingCriterion::PeakOfMean)?;
    println!(
        "\npeak of mean: measure at t = {} (mean |response| {:.2})",
        peak.time, peak.peak_mean_response
    );
    let window = optimal_timing(&pilot, &TimingCriterion::WindowAboveFraction { fraction: 0.8 })?;
    let (lo, hi) = window.window.expect("window criterion reports its run");
    println!("window above 80% of peak: t in [{lo}, {hi}], midpoint {}", window.time);
    println!("caveat: {}", peak.assumption);
    Ok(())
}

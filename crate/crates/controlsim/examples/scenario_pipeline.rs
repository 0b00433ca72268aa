//! The file-driven path: load a scenario, validate its controls, run the
//! simulate-and-diagnose pipeline, and run a registered pre-trial. This is
//! what the command-line binary does, minus the argument parsing.

use std::path::Path;

use controlsim::runner::{run_pretrial, run_simulate, run_validate};
use controlsim::scenario::load_scenario;

fn main() -> controlsim::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/caffeine.toml");
    let scenario = load_scenario(&path)?;
    println!(
        "loaded `{}`: {} units, {} controls, {} rules, {} protocols\n",
        scenario.name,
        scenario.table.n_units(),
        scenario.controls.len(),
        scenario.rules.len(),
        scenario.protocols.len()
    );

    let validation = run_validate(&scenario)?;
    println!("validate exits with {}\n", validation.exit_status());

    // Determinism is a property of the report, not just the data: the same
    // scenario and seed produce byte-identical machine output.
    let report = run_simulate(&scenario, None)?;
    assert_eq!(report.to_machine(), run_simulate(&scenario, None)?.to_machine());
    print!("{}", report.to_summary());

    let (pretrial, exclusions) = run_pretrial(&scenario, "responder_screen", None)?;
    print!("\n{}", pretrial.to_summary());
    if let Some(list) = exclusions {
        println!(
            "\nthe screen excludes {} units; written as JSON, a main-study scenario\n\
             can declare the file and run on the remaining population:",
            list.excluded_units.len()
        );
        println!("  excluded: {}", list.excluded_units.join(", "));
    }
    Ok(())
}

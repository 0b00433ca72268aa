//! Declare one control of every kind against a small science table, check
//! each unit by unit, then corrupt a single table cell and watch exactly
//! one call flip.

use controlsim::controls::{validate_control, ControlDeclaration, ControlKind};
use controlsim::{OutcomeDef, OutcomeRole, ScienceTable, TreatmentKind, TreatmentLevel, Unit};

fn main() -> controlsim::Result<()> {
    // Coffee raises blood pressure by 8 and electrolytes by 2; decaf moves
    // only the electrolytes; the reference drug raises bp by 12; nothing
    // touches flexibility.
    let units: Vec<Unit> = (0..5).map(|i| Unit::new(&format!("s{i}"))).collect();
    let table = ScienceTable::new(
        units,
        vec![
            OutcomeDef::new("bp", "Systolic blood pressure change", "mmHg", OutcomeRole::Primary),
            OutcomeDef::new("flex", "Hamstring flexibility change", "cm", OutcomeRole::Secondary),
            OutcomeDef::new("lytes", "Serum electrolyte change", "mmol/L", OutcomeRole::Secondary),
        ],
        vec![
            TreatmentLevel::new("coffee", "Caffeinated coffee", TreatmentKind::Active),
            TreatmentLevel::new("decaf", "Decaffeinated coffee", TreatmentKind::ControlTreatment),
            TreatmentLevel::new("nothing", "No intervention", TreatmentKind::NullTreatmentControl),
            TreatmentLevel::new("drug", "Reference pressor drug", TreatmentKind::NonNullTreatmentControl),
        ],
        |_, o, t| match (o.id.as_str(), t.id.as_str()) {
            ("bp", "coffee") => 8.0,
            ("bp", "drug") => 12.0,
            ("lytes", "coffee") | ("lytes", "decaf") => 2.0,
            _ => 0.0,
        },
    )?;

    let declarations = [
        (
            "sitting in the lab leaves bp alone",
            ControlDeclaration::new(ControlKind::NullTreatmentControl, "bp")
                .with_treatment("nothing")
                .with_epsilon(0.5),
        ),
        (
            "the reference drug must move bp",
            ControlDeclaration::new(ControlKind::NonNullTreatmentControl, "bp")
                .with_treatment("drug")
                .with_min_magnitude(5.0),
        ),
        (
            "coffee cannot change flexibility",
            ControlDeclaration::new(ControlKind::NullOutcomeControl, "flex")
                .with_treatment("coffee")
                .with_epsilon(0.5),
        ),
        (
            "coffee must move electrolytes in everyone",
            ControlDeclaration::new(ControlKind::NonNullOutcomeControl, "lytes")
                .with_treatment("coffee")
                .with_min_magnitude(1.0),
        ),
        (
            "both brews carry the same electrolytes",
            ControlDeclaration::new(ControlKind::NullContrastControl, "lytes")
                .with_contrast("coffee", "decaf")
                .with_epsilon(0.5),
        ),
        (
            "the caffeinated-vs-decaf bp contrast clears 2",
            ControlDeclaration::new(ControlKind::NonNullContrastControl, "bp")
                .with_contrast("coffee", "decaf")
                .with_min_magnitude(2.0),
        ),
    ];

    println!("controls on the clean table:");
    for (claim, decl) in &declarations {
        let report = validate_control(&table, decl)?;
        let kind = format!("{:?}", decl.kind);
        println!("  [{}] {kind:<26} {claim}", if report.holds_for_all { "ok" } else { "!!" });
    }

    // One corrupted cell: subject s2's bp drifts by 0.9 while doing nothing,
    // which is outside the declared band of 0.5.
    let broken = table.with_value("s2", "bp", "nothing", 0.9)?;
    let report = validate_control(&broken, &declarations[0].1)?;
    println!("\nafter corrupting s2's (bp, nothing) cell to 0.9:");
    for (unit, check) in &report.per_unit {
        println!(
            "  {unit}: value {:+.1}  {}",
            check.value,
            if check.holds { "holds" } else { "violated" }
        );
    }
    println!(
        "fraction holding {:.2}, holds for all: {}",
        report.fraction_holding, report.holds_for_all
    );
    Ok(())
}

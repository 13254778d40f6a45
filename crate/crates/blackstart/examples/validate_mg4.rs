//! The reference validation scenario: the same plan passes against the
//! forecasts it was built on and fails against the true loads, with the
//! failure attributed to nodal active balance.
//!
//! ```bash
//! cargo run --release --example validate_mg4
//! ```

use blackstart::validator::reference::mg4_scenario;
use blackstart::validator::validate_plan;

fn main() {
    let s = mg4_scenario();

    let as_planned =
        validate_plan(&s.feeder, &s.plan, &s.planned, &s.planned, s.settings).expect("validation");
    println!(
        "against planned loads: {}",
        if as_planned.any_infeasible() { "infeasible" } else { "feasible at every stage" }
    );

    let against_truth =
        validate_plan(&s.feeder, &s.plan, &s.planned, &s.actual, s.settings).expect("validation");
    match against_truth.first_failure {
        Some((mg, stage)) => println!("against actual loads: fails at microgrid {mg}, stage {stage}"),
        None => println!("against actual loads: feasible"),
    }
    for mg in &against_truth.microgrids {
        for record in &mg.stages {
            for v in &record.violations {
                println!(
                    "  stage {} violation: {} at bus {} phase {} ({:.1} kW short)",
                    record.stage,
                    v.kind,
                    v.bus,
                    v.phase.letter(),
                    v.magnitude
                );
            }
        }
    }
    println!("\nplanned vs actual roll-up:");
    for row in &against_truth.summary {
        println!(
            "  mg {} stage {}: planned gfm {:.1} kW, actual gfm {}, attacked load {:.1}, actual load {:.1}",
            row.microgrid,
            row.stage,
            row.planned_gfm_kw,
            row.actual_gfm_kw.map_or("-".into(), |v| format!("{v:.1} kW")),
            row.attacked_load_kw,
            row.actual_load_kw
        );
    }
}

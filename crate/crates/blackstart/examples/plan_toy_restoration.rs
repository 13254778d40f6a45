//! Staged restoration on the four-bus switch chain: watch energization creep
//! one switch-hop per stage and the pickups follow.
//!
//! ```bash
//! cargo run --release --example plan_toy_restoration
//! ```

use blackstart::feeder::builtin;
use blackstart::planner::{plan_restoration, PlannerInput};

fn main() {
    let feeder = builtin::four_bus();
    let mut input = PlannerInput::new(&feeder, 3);
    for (load, kw) in [("L2", 90.0), ("L3", 120.0), ("L4", 60.0)] {
        input.load_forecasts.insert(load.to_string(), vec![kw; 3]);
    }
    let plan = plan_restoration(&input).expect("planning");
    println!("served energy: {:.1} kW-stages", plan.objective_kw);
    for stage in &plan.stages {
        println!(
            "stage {}: switches {:?}, energized {:?}, loads {:?}",
            stage.stage, stage.switches, stage.energized_buses, stage.loads
        );
        for (unit, dispatch) in &stage.gfm_dispatch {
            let total: f64 = dispatch.iter().map(|d| d.0).sum();
            println!("  {unit} dispatches {total:.1} kW");
        }
    }
}

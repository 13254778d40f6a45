//! Tour the bundled 123-bus system: four grid-forming seeds, block-by-block
//! energization as switches close stage by stage.
//!
//! ```bash
//! cargo run --release --example feeder_islands
//! ```

use blackstart::feeder::{builtin, energized_subgraph};
use std::collections::BTreeSet;

fn main() {
    let feeder = builtin::ieee123();
    println!(
        "{} buses, {} lines ({} switches), {} inverter units, {} loads ({} attacked)",
        feeder.buses.len(),
        feeder.lines.len(),
        feeder.switches().count(),
        feeder.ibrs.len(),
        feeder.loads.len(),
        feeder.loads.iter().filter(|l| l.attacked).count()
    );
    println!("grid-forming buses: {:?}", feeder.gfm_buses());

    let sources: BTreeSet<String> = feeder.gfm_buses().into_iter().collect();
    let mut closed: BTreeSet<String> = BTreeSet::new();
    for stage in 1..=4usize {
        for (switch, at) in builtin::ieee123_switch_stages() {
            if at == stage {
                closed.insert(switch.to_string());
            }
        }
        let energized = energized_subgraph(&feeder, &closed, &sources).unwrap();
        println!(
            "stage {stage}: {} switches closed, {} of {} buses energized",
            closed.len(),
            energized.len(),
            feeder.buses.len()
        );
    }
}

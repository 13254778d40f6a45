//! Cold-load-pickup curves for a 100 kW load across the parameter table.
//!
//! ```bash
//! cargo run --release --example clpu_decay
//! ```

use blackstart::clpu::{apply_clpu, clpu_power, lookup_params, LoadType, TimeOfDay};

fn main() {
    println!("demand right at pickup and one/two hours later, per table entry:");
    for load_type in [LoadType::Residential, LoadType::Commercial] {
        for time in [TimeOfDay::Morning, TimeOfDay::Afternoon, TimeOfDay::Evening, TimeOfDay::Night] {
            let params = lookup_params(load_type, time);
            let at = |minutes: f64| clpu_power(100.0, params, minutes).unwrap();
            println!(
                "  {load_type:?}/{time:?}: a={:<4} tau={:<5} -> {:.1} / {:.1} / {:.1} kW",
                params.overshoot,
                params.decay_minutes,
                at(0.0),
                at(60.0),
                at(120.0)
            );
        }
    }

    let params = lookup_params(LoadType::Residential, TimeOfDay::Morning);
    let adjusted = apply_clpu(&[100.0; 6], 2, params).unwrap();
    println!("hourly series with pickup at hour 2: {adjusted:.1?}");
}

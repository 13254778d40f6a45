//! Write the bundled 123-bus feeder to a JSON document (the same format
//! `load_feeder` reads back).
//!
//! ```bash
//! cargo run --release --example export_feeder -- data/ieee123.json
//! ```

use blackstart::feeder::{builtin, save_feeder};
use std::path::PathBuf;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("ieee123.json"));
    let feeder = builtin::ieee123();
    save_feeder(&path, &feeder).expect("writing feeder document");
    println!(
        "wrote {} ({} buses, {} lines, {} units, {} loads)",
        path.display(),
        feeder.buses.len(),
        feeder.lines.len(),
        feeder.ibrs.len(),
        feeder.loads.len()
    );
}

//! Feeder JSON document format.
//!
//! ```json
//! {
//!   "base": {"kva": 1000.0, "kv": 4.16},
//!   "buses": [{"id": "1", "phases": "abc", "vmin2": 0.9025, "vmax2": 1.1025}],
//!   "lines": [{"id": "l1", "from": "1", "to": "2", "phases": "abc",
//!              "r_ohm": [[..3x3..]], "x_ohm": [[..3x3..]],
//!              "pmax_kw": 2000.0, "qmax_kvar": 1000.0, "switch": false}],
//!   "ibrs":  [{"id": "g13", "bus": "13", "kind": "gfm", "phases": "abc",
//!              "pmax_kw": 500.0, "qmax_kvar": 250.0,
//!              "ramp": {"mls_kw": 50.0, "sens_kw_per_hz": 20.0,
//!                        "f_nadir": 59.7, "f_min": 59.3}}],
//!   "loads": [{"id": "L12", "bus": "12", "phases": "a", "weight": 1.0,
//!              "profile": "res_base", "type": "residential", "attacked": true}]
//! }
//! ```
//!
//! Impedances are entered in ohms and converted to per-unit on the document's
//! base at load time. Saving writes the ohmic values back, so load-save-load
//! round-trips are structurally identical.

use super::{Bus, Feeder, FeederError, Ibr, IbrKind, Line, LoadPoint, PhaseMatrix, PhaseSet, RampParams};
use crate::clpu::LoadType;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct FeederFile {
    base: BaseSection,
    buses: Vec<BusRow>,
    lines: Vec<LineRow>,
    ibrs: Vec<IbrRow>,
    loads: Vec<LoadRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BaseSection {
    kva: f64,
    kv: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BusRow {
    id: String,
    phases: PhaseSet,
    vmin2: f64,
    vmax2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LineRow {
    id: String,
    from: String,
    to: String,
    phases: PhaseSet,
    r_ohm: PhaseMatrix,
    x_ohm: PhaseMatrix,
    pmax_kw: f64,
    qmax_kvar: f64,
    switch: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct IbrRow {
    id: String,
    bus: String,
    kind: IbrKind,
    phases: PhaseSet,
    pmax_kw: f64,
    qmax_kvar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ramp: Option<RampParams>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LoadRow {
    id: String,
    bus: String,
    phases: PhaseSet,
    weight: f64,
    profile: String,
    #[serde(rename = "type")]
    load_type: LoadType,
    attacked: bool,
}

/// Read, validate, and per-unit a feeder document.
pub fn load_feeder(path: &Path) -> Result<Feeder, FeederError> {
    let text = std::fs::read_to_string(path)?;
    let file: FeederFile =
        serde_json::from_str(&text).map_err(|e| FeederError::Json(e.to_string()))?;
    feeder_from_file(file)
}

fn feeder_from_file(file: FeederFile) -> Result<Feeder, FeederError> {
    let buses = file
        .buses
        .into_iter()
        .map(|b| Bus { id: b.id, phases: b.phases, vmin2: b.vmin2, vmax2: b.vmax2 })
        .collect();
    let lines = file
        .lines
        .into_iter()
        .map(|l| Line {
            id: l.id,
            from: l.from,
            to: l.to,
            phases: l.phases,
            r_ohm: l.r_ohm,
            x_ohm: l.x_ohm,
            r_hat: [[0.0; 3]; 3],
            x_hat: [[0.0; 3]; 3],
            pmax_kw: l.pmax_kw,
            qmax_kvar: l.qmax_kvar,
            is_switch: l.switch,
        })
        .collect();
    let ibrs = file
        .ibrs
        .into_iter()
        .map(|i| Ibr {
            id: i.id,
            bus: i.bus,
            kind: i.kind,
            phases: i.phases,
            pmax_kw: i.pmax_kw,
            qmax_kvar: i.qmax_kvar,
            ramp: i.ramp,
        })
        .collect();
    let loads = file
        .loads
        .into_iter()
        .map(|l| LoadPoint {
            id: l.id,
            bus: l.bus,
            phases: l.phases,
            weight: l.weight,
            profile: l.profile,
            load_type: l.load_type,
            attacked: l.attacked,
        })
        .collect();
    Feeder::assemble(file.base.kva, file.base.kv, buses, lines, ibrs, loads)
}

pub fn save_feeder(path: &Path, feeder: &Feeder) -> Result<(), FeederError> {
    let file = FeederFile {
        base: BaseSection { kva: feeder.base_kva, kv: feeder.base_kv },
        buses: feeder
            .buses
            .iter()
            .map(|b| BusRow {
                id: b.id.clone(),
                phases: b.phases,
                vmin2: b.vmin2,
                vmax2: b.vmax2,
            })
            .collect(),
        lines: feeder
            .lines
            .iter()
            .map(|l| LineRow {
                id: l.id.clone(),
                from: l.from.clone(),
                to: l.to.clone(),
                phases: l.phases,
                r_ohm: l.r_ohm,
                x_ohm: l.x_ohm,
                pmax_kw: l.pmax_kw,
                qmax_kvar: l.qmax_kvar,
                switch: l.is_switch,
            })
            .collect(),
        ibrs: feeder
            .ibrs
            .iter()
            .map(|i| IbrRow {
                id: i.id.clone(),
                bus: i.bus.clone(),
                kind: i.kind,
                phases: i.phases,
                pmax_kw: i.pmax_kw,
                qmax_kvar: i.qmax_kvar,
                ramp: i.ramp,
            })
            .collect(),
        loads: feeder
            .loads
            .iter()
            .map(|l| LoadRow {
                id: l.id.clone(),
                bus: l.bus.clone(),
                phases: l.phases,
                weight: l.weight,
                profile: l.profile.clone(),
                load_type: l.load_type,
                attacked: l.attacked,
            })
            .collect(),
    };
    let json =
        serde_json::to_string_pretty(&file).map_err(|e| FeederError::Json(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::builtin;

    fn minimal_doc() -> String {
        r#"{
            "base": {"kva": 1000.0, "kv": 4.16},
            "buses": [
                {"id": "1", "phases": "abc", "vmin2": 0.9025, "vmax2": 1.1025},
                {"id": "2", "phases": "abc", "vmin2": 0.9025, "vmax2": 1.1025}
            ],
            "lines": [
                {"id": "l1", "from": "1", "to": "2", "phases": "abc",
                 "r_ohm": [[0.02,0.0,0.0],[0.0,0.02,0.0],[0.0,0.0,0.02]],
                 "x_ohm": [[0.05,0.0,0.0],[0.0,0.05,0.0],[0.0,0.0,0.05]],
                 "pmax_kw": 1000.0, "qmax_kvar": 500.0, "switch": false}
            ],
            "ibrs": [
                {"id": "g1", "bus": "1", "kind": "gfm", "phases": "abc",
                 "pmax_kw": 500.0, "qmax_kvar": 250.0,
                 "ramp": {"mls_kw": 100.0, "sens_kw_per_hz": 50.0, "f_nadir": 59.7, "f_min": 59.3}}
            ],
            "loads": [
                {"id": "L2", "bus": "2", "phases": "abc", "weight": 1.0,
                 "profile": "res_base", "type": "residential", "attacked": false}
            ]
        }"#
        .to_string()
    }

    #[test]
    fn minimal_two_bus_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two_bus.json");
        std::fs::write(&path, minimal_doc()).unwrap();
        let feeder = load_feeder(&path).unwrap();
        assert_eq!(feeder.buses.len(), 2);
        assert_eq!(feeder.lines.len(), 1);
        // 0.02 ohm on the 4.16 kV / 1000 kVA base.
        let expected_pu = crate::feeder::to_per_unit(0.02, 1000.0, 4.16);
        assert!((feeder.lines[0].r_hat[0][0] - expected_pu).abs() < 1e-12);
    }

    #[test]
    fn dangling_line_reference_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dangling.json");
        let doc = minimal_doc().replace(r#""to": "2""#, r#""to": "99""#);
        std::fs::write(&path, doc).unwrap();
        assert!(matches!(
            load_feeder(&path),
            Err(FeederError::DanglingReference { kind: "line", .. })
        ));
    }

    #[test]
    fn round_trip_is_structurally_identical() {
        let feeder = builtin::ieee123();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ieee123.json");
        save_feeder(&path, &feeder).unwrap();
        let back = load_feeder(&path).unwrap();
        assert_eq!(back.buses.len(), feeder.buses.len());
        assert_eq!(back.lines.len(), feeder.lines.len());
        assert_eq!(back.ibrs.len(), feeder.ibrs.len());
        assert_eq!(back.loads.len(), feeder.loads.len());
        for (a, b) in feeder.lines.iter().zip(&back.lines) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.r_ohm, b.r_ohm);
            assert_eq!(a.r_hat, b.r_hat);
            assert_eq!(a.x_hat, b.x_hat);
            assert_eq!(a.is_switch, b.is_switch);
        }
        for (a, b) in feeder.loads.iter().zip(&back.loads) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.profile, b.profile);
            assert_eq!(a.attacked, b.attacked);
        }
    }

    #[test]
    fn phase_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.json");
        // Bus 2 only carries phase a; the abc line no longer fits.
        let doc = minimal_doc().replace(
            r#"{"id": "2", "phases": "abc", "vmin2": 0.9025, "vmax2": 1.1025}"#,
            r#"{"id": "2", "phases": "a", "vmin2": 0.9025, "vmax2": 1.1025}"#,
        );
        std::fs::write(&path, doc).unwrap();
        assert!(matches!(load_feeder(&path), Err(FeederError::PhaseMismatch { .. })));
    }
}

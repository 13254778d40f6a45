//! Three-phase unbalanced distribution network model.
//!
//! A feeder is a radial core of fixed lines plus normally-open switch lines.
//! Inverter resources are grid-forming (black-start capable, they seed
//! energization) or grid-following (dispatch pinned to setpoints). Loads
//! carry a forecast-profile binding instead of a fixed demand; demand in kW
//! flows in from the forecasting side.

pub mod builtin;
mod graph;
mod lindistflow;
mod schema;

pub use graph::{energized_subgraph, non_switch_blocks};
pub use lindistflow::hat_matrices;
pub use schema::{load_feeder, save_feeder};

use crate::clpu::LoadType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("schema: {0}")]
    SchemaError(String),
    #[error("{kind} `{id}` references missing bus `{missing}`")]
    DanglingReference { kind: &'static str, id: String, missing: String },
    #[error("{kind} `{id}` uses phases {requested} not present at bus `{bus}` ({available})")]
    PhaseMismatch {
        kind: &'static str,
        id: String,
        bus: String,
        requested: String,
        available: String,
    },
    #[error("non-switch lines form a cycle through line `{line}`")]
    NonRadialCore { line: String },
    #[error("`{0}` is not a switch line")]
    UnknownSwitch(String),
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("base power/voltage missing or non-positive")]
    MissingBase,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        match self {
            Phase::A => 0,
            Phase::B => 1,
            Phase::C => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Phase::A => 'a',
            Phase::B => 'b',
            Phase::C => 'c',
        }
    }
}

/// Subset of the three phases, serialized as a compact string like `"abc"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);

    pub fn empty() -> Self {
        PhaseSet(0)
    }

    pub fn single(phase: Phase) -> Self {
        PhaseSet(1 << phase.index())
    }

    pub fn from_phases(phases: &[Phase]) -> Self {
        let mut set = PhaseSet(0);
        for &p in phases {
            set.0 |= 1 << p.index();
        }
        set
    }

    pub fn contains(self, phase: Phase) -> bool {
        self.0 & (1 << phase.index()) != 0
    }

    pub fn is_subset_of(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn parse(text: &str) -> Result<Self, FeederError> {
        let mut set = PhaseSet(0);
        for ch in text.chars() {
            let phase = match ch {
                'a' => Phase::A,
                'b' => Phase::B,
                'c' => Phase::C,
                other => {
                    return Err(FeederError::SchemaError(format!("bad phase letter `{other}`")))
                }
            };
            set.0 |= 1 << phase.index();
        }
        Ok(set)
    }
}

impl std::fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in self.iter() {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl Serialize for PhaseSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PhaseSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        PhaseSet::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub phases: PhaseSet,
    /// Squared per-unit voltage band.
    pub vmin2: f64,
    pub vmax2: f64,
}

/// 3x3 real matrix keyed by phase indices; entries outside a line's phase
/// set are zero.
pub type PhaseMatrix = [[f64; 3]; 3];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    pub phases: PhaseSet,
    /// Series impedance in ohms, as loaded.
    pub r_ohm: PhaseMatrix,
    pub x_ohm: PhaseMatrix,
    /// Per-unit linearized voltage-drop coefficient matrices, derived at
    /// assembly time.
    #[serde(skip)]
    pub r_hat: PhaseMatrix,
    #[serde(skip)]
    pub x_hat: PhaseMatrix,
    /// Per-phase flow limits.
    pub pmax_kw: f64,
    pub qmax_kvar: f64,
    pub is_switch: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IbrKind {
    Gfl,
    Gfm,
}

/// Ramp data for a grid-forming unit. `mls_kw` is the per-phase maximum load
/// step allowed at the first ramped stage (stage 2); each later stage adds
/// `sens_kw_per_hz * (f_nadir - f_min)` of headroom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampParams {
    pub mls_kw: f64,
    pub sens_kw_per_hz: f64,
    pub f_nadir: f64,
    pub f_min: f64,
}

impl RampParams {
    /// Per-phase bound on `|P_t - P_{t-1}|` entering 1-based `stage >= 2`.
    /// The recursive step-allowance bound collapses to this closed form
    /// because extra allowance is never binding elsewhere.
    pub fn max_load_step(&self, stage: usize) -> f64 {
        assert!(stage >= 2, "stage 1 is capacity-bound, not ramp-bound");
        self.mls_kw + (stage - 2) as f64 * self.sens_kw_per_hz * (self.f_nadir - self.f_min)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ibr {
    pub id: String,
    pub bus: String,
    pub kind: IbrKind,
    pub phases: PhaseSet,
    /// Per-phase capacity.
    pub pmax_kw: f64,
    pub qmax_kvar: f64,
    pub ramp: Option<RampParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadPoint {
    pub id: String,
    pub bus: String,
    pub phases: PhaseSet,
    /// Restoration priority weight.
    pub weight: f64,
    /// Forecast profile this load follows.
    pub profile: String,
    pub load_type: LoadType,
    pub attacked: bool,
}

#[derive(Debug, Clone)]
pub struct Feeder {
    pub base_kva: f64,
    pub base_kv: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub ibrs: Vec<Ibr>,
    pub loads: Vec<LoadPoint>,
    bus_index: BTreeMap<String, usize>,
}

impl Feeder {
    /// Build and validate a feeder from parts. Computes per-unit hat
    /// matrices, checks references, phase consistency, and core radiality.
    pub fn assemble(
        base_kva: f64,
        base_kv: f64,
        buses: Vec<Bus>,
        mut lines: Vec<Line>,
        ibrs: Vec<Ibr>,
        loads: Vec<LoadPoint>,
    ) -> Result<Self, FeederError> {
        if !(base_kva > 0.0) || !(base_kv > 0.0) {
            return Err(FeederError::MissingBase);
        }
        let mut bus_index = BTreeMap::new();
        for (i, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id.clone(), i).is_some() {
                return Err(FeederError::SchemaError(format!("duplicate bus id `{}`", bus.id)));
            }
            if !(bus.vmin2 > 0.0 && bus.vmin2 < bus.vmax2) {
                return Err(FeederError::SchemaError(format!(
                    "bus `{}` voltage band [{}, {}]",
                    bus.id, bus.vmin2, bus.vmax2
                )));
            }
        }

        let phase_check = |kind: &'static str,
                           id: &str,
                           bus_id: &str,
                           requested: PhaseSet|
         -> Result<(), FeederError> {
            let idx = bus_index.get(bus_id).ok_or_else(|| FeederError::DanglingReference {
                kind,
                id: id.to_string(),
                missing: bus_id.to_string(),
            })?;
            let available = buses[*idx].phases;
            if !requested.is_subset_of(available) {
                return Err(FeederError::PhaseMismatch {
                    kind,
                    id: id.to_string(),
                    bus: bus_id.to_string(),
                    requested: requested.to_string(),
                    available: available.to_string(),
                });
            }
            Ok(())
        };

        for line in &mut lines {
            if line.phases.is_empty() {
                return Err(FeederError::SchemaError(format!("line `{}` has no phases", line.id)));
            }
            phase_check("line", &line.id, &line.from, line.phases)?;
            phase_check("line", &line.id, &line.to, line.phases)?;
            if line.pmax_kw <= 0.0 || line.qmax_kvar <= 0.0 {
                return Err(FeederError::SchemaError(format!(
                    "line `{}` has non-positive flow limits",
                    line.id
                )));
            }
            for p in 0..3 {
                for q in 0..3 {
                    let present = line.phases.contains(Phase::ALL[p])
                        && line.phases.contains(Phase::ALL[q]);
                    if !present && (line.r_ohm[p][q] != 0.0 || line.x_ohm[p][q] != 0.0) {
                        return Err(FeederError::SchemaError(format!(
                            "line `{}` has impedance outside its phase set",
                            line.id
                        )));
                    }
                }
            }
            let r_pu = per_unit_matrix(&line.r_ohm, base_kva, base_kv);
            let x_pu = per_unit_matrix(&line.x_ohm, base_kva, base_kv);
            let (r_hat, x_hat) = lindistflow::hat_matrices(&r_pu, &x_pu);
            line.r_hat = r_hat;
            line.x_hat = x_hat;
        }

        for ibr in &ibrs {
            phase_check("ibr", &ibr.id, &ibr.bus, ibr.phases)?;
            if ibr.pmax_kw <= 0.0 || ibr.qmax_kvar <= 0.0 {
                return Err(FeederError::SchemaError(format!(
                    "ibr `{}` has non-positive capacity",
                    ibr.id
                )));
            }
            if ibr.kind == IbrKind::Gfm && ibr.ramp.is_none() {
                return Err(FeederError::SchemaError(format!(
                    "grid-forming ibr `{}` needs ramp parameters",
                    ibr.id
                )));
            }
            if let Some(r) = &ibr.ramp {
                if r.f_nadir < r.f_min {
                    return Err(FeederError::SchemaError(format!(
                        "ibr `{}` has f_nadir below f_min",
                        ibr.id
                    )));
                }
            }
        }
        for load in &loads {
            phase_check("load", &load.id, &load.bus, load.phases)?;
            if load.weight <= 0.0 {
                return Err(FeederError::SchemaError(format!(
                    "load `{}` has non-positive weight",
                    load.id
                )));
            }
        }

        let feeder = Feeder { base_kva, base_kv, buses, lines, ibrs, loads, bus_index };
        graph::check_radial_core(&feeder)?;
        Ok(feeder)
    }

    pub fn bus_idx(&self, id: &str) -> Result<usize, FeederError> {
        self.bus_index.get(id).copied().ok_or_else(|| FeederError::UnknownBus(id.to_string()))
    }

    pub fn bus(&self, id: &str) -> Result<&Bus, FeederError> {
        Ok(&self.buses[self.bus_idx(id)?])
    }

    pub fn switches(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.is_switch)
    }

    /// Grid-forming buses in sorted order; their order defines microgrid
    /// numbering in reports.
    pub fn gfm_buses(&self) -> Vec<String> {
        let mut buses: Vec<String> = self
            .ibrs
            .iter()
            .filter(|i| i.kind == IbrKind::Gfm)
            .map(|i| i.bus.clone())
            .collect();
        buses.sort();
        buses.dedup();
        buses
    }

    pub fn load(&self, id: &str) -> Option<&LoadPoint> {
        self.loads.iter().find(|l| l.id == id)
    }
}

/// `Z_pu = Z_ohm * base_kva / (1000 * base_kv^2)`.
pub fn to_per_unit(z_ohm: f64, base_kva: f64, base_kv: f64) -> f64 {
    z_ohm * base_kva / (1000.0 * base_kv * base_kv)
}

/// Inverse of [`to_per_unit`].
pub fn to_ohms(z_pu: f64, base_kva: f64, base_kv: f64) -> f64 {
    z_pu * 1000.0 * base_kv * base_kv / base_kva
}

pub fn per_unit_matrix(z_ohm: &PhaseMatrix, base_kva: f64, base_kv: f64) -> PhaseMatrix {
    let mut out = [[0.0; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            out[p][q] = to_per_unit(z_ohm[p][q], base_kva, base_kv);
        }
    }
    out
}

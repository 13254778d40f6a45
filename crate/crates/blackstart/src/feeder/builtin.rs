//! Bundled feeders: a 123-bus test system patterned on the classic IEEE
//! 123-node feeder, plus small cases used by examples and tests.
//!
//! The 123-bus system approximates the published feeder rather than
//! replicating it: four microgrid territories, each seeded by one
//! grid-forming unit (buses 13, 19, 60, 76), grow block by block through
//! normally-open switches. Grid-following units sit at the standard
//! locations. Seven loads spread over the four territories are flagged as
//! attacked. Topology inside each block is a three-phase spine with
//! single-phase leaf laterals.

use super::{Bus, Feeder, Ibr, IbrKind, Line, LoadPoint, Phase, PhaseMatrix, PhaseSet, RampParams};
use crate::clpu::LoadType;
use std::collections::BTreeSet;

const VMIN2: f64 = 0.9025; // 0.95^2
const VMAX2: f64 = 1.1025; // 1.05^2

/// Typical overhead three-phase segment: 336 ACSR-class values, short span.
fn three_phase_z(length_miles: f64) -> (PhaseMatrix, PhaseMatrix) {
    let self_r = 0.3465 * length_miles;
    let self_x = 1.0179 * length_miles;
    let mut_r = 0.1560 * length_miles;
    let mut_x = 0.5017 * length_miles;
    let mut r = [[mut_r; 3]; 3];
    let mut x = [[mut_x; 3]; 3];
    for p in 0..3 {
        r[p][p] = self_r;
        x[p][p] = self_x;
    }
    (r, x)
}

/// Single-phase lateral segment on one phase.
fn single_phase_z(phase: Phase, length_miles: f64) -> (PhaseMatrix, PhaseMatrix) {
    let mut r = [[0.0; 3]; 3];
    let mut x = [[0.0; 3]; 3];
    let p = phase.index();
    r[p][p] = 0.55 * length_miles;
    x[p][p] = 0.79 * length_miles;
    (r, x)
}

fn leaf_phase(bus: usize) -> Phase {
    Phase::ALL[bus % 3]
}

struct Builder {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    ibrs: Vec<Ibr>,
    loads: Vec<LoadPoint>,
    declared: BTreeSet<usize>,
}

impl Builder {
    fn new() -> Self {
        Self {
            buses: Vec::new(),
            lines: Vec::new(),
            ibrs: Vec::new(),
            loads: Vec::new(),
            declared: BTreeSet::new(),
        }
    }

    fn bus(&mut self, id: usize, phases: PhaseSet) {
        if self.declared.insert(id) {
            self.buses.push(Bus { id: id.to_string(), phases, vmin2: VMIN2, vmax2: VMAX2 });
        }
    }

    fn spine_line(&mut self, from: usize, to: usize) {
        let (r, x) = three_phase_z(0.05);
        self.lines.push(Line {
            id: format!("l{from}_{to}"),
            from: from.to_string(),
            to: to.to_string(),
            phases: PhaseSet::ABC,
            r_ohm: r,
            x_ohm: x,
            r_hat: [[0.0; 3]; 3],
            x_hat: [[0.0; 3]; 3],
            pmax_kw: 2500.0,
            qmax_kvar: 1250.0,
            is_switch: false,
        });
    }

    fn leaf_line(&mut self, from: usize, leaf: usize) {
        let phase = leaf_phase(leaf);
        let (r, x) = single_phase_z(phase, 0.04);
        self.lines.push(Line {
            id: format!("l{from}_{leaf}"),
            from: from.to_string(),
            to: leaf.to_string(),
            phases: PhaseSet::single(phase),
            r_ohm: r,
            x_ohm: x,
            r_hat: [[0.0; 3]; 3],
            x_hat: [[0.0; 3]; 3],
            pmax_kw: 900.0,
            qmax_kvar: 450.0,
            is_switch: false,
        });
    }

    fn switch(&mut self, name: &str, from: usize, to: usize) {
        let (r, x) = three_phase_z(0.02);
        self.lines.push(Line {
            id: name.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            phases: PhaseSet::ABC,
            r_ohm: r,
            x_ohm: x,
            r_hat: [[0.0; 3]; 3],
            x_hat: [[0.0; 3]; 3],
            pmax_kw: 2500.0,
            qmax_kvar: 1250.0,
            is_switch: true,
        });
    }

    /// Wire one non-switch block: a three-phase spine over `spine` in order,
    /// plus single-phase leaves each hung off a spine bus.
    fn block(&mut self, spine: &[usize], leaves: &[(usize, usize)]) {
        for &b in spine {
            self.bus(b, PhaseSet::ABC);
        }
        for pair in spine.windows(2) {
            self.spine_line(pair[0], pair[1]);
        }
        for &(host, leaf) in leaves {
            self.bus(leaf, PhaseSet::single(leaf_phase(leaf)));
            self.leaf_line(host, leaf);
        }
    }

    fn gfm(&mut self, bus: usize, ramp: RampParams) {
        self.ibrs.push(Ibr {
            id: format!("g{bus}"),
            bus: bus.to_string(),
            kind: IbrKind::Gfm,
            phases: PhaseSet::ABC,
            pmax_kw: 500.0,
            qmax_kvar: 250.0,
            ramp: Some(ramp),
        });
    }

    fn gfl3(&mut self, bus: usize) {
        self.ibrs.push(Ibr {
            id: format!("g{bus}"),
            bus: bus.to_string(),
            kind: IbrKind::Gfl,
            phases: PhaseSet::ABC,
            pmax_kw: 500.0,
            qmax_kvar: 250.0,
            ramp: None,
        });
    }

    fn gfl1(&mut self, bus: usize) {
        self.ibrs.push(Ibr {
            id: format!("g{bus}"),
            bus: bus.to_string(),
            kind: IbrKind::Gfl,
            phases: PhaseSet::single(leaf_phase(bus)),
            pmax_kw: 400.0,
            qmax_kvar: 200.0,
            ramp: None,
        });
    }

    fn load(&mut self, bus: usize, profile: &str, attacked: bool) {
        let phases = self
            .buses
            .iter()
            .find(|b| b.id == bus.to_string())
            .map(|b| b.phases)
            .expect("load bus declared");
        let load_type = if profile.starts_with("res") {
            LoadType::Residential
        } else {
            LoadType::Commercial
        };
        self.loads.push(LoadPoint {
            id: format!("L{bus}"),
            bus: bus.to_string(),
            phases,
            weight: 1.0,
            profile: profile.to_string(),
            load_type,
            attacked,
        });
    }

    fn finish(self) -> Feeder {
        Feeder::assemble(1000.0, 4.16, self.buses, self.lines, self.ibrs, self.loads)
            .expect("builtin feeder is valid")
    }
}

/// Default grid-forming ramp data: tight per-phase load steps so staged
/// pickup is required and forecast errors can exhaust the headroom.
pub fn default_gfm_ramp() -> RampParams {
    RampParams { mls_kw: 150.0, sens_kw_per_hz: 75.0, f_nadir: 59.7, f_min: 59.3 }
}


/// The seven forecast profile names shipped with the toolkit.
pub const PROFILES: [&str; 7] = [
    "full_service_restaurant",
    "midrise_apartment",
    "quick_service_restaurant",
    "small_hotel",
    "res_base",
    "res_high",
    "res_low",
];

/// 123-bus test system. Four mutually isolated microgrid territories:
///
/// * MG 1 (GFM 13): block {8..14}, then {1..7, 15..17} via `sw1`.
/// * MG 2 (GFM 19): {18..20}, {21..27, 31..43} via `sw2`, {28..30, 44..48,
///   115} via `sw3`, {49..51, 118} via `sw4`.
/// * MG 3 (GFM 60): {60, 62}, {52..59, 61} via `sw5`, {63..66} via `sw6`.
/// * MG 4 (GFM 76): {72..76}, {67..71, 77..79, 86..92, 97..100, 117} via
///   `sw7`, {80..85, 93..96, 101..107} via `sw8`, {108..114, 116, 119..123}
///   via `sw9`.
///
/// Attacked loads: L12, L21, L46, L66, L73, L75, L97.
pub fn ieee123() -> Feeder {
    let mut b = Builder::new();
    let ramp = default_gfm_ramp();

    // MG 1.
    b.block(&[8, 9, 10, 11, 13, 14], &[(11, 12)]);
    b.block(&[1, 2, 3, 4, 5, 6, 7, 15, 16], &[(16, 17)]);
    b.switch("sw1", 8, 7);
    b.gfm(13, ramp);
    b.gfl3(5);
    b.gfl1(7);
    b.gfl1(15);

    // MG 2.
    b.block(&[18, 19, 20], &[]);
    b.block(
        &[21, 22, 23, 24, 25, 26, 27, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42, 43],
        &[],
    );
    b.block(&[28, 29, 30, 44, 45, 46, 47, 48], &[(48, 115)]);
    b.block(&[49, 50, 51], &[(51, 118)]);
    b.switch("sw2", 20, 21);
    b.switch("sw3", 27, 28);
    b.switch("sw4", 48, 49);
    b.gfm(19, ramp);
    b.gfl3(23);
    b.gfl3(29);
    b.gfl3(31);
    b.gfl1(41);
    b.gfl1(46);
    b.gfl1(47);
    b.gfl1(51);

    // MG 3.
    b.block(&[60, 62], &[]);
    b.block(&[52, 53, 54, 55, 56, 57, 58, 59], &[(57, 61)]);
    b.block(&[63, 64, 65, 66], &[]);
    b.switch("sw5", 60, 59);
    b.switch("sw6", 58, 63);
    b.gfm(60, ramp);
    b.gfl3(57);
    b.gfl1(61);
    b.gfl1(64);

    // MG 4.
    b.block(&[72, 73, 74, 75, 76], &[]);
    b.block(
        &[67, 68, 69, 70, 71, 77, 78, 79, 86, 87, 88, 89, 90, 91, 92, 97, 98, 99, 100],
        &[(100, 117)],
    );
    b.block(
        &[80, 81, 82, 83, 84, 85, 93, 94, 95, 96, 101, 102, 103, 104, 105, 106, 107],
        &[],
    );
    b.block(&[108, 109, 110, 111, 112, 113, 114, 116], &[(116, 119), (114, 120), (112, 121), (110, 122), (108, 123)]);
    b.switch("sw7", 72, 71);
    b.switch("sw8", 79, 80);
    b.switch("sw9", 107, 108);
    b.gfm(76, ramp);
    b.gfl3(70);
    b.gfl3(80);
    b.gfl3(90);
    b.gfl3(110);
    b.gfl1(69);
    b.gfl1(82);
    b.gfl1(93);
    b.gfl1(97);
    b.gfl1(103);

    // Loads. Attacked: 12 (MG1), 21 and 46 (MG2), 66 (MG3), 73/75/97 (MG4).
    b.load(8, "res_base", false);
    b.load(9, "res_high", false);
    b.load(11, "midrise_apartment", false);
    b.load(12, "quick_service_restaurant", true);
    b.load(14, "res_low", false);
    b.load(1, "small_hotel", false);
    b.load(3, "res_base", false);
    b.load(4, "res_high", false);
    b.load(6, "quick_service_restaurant", false);
    b.load(15, "res_low", false);
    b.load(17, "res_base", false);

    b.load(18, "res_high", false);
    b.load(20, "midrise_apartment", false);
    b.load(21, "quick_service_restaurant", true);
    b.load(24, "res_base", false);
    b.load(31, "res_low", false);
    b.load(35, "small_hotel", false);
    b.load(39, "res_base", false);
    b.load(43, "res_high", false);
    b.load(28, "res_base", false);
    b.load(44, "res_low", false);
    b.load(46, "full_service_restaurant", true);
    b.load(115, "res_base", false);
    b.load(49, "res_high", false);
    b.load(51, "midrise_apartment", false);
    b.load(118, "res_base", false);

    b.load(60, "res_base", false);
    b.load(62, "small_hotel", false);
    b.load(52, "res_low", false);
    b.load(55, "res_high", false);
    b.load(57, "quick_service_restaurant", false);
    b.load(61, "res_base", false);
    b.load(63, "res_base", false);
    b.load(65, "res_low", false);
    b.load(66, "small_hotel", true);

    b.load(72, "res_base", false);
    b.load(73, "midrise_apartment", true);
    b.load(74, "res_low", false);
    b.load(75, "res_high", true);
    b.load(67, "res_base", false);
    b.load(69, "res_high", false);
    b.load(87, "quick_service_restaurant", false);
    b.load(92, "res_base", false);
    b.load(97, "full_service_restaurant", true);
    b.load(99, "res_low", false);
    b.load(117, "res_base", false);
    b.load(81, "res_high", false);
    b.load(94, "small_hotel", false);
    b.load(105, "res_base", false);
    b.load(109, "res_low", false);
    b.load(116, "res_base", false);
    b.load(120, "res_high", false);

    b.finish()
}

/// The switch-closure stages of the bundled restoration narrative: each
/// block energizes one switch-hop later than its neighbor toward the
/// grid-forming unit.
pub fn ieee123_switch_stages() -> Vec<(&'static str, usize)> {
    vec![
        ("sw1", 2),
        ("sw2", 2),
        ("sw3", 3),
        ("sw4", 4),
        ("sw5", 2),
        ("sw6", 3),
        ("sw7", 2),
        ("sw8", 3),
        ("sw9", 4),
    ]
}

/// A compact two-block island shaped like microgrid 4 of the 123-bus case:
/// a grid-forming unit at bus 76 feeding single-phase loads on buses 73, 74,
/// 75, and a second block (buses 92, 97, 99) behind switch `sw10` carrying
/// two three-phase grid-following units and the bulk load. Ramp headroom is
/// deliberately tight (6 kW per phase at stage 2).
pub fn mg4_island() -> Feeder {
    let buses = vec![
        Bus { id: "76".into(), phases: PhaseSet::ABC, vmin2: VMIN2, vmax2: VMAX2 },
        Bus { id: "75".into(), phases: PhaseSet::ABC, vmin2: VMIN2, vmax2: VMAX2 },
        Bus { id: "73".into(), phases: PhaseSet::single(Phase::A), vmin2: VMIN2, vmax2: VMAX2 },
        Bus { id: "74".into(), phases: PhaseSet::single(Phase::B), vmin2: VMIN2, vmax2: VMAX2 },
        Bus { id: "92".into(), phases: PhaseSet::ABC, vmin2: VMIN2, vmax2: VMAX2 },
        Bus { id: "97".into(), phases: PhaseSet::ABC, vmin2: VMIN2, vmax2: VMAX2 },
        Bus { id: "99".into(), phases: PhaseSet::ABC, vmin2: VMIN2, vmax2: VMAX2 },
    ];
    let line = |id: &str, from: &str, to: &str, phases: PhaseSet, switch: bool| {
        let (r, x) = if phases == PhaseSet::ABC {
            three_phase_z(0.04)
        } else {
            single_phase_z(phases.iter().next().unwrap(), 0.03)
        };
        Line {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            phases,
            r_ohm: r,
            x_ohm: x,
            r_hat: [[0.0; 3]; 3],
            x_hat: [[0.0; 3]; 3],
            pmax_kw: 2500.0,
            qmax_kvar: 1250.0,
            is_switch: switch,
        }
    };
    let lines = vec![
        line("l76_75", "76", "75", PhaseSet::ABC, false),
        line("l75_73", "75", "73", PhaseSet::single(Phase::A), false),
        line("l75_74", "75", "74", PhaseSet::single(Phase::B), false),
        line("sw10", "75", "92", PhaseSet::ABC, true),
        line("l92_97", "92", "97", PhaseSet::ABC, false),
        line("l97_99", "97", "99", PhaseSet::ABC, false),
    ];
    let ibrs = vec![
        Ibr {
            id: "g76".into(),
            bus: "76".into(),
            kind: IbrKind::Gfm,
            phases: PhaseSet::ABC,
            pmax_kw: 500.0,
            qmax_kvar: 250.0,
            ramp: Some(RampParams {
                mls_kw: 6.0,
                sens_kw_per_hz: 5.0,
                f_nadir: 59.7,
                f_min: 59.3,
            }),
        },
        Ibr {
            id: "g70".into(),
            bus: "92".into(),
            kind: IbrKind::Gfl,
            phases: PhaseSet::ABC,
            pmax_kw: 500.0,
            qmax_kvar: 250.0,
            ramp: None,
        },
        Ibr {
            id: "g90".into(),
            bus: "97".into(),
            kind: IbrKind::Gfl,
            phases: PhaseSet::ABC,
            pmax_kw: 500.0,
            qmax_kvar: 250.0,
            ramp: None,
        },
    ];
    let load = |id: &str, bus: &str, phases: PhaseSet| LoadPoint {
        id: id.into(),
        bus: bus.into(),
        phases,
        weight: 1.0,
        profile: "res_base".into(),
        load_type: LoadType::Residential,
        attacked: false,
    };
    let loads = vec![
        load("L73", "73", PhaseSet::single(Phase::A)),
        load("L74", "74", PhaseSet::single(Phase::B)),
        load("L75", "75", PhaseSet::single(Phase::C)),
        load("L92", "92", PhaseSet::ABC),
        load("L97", "97", PhaseSet::ABC),
        load("L99", "99", PhaseSet::single(Phase::A)),
    ];
    Feeder::assemble(1000.0, 4.16, buses, lines, ibrs, loads).expect("mg4 island is valid")
}

/// Two buses, one three-phase line, a grid-forming unit at bus 1 and one
/// load at bus 2.
pub fn two_bus() -> Feeder {
    let mut b = Builder::new();
    b.block(&[1, 2], &[]);
    b.gfm(1, default_gfm_ramp());
    b.load(2, "res_base", false);
    b.finish()
}

/// Four buses in a switch chain: {1, 2} -- sw_a -- {3} -- sw_b -- {4}, with
/// a grid-forming unit at bus 1 and loads at buses 2, 3, 4.
pub fn four_bus() -> Feeder {
    let mut b = Builder::new();
    b.block(&[1, 2], &[]);
    b.block(&[3], &[]);
    b.block(&[4], &[]);
    b.switch("sw_a", 2, 3);
    b.switch("sw_b", 3, 4);
    b.gfm(1, default_gfm_ramp());
    b.load(2, "res_base", false);
    b.load(3, "res_high", false);
    b.load(4, "res_low", false);
    b.finish()
}

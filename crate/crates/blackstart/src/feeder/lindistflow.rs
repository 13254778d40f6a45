//! Linearized three-phase voltage-drop coefficients.
//!
//! With nearly-balanced voltages, the squared-magnitude drop along a line is
//! `U_from - U_to = 2 (R_hat P + X_hat Q)` per phase, where `P`, `Q` are the
//! per-phase flows. The hat matrices come from the relative phasors
//! `alpha = (1, e^{-i 2pi/3}, e^{i 2pi/3})` via `Gamma_pq = alpha_p *
//! conj(alpha_q)`:
//!
//! ```text
//! R_hat = Re(Gamma) o R + Im(Gamma) o X
//! X_hat = Re(Gamma) o X - Im(Gamma) o R
//! ```
//!
//! (`o` is the entrywise product.) A fixed-point power-flow oracle in the
//! test suite guards this construction on a two-bus case.

use super::PhaseMatrix;

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// `Re(Gamma)` for `Gamma_pq = alpha_p * conj(alpha_q)`.
pub const GAMMA_RE: PhaseMatrix = [
    [1.0, -0.5, -0.5],
    [-0.5, 1.0, -0.5],
    [-0.5, -0.5, 1.0],
];

/// `Im(Gamma)`.
pub const GAMMA_IM: PhaseMatrix = [
    [0.0, HALF_SQRT3, -HALF_SQRT3],
    [-HALF_SQRT3, 0.0, HALF_SQRT3],
    [HALF_SQRT3, -HALF_SQRT3, 0.0],
];

/// Build the linearized drop coefficients from per-unit series impedance.
pub fn hat_matrices(r_pu: &PhaseMatrix, x_pu: &PhaseMatrix) -> (PhaseMatrix, PhaseMatrix) {
    let mut r_hat = [[0.0; 3]; 3];
    let mut x_hat = [[0.0; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            r_hat[p][q] = GAMMA_RE[p][q] * r_pu[p][q] + GAMMA_IM[p][q] * x_pu[p][q];
            x_hat[p][q] = GAMMA_RE[p][q] * x_pu[p][q] - GAMMA_IM[p][q] * r_pu[p][q];
        }
    }
    (r_hat, x_hat)
}

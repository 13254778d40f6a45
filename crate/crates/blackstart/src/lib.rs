//! Toolkit for studying how adversarial perturbations of weather inputs to a
//! load forecaster propagate into infeasible distribution-system restoration
//! plans.
//!
//! The pipeline has four legs, each usable on its own:
//!
//! 1. [`forecast`] — windowed dataset handling and a small differentiable
//!    forecaster with exact reverse-mode input gradients.
//! 2. [`attack`] — projected-gradient attacks on the forecaster's weather
//!    inputs: plain PGD, greedy feature-ranked PGD, and a sparse top-n
//!    cell attack, each in white-box (analytic gradient) or black-box
//!    (query-based finite-difference) mode.
//! 3. [`planner`] — staged restoration planning over a three-phase feeder
//!    ([`feeder`]) as a mixed-integer linear program solved by the embedded
//!    [`lp`] solver, with cold-load-pickup demand inflation ([`clpu`]).
//! 4. [`validator`] — stage-by-stage linearized optimal-power-flow
//!    feasibility checks of a plan against true loads, attributing each
//!    failure to named constraints.
//!
//! [`experiment`] wires the legs into a reproducible end-to-end run and
//! writes CSV/JSON reports. The `blackstart` binary exposes the same steps
//! as subcommands; the `examples/` directory shows one runnable program per
//! capability.

pub mod attack;
pub mod clpu;
pub mod experiment;
pub mod feeder;
pub mod forecast;
pub mod lp;
pub mod mat;
pub mod planner;
pub mod validator;

//! The V₂ dynamical machine.
//!
//! Every node carries a relaxed spin `(σ, X)` with `σ ∈ {−1, +1}` and
//! `X ∈ [−1, 1)`. The remainders move under a piecewise-constant force
//! field; a remainder leaving `[−1, 1)` wraps around and flips its spin.
//! With this force field the discrete cut of σ does not decrease along a
//! trajectory, and at steady state every rounding center gives the same cut.

mod clusters;
mod dynamics;
mod evolve;
mod rounding;
mod state;
mod trace;

pub use clusters::{detect_clusters, external_charges, snap_to_clusters, Cluster};
pub use dynamics::{
    discrete_cut, eom_rhs, euler_step, max_speed, relaxed_cut_v2, Direction,
};
pub use evolve::{
    evolve, relaxed_gap, restart_seed, solve_maxcut, EvolveOutcome, Evolution, MaxCutOutcome, SolverParams,
    StepStats, StopReason,
};
pub use rounding::{best_rounding, optimal_rounding_spectrum, parametric_round, Rounding};
pub use state::{decompose, RelaxedSpinState};
pub use trace::{format_g9, TraceConfig, TraceRecord, Trajectory};

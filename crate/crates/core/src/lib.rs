//! Non-binary dynamical Ising machine (V₂ model) for max-cut and for
//! coloring problems reduced to max-cut: proper graph coloring, Latin squares
//! and Sudoku.

pub mod coloring;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod machine;
pub mod puzzles;

pub use coloring::{
    build_coloring_ising, conflict_count, decode_colors, is_proper, solve_coloring,
    ApexWeighting, ColorAssignment, ColoringOutcome, ColoringSolver, IsingEmbedding,
};
pub use error::{Error, Result};
pub use graph::{
    complete_graph, kronecker_identity_left, kronecker_identity_right, parse_edge_list, Edge,
    WeightedGraph,
};
pub use machine::{
    decompose, discrete_cut, eom_rhs, euler_step, evolve, relaxed_cut_v2, Direction,
    EvolveOutcome, Evolution, RelaxedSpinState, SolverParams, StopReason, TraceConfig,
    Trajectory,
};

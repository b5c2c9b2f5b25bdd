use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

use super::dynamics::{
    apply_velocity, apply_velocity_guarded, CrossingScratch, cut_unchecked, max_speed, relaxed_unchecked,
    velocity_into, Direction,
};
use super::clusters::detect_clusters;
use super::state::RelaxedSpinState;
use super::trace::{TraceConfig, TraceRecord, Trajectory};

/// Integration and termination settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub dt: f64,
    pub max_steps: usize,
    /// Steps without any flip before the clusters are checked for balance;
    /// a balanced state ends the run.
    pub stall_window: usize,
    /// Steps between perturbations; 0 disables them.
    pub perturb_period: usize,
    pub perturb_amplitude: f64,
    pub seed: u64,
    /// Break up simultaneous co-oriented flips inside one spin complex.
    pub mitigate_spurious: bool,
    /// Hold back boundary crossings that would move the discrete cut the
    /// wrong way. These only arise when Euler steps jitter a cluster across
    /// X = ±1.
    pub guard_crossings: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 0.01,
            max_steps: 20_000,
            stall_window: 1_000,
            perturb_period: 0,
            perturb_amplitude: 0.0,
            seed: 0,
            mitigate_spurious: true,
            guard_crossings: true,
        }
    }
}

impl SolverParams {
    /// Defaults for solve runs: coarser steps, no crossing guard, a kick of
    /// up to ±0.1 in X every 500 steps.
    pub fn solving() -> Self {
        SolverParams {
            dt: 0.1,
            guard_crossings: false,
            perturb_period: 500,
            perturb_amplitude: 0.1,
            ..Self::default()
        }
    }

    /// Solve defaults for instances with many pinned variables, such as
    /// Sudoku clues: kicks of up to ±1 every 300 steps. Small kicks rarely
    /// move a cluster held in place by pinned neighbours.
    pub fn solving_pinned() -> Self {
        SolverParams {
            perturb_period: 300,
            perturb_amplitude: 1.0,
            ..Self::solving()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        if !(self.perturb_amplitude >= 0.0 && self.perturb_amplitude < 2.0) {
            return Err(Error::invalid(format!(
                "perturb_amplitude must lie in [0, 2), got {}",
                self.perturb_amplitude
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No flip for a full stall window and no net force on any cluster.
    Stalled,
    /// The caller's target predicate held.
    Target,
    MaxSteps,
}

/// Bookkeeping collected along an evolution.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub flips: usize,
    /// Steps in which two or more spins of one complex flipped together.
    pub flagged_steps: usize,
    /// Steps (perturbations excluded) where the discrete cut went down.
    pub cut_decreases: usize,
    /// Decreases that happened in steps that were not flagged.
    pub unflagged_decreases: usize,
    /// Co-oriented double flips broken up by the jitter rule.
    pub mitigated: usize,
    /// Boundary crossings held back by the crossing guard.
    pub held: usize,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub stop: StopReason,
    pub steps: usize,
    pub cut: f64,
    pub trajectory: Trajectory,
    pub stats: StepStats,
}

type Target<'a> = Box<dyn FnMut(&RelaxedSpinState) -> bool + 'a>;

/// Configurable driver for the Euler-integrated dynamics.
pub struct Evolution<'a> {
    graph: &'a WeightedGraph,
    params: SolverParams,
    direction: Direction,
    complexes: Option<&'a [usize]>,
    trace: TraceConfig,
    target: Option<Target<'a>>,
}

impl<'a> Evolution<'a> {
    pub fn new(graph: &'a WeightedGraph, params: SolverParams, direction: Direction) -> Self {
        Evolution {
            graph,
            params,
            direction,
            complexes: None,
            trace: TraceConfig::default(),
            target: None,
        }
    }

    /// Complex label per node; nodes sharing a label form one spin complex.
    /// Without labels every node is treated as its own complex.
    pub fn complexes(mut self, labels: &'a [usize]) -> Self {
        self.complexes = Some(labels);
        self
    }

    pub fn trace(mut self, trace: TraceConfig) -> Self {
        self.trace = trace;
        self
    }

    /// Stops as soon as `pred` holds; checked initially and after every
    /// step that changed σ.
    pub fn until(mut self, pred: impl FnMut(&RelaxedSpinState) -> bool + 'a) -> Self {
        self.target = Some(Box::new(pred));
        self
    }

    pub fn run(mut self, state: &mut RelaxedSpinState) -> Result<EvolveOutcome> {
        let g = self.graph;
        let p = self.params.clone();
        p.validate()?;
        Error::check_len(g.node_count(), state.len())?;
        if let Some(labels) = self.complexes {
            Error::check_len(g.node_count(), labels.len())?;
        }
        if self.trace.xi {
            state.track_winding();
        }

        let n = state.len();
        let mut perturb_rng = ChaCha8Rng::seed_from_u64(p.seed);
        // separate stream so the jitter rule never shifts the perturbation draws
        let mut jitter_rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x9E37_79B9_7F4A_7C15);

        let cluster_eps = 4.0 * p.dt * max_speed(g) + f64::EPSILON;
        let mut velocity = vec![0.0; n];
        let mut prev_x = vec![0.0; n];
        let mut prev_sigma = vec![0i8; n];
        let mut flipped = Vec::new();
        let mut scratch = CrossingScratch::default();
        let band = 2.0 * p.dt * max_speed(g);
        let mut quiet = 0usize;
        let mut stats = StepStats::default();
        let mut trajectory = Trajectory::default();
        let mut cut = cut_unchecked(g, state.sigma());

        self.trace.record(&mut trajectory, 0, p.dt, g, state, cut);
        if let Some(target) = self.target.as_mut() {
            if target(state) {
                return Ok(EvolveOutcome {
                    stop: StopReason::Target,
                    steps: 0,
                    cut,
                    trajectory,
                    stats,
                });
            }
        }

        let mut stop = StopReason::MaxSteps;
        let mut step = 0;
        while step < p.max_steps {
            step += 1;
            velocity_into(g, state, self.direction, &mut velocity);
            prev_x.copy_from_slice(state.x());
            prev_sigma.copy_from_slice(state.sigma());
            if p.guard_crossings {
                stats.held += apply_velocity_guarded(
                    g,
                    state,
                    &velocity,
                    p.dt,
                    band,
                    self.direction,
                    &mut flipped,
                    &mut scratch,
                )?;
            } else {
                apply_velocity(state, &velocity, p.dt, &mut flipped)?;
            }

            let mut flagged = false;
            if flipped.len() >= 2 {
                if let Some(labels) = self.complexes {
                    if p.mitigate_spurious {
                        stats.mitigated += mitigate(
                            state,
                            labels,
                            &mut flipped,
                            &prev_sigma,
                            &prev_x,
                            &velocity,
                            p.dt,
                            &mut jitter_rng,
                        );
                    }
                    flagged = shares_complex(&flipped, labels);
                }
            }
            if flagged {
                stats.flagged_steps += 1;
            }

            if !flipped.is_empty() {
                stats.flips += flipped.len();
                let delta = flip_delta(g, &prev_sigma, &flipped);
                if delta < -1e-9 {
                    stats.cut_decreases += 1;
                    if !flagged {
                        stats.unflagged_decreases += 1;
                    }
                }
                cut += delta;
            }

            let mut changed = !flipped.is_empty();
            if p.perturb_period > 0 && step % p.perturb_period == 0 && p.perturb_amplitude > 0.0 {
                let before = state.sigma().to_vec();
                let mut kicked = Vec::new();
                for i in 0..n {
                    if state.is_fixed(i) {
                        continue;
                    }
                    let kick = perturb_rng.gen_range(-p.perturb_amplitude..=p.perturb_amplitude);
                    if state.advance(i, state.x()[i] + kick) {
                        kicked.push(i);
                    }
                }
                if !kicked.is_empty() {
                    cut += flip_delta(g, &before, &kicked);
                    changed = true;
                }
            }

            if changed {
                // keep the running cut from accumulating rounding error
                cut = cut_unchecked(g, state.sigma());
                quiet = 0;
            } else {
                quiet += 1;
            }

            self.trace.record(&mut trajectory, step, p.dt, g, state, cut);

            if changed {
                if let Some(target) = self.target.as_mut() {
                    if target(state) {
                        stop = StopReason::Target;
                        break;
                    }
                }
            }
            if p.stall_window > 0 && quiet >= p.stall_window {
                if clusters_balanced(g, state, cluster_eps)? {
                    stop = StopReason::Stalled;
                    break;
                }
                quiet = 0;
            }
        }

        self.trace.finish(&mut trajectory, step, p.dt, g, state, cut);
        Ok(EvolveOutcome {
            stop,
            steps: step,
            cut,
            trajectory,
            stats,
        })
    }
}

/// Runs the dynamics with default tracing and no complexes.
pub fn evolve(
    g: &WeightedGraph,
    state: &mut RelaxedSpinState,
    params: &SolverParams,
    direction: Direction,
) -> Result<EvolveOutcome> {
    Evolution::new(g, params.clone(), direction).run(state)
}

/// Seed of restart (or trial) `r` in a run seeded with `seed`. Restart 0
/// keeps the seed itself.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Best terminal state over a set of max-cut restarts.
#[derive(Debug, Clone, Serialize)]
pub struct MaxCutOutcome {
    pub cut: f64,
    pub sigma: Vec<i8>,
    /// Index of the restart that produced `cut`.
    pub best_restart: usize,
    pub restarts: usize,
    /// Steps of the best restart.
    pub steps: usize,
    pub stop: StopReason,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Ascent from `restarts` random states, restart `r` seeded with
/// `restart_seed(params.seed, r)`. Restarts run on the current rayon pool; ties go to the
/// lowest index so the answer does not depend on scheduling.
pub fn solve_maxcut(
    g: &WeightedGraph,
    params: &SolverParams,
    restarts: usize,
    trace: &TraceConfig,
) -> Result<MaxCutOutcome> {
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    params.validate()?;
    let runs: Vec<Result<(EvolveOutcome, RelaxedSpinState)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = restart_seed(params.seed, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let mut state = RelaxedSpinState::random(g.node_count(), &mut rng);
            let p = SolverParams {
                seed,
                ..params.clone()
            };
            let out = Evolution::new(g, p, Direction::Ascent)
                .trace(*trace)
                .run(&mut state)?;
            Ok((out, state))
        })
        .collect();
    let mut best: Option<(usize, EvolveOutcome, RelaxedSpinState)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let (out, state) = run?;
        if best.as_ref().is_none_or(|(_, b, _)| out.cut > b.cut) {
            best = Some((r, out, state));
        }
    }
    let (r, out, state) = best.expect("at least one restart ran");
    Ok(MaxCutOutcome {
        cut: out.cut,
        sigma: state.sigma().to_vec(),
        best_restart: r,
        restarts,
        steps: out.steps,
        stop: out.stop,
        trajectory: out.trajectory,
    })
}

/// Cut change from flipping `nodes` one after another starting at `sigma`.
fn flip_delta(g: &WeightedGraph, sigma: &[i8], nodes: &[usize]) -> f64 {
    let mut current: Vec<(usize, i8)> = Vec::with_capacity(nodes.len());
    let spin = |i: usize, current: &[(usize, i8)]| {
        current
            .iter()
            .rev()
            .find(|(j, _)| *j == i)
            .map_or(sigma[i], |&(_, s)| s)
    };
    let mut delta = 0.0;
    for &i in nodes {
        let si = spin(i, &current);
        for (j, w) in g.neighbors(i) {
            delta += w * f64::from(si * spin(j, &current));
        }
        current.push((i, -si));
    }
    delta
}

fn shares_complex(flipped: &[usize], labels: &[usize]) -> bool {
    flipped
        .iter()
        .enumerate()
        .any(|(a, &i)| flipped[a + 1..].iter().any(|&j| labels[i] == labels[j]))
}

/// For every complex in which two co-oriented spins flipped in the same step,
/// re-advances the lowest id with its step shortened by a uniform `τ ∈ (0, dt)`.
#[allow(clippy::too_many_arguments)]
fn mitigate(
    state: &mut RelaxedSpinState,
    labels: &[usize],
    flipped: &mut Vec<usize>,
    prev_sigma: &[i8],
    prev_x: &[f64],
    velocity: &[f64],
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut redo = Vec::new();
    for (a, &i) in flipped.iter().enumerate() {
        let partner = flipped[a + 1..]
            .iter()
            .any(|&j| labels[i] == labels[j] && prev_sigma[i] == prev_sigma[j]);
        let already = redo.iter().any(|&r: &usize| labels[r] == labels[i]);
        if partner && !already {
            redo.push(i);
        }
    }
    for &i in &redo {
        state.sigma_mut()[i] = prev_sigma[i];
        state.set_x(i, prev_x[i]);
        let tau = rng.gen_range(f64::MIN_POSITIVE..dt);
        if !state.advance(i, prev_x[i] + (dt - tau) * velocity[i]) {
            flipped.retain(|&j| j != i);
        }
    }
    redo.len()
}

/// True when no cluster of free nodes feels a net force. Forces inside a
/// cluster cancel in its mean velocity, so only couplings between clusters
/// count. Clusters holding a fixed node cannot move and are skipped.
fn clusters_balanced(g: &WeightedGraph, state: &RelaxedSpinState, eps: f64) -> Result<bool> {
    let n = state.len();
    let clusters = detect_clusters(state, &vec![0.0; n], eps)?;
    let mut label = vec![0usize; n];
    let mut spin = vec![0.0; n];
    for (c, cl) in clusters.iter().enumerate() {
        for &i in &cl.members {
            label[i] = c;
            let s = f64::from(state.sigma()[i]);
            // members on the far side of X = ±1 read with reversed spin
            spin[i] = if (state.x()[i] - cl.position).abs() > 1.0 { -s } else { s };
        }
    }
    let scale = g
        .edges()
        .iter()
        .map(|e| e.w.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    for (c, cl) in clusters.iter().enumerate() {
        if cl.members.iter().any(|&i| state.is_fixed(i)) {
            continue;
        }
        let mut force = 0.0;
        for &i in &cl.members {
            for (j, w) in g.neighbors(i) {
                let other = label[j];
                if other != c {
                    let dir = if cl.position > clusters[other].position { 1.0 } else { -1.0 };
                    force += w * spin[i] * spin[j] * dir;
                }
            }
        }
        if force.abs() > 1e-9 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `C_V − C(σ)` of the current state.
pub fn relaxed_gap(g: &WeightedGraph, state: &RelaxedSpinState) -> f64 {
    relaxed_unchecked(g, state) - cut_unchecked(g, state.sigma())
}

impl TraceConfig {
    fn record(
        &self,
        traj: &mut Trajectory,
        step: usize,
        dt: f64,
        g: &WeightedGraph,
        state: &RelaxedSpinState,
        cut: f64,
    ) {
        if self.stride == 0 || !step.is_multiple_of(self.stride) {
            return;
        }
        traj.push(self.snapshot(step, dt, g, state, cut));
    }

    fn finish(
        &self,
        traj: &mut Trajectory,
        step: usize,
        dt: f64,
        g: &WeightedGraph,
        state: &RelaxedSpinState,
        cut: f64,
    ) {
        if self.stride == 0 || traj.last_step() == Some(step) {
            return;
        }
        traj.push(self.snapshot(step, dt, g, state, cut));
    }

    fn snapshot(
        &self,
        step: usize,
        dt: f64,
        g: &WeightedGraph,
        state: &RelaxedSpinState,
        cut: f64,
    ) -> TraceRecord {
        TraceRecord {
            step,
            t: step as f64 * dt,
            cut,
            relaxed_cut: relaxed_unchecked(g, state),
            sigma: self.states.then(|| state.sigma().to_vec()),
            x: self.states.then(|| state.x().to_vec()),
            xi: self.xi.then(|| state.xi()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::complete_graph;

    #[test]
    fn single_edge_reaches_full_cut() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = RelaxedSpinState::random(2, &mut rng);
            let out = evolve(&g, &mut s, &SolverParams::default(), Direction::Ascent).unwrap();
            assert_eq!(out.cut, 1.0, "seed {seed}");
            assert_eq!(out.stop, StopReason::Stalled);
        }
    }

    #[test]
    fn triangle_reaches_two() {
        let g = complete_graph(3, 1.0).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = RelaxedSpinState::random(3, &mut rng);
            let out = evolve(&g, &mut s, &SolverParams::default(), Direction::Ascent).unwrap();
            assert_eq!(out.cut, 2.0, "seed {seed}");
        }
    }

    #[test]
    fn edgeless_graph_stalls_unchanged() {
        let g = WeightedGraph::empty(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = RelaxedSpinState::random(4, &mut rng);
        let before = s.clone();
        let out = evolve(&g, &mut s, &SolverParams::default(), Direction::Ascent).unwrap();
        assert_eq!(out.stop, StopReason::Stalled);
        assert_eq!(s, before);
        assert_eq!(out.steps, 1_000);
    }

    #[test]
    fn fixed_nodes_never_move() {
        let g = complete_graph(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = RelaxedSpinState::random(4, &mut rng);
        s.pin(0, 1, 0.25).unwrap();
        let params = SolverParams::solving();
        evolve(&g, &mut s, &params, Direction::Ascent).unwrap();
        assert_eq!((s.sigma()[0], s.x()[0]), (1, 0.25));
    }

    #[test]
    fn target_stops_early() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        let mut s = RelaxedSpinState::new(vec![1, 1], vec![0.5, -0.3]).unwrap();
        let out = Evolution::new(&g, SolverParams::default(), Direction::Ascent)
            .until(|s| s.sigma()[0] != s.sigma()[1])
            .run(&mut s)
            .unwrap();
        assert_eq!(out.stop, StopReason::Target);
        assert_eq!(out.cut, 1.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let g = WeightedGraph::empty(1);
        let mut s = RelaxedSpinState::uniform(1);
        let bad = SolverParams {
            dt: 0.0,
            ..SolverParams::default()
        };
        assert!(evolve(&g, &mut s, &bad, Direction::Ascent).is_err());
        let bad = SolverParams {
            max_steps: 0,
            ..SolverParams::default()
        };
        assert!(evolve(&g, &mut s, &bad, Direction::Ascent).is_err());
    }

    #[test]
    fn flip_delta_is_sequential() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        // flipping both ends of an uncut edge leaves it uncut
        assert_eq!(flip_delta(&g, &[1, 1], &[0, 1]), 0.0);
        assert_eq!(flip_delta(&g, &[1, 1], &[0]), 1.0);
    }

    #[test]
    fn same_seed_same_run() {
        let g = complete_graph(6, 1.0).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut s = RelaxedSpinState::random(6, &mut rng);
            let out = evolve(&g, &mut s, &SolverParams::solving().with_seed(4), Direction::Ascent)
                .unwrap();
            (s, out.steps)
        };
        assert_eq!(run(), run());
    }
}

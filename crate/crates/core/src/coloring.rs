//! K-coloring as max-cut: one-hot spin complexes per node, same-color
//! couplings between neighbours, and a pinned apex spin.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    complete_graph, kronecker_identity_left, kronecker_identity_right, Edge, WeightedGraph,
};
use crate::machine::{
    restart_seed, Direction, Evolution, RelaxedSpinState, SolverParams, StopReason, TraceConfig,
    Trajectory,
};

/// How the apex coupling of each color spin is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApexWeighting {
    /// `K + λ(K − 2)` on every apex edge.
    #[default]
    Uniform,
    /// `deg(i) + λ(K − 2)`, with `deg` the weighted degree of the source
    /// node. This is what the penalty expands to on irregular graphs.
    Degree,
}

/// A coloring instance laid out as a weighted graph on `1 + N·K` spins.
#[derive(Debug, Clone)]
pub struct IsingEmbedding {
    pub graph: WeightedGraph,
    /// Node count of the source graph.
    pub nodes: usize,
    pub k: usize,
    pub lambda: f64,
    pub apex: ApexWeighting,
    /// `(index, σ, X)` triples held fixed; the apex always comes first.
    pub pinned: Vec<(usize, i8, f64)>,
}

impl IsingEmbedding {
    /// Spin index of `(node, color)` with `color` counted from 0.
    pub fn index(&self, node: usize, color: usize) -> usize {
        1 + node * self.k + color
    }

    /// Complex label per spin: the source node, or `nodes` for the apex.
    pub fn complexes(&self) -> Vec<usize> {
        let mut labels = Vec::with_capacity(self.graph.node_count());
        labels.push(self.nodes);
        for i in 0..self.nodes {
            labels.extend(std::iter::repeat_n(i, self.k));
        }
        labels
    }

    /// Pins node `node` to `color` (1-based): its own spin up, the rest down,
    /// all at X = 0.
    pub fn pin_color(&mut self, node: usize, color: usize) -> Result<()> {
        if node >= self.nodes {
            return Err(Error::invalid(format!("pinned node {node} out of range")));
        }
        if color == 0 || color > self.k {
            return Err(Error::invalid(format!("color {color} outside 1..={}", self.k)));
        }
        let span = self.index(node, 0)..self.index(node, self.k);
        self.pinned.retain(|(idx, _, _)| !span.contains(idx));
        for c in 0..self.k {
            let s = if c + 1 == color { 1 } else { -1 };
            self.pinned.push((self.index(node, c), s, 0.0));
        }
        Ok(())
    }

    /// All-up state with the pins applied.
    pub fn initial_state(&self) -> RelaxedSpinState {
        let mut state = RelaxedSpinState::uniform(self.graph.node_count());
        for &(i, s, x) in &self.pinned {
            state.pin(i, s, x).expect("pins are validated on insertion");
        }
        state
    }
}

/// Builds the coloring instance with the uniform apex weight.
pub fn build_coloring_ising(g: &WeightedGraph, k: usize, lambda: f64) -> Result<IsingEmbedding> {
    build_coloring_ising_with(g, k, lambda, ApexWeighting::Uniform)
}

pub fn build_coloring_ising_with(
    g: &WeightedGraph,
    k: usize,
    lambda: f64,
    apex: ApexWeighting,
) -> Result<IsingEmbedding> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 colors, got {k}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let n = g.node_count();
    let same_color = kronecker_identity_left(g, k)?;
    let one_hot = kronecker_identity_right(n, &complete_graph(k, 1.0)?)?.scaled(lambda);
    let penalty = lambda * (k as f64 - 2.0);
    let graph = same_color.union(&one_hot)?.add_apex_with(|idx| match apex {
        ApexWeighting::Uniform => k as f64 + penalty,
        ApexWeighting::Degree => g.weighted_degree(idx / k) + penalty,
    });
    Ok(IsingEmbedding {
        graph,
        nodes: n,
        k,
        lambda,
        apex,
        pinned: vec![(0, 1, 0.0)],
    })
}

/// The one-hot part alone for a single node: `K_K` with unit weights and an
/// apex (index 0) of weight `K − 2`. Its maximum cut is `(K − 1)²`, reached
/// exactly by the one-hot patterns. For `K = 2` the apex is isolated.
pub fn one_hot_gadget(k: usize) -> Result<WeightedGraph> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 colors, got {k}")));
    }
    let apex_w = k as f64 - 2.0;
    let mut edges = Vec::new();
    if apex_w > 0.0 {
        edges.extend((1..=k).map(|v| Edge { u: 0, v, w: apex_w }));
    }
    for u in 1..=k {
        for v in (u + 1)..=k {
            edges.push(Edge { u, v, w: 1.0 });
        }
    }
    WeightedGraph::from_edges(k + 1, edges.into_iter().map(|e| (e.u, e.v, e.w)))
}

/// Color per node, 1-based; `None` marks a complex that is not one-hot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorAssignment {
    pub colors: Vec<Option<usize>>,
}

impl ColorAssignment {
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn invalid_count(&self) -> usize {
        self.colors.iter().filter(|c| c.is_none()).count()
    }
}

/// Reads node colors off the spin complexes.
pub fn decode_colors(state: &RelaxedSpinState, emb: &IsingEmbedding) -> Result<ColorAssignment> {
    Error::check_len(emb.graph.node_count(), state.len())?;
    Ok(decode_sigma(state.sigma(), emb.nodes, emb.k))
}

fn decode_sigma(sigma: &[i8], nodes: usize, k: usize) -> ColorAssignment {
    let colors = (0..nodes)
        .map(|i| {
            let complex = &sigma[1 + i * k..1 + (i + 1) * k];
            let mut up = complex.iter().enumerate().filter(|(_, &s)| s == 1);
            match (up.next(), up.next()) {
                (Some((c, _)), None) => Some(c + 1),
                _ => None,
            }
        })
        .collect();
    ColorAssignment { colors }
}

/// Every node colored and no edge joining two equal colors.
pub fn is_proper(g: &WeightedGraph, a: &ColorAssignment) -> bool {
    a.len() == g.node_count() && conflict_count(g, a) == 0
}

/// Monochromatic edges plus nodes without a valid color.
pub fn conflict_count(g: &WeightedGraph, a: &ColorAssignment) -> usize {
    let clashes = g
        .edges()
        .iter()
        .filter(|e| match (a.colors.get(e.u), a.colors.get(e.v)) {
            (Some(Some(x)), Some(Some(y))) => x == y,
            _ => false,
        })
        .count();
    clashes + a.invalid_count()
}

/// `H¹` and `H²` evaluated straight from the spin form of the penalties,
/// with the apex spin fixed at +1. `sigma` lists the `N·K` color spins.
pub fn penalty_terms(g: &WeightedGraph, k: usize, sigma: &[i8]) -> Result<(f64, f64)> {
    let n = g.node_count();
    Error::check_len(n * k, sigma.len())?;
    let s = |i: usize, c: usize| f64::from(sigma[i * k + c]);
    let mut h1 = 0.0;
    for i in 0..n {
        for (j, w) in g.neighbors(i) {
            for c in 0..k {
                h1 += 0.5 * w * (s(i, c) * s(j, c) + 2.0 * s(i, c));
            }
        }
    }
    let mut h2 = 0.0;
    for i in 0..n {
        for a in 0..k {
            for b in 0..k {
                h2 += s(i, a) * s(i, b);
            }
            h2 += 2.0 * (k as f64 - 2.0) * s(i, a);
        }
    }
    Ok((h1, h2))
}

/// `σᵀ Â σ` over the whole embedding (ordered pairs).
pub fn quadratic_form(g: &WeightedGraph, sigma: &[i8]) -> Result<f64> {
    Error::check_len(g.node_count(), sigma.len())?;
    Ok(g.edges()
        .iter()
        .map(|e| 2.0 * e.w * f64::from(sigma[e.u] * sigma[e.v]))
        .sum())
}

/// Result of [`ColoringSolver::solve`]. On failure `assignment` is the best
/// attempt (fewest conflicts, earliest restart on ties).
#[derive(Debug, Clone, Serialize)]
pub struct ColoringOutcome {
    pub proper: bool,
    #[serde(rename = "colors")]
    pub assignment: ColorAssignment,
    pub conflicts: usize,
    pub restarts_used: usize,
    /// Steps of the returned restart.
    pub steps: usize,
    /// Steps summed over every restart that ran.
    pub total_steps: usize,
    pub cut: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub state: RelaxedSpinState,
}

/// Restart loop around the evolution of a coloring instance.
#[derive(Debug, Clone)]
pub struct ColoringSolver<'a> {
    graph: &'a WeightedGraph,
    embedding: IsingEmbedding,
    params: SolverParams,
    restarts: usize,
    jobs: usize,
    trace: TraceConfig,
    step_budget: Option<usize>,
}

impl<'a> ColoringSolver<'a> {
    pub fn new(graph: &'a WeightedGraph, k: usize, lambda: f64) -> Result<Self> {
        Ok(ColoringSolver {
            graph,
            embedding: build_coloring_ising(graph, k, lambda)?,
            params: SolverParams::solving(),
            restarts: 50,
            jobs: 1,
            trace: TraceConfig::off(),
            step_budget: None,
        })
    }

    pub fn apex(mut self, apex: ApexWeighting) -> Result<Self> {
        let pins = self.embedding.pinned.clone();
        self.embedding =
            build_coloring_ising_with(self.graph, self.embedding.k, self.embedding.lambda, apex)?;
        self.embedding.pinned = pins;
        Ok(self)
    }

    pub fn params(mut self, params: SolverParams) -> Self {
        self.params = params;
        self
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    /// Restarts evaluated concurrently; the result does not depend on it.
    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn trace(mut self, trace: TraceConfig) -> Self {
        self.trace = trace;
        self
    }

    /// Caps the steps summed over all restarts. Restarts then run one at a
    /// time, each limited to what is left of the budget.
    pub fn step_budget(mut self, steps: usize) -> Self {
        self.step_budget = Some(steps);
        self
    }

    /// Fixes `(node, color)` clues, colors 1-based.
    pub fn pins(mut self, pins: &[(usize, usize)]) -> Result<Self> {
        for &(node, color) in pins {
            self.embedding.pin_color(node, color)?;
        }
        Ok(self)
    }

    pub fn embedding(&self) -> &IsingEmbedding {
        &self.embedding
    }

    pub fn solve(&self) -> Result<ColoringOutcome> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        self.params.validate()?;
        let mut best: Option<ColoringOutcome> = None;
        let mut spent = 0;
        let mut start = 0;
        while start < self.restarts {
            let batch: Vec<Result<ColoringOutcome>> = match self.step_budget {
                Some(budget) => {
                    let left = budget.saturating_sub(spent).min(self.params.max_steps);
                    if left == 0 {
                        break;
                    }
                    vec![self.attempt(start, left)]
                }
                None => {
                    let end = (start + self.jobs).min(self.restarts);
                    let max = self.params.max_steps;
                    if self.jobs > 1 {
                        (start..end).into_par_iter().map(|r| self.attempt(r, max)).collect()
                    } else {
                        (start..end).map(|r| self.attempt(r, max)).collect()
                    }
                }
            };
            for outcome in batch {
                let mut outcome = outcome?;
                spent += outcome.steps;
                start += 1;
                if outcome.proper {
                    outcome.total_steps = spent;
                    return Ok(outcome);
                }
                if best.as_ref().is_none_or(|b| outcome.conflicts < b.conflicts) {
                    best = Some(outcome);
                }
            }
        }
        let mut best = best.expect("at least one restart ran");
        best.restarts_used = start;
        best.total_steps = spent;
        Ok(best)
    }

    /// One restart: fresh random free spins, evolve until proper or steady.
    fn attempt(&self, restart: usize, max_steps: usize) -> Result<ColoringOutcome> {
        let emb = &self.embedding;
        let seed = restart_seed(self.params.seed, restart);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // keep initial draws apart from the perturbation stream of the same seed
        rng.set_stream(1);
        let mut state = emb.initial_state();
        state.randomize_free(&mut rng);

        let labels = emb.complexes();
        let (nodes, k, g) = (emb.nodes, emb.k, self.graph);
        let params = SolverParams {
            seed,
            max_steps,
            ..self.params.clone()
        };
        // colouring minimises the penalty, which is cut ascent on the embedding
        let out = Evolution::new(&emb.graph, params, Direction::Ascent)
            .complexes(&labels)
            .trace(self.trace)
            .until(move |s| is_proper(g, &decode_sigma(s.sigma(), nodes, k)))
            .run(&mut state)?;

        let assignment = decode_sigma(state.sigma(), nodes, k);
        let conflicts = conflict_count(g, &assignment);
        Ok(ColoringOutcome {
            proper: out.stop == StopReason::Target || conflicts == 0,
            assignment,
            conflicts,
            restarts_used: restart + 1,
            steps: out.steps,
            total_steps: out.steps,
            cut: out.cut,
            trajectory: out.trajectory,
            state,
        })
    }
}

/// Convenience wrapper: uniform apex, `pins` as `(node, color)` clues.
pub fn solve_coloring(
    g: &WeightedGraph,
    k: usize,
    lambda: f64,
    params: &SolverParams,
    pins: &[(usize, usize)],
    restarts: usize,
) -> Result<ColoringOutcome> {
    ColoringSolver::new(g, k, lambda)?
        .params(params.clone())
        .pins(pins)?
        .restarts(restarts)
        .solve()
}

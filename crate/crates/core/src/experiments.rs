//! Harnesses for the convergence and equilibrium studies, plus exhaustive
//! max-cut as an oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coloring::one_hot_gadget;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::machine::{
    detect_clusters, max_speed, restart_seed, solve_maxcut, Direction, Evolution, RelaxedSpinState,
    SolverParams, StopReason, TraceConfig,
};

/// Largest graph `brute_force_maxcut` accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Exact maximum cut by enumerating the `2^(n−1)` patterns with the last
/// node held at +1. Gray-code order keeps each step to one spin flip.
pub fn brute_force_maxcut(g: &WeightedGraph) -> Result<(f64, Vec<i8>)> {
    let n = g.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut sigma = vec![1i8; n];
    if n <= 1 {
        return Ok((0.0, sigma));
    }
    let mut cut = 0.0;
    let mut best = (0.0, sigma.clone());
    let patterns: u64 = 1 << (n - 1);
    for step in 1..patterns {
        let i = step.trailing_zeros() as usize;
        // gain from flipping i: edges to equal spins become cut and vice versa
        let si = sigma[i];
        let gain: f64 = g
            .neighbors(i)
            .map(|(j, w)| if sigma[j] == si { w } else { -w })
            .sum();
        sigma[i] = -si;
        cut += gain;
        if cut > best.0 {
            best = (cut, sigma.clone());
        }
    }
    // the running sum drifts; report the exact cut of the winner
    let exact = crate::machine::discrete_cut(g, &best.1)?;
    Ok((exact, best.1))
}

/// Terminal summary of one gadget run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetTrial {
    pub trial: usize,
    /// 1-based color when exactly one spin sits with the apex.
    pub color: Option<usize>,
    /// Number of clusters in the terminal state.
    pub order: usize,
    pub steps: usize,
    pub stop: StopReason,
}

/// Runs the single-node `k`-color gadget from `trials` random states with the
/// apex pinned at `(+1, 0)`.
pub fn gadget_trials(k: usize, trials: usize, params: &SolverParams) -> Result<Vec<GadgetTrial>> {
    let g = one_hot_gadget(k)?;
    params.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let labels: Vec<usize> = (0..=k).map(|i| usize::from(i > 0)).collect();
    let mut charges = vec![1.0; k + 1];
    charges[0] = k as f64 - 2.0;
    let eps = 4.0 * params.dt * max_speed(&g) + f64::EPSILON;

    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = restart_seed(params.seed, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let mut state = RelaxedSpinState::uniform(k + 1);
            state.pin(0, 1, 0.0)?;
            state.randomize_free(&mut rng);
            let p = SolverParams {
                seed,
                ..params.clone()
            };
            let out = Evolution::new(&g, p, Direction::Ascent)
                .complexes(&labels)
                .trace(TraceConfig::off())
                .run(&mut state)?;
            let order = detect_clusters(&state, &charges, eps)?.len();
            Ok(GadgetTrial {
                trial: t,
                color: one_hot_color(&state.sigma()[1..]),
                order,
                steps: out.steps,
                stop: out.stop,
            })
        })
        .collect()
}

fn one_hot_color(spins: &[i8]) -> Option<usize> {
    let mut up = spins.iter().enumerate().filter(|(_, &s)| s == 1);
    match (up.next(), up.next()) {
        (Some((c, _)), None) => Some(c + 1),
        _ => None,
    }
}

/// Fraction of gadget runs ending in a definite color.
pub fn convergence_probability(k: usize, trials: usize, params: &SolverParams) -> Result<f64> {
    let runs = gadget_trials(k, trials, params)?;
    let definite = runs.iter().filter(|r| r.color.is_some()).count();
    Ok(definite as f64 / trials as f64)
}

/// Runs and definite outcomes for one cluster order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OrderCount {
    pub runs: usize,
    pub definite: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub k: usize,
    pub trials: usize,
    /// Keyed by the number of terminal clusters.
    pub by_order: BTreeMap<usize, OrderCount>,
    pub definite: usize,
    /// Runs that hit the step limit before settling.
    pub unsettled: usize,
}

impl Census {
    pub fn max_order(&self) -> usize {
        self.by_order.keys().next_back().copied().unwrap_or(0)
    }

    pub fn definite_fraction(&self) -> f64 {
        self.definite as f64 / self.trials as f64
    }
}

/// Histogram of terminal cluster order over gadget runs, split by whether
/// the run decoded to a definite color.
pub fn equilibrium_census(k: usize, trials: usize, params: &SolverParams) -> Result<Census> {
    Ok(census_of(k, &gadget_trials(k, trials, params)?))
}

fn census_of(k: usize, runs: &[GadgetTrial]) -> Census {
    let mut by_order: BTreeMap<usize, OrderCount> = BTreeMap::new();
    for r in runs {
        let entry = by_order.entry(r.order).or_default();
        entry.runs += 1;
        entry.definite += usize::from(r.color.is_some());
    }
    Census {
        k,
        trials: runs.len(),
        by_order,
        definite: runs.iter().filter(|r| r.color.is_some()).count(),
        unsettled: runs.iter().filter(|r| r.stop == StopReason::MaxSteps).count(),
    }
}

/// `G(n, p)` with weights uniform on (0, 1].
pub fn random_weighted_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> WeightedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0 - rng.gen::<f64>()));
            }
        }
    }
    WeightedGraph::from_edges(n, edges).expect("generated edges are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityRecord {
    pub instance: usize,
    pub edges: usize,
    pub optimum: f64,
    pub achieved: f64,
    /// `None` for graphs whose optimum is zero.
    pub ratio: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitySummary {
    pub instances: usize,
    pub scored: usize,
    pub skipped: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub optimal: usize,
}

/// Achieved over exact cut on `count` random `G(n, 1/2)` graphs.
pub fn maxcut_quality_benchmark(
    count: usize,
    n: usize,
    restarts: usize,
    params: &SolverParams,
) -> Result<(Vec<QualityRecord>, QualitySummary)> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let records: Vec<QualityRecord> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = restart_seed(params.seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_weighted_graph(n, 0.5, &mut rng);
            let (optimum, _) = brute_force_maxcut(&g)?;
            let p = SolverParams {
                seed,
                ..params.clone()
            };
            let achieved = solve_maxcut(&g, &p, restarts, &TraceConfig::off())?.cut;
            let (ratio, note) = if optimum > 0.0 {
                (Some(achieved / optimum), None)
            } else {
                (None, Some("zero optimum, skipped".to_string()))
            };
            Ok(QualityRecord {
                instance: i,
                edges: g.edge_count(),
                optimum,
                achieved,
                ratio,
                note,
            })
        })
        .collect::<Result<_>>()?;

    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    let summary = QualitySummary {
        instances: count,
        scored: ratios.len(),
        skipped: count - ratios.len(),
        mean_ratio: if ratios.is_empty() {
            1.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        },
        min_ratio: ratios.iter().copied().fold(1.0, f64::min),
        optimal: ratios.iter().filter(|&&r| r >= 1.0 - 1e-9).count(),
    };
    Ok((records, summary))
}

/// Envelope for experiment output.
#[derive(Debug, Clone, Serialize)]
pub struct Report<S: Serialize, R: Serialize> {
    pub experiment: &'static str,
    pub seed: u64,
    pub params: SolverParams,
    pub summary: S,
    pub records: R,
}

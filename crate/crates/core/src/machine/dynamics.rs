use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

use super::state::RelaxedSpinState;

/// Sign of the force applied to the cut functional.
///
/// `Ascent` climbs the relaxed cut. `Descent` is the literal negation of the
/// ascent field and therefore heads for small cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascent,
    Descent,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Ascent => 1.0,
            Direction::Descent => -1.0,
        }
    }
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weight of edges joining nodes with opposite spins.
pub fn discrete_cut(g: &WeightedGraph, sigma: &[i8]) -> Result<f64> {
    Error::check_len(g.node_count(), sigma.len())?;
    Ok(cut_unchecked(g, sigma))
}

pub(crate) fn cut_unchecked(g: &WeightedGraph, sigma: &[i8]) -> f64 {
    g.edges()
        .iter()
        .filter(|e| sigma[e.u] != sigma[e.v])
        .map(|e| e.w)
        .sum()
}

/// `C(σ) + ¼ Σ_{i,j} A_ij σ_i σ_j |X_i − X_j|`, the sum running over ordered
/// pairs (each edge twice).
pub fn relaxed_cut_v2(g: &WeightedGraph, state: &RelaxedSpinState) -> Result<f64> {
    Error::check_len(g.node_count(), state.len())?;
    Ok(relaxed_unchecked(g, state))
}

pub(crate) fn relaxed_unchecked(g: &WeightedGraph, state: &RelaxedSpinState) -> f64 {
    let (sigma, x) = (state.sigma(), state.x());
    let mut cut = 0.0;
    let mut correction = 0.0;
    for e in g.edges() {
        let ss = f64::from(sigma[e.u] * sigma[e.v]);
        if ss < 0.0 {
            cut += e.w;
        }
        correction += e.w * ss * (x[e.u] - x[e.v]).abs();
    }
    cut + 0.5 * correction
}

/// Velocity field `Ẋ_i = ½ Σ_j A_ij σ_i σ_j · ½ sgn(X_i − X_j)`, negated for
/// descent. Fixed nodes get exactly zero.
pub fn eom_rhs(
    g: &WeightedGraph,
    state: &RelaxedSpinState,
    direction: Direction,
) -> Result<Vec<f64>> {
    Error::check_len(g.node_count(), state.len())?;
    let mut out = vec![0.0; state.len()];
    velocity_into(g, state, direction, &mut out);
    Ok(out)
}

pub(crate) fn velocity_into(
    g: &WeightedGraph,
    state: &RelaxedSpinState,
    direction: Direction,
    out: &mut [f64],
) {
    let (offsets, targets, weights) = g.csr();
    let (sigma, x, fixed) = (state.sigma(), state.x(), state.fixed());
    let scale = 0.25 * direction.sign();
    for i in 0..out.len() {
        if fixed[i] {
            out[i] = 0.0;
            continue;
        }
        let xi = x[i];
        let mut acc = 0.0;
        for k in offsets[i]..offsets[i + 1] {
            let j = targets[k];
            acc += weights[k] * f64::from(sigma[j]) * sgn(xi - x[j]);
        }
        out[i] = scale * f64::from(sigma[i]) * acc;
    }
}

/// Largest possible speed of any node, `¼ max_i Σ_j |A_ij|`.
pub fn max_speed(g: &WeightedGraph) -> f64 {
    (0..g.node_count())
        .map(|i| g.neighbors(i).map(|(_, w)| w.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 0.25
}

/// Applies `X ← X + dt·v` to every free node with the wrap rule, given a
/// precomputed velocity. Returns the ids that flipped, ascending.
pub(crate) fn apply_velocity(
    state: &mut RelaxedSpinState,
    velocity: &[f64],
    dt: f64,
    flipped: &mut Vec<usize>,
) -> Result<()> {
    flipped.clear();
    for (i, &v) in velocity.iter().enumerate() {
        let dx = dt * v;
        if dx.abs() >= 2.0 {
            return Err(Error::StepTooLarge {
                node: i,
                displacement: dx.abs(),
            });
        }
    }
    for (i, &v) in velocity.iter().enumerate() {
        if state.is_fixed(i) || v == 0.0 {
            continue;
        }
        if state.advance(i, state.x()[i] + dt * v) {
            flipped.push(i);
        }
    }
    Ok(())
}

/// Scratch space for [`apply_velocity_guarded`].
#[derive(Debug, Default)]
pub(crate) struct CrossingScratch {
    crossing: Vec<(f64, usize)>,
    group: Vec<usize>,
    in_group: Vec<bool>,
    done: Vec<bool>,
    pending: Vec<bool>,
}

/// Like [`apply_velocity`], but a wrap that would move the discrete cut
/// against `direction` is held just inside the boundary. Crossings are
/// settled in order of arrival, each seeing the flips accepted before it.
///
/// A node that may not cross alone is retried together with the free nodes
/// sitting within `band` of the same boundary, which the exact dynamics would
/// carry across as one cluster. Returns how many crossings were held back.
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_velocity_guarded(
    g: &WeightedGraph,
    state: &mut RelaxedSpinState,
    velocity: &[f64],
    dt: f64,
    band: f64,
    direction: Direction,
    flipped: &mut Vec<usize>,
    scratch: &mut CrossingScratch,
) -> Result<usize> {
    let n = state.len();
    flipped.clear();
    scratch.crossing.clear();
    scratch.done.clear();
    scratch.done.resize(n, false);
    scratch.in_group.clear();
    scratch.in_group.resize(n, false);
    scratch.pending.clear();
    scratch.pending.resize(n, false);
    for (i, &v) in velocity.iter().enumerate() {
        let dx = dt * v;
        if dx.abs() >= 2.0 {
            return Err(Error::StepTooLarge {
                node: i,
                displacement: dx.abs(),
            });
        }
    }
    for (i, &v) in velocity.iter().enumerate() {
        if state.is_fixed(i) || v == 0.0 {
            continue;
        }
        let x = state.x()[i];
        let target = x + dt * v;
        if (-1.0..1.0).contains(&target) {
            state.set_x(i, target);
        } else {
            let gap = if v > 0.0 { 1.0 - x } else { x + 1.0 };
            scratch.crossing.push((gap / (dt * v).abs(), i));
            scratch.pending[i] = true;
        }
    }
    scratch.crossing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let sign = direction.sign();
    let mut held = 0;
    for c in 0..scratch.crossing.len() {
        let i = scratch.crossing[c].1;
        if scratch.done[i] {
            continue;
        }
        scratch.done[i] = true;
        let up = velocity[i] > 0.0;
        if sign * group_gain(g, state.sigma(), &[i], &mut scratch.in_group) >= -1e-12 {
            state.advance(i, state.x()[i] + dt * velocity[i]);
            flipped.push(i);
            continue;
        }

        // nodes hugging the same side of the boundary
        scratch.group.clear();
        scratch.group.push(i);
        for j in 0..n {
            if j == i || scratch.done[j] || state.is_fixed(j) {
                continue;
            }
            let x = state.x()[j];
            let near = if up { x >= 1.0 - band } else { x < -1.0 + band };
            if near {
                scratch.group.push(j);
            }
        }
        let gain = group_gain(g, state.sigma(), &scratch.group, &mut scratch.in_group);
        if scratch.group.len() > 1 && sign * gain >= -1e-12 {
            for k in 0..scratch.group.len() {
                let j = scratch.group[k];
                scratch.done[j] = true;
                if scratch.pending[j] {
                    state.advance(j, state.x()[j] + dt * velocity[j]);
                } else {
                    state.wrap(j, if up { 1 } else { -1 });
                    state.set_x(j, if up { -1.0 } else { 1.0 - f64::EPSILON / 2.0 });
                }
                flipped.push(j);
            }
        } else {
            held += 1;
            state.set_x(i, if up { 1.0 - f64::EPSILON / 2.0 } else { -1.0 });
        }
    }
    flipped.sort_unstable();
    Ok(held)
}

/// Cut change from flipping every node of `group` at once.
fn group_gain(g: &WeightedGraph, sigma: &[i8], group: &[usize], mark: &mut [bool]) -> f64 {
    for &i in group {
        mark[i] = true;
    }
    let mut gain = 0.0;
    for &i in group {
        let si = f64::from(sigma[i]);
        for (j, w) in g.neighbors(i) {
            if !mark[j] {
                gain += w * si * f64::from(sigma[j]);
            }
        }
    }
    for &i in group {
        mark[i] = false;
    }
    gain
}

/// One explicit Euler step. Returns the nodes whose spin flipped.
pub fn euler_step(
    g: &WeightedGraph,
    state: &mut RelaxedSpinState,
    dt: f64,
    direction: Direction,
) -> Result<Vec<usize>> {
    let velocity = eom_rhs(g, state, direction)?;
    let mut flipped = Vec::new();
    apply_velocity(state, &velocity, dt, &mut flipped)?;
    Ok(flipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::complete_graph;

    fn edge() -> WeightedGraph {
        WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    fn state(sigma: &[i8], x: &[f64]) -> RelaxedSpinState {
        RelaxedSpinState::new(sigma.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn discrete_cut_examples() {
        assert_eq!(discrete_cut(&edge(), &[1, -1]).unwrap(), 1.0);
        assert_eq!(discrete_cut(&edge(), &[1, 1]).unwrap(), 0.0);
        assert!(discrete_cut(&edge(), &[1]).is_err());
    }

    #[test]
    fn relaxed_cut_examples() {
        let g = edge();
        let flat = state(&[1, -1], &[0.0, 0.0]);
        assert_eq!(relaxed_cut_v2(&g, &flat).unwrap(), 1.0);
        // ¼ · (1·0.5 + 1·0.5) over both orderings
        assert!((relaxed_cut_v2(&g, &state(&[1, 1], &[0.0, 0.5])).unwrap() - 0.25).abs() < 1e-15);
        // 1 − ¼ · (0.5 + 0.5)
        assert!((relaxed_cut_v2(&g, &state(&[1, -1], &[0.0, 0.5])).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn relaxed_cut_equals_discrete_when_flat() {
        let g = complete_graph(4, 1.5).unwrap();
        let s = state(&[1, -1, -1, 1], &[0.3; 4]);
        assert_eq!(relaxed_cut_v2(&g, &s).unwrap(), discrete_cut(&g, s.sigma()).unwrap());
    }

    #[test]
    fn eom_examples() {
        let g = edge();
        let v = eom_rhs(&g, &state(&[1, -1], &[0.2, 0.0]), Direction::Ascent).unwrap();
        assert_eq!(v, vec![-0.25, 0.25]);
        let v = eom_rhs(&g, &state(&[1, 1], &[0.2, 0.0]), Direction::Ascent).unwrap();
        assert_eq!(v, vec![0.25, -0.25]);
        let v = eom_rhs(&g, &state(&[1, 1], &[0.2, 0.0]), Direction::Descent).unwrap();
        assert_eq!(v, vec![-0.25, 0.25]);
        let v = eom_rhs(&g, &state(&[1, -1], &[0.4, 0.4]), Direction::Ascent).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn eom_fixed_nodes_do_not_move() {
        let mut s = state(&[1, -1], &[0.2, 0.0]);
        s.pin(0, 1, 0.2).unwrap();
        let v = eom_rhs(&edge(), &s, Direction::Ascent).unwrap();
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn wrap_examples() {
        let mut s = state(&[1], &[0.95]);
        let mut flips = Vec::new();
        apply_velocity(&mut s, &[0.1], 1.0, &mut flips).unwrap();
        assert_eq!(flips, vec![0]);
        assert_eq!(s.sigma(), &[-1]);
        assert!((s.x()[0] + 0.95).abs() < 1e-12);

        let mut s = state(&[-1], &[-0.95]);
        apply_velocity(&mut s, &[-0.1], 1.0, &mut flips).unwrap();
        assert_eq!(s.sigma(), &[1]);
        assert!((s.x()[0] - 0.95).abs() < 1e-12);

        let mut s = state(&[1], &[0.3]);
        apply_velocity(&mut s, &[0.0], 1.0, &mut flips).unwrap();
        assert!(flips.is_empty());
        assert_eq!(s.x(), &[0.3]);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let mut s = state(&[1], &[0.0]);
        let mut flips = Vec::new();
        let err = apply_velocity(&mut s, &[2.5], 1.0, &mut flips).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { node: 0, .. }));
        assert_eq!(s.x(), &[0.0]);
    }

    #[test]
    fn euler_step_on_edge() {
        let g = edge();
        let mut s = state(&[1, 1], &[0.99, -0.99]);
        let flips = euler_step(&g, &mut s, 0.1, Direction::Ascent).unwrap();
        // uncut edge repels: node 0 climbs past 1 and flips, node 1 falls past -1
        assert_eq!(flips, vec![0, 1]);
    }
}

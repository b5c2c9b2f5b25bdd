use serde::Serialize;

use crate::error::{Error, Result};

use super::state::RelaxedSpinState;

/// A group of nodes sharing (up to a tolerance) one X coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub members: Vec<usize>,
    /// Circular mean position of the members, in [−1, 1).
    pub position: f64,
    /// `Σ q_β σ_β` over the members.
    pub charge: f64,
}

/// Groups nodes whose X coordinates lie within `eps` of a neighbour on the
/// circle `[−1, 1)` (circumference 2). Clusters come back ordered by position
/// and the state order R is the length of the result.
pub fn detect_clusters(
    state: &RelaxedSpinState,
    charges: &[f64],
    eps: f64,
) -> Result<Vec<Cluster>> {
    Error::check_len(state.len(), charges.len())?;
    if eps <= 0.0 {
        return Err(Error::invalid("cluster tolerance must be positive"));
    }
    let n = state.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let x = state.x();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

    let mut groups: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        if x[w[1]] - x[w[0]] <= eps {
            groups.last_mut().unwrap().push(w[1]);
        } else {
            groups.push(vec![w[1]]);
        }
    }
    // the gap across X = ±1
    if groups.len() > 1 && x[order[0]] + 2.0 - x[order[n - 1]] <= eps {
        let tail = groups.pop().unwrap();
        let head = &mut groups[0];
        let mut merged = tail;
        merged.append(head);
        *head = merged;
    }

    let mut clusters: Vec<Cluster> = groups
        .into_iter()
        .map(|members| {
            let position = circular_mean(members.iter().map(|&i| x[i]));
            // a member on the far side of X = ±1 reads with its spin reversed
            let charge = members
                .iter()
                .map(|&i| {
                    let s = f64::from(state.sigma()[i]);
                    let s = if (x[i] - position).abs() > 1.0 { -s } else { s };
                    charges[i] * s
                })
                .sum();
            Cluster {
                members,
                position,
                charge,
            }
        })
        .collect();
    clusters.sort_by(|a, b| a.position.total_cmp(&b.position));
    Ok(clusters)
}

/// Mean on the circle of circumference 2, mapped back into [−1, 1).
fn circular_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for v in values {
        let angle = v * std::f64::consts::PI;
        s += angle.sin();
        c += angle.cos();
    }
    let m = s.atan2(c) / std::f64::consts::PI;
    if m >= 1.0 {
        m - 2.0
    } else {
        m
    }
}

/// Charge outside each cluster, `Σ_{q<p} Q_q − Σ_{q>p} Q_q`, for clusters in
/// position order. All zero is the equilibrium condition for clustered states.
pub fn external_charges(clusters: &[Cluster]) -> Vec<f64> {
    let total: f64 = clusters.iter().map(|c| c.charge).sum();
    let mut below = 0.0;
    clusters
        .iter()
        .map(|c| {
            let above = total - below - c.charge;
            let ext = below - above;
            below += c.charge;
            ext
        })
        .collect()
}

/// Moves every free node onto its cluster position along the short arc,
/// flipping σ when that crosses X = ±1. Fixed nodes keep their coordinate,
/// and a cluster containing a fixed node snaps to it.
pub fn snap_to_clusters(state: &RelaxedSpinState, eps: f64) -> Result<RelaxedSpinState> {
    let clusters = detect_clusters(state, &vec![0.0; state.len()], eps)?;
    let mut snapped = state.clone();
    for c in &clusters {
        let anchor = c
            .members
            .iter()
            .find(|&&i| state.is_fixed(i))
            .map_or(c.position, |&i| state.x()[i]);
        for &i in &c.members {
            if !state.is_fixed(i) {
                let x = state.x()[i];
                // the short arc passes through X = ±1
                if (anchor - x).abs() > 1.0 {
                    snapped.wrap(i, if anchor < x { 1 } else { -1 });
                }
                snapped.set_x(i, anchor);
            }
        }
    }
    Ok(snapped)
}

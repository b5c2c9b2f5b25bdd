use crate::graph::WeightedGraph;

use super::dynamics::cut_unchecked;
use super::state::decompose_finite;

/// `σ_i(r)`: spin part of the decomposition of `ξ_i − r`.
pub fn parametric_round(xi: &[f64], r: f64) -> Vec<i8> {
    xi.iter().map(|&v| decompose_finite(v - r).0).collect()
}

/// One rounding outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub center: f64,
    pub sigma: Vec<i8>,
    pub cut: f64,
}

const BREAKPOINT_TOL: f64 = 1e-9;

/// Evaluates the parametric rounding at one center inside every interval
/// between consecutive breakpoints on the period circle `[0, 4)`, keeping one
/// representative per partition (σ and −σ count once).
///
/// `σ_i(r)` changes when `ξ_i − r` crosses an even integer, so the breakpoints
/// are `ξ_i mod 4` and `(ξ_i + 2) mod 4`.
pub fn optimal_rounding_spectrum(xi: &[f64], g: &WeightedGraph) -> Vec<Rounding> {
    let mut points: Vec<f64> = xi
        .iter()
        .flat_map(|&v| [v.rem_euclid(4.0), (v + 2.0).rem_euclid(4.0)])
        .map(|p| if p >= 4.0 { 0.0 } else { p })
        .collect();
    if points.is_empty() {
        return vec![Rounding {
            center: 0.0,
            sigma: Vec::new(),
            cut: 0.0,
        }];
    }
    points.sort_by(f64::total_cmp);
    // coordinates that coincide up to rounding noise share one breakpoint
    points.dedup_by(|b, a| *b - *a <= BREAKPOINT_TOL);
    if points.len() > 1 && points[0] + 4.0 - points[points.len() - 1] <= BREAKPOINT_TOL {
        points.pop();
    }

    let mut centers = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        centers.push(0.5 * (w[0] + w[1]));
    }
    let last = *points.last().unwrap();
    centers.push(0.5 * (last + points[0] + 4.0));

    let mut out: Vec<Rounding> = Vec::new();
    for r in centers {
        let sigma = parametric_round(xi, r);
        let seen = out.iter().any(|o| {
            o.sigma == sigma || o.sigma.iter().zip(&sigma).all(|(a, b)| *a == -*b)
        });
        if !seen {
            let cut = cut_unchecked(g, &sigma);
            out.push(Rounding {
                center: r,
                sigma,
                cut,
            });
        }
    }
    out
}

/// Best cut in the spectrum.
pub fn best_rounding(xi: &[f64], g: &WeightedGraph) -> Rounding {
    optimal_rounding_spectrum(xi, g)
        .into_iter()
        .max_by(|a, b| a.cut.total_cmp(&b.cut))
        .expect("spectrum is never empty")
}

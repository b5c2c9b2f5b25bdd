use rand::Rng;

use crate::error::{Error, Result};

/// Splits a continuous coordinate into `(σ, X, k)` with `ξ = σ + X + 4k`,
/// `σ ∈ {−1, +1}` and `X ∈ [−1, 1)`.
///
/// The residue `y = ((ξ + 2) mod 4) − 2` lands in `[−2, 2)`; non-negative
/// residues take `σ = +1`, so `y = 0` maps to `(+1, −1)`.
pub fn decompose(xi: f64) -> Result<(i8, f64, i64)> {
    if !xi.is_finite() {
        return Err(Error::invalid(format!("cannot decompose {xi}")));
    }
    Ok(decompose_finite(xi))
}

pub(crate) fn decompose_finite(xi: f64) -> (i8, f64, i64) {
    let shifted = xi + 2.0;
    let k = (shifted / 4.0).floor();
    let mut y = shifted - 4.0 * k - 2.0;
    let mut k = k as i64;
    // rem_euclid-style rounding can land exactly on the open end
    if y >= 2.0 {
        y -= 4.0;
        k += 1;
    }
    if y < -2.0 {
        y += 4.0;
        k -= 1;
    }
    if y >= 0.0 {
        (1, y - 1.0, k)
    } else {
        (-1, y + 1.0, k)
    }
}

/// Relaxed spins `(σ_i, X_i)` for every node, plus the set of frozen nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSpinState {
    sigma: Vec<i8>,
    x: Vec<f64>,
    fixed: Vec<bool>,
    winding: Option<Vec<i64>>,
}

impl RelaxedSpinState {
    pub fn new(sigma: Vec<i8>, x: Vec<f64>) -> Result<Self> {
        Error::check_len(sigma.len(), x.len())?;
        if let Some(i) = sigma.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("sigma[{i}] = {} is not ±1", sigma[i])));
        }
        if let Some(i) = x.iter().position(|v| !(-1.0..1.0).contains(v)) {
            return Err(Error::invalid(format!("x[{i}] = {} outside [-1, 1)", x[i])));
        }
        let n = sigma.len();
        Ok(RelaxedSpinState {
            sigma,
            x,
            fixed: vec![false; n],
            winding: None,
        })
    }

    /// All spins up, all remainders zero.
    pub fn uniform(n: usize) -> Self {
        RelaxedSpinState {
            sigma: vec![1; n],
            x: vec![0.0; n],
            fixed: vec![false; n],
            winding: None,
        }
    }

    /// σ uniform on {±1}, X uniform on [−1, 1).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut state = Self::uniform(n);
        state.randomize_free(rng);
        state
    }

    /// Re-draws every non-fixed variable.
    pub fn randomize_free<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.len() {
            if !self.fixed[i] {
                self.sigma[i] = if rng.gen::<bool>() { 1 } else { -1 };
                self.x[i] = rng.gen_range(-1.0..1.0);
            }
        }
    }

    /// Builds the state from continuous coordinates, keeping winding counts.
    pub fn from_xi(xi: &[f64]) -> Result<Self> {
        let mut sigma = Vec::with_capacity(xi.len());
        let mut x = Vec::with_capacity(xi.len());
        let mut k = Vec::with_capacity(xi.len());
        for &v in xi {
            let (s, r, w) = decompose(v)?;
            sigma.push(s);
            x.push(r);
            k.push(w);
        }
        let mut state = Self::new(sigma, x)?;
        state.winding = Some(k);
        Ok(state)
    }

    /// Continuous coordinates `σ + X + 4k` (k = 0 when winding is untracked).
    pub fn xi(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k = self.winding.as_ref().map_or(0, |w| w[i]);
                f64::from(self.sigma[i]) + self.x[i] + 4.0 * k as f64
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[i8] {
        &self.sigma
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn winding(&self) -> Option<&[i64]> {
        self.winding.as_deref()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i]
    }

    /// Sets node `i` to `(sigma, x)` and freezes it.
    pub fn pin(&mut self, i: usize, sigma: i8, x: f64) -> Result<()> {
        if i >= self.len() {
            return Err(Error::invalid(format!("pin index {i} out of range")));
        }
        if sigma != 1 && sigma != -1 {
            return Err(Error::invalid(format!("pin spin {sigma} is not ±1")));
        }
        if !(-1.0..1.0).contains(&x) {
            return Err(Error::invalid(format!("pin remainder {x} outside [-1, 1)")));
        }
        self.sigma[i] = sigma;
        self.x[i] = x;
        self.fixed[i] = true;
        Ok(())
    }

    /// Starts counting windings (all zero) so `xi()` becomes a continuous trace.
    pub fn track_winding(&mut self) {
        if self.winding.is_none() {
            self.winding = Some(vec![0; self.len()]);
        }
    }

    /// Overwrites remainders of free nodes; values must lie in [−1, 1).
    pub fn set_x(&mut self, i: usize, x: f64) {
        debug_assert!((-1.0..1.0).contains(&x));
        self.x[i] = x;
    }

    /// Moves node `i` to `x_new` (which may leave [−1, 1) by less than 2),
    /// applying the wrap rule. Returns true when σ flipped.
    pub(crate) fn advance(&mut self, i: usize, x_new: f64) -> bool {
        if x_new >= 1.0 {
            self.x[i] = (x_new - 2.0).max(-1.0);
            self.flip(i, 1);
            true
        } else if x_new < -1.0 {
            // Guard against `x + 2` rounding up to exactly 1.
            let wrapped = x_new + 2.0;
            self.x[i] = if wrapped >= 1.0 { -1.0 } else { wrapped };
            self.flip(i, -1);
            true
        } else {
            self.x[i] = x_new;
            false
        }
    }

    /// Wrap in direction `dir` (+1 upward through X = 1, −1 downward).
    /// ξ stays continuous: leaving σ = +1 upward or σ = −1 downward moves
    /// into the neighbouring period.
    pub(crate) fn wrap(&mut self, i: usize, dir: i8) {
        self.flip(i, dir);
    }

    fn flip(&mut self, i: usize, dir: i8) {
        let before = self.sigma[i];
        self.sigma[i] = -before;
        if let Some(w) = self.winding.as_mut() {
            if dir > 0 && before == 1 {
                w[i] += 1;
            } else if dir < 0 && before == -1 {
                w[i] -= 1;
            }
        }
    }

    pub(crate) fn sigma_mut(&mut self) -> &mut [i8] {
        &mut self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(1.0).unwrap(), (1, 0.0, 0));
        assert_eq!(decompose(-1.0).unwrap(), (-1, 0.0, 0));
        // 3.5: y = (5.5 mod 4) - 2 = -0.5 -> σ = -1, X = 0.5, k = 1
        let (s, x, k) = decompose(3.5).unwrap();
        assert_eq!((s, k), (-1, 1));
        assert!((x - 0.5).abs() < 1e-15);
        assert_eq!(f64::from(s) + x + 4.0 * k as f64, 3.5);
    }

    #[test]
    fn decompose_tie_rule() {
        // y = 0 <=> ξ ≡ 0 (mod 4)
        assert_eq!(decompose(0.0).unwrap(), (1, -1.0, 0));
        assert_eq!(decompose(4.0).unwrap(), (1, -1.0, 1));
        // ξ = 2 sits on the boundary y = -2
        assert_eq!(decompose(2.0).unwrap(), (-1, -1.0, 1));
    }

    #[test]
    fn decompose_rejects_non_finite() {
        assert!(decompose(f64::NAN).is_err());
        assert!(decompose(f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_rule_both_directions() {
        let mut s = RelaxedSpinState::new(vec![1, -1], vec![0.95, -0.95]).unwrap();
        assert!(s.advance(0, 1.05));
        assert!(s.advance(1, -1.05));
        assert_eq!(s.sigma(), &[-1, 1]);
        assert!((s.x()[0] + 0.95).abs() < 1e-12);
        assert!((s.x()[1] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn winding_keeps_xi_continuous() {
        let mut s = RelaxedSpinState::from_xi(&[1.9, -1.9]).unwrap();
        let before = s.xi();
        s.advance(0, s.x()[0] + 0.2);
        s.advance(1, s.x()[1] - 0.2);
        let after = s.xi();
        assert!((after[0] - (before[0] + 0.2)).abs() < 1e-12, "{after:?}");
        assert!((after[1] - (before[1] - 0.2)).abs() < 1e-12, "{after:?}");
    }

    #[test]
    fn pins_are_validated() {
        let mut s = RelaxedSpinState::uniform(2);
        assert!(s.pin(2, 1, 0.0).is_err());
        assert!(s.pin(0, 0, 0.0).is_err());
        assert!(s.pin(0, 1, 1.0).is_err());
        s.pin(1, -1, 0.0).unwrap();
        assert!(s.is_fixed(1));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        s.randomize_free(&mut rng);
        assert_eq!((s.sigma()[1], s.x()[1]), (-1, 0.0));
    }

    #[test]
    fn new_checks_ranges() {
        assert!(RelaxedSpinState::new(vec![1], vec![1.0]).is_err());
        assert!(RelaxedSpinState::new(vec![2], vec![0.0]).is_err());
        assert!(RelaxedSpinState::new(vec![1, 1], vec![0.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn recomposition(xi in -10.0f64..10.0) {
                let (s, x, k) = decompose(xi).unwrap();
                prop_assert!((-1.0..1.0).contains(&x));
                prop_assert!(s == 1 || s == -1);
                let back = f64::from(s) + x + 4.0 * k as f64;
                prop_assert!((back - xi).abs() <= 1e-12);
            }
        }
    }
}

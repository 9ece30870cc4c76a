//! Richardson zero-noise extrapolation.
//!
//! Estimates taken at rates `c_j · p` are combined as `Σ_j γ_j E(c_j p)` with
//! weights satisfying `Σ_j γ_j = 1` and `Σ_j γ_j c_j^k = 0` for
//! `k = 1..=n_c`, which cancels every noise term up to order `p^{n_c}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Weights of the shipped presets for `n_c = 1..=4` with `c_j = j + 1`.
pub const PRESET_WEIGHTS: [&[i64]; 4] =
    [&[2, -1], &[3, -3, 1], &[4, -6, 4, -1], &[5, -10, 10, -5, 1]];

const SUM_TOLERANCE: f64 = 1e-10;
const MOMENT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MitigationPlan {
    scales: Vec<f64>,
    weights: Vec<f64>,
}

impl MitigationPlan {
    /// Preset plan with scales `1, 2, …, n_c + 1`.
    pub fn preset(n_c: usize) -> Result<Self> {
        let weights = PRESET_WEIGHTS
            .get(n_c.wrapping_sub(1))
            .ok_or_else(|| Error::InvalidParameter(format!("no preset for n_c = {n_c} (1..=4)")))?;
        let plan = Self {
            scales: (1..=weights.len()).map(|c| c as f64).collect(),
            weights: weights.iter().map(|&g| g as f64).collect(),
        };
        plan.check()?;
        Ok(plan)
    }

    /// Cancels power `n_c`, one less than the number of scales.
    pub fn n_c(&self) -> usize {
        self.scales.len() - 1
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_j γ_j c_j^k` for `k = 0..=n_c`; ideally `(1, 0, …, 0)`.
    pub fn moments(&self) -> Vec<f64> {
        (0..=self.n_c())
            .map(|k| {
                self.scales
                    .iter()
                    .zip(&self.weights)
                    .map(|(c, g)| g * c.powi(k as i32))
                    .sum()
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        let moments = self.moments();
        if (moments[0] - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Invariant(format!(
                "weights sum to {} instead of 1",
                moments[0]
            )));
        }
        for (k, m) in moments.iter().enumerate().skip(1) {
            // relative to the size of the individual terms
            let scale: f64 = self
                .scales
                .iter()
                .zip(&self.weights)
                .map(|(c, g)| (g * c.powi(k as i32)).abs())
                .sum::<f64>()
                .max(1.0);
            if m.abs() > MOMENT_TOLERANCE * scale {
                return Err(Error::Invariant(format!(
                    "order-{k} moment of the weights is {m}, not 0"
                )));
            }
        }
        Ok(())
    }

    /// `Σ_j γ_j E_j`.
    pub fn mitigate(&self, estimates: &[f64]) -> Result<f64> {
        self.check_len(estimates.len())?;
        Ok(self.weights.iter().zip(estimates).map(|(g, e)| g * e).sum())
    }

    /// `sqrt(Σ_j γ_j² σ_j²)` for independent estimates.
    pub fn mitigated_stderr(&self, stderrs: &[f64]) -> Result<f64> {
        self.check_len(stderrs.len())?;
        Ok(self
            .weights
            .iter()
            .zip(stderrs)
            .map(|(g, s)| (g * s).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.scales.len() {
            return Err(Error::LengthMismatch {
                expected: self.scales.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Solves the power-sum system for the weights of distinct positive scale
/// factors `c_0 .. c_{n_c}`.
pub fn richardson_weights(scales: &[f64]) -> Result<MitigationPlan> {
    if scales.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two scale factors, got {}",
            scales.len()
        )));
    }
    if let Some(&bad) = scales.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "scale factors must be finite and positive, got {bad}"
        )));
    }
    for (i, a) in scales.iter().enumerate() {
        if scales[..i].contains(a) {
            return Err(Error::DuplicateScale(*a));
        }
    }
    let m = scales.len();
    let system = DMatrix::from_fn(m, m, |k, j| scales[j].powi(k as i32));
    let mut rhs = DVector::zeros(m);
    rhs[0] = 1.0;
    let lu = system.clone().lu();
    let singular = || Error::Invariant("singular Richardson system".into());
    let mut gamma = lu.solve(&rhs).ok_or_else(singular)?;
    // Vandermonde systems are poorly conditioned; a few refinement sweeps
    // recover most of the lost digits.
    for _ in 0..3 {
        let residual = &rhs - &system * &gamma;
        gamma += lu.solve(&residual).ok_or_else(singular)?;
    }
    let plan = MitigationPlan {
        scales: scales.to_vec(),
        weights: gamma.iter().copied().collect(),
    };
    plan.check()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Independent oracle: Lagrange extrapolation to zero,
    /// `γ_j = Π_{m≠j} c_m / (c_m - c_j)`.
    fn lagrange_weights(c: &[f64]) -> Vec<f64> {
        (0..c.len())
            .map(|j| {
                (0..c.len())
                    .filter(|&m| m != j)
                    .map(|m| c[m] / (c[m] - c[j]))
                    .product()
            })
            .collect()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn weight_examples() {
        assert_close(
            richardson_weights(&[1.0, 2.0]).unwrap().weights(),
            &[2.0, -1.0],
            1e-12,
        );
        assert_close(
            richardson_weights(&[1.0, 2.0, 3.0, 4.0, 5.0])
                .unwrap()
                .weights(),
            &[5.0, -10.0, 10.0, -5.0, 1.0],
            1e-10,
        );
        // γ0 + γ1 = 1, γ0 + 3γ1 = 0  →  γ1 = -1/2, γ0 = 3/2
        assert_close(
            richardson_weights(&[1.0, 3.0]).unwrap().weights(),
            &[1.5, -0.5],
            1e-12,
        );
    }

    #[test]
    fn presets_satisfy_relations_in_integers() {
        for (idx, weights) in PRESET_WEIGHTS.iter().enumerate() {
            let n_c = idx + 1;
            let scales: Vec<i64> = (1..=weights.len() as i64).collect();
            assert_eq!(weights.iter().sum::<i64>(), 1);
            for k in 1..=n_c as u32 {
                let moment: i64 = weights.iter().zip(&scales).map(|(g, c)| g * c.pow(k)).sum();
                assert_eq!(moment, 0, "n_c = {n_c}, k = {k}");
            }
            let preset = MitigationPlan::preset(n_c).unwrap();
            let solved = richardson_weights(preset.scales()).unwrap();
            assert_close(solved.weights(), preset.weights(), 1e-10);
            assert_close(&lagrange_weights(preset.scales()), preset.weights(), 1e-10);
        }
        assert!(MitigationPlan::preset(0).is_err());
        assert!(MitigationPlan::preset(5).is_err());
    }

    #[test]
    fn solve_matches_lagrange_on_random_scales() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let m = rng.gen_range(2..=5);
            let mut c: Vec<f64> = Vec::new();
            while c.len() < m {
                let v: f64 = rng.gen_range(1.0..6.0);
                if c.iter().all(|x| (x - v).abs() > 0.5) {
                    c.push(v);
                }
            }
            let plan = richardson_weights(&c).unwrap();
            assert_close(plan.weights(), &lagrange_weights(&c), 1e-10);
        }
    }

    #[test]
    fn invalid_scales() {
        assert!(matches!(
            richardson_weights(&[1.0, 2.0, 1.0]),
            Err(Error::DuplicateScale(_))
        ));
        assert!(richardson_weights(&[1.0]).is_err());
        assert!(richardson_weights(&[1.0, -2.0]).is_err());
        assert!(richardson_weights(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn mitigate_examples() {
        let plan = MitigationPlan::preset(3).unwrap();
        assert!((plan.mitigate(&[0.7; 4]).unwrap() - 0.7).abs() < 1e-14);
        let plan1 = MitigationPlan::preset(1).unwrap();
        let (e0, a, p) = (1.3, 0.8, 1e-3);
        let est: Vec<f64> = plan1.scales().iter().map(|c| e0 + a * c * p).collect();
        assert!((plan1.mitigate(&est).unwrap() - e0).abs() < 1e-12);
        assert!(matches!(
            plan.mitigate(&[1.0, 2.0]),
            Err(Error::LengthMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn stderr_propagation() {
        let s = 0.01;
        let p1 = MitigationPlan::preset(1).unwrap();
        assert!((p1.mitigated_stderr(&[s, s]).unwrap() - s * 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(p1.mitigated_stderr(&[0.0, 0.0]).unwrap(), 0.0);
        let p4 = MitigationPlan::preset(4).unwrap();
        assert!((p4.mitigated_stderr(&[s; 5]).unwrap() - s * 251f64.sqrt()).abs() < 1e-14);
        assert!(p4.mitigated_stderr(&[s; 4]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_constant_term_of_low_degree_polynomials(
            n_c in 1usize..=4,
            e0 in -3.0f64..3.0,
            coeffs in prop::collection::vec(-50.0f64..50.0, 4),
            p in 1e-4f64..0.05,
            degree_cut in 0usize..=4,
        ) {
            let plan = MitigationPlan::preset(n_c).unwrap();
            let degree = degree_cut.min(n_c);
            // Oracle: direct polynomial evaluation at each scaled rate.
            let estimates: Vec<f64> = plan
                .scales()
                .iter()
                .map(|c| {
                    let x = c * p;
                    e0 + (1..=degree).map(|k| coeffs[k - 1] * x.powi(k as i32)).sum::<f64>()
                })
                .collect();
            prop_assert!((plan.mitigate(&estimates).unwrap() - e0).abs() < 1e-9);
        }
    }
}

//! Complex primitives shared by every other module: the stacked widely
//! linear weight vector and augmented (covariance + pseudocovariance)
//! second-order statistics of a scalar complex stream.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Coefficients of a widely linear IIR filter of feedback order `M` and
/// feedforward order `N`.
///
/// Storage is the flattened layout `[a_1..a_M, g_1..g_M, b_0..b_N, h_0..h_N]`
/// so that weight updates are a single axpy over a contiguous slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    m: usize,
    n: usize,
    coeffs: Vec<C64>,
}

/// Number of coefficients in the flattened layout for orders `(m, n)`.
pub const fn flat_len(m: usize, n: usize) -> usize {
    2 * m + 2 * (n + 1)
}

impl WeightVector {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            coeffs: vec![C64::new(0.0, 0.0); flat_len(m, n)],
        }
    }

    /// Assembles a weight vector from its four blocks. `a` and `g` must have
    /// equal length `M`, `b` and `h` equal length `N + 1 >= 1`.
    pub fn from_blocks(a: &[C64], g: &[C64], b: &[C64], h: &[C64]) -> Result<Self> {
        if a.len() != g.len() {
            return Err(Error::invalid(format!(
                "feedback blocks differ in length: a has {}, g has {}",
                a.len(),
                g.len()
            )));
        }
        if b.is_empty() || b.len() != h.len() {
            return Err(Error::invalid(format!(
                "feedforward blocks must be non-empty and equal: b has {}, h has {}",
                b.len(),
                h.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(flat_len(a.len(), b.len() - 1));
        coeffs.extend_from_slice(a);
        coeffs.extend_from_slice(g);
        coeffs.extend_from_slice(b);
        coeffs.extend_from_slice(h);
        Ok(Self {
            m: a.len(),
            n: b.len() - 1,
            coeffs,
        })
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(m: usize, n: usize, flat: &[C64]) -> Result<Self> {
        if flat.len() != flat_len(m, n) {
            return Err(Error::invalid(format!(
                "flattened weight vector for M={m}, N={n} needs {} entries, got {}",
                flat_len(m, n),
                flat.len()
            )));
        }
        Ok(Self {
            m,
            n,
            coeffs: flat.to_vec(),
        })
    }

    pub fn flatten(&self) -> Vec<C64> {
        self.coeffs.clone()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Feedback order `M`.
    pub fn feedback_order(&self) -> usize {
        self.m
    }

    /// Feedforward order `N`.
    pub fn feedforward_order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `a_1..a_M`
    pub fn a(&self) -> &[C64] {
        &self.coeffs[..self.m]
    }

    /// `g_1..g_M`
    pub fn g(&self) -> &[C64] {
        &self.coeffs[self.m..2 * self.m]
    }

    /// `b_0..b_N`
    pub fn b(&self) -> &[C64] {
        &self.coeffs[2 * self.m..2 * self.m + self.n + 1]
    }

    /// `h_0..h_N`
    pub fn h(&self) -> &[C64] {
        &self.coeffs[2 * self.m + self.n + 1..]
    }

    pub fn a_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs[..self.m]
    }

    pub fn g_mut(&mut self) -> &mut [C64] {
        let m = self.m;
        &mut self.coeffs[m..2 * m]
    }

    pub fn b_mut(&mut self) -> &mut [C64] {
        let (m, n) = (self.m, self.n);
        &mut self.coeffs[2 * m..2 * m + n + 1]
    }

    pub fn h_mut(&mut self) -> &mut [C64] {
        let (m, n) = (self.m, self.n);
        &mut self.coeffs[2 * m + n + 1..]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.m == other.m && self.n == other.n
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Largest coefficient magnitude.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Sample second-order statistics of a scalar complex stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedStats {
    /// mean of `z z*`
    pub covariance: C64,
    /// mean of `z z`
    pub pseudocovariance: C64,
    /// `pseudocovariance / covariance`; zero for an all-zero stream.
    pub circularity_quotient: C64,
}

impl AugmentedStats {
    /// The 2x2 augmented covariance `[[c, p], [p*, c*]]` of the stream.
    pub fn augmented_matrix(&self) -> [[C64; 2]; 2] {
        [
            [self.covariance, self.pseudocovariance],
            [self.pseudocovariance.conj(), self.covariance.conj()],
        ]
    }

    /// True when `|quotient| <= tol`, i.e. second-order circular to `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        self.circularity_quotient.norm() <= tol
    }
}

/// Raw (non-mean-removed) covariance and pseudocovariance of `samples`.
pub fn sample_augmented_stats(samples: &[C64]) -> Result<AugmentedStats> {
    augmented_stats_with(samples, false)
}

/// As [`sample_augmented_stats`], optionally removing the sample mean first.
pub fn augmented_stats_with(samples: &[C64], remove_mean: bool) -> Result<AugmentedStats> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "augmented statistics need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(i) = samples.iter().position(|z| !z.is_finite()) {
        return Err(Error::invalid(format!("non-finite sample at index {i}")));
    }
    let count = samples.len() as f64;
    let mean = if remove_mean {
        samples.iter().sum::<C64>() / count
    } else {
        C64::new(0.0, 0.0)
    };
    let mut power = 0.0;
    let mut pseudo = C64::new(0.0, 0.0);
    for z in samples {
        let c = z - mean;
        power += c.norm_sqr();
        pseudo += c * c;
    }
    let covariance = C64::new(power / count, 0.0);
    let pseudocovariance = pseudo / count;
    let circularity_quotient = if covariance.re > 0.0 {
        pseudocovariance / covariance.re
    } else {
        C64::new(0.0, 0.0)
    };
    Ok(AugmentedStats {
        covariance,
        pseudocovariance,
        circularity_quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn flatten_layout() {
        let w = WeightVector::from_blocks(&[c(1., 0.)], &[c(2., 0.)], &[c(3., 0.)], &[c(4., 0.)])
            .unwrap();
        assert_eq!(w.flatten(), vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]);
        assert_eq!(w.feedback_order(), 1);
        assert_eq!(w.feedforward_order(), 0);
    }

    #[test]
    fn zeros_length() {
        let w = WeightVector::zeros(4, 4);
        assert_eq!(w.len(), 18);
        assert!(w.flatten().iter().all(|z| *z == c(0., 0.)));
    }

    #[test]
    fn block_views_follow_layout() {
        let flat: Vec<C64> = (0..flat_len(2, 1)).map(|i| c(i as f64, 0.)).collect();
        let w = WeightVector::unflatten(2, 1, &flat).unwrap();
        assert_eq!(w.a(), &flat[0..2]);
        assert_eq!(w.g(), &flat[2..4]);
        assert_eq!(w.b(), &flat[4..6]);
        assert_eq!(w.h(), &flat[6..8]);
    }

    #[test]
    fn mismatched_blocks_rejected() {
        assert!(WeightVector::from_blocks(&[c(1., 0.)], &[], &[c(1., 0.)], &[c(1., 0.)]).is_err());
        assert!(WeightVector::from_blocks(&[], &[], &[], &[]).is_err());
        assert!(WeightVector::unflatten(4, 4, &[c(0., 0.); 17]).is_err());
    }

    #[test]
    fn fourth_roots_are_proper() {
        let s = sample_augmented_stats(&[c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)]).unwrap();
        assert_eq!(s.covariance, c(1., 0.));
        assert!(s.pseudocovariance.norm() < 1e-15);
        assert!(s.circularity_quotient.norm() < 1e-15);
    }

    #[test]
    fn real_signal_is_maximally_improper() {
        let s = sample_augmented_stats(&[c(1., 0.), c(-1., 0.), c(1., 0.), c(-1., 0.)]).unwrap();
        assert_eq!(s.circularity_quotient, c(1., 0.));
        let m = s.augmented_matrix();
        assert_eq!(m[0][1], m[1][0].conj());
    }

    #[test]
    fn stats_reject_short_or_nonfinite() {
        assert!(sample_augmented_stats(&[]).is_err());
        assert!(sample_augmented_stats(&[c(1., 0.)]).is_err());
        assert!(sample_augmented_stats(&[c(1., 0.), c(f64::NAN, 0.)]).is_err());
    }

    #[test]
    fn mean_removal() {
        let s = augmented_stats_with(&[c(2., 1.), c(4., 1.)], true).unwrap();
        assert_eq!(s.covariance, c(1., 0.));
        assert_eq!(s.circularity_quotient, c(1., 0.));
    }

    fn complex_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), len)
            .prop_map(|v| v.into_iter().map(|(re, im)| c(re, im)).collect())
    }

    proptest! {
        #[test]
        fn flatten_unflatten_bijection(m in 1usize..=8, n in 0usize..=8, seed in complex_vec(34..35)) {
            let flat: Vec<C64> = seed.iter().cycle().take(flat_len(m, n)).copied().collect();
            let w = WeightVector::unflatten(m, n, &flat).unwrap();
            let back = WeightVector::from_blocks(w.a(), w.g(), w.b(), w.h()).unwrap();
            prop_assert_eq!(&back, &w);
            prop_assert_eq!(WeightVector::unflatten(m, n, &back.flatten()).unwrap(), w);
        }

        #[test]
        fn quotient_bounded(z in complex_vec(2..64)) {
            let s = sample_augmented_stats(&z).unwrap();
            prop_assert!(s.circularity_quotient.norm() <= 1.0 + 1e-9);
            prop_assert!(s.covariance.re >= 0.0);
            prop_assert!(s.covariance.im.abs() <= 1e-12 * s.covariance.norm());
        }

        #[test]
        fn conjugation_conjugates_pseudocovariance(z in complex_vec(2..64)) {
            let s = sample_augmented_stats(&z).unwrap();
            let zc: Vec<C64> = z.iter().map(|v| v.conj()).collect();
            let sc = sample_augmented_stats(&zc).unwrap();
            prop_assert_eq!(sc.covariance, s.covariance);
            prop_assert!((sc.pseudocovariance - s.pseudocovariance.conj()).norm() <= 1e-12 * (1.0 + s.covariance.re));
        }

        #[test]
        fn real_scaling(z in complex_vec(2..64), scale in 0.01f64..100.0) {
            let s = sample_augmented_stats(&z).unwrap();
            prop_assume!(s.covariance.re > 1e-6);
            let zs: Vec<C64> = z.iter().map(|v| v * scale).collect();
            let ss = sample_augmented_stats(&zs).unwrap();
            let k = scale * scale;
            prop_assert!((ss.covariance.re - k * s.covariance.re).abs() <= 1e-12 * k * s.covariance.re);
            prop_assert!((ss.pseudocovariance - s.pseudocovariance * k).norm() <= 1e-12 * k * s.covariance.re);
            prop_assert!((ss.circularity_quotient - s.circularity_quotient).norm() <= 1e-12);
        }
    }
}

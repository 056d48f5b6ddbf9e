//! Truncated Mercer decompositions and the projection kernels built from them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{check_dim, ensure, Error, Result};
use crate::kernel::Kernel;

/// A family of eigenfunctions `phi_0, phi_1, ...` evaluated in batches.
pub trait FeatureMap: Send + Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    /// Writes `phi_k(x)` for every `k` in `indices` (ascending) into `out`.
    fn eval_selected(&self, x: &[f64], indices: &[usize], out: &mut [Complex64]);

    /// Whether every feature is real valued.
    fn is_real(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Truncation order: `k_max`, `ell`, or the number of retained entries.
    pub order: usize,
    /// Target error that motivated the order, if any.
    pub target_error: Option<f64>,
}

/// Eigenvalues paired with eigenfunctions on a domain.
#[derive(Clone)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    features: Arc<dyn FeatureMap>,
    domain: Domain,
    pub truncation: Truncation,
}

impl fmt::Debug for SpectralBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralBasis")
            .field("len", &self.eigenvalues.len())
            .field("trace", &self.trace())
            .field("domain", &self.domain)
            .field("truncation", &self.truncation)
            .finish()
    }
}

impl SpectralBasis {
    pub fn new(eigenvalues: Vec<f64>, features: Arc<dyn FeatureMap>, domain: Domain, truncation: Truncation) -> Result<Self> {
        ensure(!eigenvalues.is_empty(), || "spectral basis must be nonempty".into())?;
        check_dim(features.dim(), domain.dim())?;
        check_dim(features.len(), eigenvalues.len())?;
        for (k, &l) in eigenvalues.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidSpectrum { index: k, value: l });
            }
        }
        Ok(SpectralBasis { eigenvalues, features, domain, truncation })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn features(&self) -> &Arc<dyn FeatureMap> {
        &self.features
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Errors unless every eigenvalue lies in `[0, 1]`.
    pub fn check_unit_spectrum(&self) -> Result<()> {
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            if l > 1.0 {
                return Err(Error::InvalidSpectrum { index: k, value: l });
            }
        }
        Ok(())
    }

    /// Evaluates every eigenfunction at `x`.
    pub fn eval_all(&self, x: &[f64]) -> Vec<Complex64> {
        let idx: Vec<usize> = (0..self.len()).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); idx.len()];
        self.features.eval_selected(x, &idx, &mut out);
        out
    }

    /// Independent Bernoulli(`lambda_k`) selection, the first step of the spectral algorithm.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        self.check_unit_spectrum()?;
        Ok((0..self.len()).filter(|&k| rng.random::<f64>() < self.eigenvalues[k]).collect())
    }

    /// The projection kernel onto the selected eigenfunctions.
    pub fn projection(&self, indices: Vec<usize>) -> Result<ProjectionBasis> {
        ProjectionBasis::new(self.features.clone(), indices, self.domain.clone())
    }
}

impl Kernel for SpectralBasis {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let fx = self.eval_all(x);
        let fy = self.eval_all(y);
        fx.iter().zip(&fy).zip(&self.eigenvalues).map(|((a, b), l)| a * b.conj() * *l).sum()
    }
}

/// Sum of the stored eigenvalues.
pub fn spectral_trace(basis: &SpectralBasis) -> f64 {
    basis.trace()
}

/// `K(x, y) = sum_{k in I} phi_k(x) conj(phi_k(y))`.
#[derive(Clone)]
pub struct ProjectionBasis {
    features: Arc<dyn FeatureMap>,
    indices: Vec<usize>,
    domain: Domain,
}

impl fmt::Debug for ProjectionBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProjectionBasis").field("rank", &self.indices.len()).field("domain", &self.domain).finish()
    }
}

impl ProjectionBasis {
    pub fn new(features: Arc<dyn FeatureMap>, mut indices: Vec<usize>, domain: Domain) -> Result<Self> {
        check_dim(features.dim(), domain.dim())?;
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            ensure(last < features.len(), || format!("feature index {last} out of range"))?;
        }
        Ok(ProjectionBasis { features, indices, domain })
    }

    /// Every feature of the map.
    pub fn full(features: Arc<dyn FeatureMap>, domain: Domain) -> Result<Self> {
        let n = features.len();
        Self::new(features, (0..n).collect(), domain)
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn features(&self) -> &Arc<dyn FeatureMap> {
        &self.features
    }

    pub fn is_real(&self) -> bool {
        self.features.is_real()
    }

    /// `v(x) = (phi_k(x))_{k in I}`.
    pub fn eval_into(&self, x: &[f64], out: &mut [Complex64]) {
        self.features.eval_selected(x, &self.indices, out);
    }
}

impl Kernel for ProjectionBasis {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let mut a = vec![Complex64::new(0.0, 0.0); self.rank()];
        let mut b = a.clone();
        self.eval_into(x, &mut a);
        self.eval_into(y, &mut b);
        a.iter().zip(&b).map(|(u, v)| u * v.conj()).sum()
    }

    fn diag(&self, x: &[f64]) -> f64 {
        let mut a = vec![Complex64::new(0.0, 0.0); self.rank()];
        self.eval_into(x, &mut a);
        a.iter().map(|u| u.norm_sqr()).sum()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Normalised cosines on [0, 1]: 1, sqrt2 cos(pi k x).
    #[derive(Debug)]
    pub(crate) struct Cosines(pub usize);

    impl FeatureMap for Cosines {
        fn dim(&self) -> usize {
            1
        }
        fn len(&self) -> usize {
            self.0
        }
        fn eval_selected(&self, x: &[f64], indices: &[usize], out: &mut [Complex64]) {
            for (o, &k) in out.iter_mut().zip(indices) {
                let v = if k == 0 { 1.0 } else { 2f64.sqrt() * (std::f64::consts::PI * k as f64 * x[0]).cos() };
                *o = Complex64::new(v, 0.0);
            }
        }
        fn is_real(&self) -> bool {
            true
        }
    }

    #[test]
    fn trace_sums_eigenvalues() {
        let b = SpectralBasis::new(vec![1.0, 1.0, 1.0], Arc::new(Cosines(3)), Domain::unit_box(1), Truncation::default()).unwrap();
        assert_eq!(spectral_trace(&b), 3.0);
    }

    #[test]
    fn rejects_negative_or_mismatched_spectra() {
        let f: Arc<dyn FeatureMap> = Arc::new(Cosines(2));
        assert!(matches!(
            SpectralBasis::new(vec![0.5, -0.1], f.clone(), Domain::unit_box(1), Truncation::default()),
            Err(Error::InvalidSpectrum { index: 1, .. })
        ));
        assert!(SpectralBasis::new(vec![0.5], f.clone(), Domain::unit_box(1), Truncation::default()).is_err());
        let raw = SpectralBasis::new(vec![2.0, 0.5], f, Domain::unit_box(1), Truncation::default()).unwrap();
        let mut rng = crate::rng::stream_rng(0, 0);
        assert!(raw.select(&mut rng).is_err());
    }

    #[test]
    fn projection_kernel_matches_spectral_sum() {
        let f: Arc<dyn FeatureMap> = Arc::new(Cosines(4));
        let b = SpectralBasis::new(vec![1.0, 0.0, 1.0, 1.0], f, Domain::unit_box(1), Truncation::default()).unwrap();
        let p = b.projection(vec![0, 2, 3]).unwrap();
        for (x, y) in [(0.1, 0.7), (0.5, 0.5), (0.9, 0.2)] {
            assert!((p.eval(&[x], &[y]) - b.eval(&[x], &[y])).norm() < 1e-14);
        }
        assert!((p.diag(&[0.3]) - p.eval(&[0.3], &[0.3]).re).abs() < 1e-14);
    }
}

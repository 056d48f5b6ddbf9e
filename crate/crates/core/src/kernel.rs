//! Closed-form kernels, existence conditions and pair correlation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, ensure, Error, Result};
use crate::special::{bessel_lambda, ln_gamma};

/// A Hermitian kernel on `R^d`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;
    /// `K(x, y)`. Dimensions are the caller's responsibility.
    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64;
    fn diag(&self, x: &[f64]) -> f64 {
        self.eval(x, x).re
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        (**self).eval(x, y)
    }
    fn diag(&self, x: &[f64]) -> f64 {
        (**self).diag(x)
    }
}

impl<K: Kernel + ?Sized> Kernel for std::sync::Arc<K> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        (**self).eval(x, y)
    }
    fn diag(&self, x: &[f64]) -> f64 {
        (**self).diag(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `sum_{j in J} exp(2 pi i j.(x - y))` on the unit box.
    FourierProjection { frequencies: Vec<Vec<i64>> },
    /// `rho exp(x conj(y)/beta - (|x|^2 + |y|^2)/(2 beta))` in the complex plane.
    Ginibre { rho: f64, beta: f64 },
    GaussianHom { rho: f64, alpha: f64, dim: usize },
    /// `rho exp(-|x-y|^2/alpha^2) sqrt(p_sigma(x) p_sigma(y))`.
    GaussianInhom { rho: f64, alpha: f64, sigma: f64, dim: usize },
    /// `rho Gamma(1+d/2) J_{d/2}(2r/alpha) / (r/alpha)^{d/2}`.
    Bessel { rho: f64, alpha: f64, dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub exists: bool,
    pub constraint_value: f64,
    pub constraint_bound: f64,
}

impl ExistenceReport {
    fn new(value: f64, bound: f64) -> Self {
        ExistenceReport { exists: value <= bound * (1.0 + 1e-12), constraint_value: value, constraint_bound: bound }
    }
}

impl KernelSpec {
    /// Checks parameter positivity and the shape of the frequency set.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"));
        match self {
            KernelSpec::FourierProjection { frequencies } => {
                ensure(!frequencies.is_empty(), || "frequency set must be nonempty".into())?;
                let d = frequencies[0].len();
                ensure(d > 0, || "frequencies must have dimension >= 1".into())?;
                for f in frequencies {
                    check_dim(d, f.len())?;
                }
                let mut sorted = frequencies.clone();
                sorted.sort();
                sorted.dedup();
                ensure(sorted.len() == frequencies.len(), || "frequencies must be distinct".into())
            }
            KernelSpec::Ginibre { rho, beta } => {
                pos("rho", *rho)?;
                pos("beta", *beta)
            }
            KernelSpec::GaussianHom { rho, alpha, dim } | KernelSpec::Bessel { rho, alpha, dim } => {
                pos("rho", *rho)?;
                pos("alpha", *alpha)?;
                ensure(*dim > 0, || "dimension must be >= 1".into())
            }
            KernelSpec::GaussianInhom { rho, alpha, sigma, dim } => {
                pos("rho", *rho)?;
                pos("alpha", *alpha)?;
                pos("sigma", *sigma)?;
                ensure(*dim > 0, || "dimension must be >= 1".into())
            }
        }
    }

    pub fn intensity_at(&self, x: &[f64]) -> f64 {
        self.diag(x)
    }
}

impl Kernel for KernelSpec {
    fn dim(&self) -> usize {
        match self {
            KernelSpec::FourierProjection { frequencies } => frequencies.first().map_or(0, |f| f.len()),
            KernelSpec::Ginibre { .. } => 2,
            KernelSpec::GaussianHom { dim, .. }
            | KernelSpec::GaussianInhom { dim, .. }
            | KernelSpec::Bessel { dim, .. } => *dim,
        }
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        match self {
            KernelSpec::FourierProjection { frequencies } => {
                let mut s = Complex64::new(0.0, 0.0);
                for j in frequencies {
                    let phase: f64 = j.iter().zip(x.iter().zip(y)).map(|(&k, (a, b))| k as f64 * (a - b)).sum();
                    s += Complex64::from_polar(1.0, 2.0 * PI * phase);
                }
                s
            }
            KernelSpec::Ginibre { rho, beta } => {
                let z = Complex64::new(x[0], x[1]);
                let w = Complex64::new(y[0], y[1]);
                let e = z * w.conj() / beta - (z.norm_sqr() + w.norm_sqr()) / (2.0 * beta);
                *rho * e.exp()
            }
            KernelSpec::GaussianHom { rho, alpha, .. } => {
                Complex64::new(rho * (-sq_dist(x, y) / (alpha * alpha)).exp(), 0.0)
            }
            KernelSpec::GaussianInhom { rho, alpha, sigma, dim } => {
                let ln_p = |v: &[f64]| {
                    -v.iter().map(|t| t * t).sum::<f64>() / (2.0 * sigma * sigma)
                        - *dim as f64 * (sigma * (2.0 * PI).sqrt()).ln()
                };
                let e = -sq_dist(x, y) / (alpha * alpha) + 0.5 * (ln_p(x) + ln_p(y));
                Complex64::new(rho * e.exp(), 0.0)
            }
            KernelSpec::Bessel { rho, alpha, dim } => {
                let r = sq_dist(x, y).sqrt();
                Complex64::new(rho * bessel_lambda(*dim as f64 / 2.0, 2.0 * r / alpha), 0.0)
            }
        }
    }

    fn diag(&self, x: &[f64]) -> f64 {
        match self {
            KernelSpec::FourierProjection { frequencies } => frequencies.len() as f64,
            KernelSpec::Ginibre { rho, .. } | KernelSpec::GaussianHom { rho, .. } | KernelSpec::Bessel { rho, .. } => *rho,
            KernelSpec::GaussianInhom { .. } => self.eval(x, x).re,
        }
    }
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Evaluates `K(x, y)` after checking dimensions and parameters.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<Complex64> {
    spec.validate()?;
    check_dim(spec.dim(), x.len())?;
    check_dim(spec.dim(), y.len())?;
    Ok(spec.eval(x, y))
}

/// Closed-form existence condition of each model.
pub fn check_existence(spec: &KernelSpec) -> ExistenceReport {
    match spec {
        KernelSpec::FourierProjection { .. } => ExistenceReport::new(1.0, 1.0),
        KernelSpec::Ginibre { rho, beta } => ExistenceReport::new(rho * beta * PI, 1.0),
        KernelSpec::GaussianHom { rho, alpha, dim } => {
            let d = *dim as f64;
            ExistenceReport::new(rho * alpha.powf(d) * PI.powf(d / 2.0), 1.0)
        }
        KernelSpec::GaussianInhom { rho, alpha, sigma, dim } => ExistenceReport::new(
            2.0 * rho.powf(1.0 / *dim as f64),
            1.0 + (1.0 + 8.0 * sigma * sigma / (alpha * alpha)).sqrt(),
        ),
        KernelSpec::Bessel { rho, alpha, dim } => {
            let d = *dim as f64;
            let v = rho * alpha.powf(d) * PI.powf(d / 2.0) * ln_gamma(1.0 + d / 2.0).exp();
            ExistenceReport::new(v, 1.0)
        }
    }
}

/// Largest admissible range parameter for a stationary model of intensity `rho`.
pub fn alpha_max(spec_kind: StationaryKind, rho: f64, dim: usize) -> f64 {
    let d = dim as f64;
    match spec_kind {
        StationaryKind::Gaussian => 1.0 / (rho.powf(1.0 / d) * PI.sqrt()),
        StationaryKind::Bessel => {
            1.0 / (rho * PI.powf(d / 2.0) * ln_gamma(1.0 + d / 2.0).exp()).powf(1.0 / d)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StationaryKind {
    Gaussian,
    Bessel,
}

/// `g(x, y) = 1 - |K(x,y)|^2 / (K(x,x) K(y,y))`.
pub fn pair_correlation<K: Kernel + ?Sized>(kernel: &K, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(kernel.dim(), x.len())?;
    check_dim(kernel.dim(), y.len())?;
    let kxx = kernel.diag(x);
    let kyy = kernel.diag(y);
    if kxx <= 0.0 || kyy <= 0.0 {
        return Err(Error::UndefinedPairCorrelation);
    }
    Ok(1.0 - kernel.eval(x, y).norm_sqr() / (kxx * kyy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use faer::Mat;
    use proptest::prelude::*;
    use rand::Rng;

    fn specs() -> Vec<KernelSpec> {
        vec![
            KernelSpec::FourierProjection { frequencies: vec![vec![-1, 2], vec![0, 0], vec![3, 1]] },
            KernelSpec::Ginibre { rho: 1.0 / PI, beta: 0.7 },
            KernelSpec::GaussianHom { rho: 1.0, alpha: 0.5, dim: 3 },
            KernelSpec::GaussianInhom { rho: 2.0, alpha: 0.8, sigma: 1.2, dim: 2 },
            KernelSpec::Bessel { rho: 3.0, alpha: 0.3, dim: 2 },
        ]
    }

    #[test]
    fn point_values() {
        let g = KernelSpec::GaussianHom { rho: 1.0, alpha: 1.0, dim: 1 };
        assert_eq!(eval_kernel(&g, &[0.3], &[0.3]).unwrap().re, 1.0);
        let f = KernelSpec::FourierProjection { frequencies: vec![vec![-1], vec![0], vec![1]] };
        assert!((eval_kernel(&f, &[0.4], &[0.4]).unwrap().re - 3.0).abs() < 1e-15);
        let gin = KernelSpec::Ginibre { rho: 1.0 / PI, beta: 1.0 };
        let v = eval_kernel(&gin, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((v.re - (-0.5f64).exp() / PI).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!((v.re - 0.19306).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = KernelSpec::GaussianHom { rho: 1.0, alpha: 1.0, dim: 2 };
        assert!(matches!(eval_kernel(&g, &[0.0], &[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(eval_kernel(&KernelSpec::GaussianHom { rho: -1.0, alpha: 1.0, dim: 1 }, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn existence_examples() {
        let g = check_existence(&KernelSpec::Ginibre { rho: 100.0, beta: 1.0 / (100.0 * PI) });
        assert!(g.exists);
        assert!((g.constraint_value - 1.0).abs() < 1e-14);
        let inh = check_existence(&KernelSpec::GaussianInhom { rho: 1.0, alpha: 1.0, sigma: 1.0, dim: 1 });
        assert!(inh.exists && inh.constraint_value == 2.0 && inh.constraint_bound == 4.0);
        let hom = check_existence(&KernelSpec::GaussianHom { rho: 2.0, alpha: 1.0, dim: 2 });
        assert!(!hom.exists);
        assert!((hom.constraint_value - 2.0 * PI).abs() < 1e-14);
        assert!(check_existence(&KernelSpec::FourierProjection { frequencies: vec![vec![0]] }).exists);
    }

    #[test]
    fn alpha_max_is_boundary() {
        for d in 1..4 {
            let a = alpha_max(StationaryKind::Gaussian, 50.0, d);
            let r = check_existence(&KernelSpec::GaussianHom { rho: 50.0, alpha: a, dim: d });
            assert!((r.constraint_value - 1.0).abs() < 1e-12);
            let b = alpha_max(StationaryKind::Bessel, 50.0, d);
            let r = check_existence(&KernelSpec::Bessel { rho: 50.0, alpha: b, dim: d });
            assert!((r.constraint_value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pcf_closed_forms() {
        let (rho, alpha) = (2.0, 0.4);
        let g = KernelSpec::GaussianHom { rho, alpha, dim: 2 };
        let r: f64 = 0.3;
        let v = pair_correlation(&g, &[0.0, 0.0], &[r, 0.0]).unwrap();
        assert!((v - (1.0 - (-2.0 * r * r / (alpha * alpha)).exp())).abs() < 1e-14);
        let beta = 0.6;
        let gin = KernelSpec::Ginibre { rho: 0.5, beta };
        let v = pair_correlation(&gin, &[0.2, -0.1], &[0.2 + 0.3, -0.1 + 0.4]).unwrap();
        assert!((v - (1.0 - (-0.25 / beta).exp())).abs() < 1e-13);
        for s in specs() {
            let x = vec![0.1; s.dim()];
            assert!(pair_correlation(&s, &x, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn zero_diagonal_is_undefined() {
        struct Zero;
        impl Kernel for Zero {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _: &[f64], _: &[f64]) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
        }
        assert_eq!(pair_correlation(&Zero, &[0.0], &[1.0]), Err(Error::UndefinedPairCorrelation));
    }

    #[test]
    fn hermitian_symmetry_and_repulsion() {
        let mut rng = stream_rng(11, 0);
        for s in specs() {
            let d = s.dim();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = s.eval(&x, &y);
                let b = s.eval(&y, &x).conj();
                assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "{s:?}");
                assert!(s.eval(&x, &x).im.abs() < 1e-12 && s.diag(&x) >= 0.0);
                assert!(pair_correlation(&s, &x, &y).unwrap() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn fourier_projection_identity() {
        // integrand is a trigonometric polynomial, so a uniform grid finer than
        // the frequency span integrates it exactly
        let s = KernelSpec::FourierProjection {
            frequencies: vec![vec![-2, 1], vec![0, 0], vec![1, 3], vec![2, -1]],
        };
        let m = 16;
        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let y = [rng.random::<f64>(), rng.random::<f64>()];
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..m {
                for b in 0..m {
                    let z = [(a as f64 + 0.5) / m as f64, (b as f64 + 0.5) / m as f64];
                    acc += s.eval(&x, &z) * s.eval(&z, &y);
                }
            }
            acc /= (m * m) as f64;
            assert!((acc - s.eval(&x, &y)).norm() < 1e-8);
        }
    }

    // Largest eigenvalue of the midpoint discretisation of the integral operator.
    fn nystrom_max(s: &KernelSpec, nodes: &[Vec<f64>], weight: f64) -> f64 {
        let n = nodes.len();
        let m = Mat::<faer::c64>::from_fn(n, n, |i, j| {
            let v = s.eval(&nodes[i], &nodes[j]) * weight;
            faer::c64::new(v.re, v.im)
        });
        let ev = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    fn grid_1d(lo: f64, hi: f64, m: usize) -> (Vec<Vec<f64>>, f64) {
        let h = (hi - lo) / m as f64;
        ((0..m).map(|i| vec![lo + h * (i as f64 + 0.5)]).collect(), h)
    }

    fn grid_2d(half: f64, m: usize, disk: bool) -> (Vec<Vec<f64>>, f64) {
        let h = 2.0 * half / m as f64;
        let mut pts = Vec::new();
        for a in 0..m {
            for b in 0..m {
                let p = vec![-half + h * (a as f64 + 0.5), -half + h * (b as f64 + 0.5)];
                if !disk || p[0] * p[0] + p[1] * p[1] <= half * half {
                    pts.push(p);
                }
            }
        }
        (pts, h * h)
    }

    #[test]
    fn existence_agrees_with_nystrom() {
        let mut rng = stream_rng(2024, 0);
        for _ in 0..10 {
            // well inside or well outside the admissible region, so that the
            // discretisation error cannot flip the answer
            let inside = rng.random_bool(0.5);
            let level = if inside { rng.random_range(0.2..0.8) } else { rng.random_range(1.3..2.0) };

            let alpha = rng.random_range(0.5..1.5);
            let hom = KernelSpec::GaussianHom { rho: level / (alpha * PI.sqrt()), alpha, dim: 1 };
            let (nodes, w) = grid_1d(-25.0 * alpha, 25.0 * alpha, 400);
            let top = nystrom_max(&hom, &nodes, w);
            assert_eq!(check_existence(&hom).exists, top <= 1.0 + 1e-9, "{hom:?} top {top}");

            let bes = KernelSpec::Bessel {
                rho: level / (alpha * PI.sqrt() * ln_gamma(1.5).exp()),
                alpha,
                dim: 1,
            };
            let (nodes, w) = grid_1d(-40.0 * alpha, 40.0 * alpha, 640);
            let top = nystrom_max(&bes, &nodes, w);
            assert_eq!(check_existence(&bes).exists, top <= 1.0 + 1e-9, "{bes:?} top {top}");

            let beta = rng.random_range(0.05..0.2);
            let gin = KernelSpec::Ginibre { rho: level / (beta * PI), beta };
            let (nodes, w) = grid_2d(1.5, 30, true);
            let top = nystrom_max(&gin, &nodes, w);
            assert_eq!(check_existence(&gin).exists, top <= 1.0 + 1e-9, "{gin:?} top {top}");

            // inhomogeneous Gaussian: pick rho from the admissible boundary
            let sigma = rng.random_range(0.5..1.5);
            let bound = 0.5 * (1.0 + (1.0 + 8.0 * sigma * sigma / (alpha * alpha)).sqrt());
            let rho = if inside { 0.8 * bound } else { 1.3 * bound };
            let inh = KernelSpec::GaussianInhom { rho, alpha, sigma, dim: 1 };
            let (nodes, w) = grid_1d(-10.0 * sigma, 10.0 * sigma, 400);
            let top = nystrom_max(&inh, &nodes, w);
            assert_eq!(check_existence(&inh).exists, top <= 1.0 + 1e-9, "{inh:?} top {top}");
        }
    }

    proptest! {
        #[test]
        fn gaussian_pcf_bounded(rho in 0.1f64..10.0, alpha in 0.01f64..1.0, r in 0.0f64..2.0) {
            let g = KernelSpec::GaussianHom { rho, alpha, dim: 1 };
            let v = pair_correlation(&g, &[0.0], &[r]).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }

        #[test]
        fn bessel_kernel_diagonal_is_rho(rho in 0.1f64..10.0, alpha in 0.01f64..1.0, d in 1usize..4) {
            let b = KernelSpec::Bessel { rho, alpha, dim: d };
            let x = vec![0.3; d];
            prop_assert!((b.eval(&x, &x).re - rho).abs() < 1e-12 * rho);
        }
    }
}

//! The beta-Ginibre process on a centred disc.
//!
//! Two samplers: eigenvalues of a truncated complex Gaussian matrix followed by
//! independent thinning, and the spectral algorithm on the exact Mercer
//! decomposition restricted to the disc.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::Domain;
use crate::error::{ensure, Error, Result};
use crate::kernel::KernelSpec;
use crate::pattern::{PointPattern, Provenance};
use crate::projection::{finish_pattern, run_to_completion, RejectionStrategy, SamplerConfig, SpectralState};
use crate::special::{ln_gamma, ln_gamma_p, ln_lower_gamma};
use crate::spectral::{FeatureMap, SpectralBasis, Truncation};

pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GinibreParams {
    pub rho: f64,
    pub beta: f64,
    pub radius: f64,
    pub epsilon: f64,
}

impl GinibreParams {
    pub fn new(rho: f64, beta: f64, radius: f64) -> Result<Self> {
        Self::with_epsilon(rho, beta, radius, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(rho: f64, beta: f64, radius: f64, epsilon: f64) -> Result<Self> {
        let spec = KernelSpec::Ginibre { rho, beta };
        spec.validate()?;
        ensure(radius.is_finite() && radius > 0.0, || format!("radius must be positive, got {radius}"))?;
        ensure(epsilon > 0.0 && epsilon < 1.0, || format!("epsilon must lie in (0, 1), got {epsilon}"))?;
        let rep = crate::kernel::check_existence(&spec);
        if !rep.exists {
            return Err(Error::NonExistent(format!("rho beta pi = {} exceeds 1", rep.constraint_value)));
        }
        Ok(GinibreParams { rho, beta, radius, epsilon })
    }

    /// `1/(rho pi)`, the most repulsive admissible scale.
    pub fn beta_max(rho: f64) -> f64 {
        1.0 / (rho * PI)
    }

    /// Radius of the disc with unit area.
    pub fn unit_area_radius() -> f64 {
        1.0 / PI.sqrt()
    }

    /// `R^2 / beta`.
    pub fn t(&self) -> f64 {
        self.radius * self.radius / self.beta
    }

    /// `rho beta pi`, the thinning probability.
    pub fn retention(&self) -> f64 {
        (self.rho * self.beta * PI).min(1.0)
    }

    pub fn domain(&self) -> Domain {
        Domain::centered_ball(2, self.radius).expect("positive radius")
    }
}

/// `ln M_beta(R, n)` with `t = R^2/beta`; requires `n + 1 > t`.
pub fn ln_truncation_bound(t: f64, n: usize) -> f64 {
    let nf = n as f64;
    -t + nf * t.ln() - ln_gamma(nf + 1.0) + (nf + 1.0).ln() - (nf + 1.0 - t).ln()
}

/// Smallest `n` above `R^2/beta` with `M_beta(R, n) <= eps`, by integer bisection.
pub fn truncation_order(radius: f64, beta: f64, eps: f64) -> usize {
    let t = radius * radius / beta;
    let ln_eps = eps.ln();
    let mut lo = t.ceil() as usize + 1;
    if ln_truncation_bound(t, lo) <= ln_eps {
        return lo;
    }
    let mut hi = (10.0 * t + 100.0).ceil() as usize;
    while ln_truncation_bound(t, hi) > ln_eps {
        hi *= 2;
    }
    // invariant: M(lo) > eps >= M(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ln_truncation_bound(t, mid) <= ln_eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `Phi_k(x) = x^k / sqrt(pi beta^{k+1} gamma(k+1, t)) exp(-|x|^2/(2 beta))` in log-magnitude form.
#[derive(Clone, Debug)]
pub struct GinibreFeatures {
    beta: f64,
    ln_norm: Vec<f64>,
}

impl GinibreFeatures {
    pub fn new(beta: f64, t: f64, count: usize) -> Self {
        let ln_norm = (0..count)
            .map(|k| -0.5 * (PI.ln() + (k as f64 + 1.0) * beta.ln() + ln_lower_gamma(k as f64 + 1.0, t)))
            .collect();
        GinibreFeatures { beta, ln_norm }
    }

    /// `ln |Phi_k|^2` at radius `r`.
    pub fn ln_modulus_sq(&self, k: usize, r: f64) -> f64 {
        if r == 0.0 {
            return if k == 0 { 2.0 * self.ln_norm[0] } else { f64::NEG_INFINITY };
        }
        2.0 * (k as f64 * r.ln() + self.ln_norm[k]) - r * r / self.beta
    }
}

impl FeatureMap for GinibreFeatures {
    fn dim(&self) -> usize {
        2
    }

    fn len(&self) -> usize {
        self.ln_norm.len()
    }

    fn eval_selected(&self, x: &[f64], indices: &[usize], out: &mut [Complex64]) {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            for (o, &k) in out.iter_mut().zip(indices) {
                *o = if k == 0 { Complex64::new(self.ln_norm[0].exp(), 0.0) } else { Complex64::new(0.0, 0.0) };
            }
            return;
        }
        let ln_r = 0.5 * r2.ln();
        let theta = x[1].atan2(x[0]);
        let damp = -r2 / (2.0 * self.beta);
        for (o, &k) in out.iter_mut().zip(indices) {
            let kf = k as f64;
            *o = Complex64::from_polar((kf * ln_r + self.ln_norm[k] + damp).exp(), kf * theta);
        }
    }
}

/// Truncated spectrum and eigenfunctions of the Ginibre kernel on the disc.
#[derive(Clone, Debug)]
pub struct GinibreSpectrum {
    pub params: GinibreParams,
    pub k_max: usize,
    pub features: Arc<GinibreFeatures>,
    pub basis: SpectralBasis,
}

impl GinibreSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        self.basis.eigenvalues()
    }
}

/// `lambda_k = rho beta pi gamma(k+1, t)/k!` for `k < k_max`, with normalised eigenfunctions.
pub fn ginibre_spectral_basis(params: &GinibreParams) -> Result<GinibreSpectrum> {
    let t = params.t();
    let k_max = truncation_order(params.radius, params.beta, params.epsilon);
    let scale = params.rho * params.beta * PI;
    let eig: Vec<f64> = (0..k_max).map(|k| scale * ln_gamma_p(k as f64 + 1.0, t).exp()).collect();
    let features = Arc::new(GinibreFeatures::new(params.beta, t, k_max));
    let basis = SpectralBasis::new(
        eig,
        features.clone(),
        params.domain(),
        Truncation { order: k_max, target_error: Some(params.epsilon) },
    )?;
    Ok(GinibreSpectrum { params: *params, k_max, features, basis })
}

fn provenance(params: &GinibreParams, algorithm: &str) -> Provenance {
    Provenance::new("ginibre", algorithm)
        .with_param("rho", params.rho)
        .with_param("beta", params.beta)
        .with_param("radius", params.radius)
        .with_param("epsilon", params.epsilon)
}

/// Eigenvalues of an `n x n` matrix with i.i.d. entries `(A + iB) sqrt(beta/2)`, thinned with probability `rho beta pi` and restricted to the disc.
pub fn sample_ginibre_eigen<R: Rng>(params: &GinibreParams, rng: &mut R) -> Result<PointPattern> {
    let n = truncation_order(params.radius, params.beta, params.epsilon);
    let s = (params.beta / 2.0).sqrt();
    let entries: Vec<Complex64> = (0..n * n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex64::new(a * s, b * s)
        })
        .collect();
    let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| entries[i * n + j]);
    let eig = m.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?} for a {n}x{n} matrix")))?;
    let keep = params.retention();
    let mut prov = provenance(params, "ginibre-eigen").with_param("matrix_size", n as f64);
    let mut points = Vec::new();
    for z in eig {
        let retained = rng.random::<f64>() < keep;
        if retained && z.norm() < params.radius {
            points.push(vec![z.re, z.im]);
        } else {
            prov.deleted.push(vec![z.re, z.im]);
        }
    }
    PointPattern::new(points, params.domain(), prov)
}

/// Maximum over a radial grid of `sum_{k in S} |Phi_k(r)|^2`, inflated by 2%.
pub fn radial_bound(features: &GinibreFeatures, selected: &[usize], radius: f64, grid: usize) -> f64 {
    let mut top = 0.0f64;
    for g in 0..=grid {
        let r = radius * g as f64 / grid as f64;
        let v: f64 = selected.iter().map(|&k| features.ln_modulus_sq(k, r).exp()).sum();
        top = top.max(v);
    }
    1.02 * top
}

/// Bernoulli selection of eigenfunctions, then the spectral algorithm with a uniform proposal on the disc.
pub fn sample_ginibre_spectral<R: Rng>(spectrum: &GinibreSpectrum, cfg: &SamplerConfig, rng: &mut R) -> Result<PointPattern> {
    let params = &spectrum.params;
    let domain = params.domain();
    let sel = spectrum.basis.select(rng)?;
    let mut prov = provenance(params, "ginibre-spectral").with_param("k_max", spectrum.k_max as f64);
    if sel.is_empty() {
        return PointPattern::new(Vec::new(), domain, prov);
    }
    let bound = radial_bound(&spectrum.features, &sel, params.radius, 10_000);
    prov.params.insert("bound".into(), bound);
    let proj = spectrum.basis.projection(sel)?;
    let mut st = SpectralState::new(&proj);
    run_to_completion(&mut st, &domain, &RejectionStrategy::uniform(bound)?, cfg, rng)?;
    finish_pattern(&st, &domain, prov)
}

//! Gaussian-type kernels through their Hermite decomposition.
//!
//! The inhomogeneous kernel `rho exp(-|x-y|^2/alpha^2) sqrt(p_sigma(x) p_sigma(y))`
//! has explicit tensor-product Hermite eigenfunctions on `R^d`. The homogeneous
//! kernel restricted to the unit ball is obtained from it by independent thinning.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::domain::Domain;
use crate::error::{ensure, Error, Result};
use crate::pattern::{PointPattern, Provenance};
use crate::projection::{estimate_diagonal_max, finish_pattern, run_to_completion, RejectionStrategy, SamplerConfig, SpectralState};
use crate::special::chi2_quantile;
use crate::spectral::{FeatureMap, SpectralBasis, Truncation};

/// Tail mass and window quantile used when none is given.
pub const DEFAULT_EPSILON: f64 = 1e-4;

const RESCALE: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteBasisParams {
    pub rho: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub dim: usize,
}

impl HermiteBasisParams {
    /// Checks positivity only; see [`HermiteBasisParams::exists`].
    pub fn new(rho: f64, alpha: f64, sigma: f64, dim: usize) -> Result<Self> {
        for (name, v) in [("rho", rho), ("alpha", alpha), ("sigma", sigma)] {
            ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))?;
        }
        ensure(dim > 0, || "dimension must be >= 1".into())?;
        Ok(HermiteBasisParams { rho, alpha, sigma, dim })
    }

    pub fn a(&self) -> f64 {
        0.25 / (self.sigma * self.sigma)
    }

    pub fn b(&self) -> f64 {
        1.0 / (self.alpha * self.alpha)
    }

    pub fn c(&self) -> f64 {
        let (a, b) = (self.a(), self.b());
        (a * a + 2.0 * a * b).sqrt()
    }

    pub fn big_a(&self) -> f64 {
        self.a() + self.b() + self.c()
    }

    pub fn big_b(&self) -> f64 {
        self.b() / self.big_a()
    }

    /// Largest eigenvalue `rho (2a/A)^{d/2}`.
    pub fn lambda0(&self) -> f64 {
        self.rho * (2.0 * self.a() / self.big_a()).powf(self.dim as f64 / 2.0)
    }

    pub fn eigenvalue(&self, order: usize) -> f64 {
        self.lambda0() * self.big_b().powi(order as i32)
    }

    /// `lambda_0 <= 1`, equivalent to `2 rho^{1/d} <= 1 + sqrt(1 + 8 sigma^2/alpha^2)`.
    pub fn exists(&self) -> bool {
        self.lambda0() <= 1.0 + 1e-12
    }

    pub fn ensure_exists(&self) -> Result<()> {
        if self.exists() {
            Ok(())
        } else {
            Err(Error::NonExistent(format!("largest eigenvalue {} exceeds 1", self.lambda0())))
        }
    }

    /// Smallest `ell` with `sum_{|j|_inf <= ell} lambda_j >= (1 - delta) rho`.
    pub fn truncation_for_mass(&self, delta: f64) -> usize {
        let d = self.dim as f64;
        let big_b = self.big_b();
        // (1 - B^{ell+1})^d >= 1 - delta  <=>  B^{ell+1} <= 1 - (1-delta)^{1/d}
        let target = -((-delta).ln_1p() / d).exp_m1();
        let mut ell = ((target.ln() / big_b.ln()).ceil() as usize).saturating_sub(1);
        while self.truncated_mass(ell) < (1.0 - delta) * self.rho {
            ell += 1;
        }
        while ell > 0 && self.truncated_mass(ell - 1) >= (1.0 - delta) * self.rho {
            ell -= 1;
        }
        ell
    }

    /// `rho (1 - B^{ell+1})^d`.
    pub fn truncated_mass(&self, ell: usize) -> f64 {
        self.rho * ((-self.big_b().powi(ell as i32 + 1)).ln_1p() * self.dim as f64).exp()
    }

    pub fn window_radius(&self, eps: f64) -> f64 {
        self.sigma * chi2_quantile(self.dim as f64, 1.0 - eps).sqrt()
    }
}

/// Normalised Hermite functions `psi_0..=psi_kmax` at `u`, evaluated with a running
/// rescale so neither the Gaussian factor nor the polynomial over/underflows.
pub fn hermite_functions(u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut ln_scale = -0.5 * u * u - 0.25 * PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = ln_scale.exp();
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = u * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        out[k + 1] = cur * ln_scale.exp();
    }
}

/// Tensor products `Phi_j(x) = prod_k phi_{j_k}(x_k)` over `j in {0..=ell}^d`, flattened
/// with the first coordinate most significant.
#[derive(Clone, Debug)]
pub struct HermiteFeatures {
    c: f64,
    ell: usize,
    dim: usize,
}

impl HermiteFeatures {
    pub fn new(c: f64, ell: usize, dim: usize) -> Self {
        HermiteFeatures { c, ell, dim }
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let base = self.ell + 1;
        let mut j = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            j[k] = flat % base;
            flat /= base;
        }
        j
    }

    /// `phi_0..=phi_kmax` at a scalar coordinate.
    pub fn phi(&self, x: f64, out: &mut [f64]) {
        let s = (2.0 * self.c).sqrt();
        hermite_functions(s * x, out);
        let f = s.sqrt();
        out.iter_mut().for_each(|v| *v *= f);
    }
}

impl FeatureMap for HermiteFeatures {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        (self.ell + 1).pow(self.dim as u32)
    }

    fn is_real(&self) -> bool {
        true
    }

    fn eval_selected(&self, x: &[f64], indices: &[usize], out: &mut [Complex64]) {
        let base = self.ell + 1;
        let top = indices
            .iter()
            .map(|&i| self.multi_index(i).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let width = top + 1;
        let mut table = vec![0.0; self.dim * width];
        for (k, &xk) in x.iter().enumerate() {
            self.phi(xk, &mut table[k * width..(k + 1) * width]);
        }
        for (o, &i) in out.iter_mut().zip(indices) {
            let mut flat = i;
            let mut v = 1.0;
            for k in (0..self.dim).rev() {
                v *= table[k * width + flat % base];
                flat /= base;
            }
            *o = Complex64::new(v, 0.0);
        }
    }
}

/// Truncation rule for [`inhom_gaussian_basis`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HermiteTruncation {
    Order(usize),
    Mass(f64),
}

#[derive(Clone, Debug)]
pub struct HermiteBasis {
    pub params: HermiteBasisParams,
    pub ell: usize,
    pub features: Arc<HermiteFeatures>,
    pub basis: SpectralBasis,
}

/// Eigenvalues `rho (2a/A)^{d/2} B^{|j|_1}` and Hermite eigenfunctions over `{0..=ell}^d`.
pub fn inhom_gaussian_basis(params: &HermiteBasisParams, truncation: HermiteTruncation, window: Domain) -> Result<HermiteBasis> {
    params.ensure_exists()?;
    let (ell, target) = match truncation {
        HermiteTruncation::Order(l) => (l, None),
        HermiteTruncation::Mass(delta) => {
            ensure(delta > 0.0 && delta < 1.0, || format!("tail mass must lie in (0, 1), got {delta}"))?;
            (params.truncation_for_mass(delta), Some(delta))
        }
    };
    let features = Arc::new(HermiteFeatures::new(params.c(), ell, params.dim));
    let eig: Vec<f64> = (0..features.len())
        .map(|i| params.eigenvalue(features.multi_index(i).iter().sum()))
        .collect();
    let basis = SpectralBasis::new(eig, features.clone(), window, Truncation { order: ell, target_error: target })?;
    Ok(HermiteBasis { params: *params, ell, features, basis })
}

/// Spectral algorithm on the ball of radius `sigma sqrt(chi2_d(1-eps))`, truncated to mass `(1-eps) rho`.
pub fn sample_inhom_gaussian<R: Rng>(params: &HermiteBasisParams, eps: f64, cfg: &SamplerConfig, rng: &mut R) -> Result<PointPattern> {
    ensure(eps > 0.0 && eps < 1.0, || format!("epsilon must lie in (0, 1), got {eps}"))?;
    params.ensure_exists()?;
    let radius = params.window_radius(eps);
    let window = Domain::centered_ball(params.dim, radius)?;
    let hb = inhom_gaussian_basis(params, HermiteTruncation::Mass(eps), window.clone())?;
    let mut prov = Provenance::new("gaussian-inhom", "hermite-spectral")
        .with_param("rho", params.rho)
        .with_param("alpha", params.alpha)
        .with_param("sigma", params.sigma)
        .with_param("dim", params.dim as f64)
        .with_param("epsilon", eps)
        .with_param("ell", hb.ell as f64)
        .with_param("window_radius", radius)
        .with_param("truncated_mass", params.truncated_mass(hb.ell));
    prov.warnings.push(format!(
        "approximate: spectrum truncated at mass {:.6e} of {} and window holds 1-{eps} of the intensity",
        params.truncated_mass(hb.ell),
        params.rho
    ));
    let sel = hb.basis.select(rng)?;
    if sel.is_empty() {
        return PointPattern::new(Vec::new(), window, prov);
    }
    let proj = hb.basis.projection(sel)?;
    let bound = estimate_diagonal_max(&proj, &window, 4096, 0.25, rng);
    prov.params.insert("bound".into(), bound);
    let mut st = SpectralState::new(&proj);
    run_to_completion(&mut st, &window, &RejectionStrategy::uniform(bound)?, cfg, rng)?;
    finish_pattern(&st, &window, prov)
}

/// Choice of `sigma_0` for the thinning route on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomGaussianPlan {
    pub rho: f64,
    pub alpha: f64,
    pub dim: usize,
    pub sigma0: f64,
    /// `rho sigma_0^d (2 pi)^{d/2} e^{1/(2 sigma_0^2)}`.
    pub rho_tilde: f64,
}

impl HomGaussianPlan {
    pub fn inhom_params(&self) -> HermiteBasisParams {
        HermiteBasisParams { rho: self.rho_tilde, alpha: self.alpha, sigma: self.sigma0, dim: self.dim }
    }

    /// `q(x) = exp((|x|^2 - 1)/(2 sigma_0^2)) 1_B(x)`.
    pub fn retention(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > 1.0 {
            0.0
        } else {
            ((r2 - 1.0) / (2.0 * self.sigma0 * self.sigma0)).exp()
        }
    }
}

pub fn rho_tilde(rho: f64, sigma: f64, dim: usize) -> f64 {
    let d = dim as f64;
    rho * (d * (sigma * (2.0 * PI).sqrt()).ln() + 0.5 / (sigma * sigma)).exp()
}

/// Minimises `rho_tilde(sigma)` over the `sigma` for which the inhomogeneous process
/// with intensity `rho_tilde(sigma)` exists.
pub fn hom_gaussian_plan(rho: f64, alpha: f64, dim: usize) -> Result<HomGaussianPlan> {
    let spec = crate::kernel::KernelSpec::GaussianHom { rho, alpha, dim };
    spec.validate()?;
    let rep = crate::kernel::check_existence(&spec);
    if !rep.exists {
        return Err(Error::NonExistent(format!("rho alpha^d pi^(d/2) = {} exceeds 1", rep.constraint_value)));
    }
    let d = dim as f64;
    // in u = 1/(2 sigma^2) both ln rho_tilde and ln lambda_0 are convex; the
    // feasible set contains a neighbourhood of u = 0 and rho_tilde is minimal at u = d/2
    let lambda0 = |u: f64| {
        let sigma = (0.5 / u).sqrt();
        HermiteBasisParams { rho: rho_tilde(rho, sigma, dim), alpha, sigma, dim }.lambda0()
    };
    let mut u = d / 2.0;
    if lambda0(u) > 1.0 {
        let (mut lo, mut hi) = (0.0, u);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if lambda0(mid) <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ensure(lo > 0.0, || "no feasible sigma for the thinning route".into())?;
        u = lo;
    }
    let sigma0 = (0.5 / u).sqrt();
    Ok(HomGaussianPlan { rho, alpha, dim, sigma0, rho_tilde: rho_tilde(rho, sigma0, dim) })
}

/// Homogeneous Gaussian-type DPP on the unit ball: inhomogeneous sample with
/// `(rho_tilde, alpha, sigma_0)`, then independent thinning with `q`.
pub fn sample_hom_gaussian_ball<R: Rng>(rho: f64, alpha: f64, dim: usize, eps: f64, cfg: &SamplerConfig, rng: &mut R) -> Result<PointPattern> {
    let plan = hom_gaussian_plan(rho, alpha, dim)?;
    let inner = sample_inhom_gaussian(&plan.inhom_params(), eps, cfg, rng)?;
    let mut prov = Provenance::new("gaussian-hom-ball", "hermite-thinning")
        .with_param("rho", rho)
        .with_param("alpha", alpha)
        .with_param("dim", dim as f64)
        .with_param("sigma0", plan.sigma0)
        .with_param("rho_tilde", plan.rho_tilde)
        .with_param("epsilon", eps);
    prov.counters = inner.provenance.counters;
    prov.warnings = inner.provenance.warnings.clone();
    let mut kept = Vec::new();
    for p in inner.into_points() {
        if rng.random::<f64>() < plan.retention(&p) {
            kept.push(p);
        } else {
            prov.deleted.push(p);
        }
    }
    prov.params.insert("retained_fraction".into(), kept.len() as f64 / (kept.len() + prov.deleted.len()).max(1) as f64);
    PointPattern::new(kept, Domain::centered_ball(dim, 1.0)?, prov)
}

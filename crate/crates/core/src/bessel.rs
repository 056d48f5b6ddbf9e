//! Bessel-type kernel in the plane through generalised prolate spheroidal functions.
//!
//! For each angular order `N` the radial parts expand in normalised Zernike
//! polynomials with coefficients given by the eigenvectors of a symmetric
//! tridiagonal operator. The eigenvectors are found by Sturm bisection and
//! inverse iteration, so only the significant part of each spectrum is computed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::domain::Domain;
use crate::error::{ensure, Error, Result};
use crate::kernel::{check_existence, KernelSpec};
use crate::pattern::{PointPattern, Provenance};
use crate::projection::{finish_pattern, run_to_completion, RejectionStrategy, SamplerConfig, SpectralState};
use crate::special::{ln_binomial, ln_gamma};
use crate::spectral::{FeatureMap, SpectralBasis, Truncation};

const RESCALE: f64 = 1e150;

/// `T_{N,k}(r) = sqrt(2(2k+N+1)) r^{N+1/2} P_k^{(N,0)}(1-2r^2)`.
pub fn zernike_eval(order: usize, k: usize, r: f64) -> f64 {
    let mut t = vec![0.0; k + 1];
    zernike_scaled(order, r, &mut t);
    t[k] * r.sqrt()
}

/// Fills `out[k] = T_{N,k}(r) / sqrt(r)`, rescaling the Jacobi recurrence as it grows.
pub fn zernike_scaled(order: usize, r: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let n = order as f64;
    let norm = |k: usize| (2.0 * (2.0 * k as f64 + n + 1.0)).sqrt();
    if r == 0.0 {
        for (k, o) in out.iter_mut().enumerate() {
            *o = if order == 0 { norm(k) } else { 0.0 };
        }
        return;
    }
    let x = 1.0 - 2.0 * r * r;
    let mut ln_scale = n * r.ln();
    let mut prev = 1.0;
    out[0] = norm(0) * ln_scale.exp();
    if out.len() == 1 {
        return;
    }
    let mut cur = (n + 1.0) + (n + 2.0) * (x - 1.0) / 2.0;
    out[1] = norm(1) * cur * ln_scale.exp();
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        let s = 2.0 * kf + n;
        let next = ((s + 1.0) * ((s + 2.0) * s * x + n * n) * cur - 2.0 * (kf + n) * kf * (s + 2.0) * prev)
            / (2.0 * (kf + 1.0) * (kf + n + 1.0) * s);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        out[k + 1] = norm(k + 1) * cur * ln_scale.exp();
    }
}

/// Truncated operator `B^N` for bandwidth `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlateOperator {
    pub order: usize,
    pub c: f64,
    pub diag: Vec<f64>,
    /// `b_{k,k+1} = b_{k+1,k}`.
    pub off: Vec<f64>,
}

impl ProlateOperator {
    pub fn new(order: usize, c: f64, k_max: usize) -> Result<Self> {
        ensure(c.is_finite() && c > 0.0, || format!("bandwidth must be positive, got {c}"))?;
        ensure(k_max >= 1, || "operator size must be >= 1".into())?;
        let diag = (0..k_max).map(|k| Self::diagonal(order, c, k)).collect();
        let off = (0..k_max - 1).map(|k| Self::upper(order, c, k)).collect();
        Ok(ProlateOperator { order, c, diag, off })
    }

    /// `b_{k,k}`; the `N = 0, k = 0` ratio is taken as 0.
    pub fn diagonal(order: usize, c: f64, k: usize) -> f64 {
        let m = (2 * k + order) as f64;
        let n = order as f64;
        let ratio = if m == 0.0 { 0.0 } else { n * n / (m * (m + 2.0)) };
        -0.5 * c * c * (1.0 + ratio) - (m + 0.5) * (m + 1.5)
    }

    /// `b_{k,k+1}`.
    pub fn upper(order: usize, c: f64, k: usize) -> f64 {
        let (kf, n) = (k as f64, order as f64);
        let m = 2.0 * kf + n;
        c * c * (kf + 1.0) * (n + kf + 1.0) / ((m + 2.0) * (m + 1.0).sqrt() * (m + 3.0).sqrt())
    }

    /// `b_{k,k-1}` for `k >= 1`.
    pub fn lower(order: usize, c: f64, k: usize) -> f64 {
        let (kf, n) = (k as f64, order as f64);
        let m = 2.0 * kf + n;
        c * c * kf * (kf + n) / (m * (m + 1.0).sqrt() * (m - 1.0).sqrt())
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    fn norm_bound(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let u = self.off.get(i).map_or(0.0, |v| v.abs());
                self.diag[i].abs() + l + u
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64, tiny: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.size() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `j`-th largest eigenvalue by Sturm bisection.
    pub fn eigenvalue_desc(&self, j: usize) -> f64 {
        let n = self.size();
        let norm = self.norm_bound();
        let tiny = f64::EPSILON * norm.max(1.0) * 1e-3;
        let m = n - 1 - j;
        let (mut lo, mut hi) = (-norm - 1.0, norm + 1.0);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid, tiny) > m {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `(B - shift I)^{-1} b` by LU with partial pivoting.
    fn solve_shifted(&self, shift: f64, b: &mut [f64]) {
        let n = self.size();
        let tiny = f64::EPSILON * self.norm_bound().max(1.0);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for i in 0..n.saturating_sub(1) {
            if swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= dl[i] * b[i];
        }
        b[n - 1] /= d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
    }

    /// Unit eigenvector for `chi`, orthogonalised against `previous`, with first entry positive.
    pub fn eigenvector(&self, chi: f64, previous: &[Vec<f64>]) -> Vec<f64> {
        let n = self.size();
        let mut v: Vec<f64> = (0..n).map(|k| 1.0 + 0.25 * (k as f64 * 0.7).sin()).collect();
        for _ in 0..4 {
            self.solve_shifted(chi, &mut v);
            for p in previous {
                let dot: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(p).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        if v[0] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    }
}

/// `lambda_{N,n}(c)` from the Zernike coefficients, with factorials and powers in logs.
pub fn prolate_lambda(order: usize, c: f64, coeffs: &[f64]) -> f64 {
    let n = order as f64;
    let ln_w: Vec<f64> = (0..coeffs.len())
        .map(|k| 0.5 * (n + 2.0 * k as f64 + 1.0).ln() + ln_binomial((order + k) as u64, k as u64))
        .collect();
    let top = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = coeffs.iter().zip(&ln_w).map(|(d, w)| d * (w - top).exp()).sum();
    let ln_pre = (n + 0.5) * c.ln() - (n + 1.0) * 2f64.ln() - ln_gamma(n + 1.0) - 0.5 * (n + 1.0).ln() - top;
    ln_pre.exp() * coeffs[0] / sum
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProlateFunction {
    pub order: usize,
    pub index: usize,
    pub chi: f64,
    /// Zernike coefficients `d_k`, unit norm, `d_0 > 0`, trailing negligible entries dropped.
    pub coeffs: Vec<f64>,
    pub lambda: f64,
}

impl ProlateFunction {
    /// `R_{N,n}(r)`.
    pub fn radial(&self, r: f64) -> f64 {
        let mut t = vec![0.0; self.coeffs.len()];
        zernike_scaled(self.order, r, &mut t);
        self.coeffs.iter().zip(&t).map(|(d, t)| d * t).sum()
    }
}

/// The `count` leading prolate functions of `op`, ordered by decreasing `chi`.
pub fn prolate_functions(op: &ProlateOperator, count: usize) -> Vec<ProlateFunction> {
    let mut vecs: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..count.min(op.size()) {
        out.push(next_prolate(op, j, &mut vecs));
    }
    out
}

fn next_prolate(op: &ProlateOperator, j: usize, vecs: &mut Vec<Vec<f64>>) -> ProlateFunction {
    let chi = op.eigenvalue_desc(j);
    let v = op.eigenvector(chi, vecs);
    let lambda = prolate_lambda(op.order, op.c, &v);
    vecs.push(v.clone());
    let cut = v.iter().rposition(|x| x.abs() > 1e-18).map_or(1, |p| p + 1);
    ProlateFunction { order: op.order, index: j, chi, coeffs: v[..cut].to_vec(), lambda }
}

/// Which angular factor an eigenfunction carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Angular {
    Radial,
    Cos,
    Sin,
}

/// Eigenfunctions `R_{0,n}/sqrt(2 pi)`, `R_{N,n} cos(N theta)/sqrt(pi)` and `R_{N,n} sin(N theta)/sqrt(pi)`.
#[derive(Clone, Debug)]
pub struct ProlateFeatures {
    pub functions: Vec<ProlateFunction>,
    pub entries: Vec<(usize, Angular)>,
}

impl ProlateFeatures {
    fn weight(angular: Angular) -> f64 {
        match angular {
            Angular::Radial => 1.0 / (2.0 * PI),
            _ => 1.0 / PI,
        }
    }

    /// `sum_{i in sel} w_i R_i(r)^2`, an upper bound on the selected diagonal at radius `r`.
    pub fn radial_envelope(&self, selected: &[usize], r: f64) -> f64 {
        let mut tables: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        selected
            .iter()
            .map(|&i| {
                let (f, ang) = self.entries[i];
                let func = &self.functions[f];
                let t = tables.entry(func.order).or_insert_with(|| {
                    let len = self.max_len(func.order);
                    let mut t = vec![0.0; len];
                    zernike_scaled(func.order, r, &mut t);
                    t
                });
                let rad: f64 = func.coeffs.iter().zip(t.iter()).map(|(d, t)| d * t).sum();
                Self::weight(ang) * rad * rad
            })
            .sum()
    }

    fn max_len(&self, order: usize) -> usize {
        self.functions.iter().filter(|f| f.order == order).map(|f| f.coeffs.len()).max().unwrap_or(1)
    }
}

impl FeatureMap for ProlateFeatures {
    fn dim(&self) -> usize {
        2
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn is_real(&self) -> bool {
        true
    }

    fn eval_selected(&self, x: &[f64], indices: &[usize], out: &mut [Complex64]) {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        let mut tables: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (o, &i) in out.iter_mut().zip(indices) {
            let (f, ang) = self.entries[i];
            let func = &self.functions[f];
            let t = tables.entry(func.order).or_insert_with(|| {
                let mut t = vec![0.0; self.max_len(func.order)];
                zernike_scaled(func.order, r, &mut t);
                t
            });
            let rad: f64 = func.coeffs.iter().zip(t.iter()).map(|(d, t)| d * t).sum();
            let n = func.order as f64;
            let v = match ang {
                Angular::Radial => rad / (2.0 * PI).sqrt(),
                Angular::Cos => rad * (n * theta).cos() / PI.sqrt(),
                Angular::Sin => rad * (n * theta).sin() / PI.sqrt(),
            };
            *o = Complex64::new(v, 0.0);
        }
    }
}

/// Truncation controls; `None` grows the corresponding range until eigenvalues fall below `min_eigenvalue`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselTruncation {
    pub angular_max: Option<usize>,
    pub radial_max: Option<usize>,
    pub k_max: Option<usize>,
    pub min_eigenvalue: f64,
}

impl Default for BesselTruncation {
    fn default() -> Self {
        BesselTruncation { angular_max: None, radial_max: None, k_max: None, min_eigenvalue: 1e-13 }
    }
}

pub fn default_k_max(c: f64) -> usize {
    ((2.0 * c + 30.0).ceil() as usize).max(8)
}

#[derive(Clone, Debug)]
pub struct BesselSpectrum {
    pub rho: f64,
    pub alpha: f64,
    pub c: f64,
    pub k_max: usize,
    pub features: Arc<ProlateFeatures>,
    pub basis: SpectralBasis,
}

/// Eigenvalues `2 pi rho alpha lambda_{N,n}(2/alpha)^2` on the unit disc, doubled for `N >= 1`.
pub fn bessel_spectral_basis(rho: f64, alpha: f64, trunc: &BesselTruncation) -> Result<BesselSpectrum> {
    let spec = KernelSpec::Bessel { rho, alpha, dim: 2 };
    spec.validate()?;
    let rep = check_existence(&spec);
    if !rep.exists {
        return Err(Error::NonExistent(format!("rho alpha^2 pi = {} exceeds 1", rep.constraint_value)));
    }
    let c = 2.0 / alpha;
    let k_max = trunc.k_max.unwrap_or_else(|| default_k_max(c));
    ensure(k_max >= 8, || format!("k_max must be >= 8, got {k_max}"))?;
    let scale = 2.0 * PI * rho * alpha;
    let angular_cap = trunc.angular_max.unwrap_or(usize::MAX);
    let radial_cap = trunc.radial_max.map_or(k_max, |m| (m + 1).min(k_max));
    let mut functions = Vec::new();
    let mut entries = Vec::new();
    let mut eig = Vec::new();
    let mut order = 0usize;
    while order <= angular_cap {
        let op = ProlateOperator::new(order, c, k_max)?;
        let mut vecs = Vec::new();
        let mut kept = 0;
        for j in 0..radial_cap {
            let f = next_prolate(&op, j, &mut vecs);
            let mu = scale * f.lambda * f.lambda;
            if !mu.is_finite() {
                return Err(Error::Eigensolver(format!("non-finite eigenvalue at N={order}, n={j}")));
            }
            if mu < trunc.min_eigenvalue {
                break;
            }
            if mu > 1.0 + 1e-9 {
                return Err(Error::InvalidSpectrum { index: eig.len(), value: mu });
            }
            let idx = functions.len();
            functions.push(f);
            if order == 0 {
                entries.push((idx, Angular::Radial));
                eig.push(mu.min(1.0));
            } else {
                entries.push((idx, Angular::Cos));
                entries.push((idx, Angular::Sin));
                eig.push(mu.min(1.0));
                eig.push(mu.min(1.0));
            }
            kept += 1;
        }
        if kept == 0 && trunc.angular_max.is_none() {
            break;
        }
        order += 1;
    }
    let trace: f64 = eig.iter().sum();
    let required = 0.99 * rho * PI;
    if trace < required {
        return Err(Error::InsufficientTruncation { trace, required });
    }
    let features = Arc::new(ProlateFeatures { functions, entries });
    let basis = SpectralBasis::new(
        eig,
        features.clone(),
        Domain::centered_ball(2, 1.0)?,
        Truncation { order: order.saturating_sub(1), target_error: Some(trunc.min_eigenvalue) },
    )?;
    Ok(BesselSpectrum { rho, alpha, c, k_max, features, basis })
}

/// Maximum of the radial envelope over `grid + 1` radii, inflated by 5%.
pub fn radial_bound(features: &ProlateFeatures, selected: &[usize], grid: usize) -> f64 {
    (0..=grid)
        .map(|g| features.radial_envelope(selected, g as f64 / grid as f64))
        .fold(0.0, f64::max)
        * 1.05
}

/// Bernoulli selection, then the spectral algorithm with a uniform proposal on the unit disc.
pub fn sample_bessel_d2<R: Rng>(spectrum: &BesselSpectrum, cfg: &SamplerConfig, rng: &mut R) -> Result<PointPattern> {
    let disc = Domain::centered_ball(2, 1.0)?;
    let mut prov = Provenance::new("bessel", "prolate-spectral")
        .with_param("rho", spectrum.rho)
        .with_param("alpha", spectrum.alpha)
        .with_param("k_max", spectrum.k_max as f64)
        .with_param("modes", spectrum.basis.len() as f64)
        .with_param("trace", spectrum.basis.trace());
    let sel = spectrum.basis.select(rng)?;
    if sel.is_empty() {
        return PointPattern::new(Vec::new(), disc, prov);
    }
    let bound = radial_bound(&spectrum.features, &sel, 4096);
    prov.params.insert("bound".into(), bound);
    let proj = spectrum.basis.projection(sel)?;
    let mut st = SpectralState::new(&proj);
    run_to_completion(&mut st, &disc, &RejectionStrategy::uniform(bound)?, cfg, rng)?;
    finish_pattern(&st, &disc, prov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::rng::stream_rng;
    use crate::special::{bessel_j_int, gauss_legendre};
    use proptest::prelude::*;

    fn unit_interval_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(n);
        (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|w| 0.5 * w).collect())
    }

    fn binom(n: u64, k: u64) -> f64 {
        ln_binomial(n, k).exp()
    }

    #[test]
    fn zernike_closed_forms() {
        for order in 0..6 {
            for &r in &[0.1f64, 0.5, 0.9] {
                let expect = (2.0 * (order as f64 + 1.0)).sqrt() * r.powf(order as f64 + 0.5);
                assert!((zernike_eval(order, 0, r) - expect).abs() < 1e-14);
            }
            for k in 0..8 {
                let norm = (2.0 * (2.0 * k as f64 + order as f64 + 1.0)).sqrt();
                // P_k^{(N,0)}(1) = binom(N+k, k) is reached as r -> 0
                let mut t = vec![0.0; k + 1];
                let r: f64 = 1e-9;
                zernike_scaled(order, r, &mut t);
                let limit = t[k] / r.powi(order as i32);
                let expect = norm * binom((order + k) as u64, k as u64);
                assert!((limit - expect).abs() < 1e-10 * expect);
                // at r = 1 the argument is -1 where P_k^{(N,0)}(-1) = (-1)^k
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert!((zernike_eval(order, k, 1.0) - sign * norm).abs() < 1e-10 * norm);
            }
        }
    }

    #[test]
    fn zernike_orthonormal() {
        let (x, w) = unit_interval_rule(200);
        for order in 0..=5 {
            let tables: Vec<Vec<f64>> = x.iter().map(|&r| (0..=10).map(|k| zernike_eval(order, k, r)).collect()).collect();
            for k in 0..=10 {
                for l in 0..=10 {
                    let g: f64 = tables.iter().zip(&w).map(|(t, w)| w * t[k] * t[l]).sum();
                    let target = if k == l { 1.0 } else { 0.0 };
                    assert!((g - target).abs() <= 1e-10, "N={order} k={k} l={l}: {g}");
                }
            }
        }
    }

    #[test]
    fn operator_entries() {
        assert!((ProlateOperator::diagonal(1, 1.0, 0) + 53.0 / 12.0).abs() < 1e-14);
        assert!((ProlateOperator::diagonal(0, 1.0, 0) + 1.25).abs() < 1e-14);
        for order in 0..4 {
            for k in 0..=50 {
                let up = ProlateOperator::upper(order, 3.7, k);
                let low = ProlateOperator::lower(order, 3.7, k + 1);
                assert!((up - low).abs() <= 1e-13 * up.abs());
            }
        }
    }

    #[test]
    fn eigenpairs_match_dense_solver() {
        let op = ProlateOperator::new(2, 7.0, 40).unwrap();
        let dense = faer::Mat::<f64>::from_fn(40, 40, |i, j| {
            if i == j {
                op.diag[i]
            } else if i + 1 == j {
                op.off[i]
            } else if j + 1 == i {
                op.off[j]
            } else {
                0.0
            }
        });
        let ev = dense.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        let fs = prolate_functions(&op, 10);
        for (j, f) in fs.iter().enumerate() {
            let expect = ev[39 - j];
            assert!((f.chi - expect).abs() <= 1e-12 * expect.abs(), "{j}");
        }
        // orthonormality of the full coefficient vectors
        let full: Vec<Vec<f64>> = {
            let mut vecs = Vec::new();
            for j in 0..10 {
                next_prolate(&op, j, &mut vecs);
            }
            vecs
        };
        for a in 0..10 {
            for b in 0..10 {
                let g: f64 = full[a].iter().zip(&full[b]).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((g - target).abs() <= 1e-10);
            }
        }
        assert!(fs.windows(2).all(|w| w[0].lambda.abs() >= w[1].lambda.abs()));
    }

    #[test]
    fn integral_equation_residual() {
        let (x, w) = unit_interval_rule(400);
        for &c in &[1.0, 2.5, 5.0] {
            for order in 0..=3 {
                let op = ProlateOperator::new(order, c, default_k_max(c)).unwrap();
                for f in prolate_functions(&op, 4) {
                    let g: Vec<f64> = x.iter().map(|&r| r.sqrt() * f.radial(r)).collect();
                    for i in 0..20 {
                        let r = (i as f64 + 0.5) / 20.0;
                        let lhs = f.lambda * r.sqrt() * f.radial(r);
                        let rhs: f64 = x
                            .iter()
                            .zip(&w)
                            .zip(&g)
                            .map(|((&s, &wi), &gi)| wi * bessel_j_int(order as i64, c * r * s) * (c * r * s).sqrt() * gi)
                            .sum();
                        let scale = f.lambda.abs() * g.iter().map(|v| v.abs()).fold(0.0, f64::max);
                        assert!((lhs - rhs).abs() <= 1e-6 * scale, "c={c} N={order} n={} r={r}: {lhs} vs {rhs}", f.index);
                    }
                }
            }
        }
    }

    #[test]
    fn radial_functions_are_normalised() {
        let (x, w) = unit_interval_rule(300);
        let op = ProlateOperator::new(0, 6.0, default_k_max(6.0)).unwrap();
        for f in prolate_functions(&op, 5) {
            let norm: f64 = x.iter().zip(&w).map(|(&r, w)| w * f.radial(r).powi(2) * r).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn k_max_stability() {
        let c = 12.0;
        let base = default_k_max(c);
        for order in [0usize, 3, 9] {
            let a = prolate_functions(&ProlateOperator::new(order, c, base).unwrap(), 6);
            let b = prolate_functions(&ProlateOperator::new(order, c, 2 * base).unwrap(), 6);
            for (x, y) in a.iter().zip(&b) {
                assert!((x.lambda - y.lambda).abs() <= 1e-9 * y.lambda.abs());
            }
        }
    }

    fn spectrum(rho: f64, alpha: f64) -> BesselSpectrum {
        bessel_spectral_basis(rho, alpha, &BesselTruncation::default()).unwrap()
    }

    #[test]
    fn trace_and_eigenvalue_bounds() {
        let rho = 20.0;
        let alpha = 1.0 / (rho * PI).sqrt();
        let s = spectrum(rho, alpha);
        assert!((s.basis.trace() - rho * PI).abs() <= 0.01 * rho * PI, "{}", s.basis.trace());
        assert!(s.basis.eigenvalues().iter().all(|&l| (0.0..=1.0 + 1e-9).contains(&l)));
    }

    #[test]
    fn kernel_reconstruction() {
        let (rho, alpha) = (15.0, 0.1);
        let s = spectrum(rho, alpha);
        let k = KernelSpec::Bessel { rho, alpha, dim: 2 };
        let disc = Domain::centered_ball(2, 1.0).unwrap();
        let mut rng = stream_rng(31, 0);
        for _ in 0..50 {
            let x = disc.sample_uniform(&mut rng);
            let y = disc.sample_uniform(&mut rng);
            let err = (s.basis.eval(&x, &y) - k.eval(&x, &y)).norm();
            assert!(err <= 1e-3 * rho, "{err}");
        }
    }

    #[test]
    fn eigenfunction_gram_by_polar_quadrature() {
        let s = spectrum(10.0, 0.15);
        let f = &s.features;
        let mut chosen = Vec::new();
        for (i, &(fi, ang)) in f.entries.iter().enumerate() {
            let func = &f.functions[fi];
            if (func.order == 0 && func.index <= 4) || (func.order == 1 && func.index <= 3) {
                chosen.push((i, ang));
            }
        }
        assert_eq!(chosen.len(), 5 + 8);
        let idx: Vec<usize> = chosen.iter().map(|c| c.0).collect();
        let (rx, rw) = unit_interval_rule(120);
        let m = 64;
        let mut gram = vec![0.0; idx.len() * idx.len()];
        let mut v = vec![Complex64::new(0.0, 0.0); idx.len()];
        for (&r, &wr) in rx.iter().zip(&rw) {
            for t in 0..m {
                let th = 2.0 * PI * t as f64 / m as f64;
                f.eval_selected(&[r * th.cos(), r * th.sin()], &idx, &mut v);
                let wt = wr * r * 2.0 * PI / m as f64;
                for a in 0..idx.len() {
                    for b in 0..idx.len() {
                        gram[a * idx.len() + b] += wt * v[a].re * v[b].re;
                    }
                }
            }
        }
        for a in 0..idx.len() {
            for b in 0..idx.len() {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * idx.len() + b] - target).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn envelope_dominates_diagonal() {
        let s = spectrum(20.0, 0.1);
        let mut rng = stream_rng(2, 2);
        let sel = s.basis.select(&mut rng).unwrap();
        let m = radial_bound(&s.features, &sel, 4096);
        let proj = s.basis.projection(sel).unwrap();
        let disc = Domain::centered_ball(2, 1.0).unwrap();
        for _ in 0..1000 {
            let x = disc.sample_uniform(&mut rng);
            assert!(proj.diag(&x) <= m);
        }
    }

    #[test]
    fn sampler_points_in_disc() {
        let s = spectrum(20.0, 0.1);
        let mut rng = stream_rng(4, 0);
        for _ in 0..5 {
            let p = sample_bessel_d2(&s, &SamplerConfig::default(), &mut rng).unwrap();
            assert!(p.points().iter().all(|x| x[0].hypot(x[1]) <= 1.0));
        }
    }

    #[test]
    fn nonexistent_rejected() {
        assert!(matches!(bessel_spectral_basis(10.0, 0.5, &BesselTruncation::default()), Err(Error::NonExistent(_))));
        let tight = BesselTruncation { angular_max: Some(0), radial_max: Some(1), ..Default::default() };
        assert!(matches!(bessel_spectral_basis(10.0, 0.1, &tight), Err(Error::InsufficientTruncation { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sign_convention_and_unit_norm(order in 0usize..6, c in 0.5f64..15.0) {
            let op = ProlateOperator::new(order, c, default_k_max(c)).unwrap();
            for f in prolate_functions(&op, 3) {
                prop_assert!(f.coeffs[0] > 0.0);
                let n: f64 = f.coeffs.iter().map(|x| x * x).sum();
                prop_assert!((n - 1.0).abs() < 1e-12);
                // the eigenvalue is sign-invariant in its squared use
                let mut flipped = f.coeffs.clone();
                flipped.iter_mut().for_each(|x| *x = -*x);
                let l2 = prolate_lambda(order, c, &flipped);
                prop_assert!((l2 * l2 - f.lambda * f.lambda).abs() <= 1e-14 * f.lambda * f.lambda);
            }
        }
    }
}

//! Sequential sampling of projection DPPs.
//!
//! Points are drawn one at a time from the conditional densities
//! `p_i(x) = (K(x,x) - k_i(x)* K_i^{-1} k_i(x)) / i`, by rejection from either
//! the diagonal proposal `K(x,x)/n` or a uniform proposal under a bound `M`.
//! [`SpectralState`] evaluates `p_i` from orthonormalised feature vectors and
//! [`KernelState`] from a growing Cholesky factor of the kernel matrix.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::domain::Domain;
use crate::error::{check_dim, ensure, Error, Result};
use crate::kernel::Kernel;
use crate::pattern::{Counters, PointPattern, Provenance};
use crate::spectral::ProjectionBasis;

pub const DEFAULT_PROPOSAL_CAP: u64 = 10_000_000;
const DEGENERATE_NORM: f64 = 1e-12;
const WARN_NORM: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e12;
const INTEGRITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Proposals allowed for a single point before giving up.
    pub max_proposals_per_point: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { max_proposals_per_point: DEFAULT_PROPOSAL_CAP }
    }
}

/// Draws from the normalised diagonal `K(x,x)/n`.
pub type DiagonalSampler = Arc<dyn Fn(&mut dyn rand::RngCore, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum RejectionStrategy {
    /// Propose from `K(x,x)/n`; accept with probability `i p_i(Z) / K(Z,Z)`.
    Diagonal(DiagonalSampler),
    /// Propose uniformly on the domain; accept with probability `i p_i(Z) / M`.
    Uniform { bound: f64 },
}

impl fmt::Debug for RejectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectionStrategy::Diagonal(_) => f.write_str("Diagonal"),
            RejectionStrategy::Uniform { bound } => write!(f, "Uniform {{ bound: {bound} }}"),
        }
    }
}

impl RejectionStrategy {
    pub fn diagonal(sampler: DiagonalSampler) -> Self {
        RejectionStrategy::Diagonal(sampler)
    }

    /// Uniform proposal with a bound known to dominate `K(x,x)`.
    pub fn uniform(bound: f64) -> Result<Self> {
        ensure(bound.is_finite() && bound > 0.0, || format!("bound must be positive, got {bound}"))?;
        Ok(RejectionStrategy::Uniform { bound })
    }

    /// Uniform proposal whose bound is checked against `probes` random evaluations of `K(x,x)`.
    pub fn uniform_validated<K: Kernel + ?Sized, R: Rng>(
        bound: f64,
        kernel: &K,
        domain: &Domain,
        probes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let s = Self::uniform(bound)?;
        check_dim(kernel.dim(), domain.dim())?;
        let mut x = vec![0.0; domain.dim()];
        let mut worst = 0.0f64;
        for _ in 0..probes {
            domain.sample_uniform_into(rng, &mut x);
            worst = worst.max(kernel.diag(&x));
        }
        if worst > bound * (1.0 + 1e-9) {
            return Err(Error::InvalidBound { bound, observed: worst });
        }
        Ok(s)
    }
}

/// Randomised search for `sup K(x,x)` over `domain`: uniform probes, then local
/// refinement of the best few, inflated by `1 + margin`.
pub fn estimate_diagonal_max<K: Kernel + ?Sized, R: Rng>(
    kernel: &K,
    domain: &Domain,
    probes: usize,
    margin: f64,
    rng: &mut R,
) -> f64 {
    let d = domain.dim();
    let mut x = vec![0.0; d];
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..probes.max(1) {
        domain.sample_uniform_into(rng, &mut x);
        let v = kernel.diag(&x);
        if best.len() < 8 || v > best[best.len() - 1].0 {
            best.push((v, x.clone()));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(8);
        }
    }
    let (lo, hi) = domain.bounding_box();
    let span = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0f64, f64::max);
    let mut top = best.first().map_or(0.0, |b| b.0);
    let mut y = vec![0.0; d];
    for (mut v, mut p) in best {
        let mut step = 0.05 * span;
        for _ in 0..60 {
            for k in 0..d {
                y[k] = p[k] + step * (2.0 * rng.random::<f64>() - 1.0);
            }
            if domain.contains(&y) {
                let w = kernel.diag(&y);
                if w > v {
                    v = w;
                    p.copy_from_slice(&y);
                    continue;
                }
            }
            step *= 0.9;
        }
        top = top.max(v);
    }
    top * (1.0 + margin)
}

/// State shared by both sampling paths.
pub trait SequentialState {
    fn dim(&self) -> usize;
    /// Total number of points `n`.
    fn total(&self) -> usize;
    fn accepted(&self) -> &[Vec<f64>];
    /// `(i p_i(x), K(x,x))` with `i p_i` not yet clamped.
    fn raw_conditional(&mut self, x: &[f64]) -> Result<(f64, f64)>;
    /// Adds a point and updates the factorisation.
    fn push(&mut self, x: Vec<f64>) -> Result<()>;
    fn counters(&self) -> &Counters;
    fn counters_mut(&mut self) -> &mut Counters;
    fn warnings(&self) -> &[String];

    /// Remaining count `i`.
    fn remaining(&self) -> usize {
        self.total() - self.accepted().len()
    }

    /// `(i p_i(x), K(x,x))` with small negative values clamped to zero.
    fn conditional(&mut self, x: &[f64]) -> Result<(f64, f64)> {
        let (w, kxx) = self.raw_conditional(x)?;
        if w < -INTEGRITY_TOL * kxx.max(0.0) {
            return Err(Error::NumericalIntegrity { value: w / self.remaining().max(1) as f64 });
        }
        Ok((w.max(0.0), kxx))
    }

    /// The conditional density `p_i(x)`.
    fn eval_pi(&mut self, x: &[f64]) -> Result<f64> {
        let i = self.remaining();
        if i == 0 {
            return Ok(0.0);
        }
        Ok(self.conditional(x)?.0 / i as f64)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

// (re, im) of conj(e) . v with split storage
#[inline]
fn cdot(er: &[f64], ei: &[f64], vr: &[f64], vi: &[f64]) -> (f64, f64) {
    (dot(er, vr) + dot(ei, vi), dot(er, vi) - dot(ei, vr))
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

/// Spectral-path state: orthonormalised features `e_1, e_2, ...` of the accepted points.
pub struct SpectralState<'a> {
    basis: &'a ProjectionBasis,
    real: bool,
    accepted: Vec<Vec<f64>>,
    e_re: Vec<f64>,
    e_im: Vec<f64>,
    v: Vec<Complex64>,
    vr: Vec<f64>,
    vi: Vec<f64>,
    counters: Counters,
    warnings: Vec<String>,
}

impl<'a> SpectralState<'a> {
    pub fn new(basis: &'a ProjectionBasis) -> Self {
        let n = basis.rank();
        SpectralState {
            basis,
            real: basis.is_real(),
            accepted: Vec::with_capacity(n),
            e_re: Vec::with_capacity(n * n),
            e_im: Vec::with_capacity(if basis.is_real() { 0 } else { n * n }),
            v: vec![Complex64::new(0.0, 0.0); n],
            vr: vec![0.0; n],
            vi: vec![0.0; n],
            counters: Counters::default(),
            warnings: Vec::new(),
        }
    }

    pub fn basis(&self) -> &ProjectionBasis {
        self.basis
    }

    /// The orthonormal vector `e_j` (1-based order of acceptance, 0-based index).
    pub fn ortho_vector(&self, j: usize) -> Vec<Complex64> {
        let n = self.basis.rank();
        (0..n)
            .map(|k| {
                let im = if self.real { 0.0 } else { self.e_im[j * n + k] };
                Complex64::new(self.e_re[j * n + k], im)
            })
            .collect()
    }

    fn load(&mut self, x: &[f64]) -> f64 {
        self.basis.eval_into(x, &mut self.v);
        let mut norm2 = 0.0;
        for (k, c) in self.v.iter().enumerate() {
            self.vr[k] = c.re;
            self.vi[k] = if self.real { 0.0 } else { c.im };
            norm2 += c.norm_sqr();
        }
        norm2
    }

    // Removes the components along e_1..e_m from (vr, vi) in place.
    fn project_out(&mut self) {
        let n = self.basis.rank();
        for j in 0..self.accepted.len() {
            let er = &self.e_re[j * n..(j + 1) * n];
            if self.real {
                let c = dot(er, &self.vr);
                axpy(-c, er, &mut self.vr);
            } else {
                let ei = &self.e_im[j * n..(j + 1) * n];
                let (cr, ci) = cdot(er, ei, &self.vr, &self.vi);
                // v -= c e
                for k in 0..n {
                    self.vr[k] -= cr * er[k] - ci * ei[k];
                    self.vi[k] -= cr * ei[k] + ci * er[k];
                }
            }
        }
    }
}

impl SequentialState for SpectralState<'_> {
    fn dim(&self) -> usize {
        self.basis.domain().dim()
    }

    fn total(&self) -> usize {
        self.basis.rank()
    }

    fn accepted(&self) -> &[Vec<f64>] {
        &self.accepted
    }

    fn raw_conditional(&mut self, x: &[f64]) -> Result<(f64, f64)> {
        let norm2 = self.load(x);
        let n = self.basis.rank();
        let mut proj = 0.0;
        for j in 0..self.accepted.len() {
            let er = &self.e_re[j * n..(j + 1) * n];
            if self.real {
                let c = dot(er, &self.vr);
                proj += c * c;
            } else {
                let ei = &self.e_im[j * n..(j + 1) * n];
                let (cr, ci) = cdot(er, ei, &self.vr, &self.vi);
                proj += cr * cr + ci * ci;
            }
        }
        Ok((norm2 - proj, norm2))
    }

    fn push(&mut self, x: Vec<f64>) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        ensure(self.remaining() > 0, || "all points already placed".into())?;
        self.load(&x);
        // two passes of classical Gram-Schmidt
        self.project_out();
        self.project_out();
        let norm = (dot(&self.vr, &self.vr) + dot(&self.vi, &self.vi)).sqrt();
        if !(norm >= DEGENERATE_NORM) {
            return Err(Error::DegeneratePoint { norm });
        }
        if norm <= WARN_NORM {
            let msg = format!("near-degenerate point {x:?}: residual norm {norm:e}");
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
        self.e_re.extend(self.vr.iter().map(|v| v / norm));
        if !self.real {
            self.e_im.extend(self.vi.iter().map(|v| v / norm));
        }
        self.accepted.push(x);
        Ok(())
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn counters_mut(&mut self) -> &mut Counters {
        &mut self.counters
    }

    fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Kernel-path state: Cholesky factor `L` of `K_m = (K(X_j, X_l))` with `K_m = L L*`.
pub struct KernelState<'a, K: Kernel + ?Sized> {
    kernel: &'a K,
    n: usize,
    accepted: Vec<Vec<f64>>,
    // row j holds L[j][0..=j]
    rows: Vec<Vec<Complex64>>,
    diag_min: f64,
    diag_max: f64,
    l: Vec<Complex64>,
    counters: Counters,
    warnings: Vec<String>,
}

impl<'a, K: Kernel + ?Sized> KernelState<'a, K> {
    pub fn new(kernel: &'a K, n: usize) -> Self {
        KernelState {
            kernel,
            n,
            accepted: Vec::with_capacity(n),
            rows: Vec::with_capacity(n),
            diag_min: f64::INFINITY,
            diag_max: 0.0,
            l: Vec::with_capacity(n),
            counters: Counters::default(),
            warnings: Vec::new(),
        }
    }

    /// Lower bound on the 2-norm condition number of `K_m` from the Cholesky diagonal.
    pub fn condition_estimate(&self) -> f64 {
        if self.rows.is_empty() {
            1.0
        } else {
            (self.diag_max / self.diag_min).powi(2)
        }
    }

    // Solves L l = k(x) and returns (K(x,x) - |l|^2, K(x,x)).
    fn solve(&mut self, x: &[f64]) -> (f64, f64) {
        self.l.clear();
        let mut norm2 = 0.0;
        for (j, row) in self.rows.iter().enumerate() {
            let mut s = self.kernel.eval(&self.accepted[j], x);
            for t in 0..j {
                s -= row[t] * self.l[t];
            }
            let lj = s / row[j].re;
            norm2 += lj.norm_sqr();
            self.l.push(lj);
        }
        let kxx = self.kernel.diag(x);
        (kxx - norm2, kxx)
    }
}

impl<K: Kernel + ?Sized> SequentialState for KernelState<'_, K> {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn total(&self) -> usize {
        self.n
    }

    fn accepted(&self) -> &[Vec<f64>] {
        &self.accepted
    }

    fn raw_conditional(&mut self, x: &[f64]) -> Result<(f64, f64)> {
        let c = self.condition_estimate();
        if c > MAX_CONDITION {
            return Err(Error::IllConditioned { condition: c });
        }
        Ok(self.solve(x))
    }

    fn push(&mut self, x: Vec<f64>) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        ensure(self.remaining() > 0, || "all points already placed".into())?;
        let (schur, _) = self.solve(&x);
        let delta = schur.max(0.0).sqrt();
        if !(delta >= DEGENERATE_NORM) {
            return Err(Error::DegeneratePoint { norm: delta });
        }
        if delta <= WARN_NORM {
            let msg = format!("near-degenerate point {x:?}: residual norm {delta:e}");
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
        let mut row: Vec<Complex64> = self.l.iter().map(|c| c.conj()).collect();
        row.push(Complex64::new(delta, 0.0));
        self.rows.push(row);
        self.diag_min = self.diag_min.min(delta);
        self.diag_max = self.diag_max.max(delta);
        self.accepted.push(x);
        let c = self.condition_estimate();
        if c > MAX_CONDITION {
            return Err(Error::IllConditioned { condition: c });
        }
        Ok(())
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }

    fn counters_mut(&mut self) -> &mut Counters {
        &mut self.counters
    }

    fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Draws the next point by rejection sampling from `p_i`.
pub fn sample_next<S: SequentialState + ?Sized, R: Rng>(
    state: &mut S,
    domain: &Domain,
    strategy: &RejectionStrategy,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let remaining = state.remaining();
    ensure(remaining > 0, || "no points left to sample".into())?;
    let mut x = vec![0.0; domain.dim()];
    let mut tries = 0u64;
    loop {
        if tries >= cfg.max_proposals_per_point {
            return Err(Error::Stalled { proposals: tries, remaining });
        }
        tries += 1;
        state.counters_mut().proposals += 1;
        let bound = match strategy {
            RejectionStrategy::Diagonal(draw) => {
                draw(rng, &mut x);
                None
            }
            RejectionStrategy::Uniform { bound } => {
                domain.sample_uniform_into(rng, &mut x);
                Some(*bound)
            }
        };
        let u: f64 = rng.random();
        let (w, kxx) = state.conditional(&x)?;
        let denom = match bound {
            Some(m) => {
                if kxx > m * (1.0 + 1e-9) {
                    return Err(Error::InvalidBound { bound: m, observed: kxx });
                }
                m
            }
            None => kxx,
        };
        if denom > 0.0 && w / denom > u {
            return Ok(x);
        }
        state.counters_mut().rejections += 1;
    }
}

/// Runs the sampler until all `n` points are placed.
pub fn run_to_completion<S: SequentialState + ?Sized, R: Rng>(
    state: &mut S,
    domain: &Domain,
    strategy: &RejectionStrategy,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    while state.remaining() > 0 {
        let x = sample_next(state, domain, strategy, cfg, rng)?;
        state.push(x)?;
    }
    Ok(())
}

/// Where the projection kernel comes from.
#[derive(Clone, Copy)]
pub enum ProjectionSource<'a> {
    /// Eigenfunctions are known: the spectral algorithm.
    Spectral(&'a ProjectionBasis),
    /// Only the kernel is known, with its rank `n`.
    Kernel { kernel: &'a dyn Kernel, n: usize },
}

impl ProjectionSource<'_> {
    pub fn algorithm_id(&self) -> &'static str {
        match self {
            ProjectionSource::Spectral(_) => "projection-spectral",
            ProjectionSource::Kernel { .. } => "projection-kernel",
        }
    }
}

pub(crate) fn finish_pattern<S: SequentialState + ?Sized>(state: &S, domain: &Domain, mut prov: Provenance) -> Result<PointPattern> {
    prov.counters = *state.counters();
    prov.warnings.extend(state.warnings().iter().cloned());
    PointPattern::new(state.accepted().to_vec(), domain.clone(), prov)
}

/// Samples a projection DPP with exactly `n` points.
pub fn sample_projection<R: Rng>(
    source: ProjectionSource<'_>,
    domain: &Domain,
    strategy: &RejectionStrategy,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PointPattern> {
    let prov = Provenance::new("projection", source.algorithm_id());
    match source {
        ProjectionSource::Spectral(basis) => {
            check_dim(basis.domain().dim(), domain.dim())?;
            let mut st = SpectralState::new(basis);
            run_to_completion(&mut st, domain, strategy, cfg, rng)?;
            finish_pattern(&st, domain, prov)
        }
        ProjectionSource::Kernel { kernel, n } => {
            check_dim(kernel.dim(), domain.dim())?;
            let mut st = KernelState::new(kernel, n);
            run_to_completion(&mut st, domain, strategy, cfg, rng)?;
            finish_pattern(&st, domain, prov)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::FourierBasis;
    use crate::kernel::KernelSpec;
    use crate::rng::stream_rng;
    use crate::spectral::tests::Cosines;

    fn fourier_1d(freqs: &[i64]) -> (ProjectionBasis, KernelSpec) {
        let f: Vec<Vec<i64>> = freqs.iter().map(|&j| vec![j]).collect();
        let b = FourierBasis::new(f.clone()).unwrap();
        (b.projection(), KernelSpec::FourierProjection { frequencies: f })
    }

    #[test]
    fn first_point_density_is_flat_for_fourier() {
        let (b, _) = fourier_1d(&[-1, 0, 1]);
        let mut st = SpectralState::new(&b);
        for x in [0.0, 0.3, 0.77] {
            assert!((st.eval_pi(&[x]).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_updates_and_vanishing_density() {
        let (b, _) = fourier_1d(&[-2, -1, 0, 1, 2, 5]);
        let mut st = SpectralState::new(&b);
        let pts = [0.11, 0.52, 0.3, 0.93, 0.71];
        st.push(vec![pts[0]]).unwrap();
        let e1 = st.ortho_vector(0);
        let n1: f64 = e1.iter().map(|c| c.norm_sqr()).sum();
        assert!((n1 - 1.0).abs() < 1e-14);
        for &p in &pts[1..] {
            st.push(vec![p]).unwrap();
        }
        for j in 0..pts.len() {
            for k in 0..pts.len() {
                let (a, c) = (st.ortho_vector(j), st.ortho_vector(k));
                let g: Complex64 = a.iter().zip(&c).map(|(u, v)| u.conj() * v).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((g - target).norm() < 1e-10);
            }
        }
        for &p in &pts {
            assert!(st.eval_pi(&[p]).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn two_point_density_matches_brute_force() {
        let (b, spec) = fourier_1d(&[0, 1]);
        let mut st = SpectralState::new(&b);
        let x2 = 0.37;
        st.push(vec![x2]).unwrap();
        for g in 0..100 {
            let x = (g as f64 + 0.5) / 100.0;
            let kxx = spec.eval(&[x], &[x]).re;
            let kxy = spec.eval(&[x], &[x2]);
            let kyy = spec.eval(&[x2], &[x2]).re;
            let brute = kxx - kxy.norm_sqr() / kyy;
            assert!((st.eval_pi(&[x]).unwrap() - brute).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernel_and_spectral_paths_agree() {
        let freqs: Vec<Vec<i64>> = (-2..=2).flat_map(|a| (-1..=1).map(move |b| vec![a, b])).collect();
        let basis = FourierBasis::new(freqs.clone()).unwrap().projection();
        let spec = KernelSpec::FourierProjection { frequencies: freqs };
        let mut sp = SpectralState::new(&basis);
        let mut kp = KernelState::new(&spec, basis.rank());
        let mut rng = stream_rng(9, 0);
        for _ in 0..4 {
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            sp.push(x.clone()).unwrap();
            kp.push(x).unwrap();
        }
        for _ in 0..50 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((sp.eval_pi(&x).unwrap() - kp.eval_pi(&x).unwrap()).abs() < 1e-8);
        }
        for p in kp.accepted().to_vec() {
            assert!(kp.eval_pi(&p).unwrap().abs() < 1e-8);
        }
        assert!(kp.eval_pi(&[0.5, 0.5]).is_ok());
    }

    #[test]
    fn kernel_path_initial_density() {
        let spec = KernelSpec::FourierProjection { frequencies: vec![vec![0], vec![3]] };
        let mut kp = KernelState::new(&spec, 2);
        assert!((kp.eval_pi(&[0.2]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn densities_integrate_to_one() {
        let (b, _) = fourier_1d(&[-1, 0, 1, 2]);
        let mut st = SpectralState::new(&b);
        let mut rng = stream_rng(4, 0);
        let dom = Domain::unit_box(1);
        let strat = RejectionStrategy::uniform(4.0).unwrap();
        let m = 2000;
        while st.remaining() > 0 {
            let integral: f64 = (0..m).map(|g| st.eval_pi(&[(g as f64 + 0.5) / m as f64]).unwrap()).sum::<f64>() / m as f64;
            assert!((integral - 1.0).abs() < 1e-3);
            let x = sample_next(&mut st, &dom, &strat, &SamplerConfig::default(), &mut rng).unwrap();
            st.push(x).unwrap();
        }
    }

    #[test]
    fn real_features_use_the_real_path() {
        let f: Arc<dyn crate::spectral::FeatureMap> = Arc::new(Cosines(5));
        let b = ProjectionBasis::full(f, Domain::unit_box(1)).unwrap();
        let mut rng = stream_rng(1, 0);
        // K(x,x) <= 1 + 2 * 4
        let strat = RejectionStrategy::uniform(9.0).unwrap();
        let p = sample_projection(ProjectionSource::Spectral(&b), b.domain(), &strat, &SamplerConfig::default(), &mut rng).unwrap();
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn single_point_is_uniform() {
        let (b, _) = fourier_1d(&[0]);
        let dom = Domain::unit_box(1);
        let strat = RejectionStrategy::uniform(1.0).unwrap();
        let mut rng = stream_rng(17, 0);
        let mut bins = [0usize; 10];
        let reps = 20_000;
        for _ in 0..reps {
            let p = sample_projection(ProjectionSource::Spectral(&b), &dom, &strat, &SamplerConfig::default(), &mut rng).unwrap();
            assert_eq!(p.len(), 1);
            assert_eq!(p.provenance.counters.rejections, 0);
            bins[(p.points()[0][0] * 10.0) as usize] += 1;
        }
        let e = reps as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        assert!(crate::special::chi2_sf(chi2, 9.0) > 0.001);
    }

    #[test]
    fn strategy_one_acceptance_rate_is_i_over_n() {
        let (b, _) = fourier_1d(&[-2, -1, 0, 1, 2]);
        let n = b.rank();
        let dom = Domain::unit_box(1);
        let diag: DiagonalSampler = Arc::new(|rng: &mut dyn rand::RngCore, out: &mut [f64]| {
            out[0] = rng.random::<f64>();
        });
        let strat = RejectionStrategy::diagonal(diag);
        let mut rng = stream_rng(23, 0);
        let mut proposals = vec![0u64; n + 1];
        let mut accepts = vec![0u64; n + 1];
        for _ in 0..4000 {
            let mut st = SpectralState::new(&b);
            while st.remaining() > 0 {
                let i = st.remaining();
                let before = st.counters().proposals;
                let x = sample_next(&mut st, &dom, &strat, &SamplerConfig::default(), &mut rng).unwrap();
                proposals[i] += st.counters().proposals - before;
                accepts[i] += 1;
                st.push(x).unwrap();
            }
        }
        for i in 1..=n {
            let p = i as f64 / n as f64;
            let rate = accepts[i] as f64 / proposals[i] as f64;
            let se = (p * (1.0 - p) / proposals[i] as f64).sqrt().max(1e-12);
            assert!((rate - p).abs() <= 3.0 * se + 1e-12, "step {i}: {rate} vs {p}");
        }
    }

    #[test]
    fn stall_is_reported() {
        // asking for more points than the rank drives p_i to zero
        let spec = KernelSpec::FourierProjection { frequencies: vec![vec![0]] };
        let mut st = KernelState::new(&spec, 2);
        let dom = Domain::unit_box(1);
        let strat = RejectionStrategy::uniform(1.0).unwrap();
        let cfg = SamplerConfig { max_proposals_per_point: 1000 };
        let mut rng = stream_rng(2, 0);
        let err = run_to_completion(&mut st, &dom, &strat, &cfg, &mut rng).unwrap_err();
        assert_eq!(err, Error::Stalled { proposals: 1000, remaining: 1 });
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let (b, _) = fourier_1d(&[0, 1]);
        let mut st = SpectralState::new(&b);
        st.push(vec![0.4]).unwrap();
        assert!(matches!(st.push(vec![0.4]), Err(Error::DegeneratePoint { .. })));
        let mut rng = stream_rng(0, 0);
        let bad = RejectionStrategy::uniform_validated(1.5, &KernelSpec::FourierProjection { frequencies: vec![vec![0], vec![1]] }, &Domain::unit_box(1), 100, &mut rng);
        assert!(matches!(bad, Err(Error::InvalidBound { .. })));
        assert!(RejectionStrategy::uniform(-1.0).is_err());
    }

    #[test]
    fn near_coincident_points_are_ill_conditioned() {
        let spec = KernelSpec::GaussianHom { rho: 1.0, alpha: 1.0, dim: 1 };
        let mut st = KernelState::new(&spec, 3);
        st.push(vec![0.0]).unwrap();
        let r = st.push(vec![1e-7]);
        assert!(matches!(r, Err(Error::IllConditioned { .. })), "{r:?}");
    }
}

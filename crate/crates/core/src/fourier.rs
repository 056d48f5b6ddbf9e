//! Fourier projection kernels on boxes, the refined rejection bound, the
//! one-dimensional inversion proposal and Fourier-series approximations of
//! stationary kernels.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{check_dim, ensure, Error, Result};
use crate::kernel::KernelSpec;
use crate::pattern::{PointPattern, Provenance};
use crate::projection::{finish_pattern, run_to_completion, RejectionStrategy, SamplerConfig, SequentialState, SpectralState};
use crate::spectral::{FeatureMap, ProjectionBasis, SpectralBasis, Truncation};

/// Exponentials `exp(2 pi i j.(x - lower)/width) / sqrt(|S|)` for `j` in a frequency set.
#[derive(Clone, Debug)]
pub struct FourierBasis {
    dim: usize,
    freqs: Vec<i64>,
    domain: Domain,
    lower: Vec<f64>,
    width: Vec<f64>,
    axis_min: Vec<i64>,
    axis_max: Vec<i64>,
    norm: f64,
}

impl FourierBasis {
    /// Frequencies on the unit box.
    pub fn new(freqs: Vec<Vec<i64>>) -> Result<Self> {
        let d = freqs.first().map_or(0, |f| f.len());
        ensure(d > 0, || "frequency set must be nonempty".into())?;
        Self::on_box(freqs, Domain::unit_box(d))
    }

    pub fn on_box(freqs: Vec<Vec<i64>>, domain: Domain) -> Result<Self> {
        KernelSpec::FourierProjection { frequencies: freqs.clone() }.validate()?;
        let d = freqs[0].len();
        check_dim(d, domain.dim())?;
        let (lower, upper) = match &domain {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Ball { .. } => return Err(Error::InvalidParameter("Fourier bases live on boxes".into())),
        };
        let width: Vec<f64> = lower.iter().zip(&upper).map(|(a, b)| b - a).collect();
        let axis_min = (0..d).map(|a| freqs.iter().map(|f| f[a]).min().unwrap()).collect();
        let axis_max = (0..d).map(|a| freqs.iter().map(|f| f[a]).max().unwrap()).collect();
        let norm = 1.0 / domain.volume().sqrt();
        Ok(FourierBasis { dim: d, freqs: freqs.concat(), domain, lower, width, axis_min, axis_max, norm })
    }

    /// The cube `{j : |j|_inf <= ell}` in lexicographic order.
    pub fn cube_frequencies(ell: i64, dim: usize) -> Vec<Vec<i64>> {
        let side = (2 * ell + 1) as usize;
        let total = side.pow(dim as u32);
        (0..total)
            .map(|mut c| {
                let mut j = vec![0i64; dim];
                for a in (0..dim).rev() {
                    j[a] = (c % side) as i64 - ell;
                    c /= side;
                }
                j
            })
            .collect()
    }

    /// The most repulsive model with `n = (2 ell + 1)^d` points on the unit box.
    pub fn most_repulsive(ell: i64, dim: usize) -> Self {
        Self::new(Self::cube_frequencies(ell, dim)).expect("cube frequencies are valid")
    }

    /// The `n` lattice points of smallest sup-norm, ties broken by Euclidean norm then lexicographically.
    pub fn nearest_frequencies(n: usize, dim: usize) -> Vec<Vec<i64>> {
        let mut ell = 0i64;
        while ((2 * ell + 1) as usize).pow(dim as u32) < n {
            ell += 1;
        }
        let mut all = Self::cube_frequencies(ell, dim);
        all.sort_by_key(|j| (j.iter().map(|v| v.abs()).max().unwrap_or(0), j.iter().map(|v| v * v).sum::<i64>(), j.clone()));
        all.truncate(n);
        all
    }

    pub fn n(&self) -> usize {
        self.freqs.len() / self.dim
    }

    pub fn frequency(&self, k: usize) -> &[i64] {
        &self.freqs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        self.freqs.chunks(self.dim).map(|c| c.to_vec()).collect()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec::FourierProjection { frequencies: self.frequencies() }
    }

    /// Projection kernel onto all frequencies.
    pub fn projection(&self) -> ProjectionBasis {
        ProjectionBasis::full(Arc::new(self.clone()), self.domain.clone()).expect("consistent basis")
    }

    /// Constant diagonal `n / |S|`.
    pub fn diagonal(&self) -> f64 {
        self.n() as f64 * self.norm * self.norm
    }

    /// Sub-basis with the given frequency indices.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        ensure(!indices.is_empty(), || "empty frequency subset".into())?;
        Self::on_box(indices.iter().map(|&k| self.frequency(k).to_vec()).collect(), self.domain.clone())
    }
}

impl FeatureMap for FourierBasis {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.n()
    }

    fn eval_selected(&self, x: &[f64], indices: &[usize], out: &mut [Complex64]) {
        // per-axis tables of exp(2 pi i k u) for k in [min, max]
        let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            let u = (x[a] - self.lower[a]) / self.width[a];
            let step = Complex64::from_polar(1.0, 2.0 * PI * u);
            let mut cur = Complex64::from_polar(1.0, 2.0 * PI * u * self.axis_min[a] as f64);
            let len = (self.axis_max[a] - self.axis_min[a] + 1) as usize;
            let mut t = Vec::with_capacity(len);
            for s in 0..len {
                if s % 32 == 0 && s > 0 {
                    cur = Complex64::from_polar(1.0, 2.0 * PI * u * (self.axis_min[a] + s as i64) as f64);
                }
                t.push(cur);
                cur *= step;
            }
            tables.push(t);
        }
        for (o, &k) in out.iter_mut().zip(indices) {
            let f = self.frequency(k);
            let mut v = Complex64::new(self.norm, 0.0);
            for a in 0..self.dim {
                v *= tables[a][(f[a] - self.axis_min[a]) as usize];
            }
            *o = v;
        }
    }
}

/// Quadratic form `P(h) = h' C h` with `C = 4 pi^2 (sum j j' - (sum j)(sum j)'/n)`, in box coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundPolynomial {
    dim: usize,
    coeff: Vec<f64>,
    n: f64,
}

impl BoundPolynomial {
    pub fn from_basis(basis: &FourierBasis) -> Self {
        let d = basis.dim;
        let n = basis.n() as f64;
        let mut sjj = vec![0.0; d * d];
        let mut sj = vec![0.0; d];
        for k in 0..basis.n() {
            let f = basis.frequency(k);
            for a in 0..d {
                sj[a] += f[a] as f64;
                for b in 0..d {
                    sjj[a * d + b] += (f[a] * f[b]) as f64;
                }
            }
        }
        let mut coeff = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                coeff[a * d + b] = 4.0 * PI * PI * (sjj[a * d + b] - sj[a] * sj[b] / n) / (basis.width[a] * basis.width[b]);
            }
        }
        BoundPolynomial { dim: d, coeff, n }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// `P(x - y)`.
    #[inline]
    pub fn eval_diff(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for a in 0..d {
            let ha = x[a] - y[a];
            let row = &self.coeff[a * d..(a + 1) * d];
            let mut t = 0.0;
            for b in 0..d {
                t += row[b] * (x[b] - y[b]);
            }
            s += ha * t;
        }
        s
    }

    pub fn eval(&self, h: &[f64]) -> f64 {
        let zero = vec![0.0; self.dim];
        self.eval_diff(h, &zero)
    }
}

/// `min_k min(1, P(x - X_k)/n)` over accepted points; 1 when none are accepted.
pub fn bound_value(poly: &BoundPolynomial, accepted: &[Vec<f64>], x: &[f64]) -> f64 {
    accepted.iter().map(|p| poly.eval_diff(x, p) / poly.n).fold(1.0, f64::min)
}

// Uniform grid of buckets over the box for nearest-first scans.
#[derive(Clone, Debug)]
struct BucketGrid {
    dim: usize,
    cells: usize,
    lower: Vec<f64>,
    width: Vec<f64>,
    point_cells: Vec<Vec<usize>>,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(domain: &Domain, expected: usize) -> Self {
        let (lower, upper) = domain.bounding_box();
        let d = lower.len();
        let cells = ((expected as f64).powf(1.0 / d as f64).floor() as usize).clamp(1, 64);
        let cells = if d > 3 { cells.min(3) } else { cells };
        let width = lower.iter().zip(&upper).map(|(a, b)| b - a).collect();
        BucketGrid { dim: d, cells, lower, width, point_cells: Vec::new(), buckets: vec![Vec::new(); cells.pow(d as u32)] }
    }

    fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        (0..self.dim)
            .map(|a| (((x[a] - self.lower[a]) / self.width[a] * self.cells as f64) as usize).min(self.cells - 1))
            .collect()
    }

    fn flat(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, &v| acc * self.cells + v)
    }

    fn insert(&mut self, x: &[f64]) {
        let c = self.cell_of(x);
        let f = self.flat(&c);
        self.buckets[f].push(self.point_cells.len());
        self.point_cells.push(c);
    }

    // Indices of neighbouring cells (Chebyshev distance <= 1).
    fn neighbours(&self, c: &[usize]) -> Vec<usize> {
        let mut out = vec![Vec::<usize>::new()];
        for &v in c {
            let lo = v.saturating_sub(1);
            let hi = (v + 1).min(self.cells - 1);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |w| {
                        let mut p = prefix.clone();
                        p.push(w);
                        p
                    })
                })
                .collect();
        }
        out.iter().map(|c| self.flat(c)).collect()
    }
}

/// Spectral state for a Fourier projection kernel, with the refined bound.
pub struct FourierState<'a> {
    inner: SpectralState<'a>,
    poly: BoundPolynomial,
    grid: BucketGrid,
    bound: f64,
}

impl<'a> FourierState<'a> {
    /// `projection` must be the full projection of `basis`.
    pub fn new(basis: &FourierBasis, projection: &'a ProjectionBasis) -> Result<Self> {
        check_dim(basis.n(), projection.rank())?;
        Ok(FourierState {
            inner: SpectralState::new(projection),
            poly: BoundPolynomial::from_basis(basis),
            grid: BucketGrid::new(basis.domain(), basis.n()),
            bound: basis.diagonal(),
        })
    }

    pub fn inner(&mut self) -> &mut SpectralState<'a> {
        &mut self.inner
    }

    pub fn polynomial(&self) -> &BoundPolynomial {
        &self.poly
    }

    pub fn push(&mut self, x: Vec<f64>) -> Result<()> {
        self.grid.insert(&x);
        self.inner.push(x)
    }

    // True when some accepted point has P(z - X_k)/n < u, scanning nearby buckets first.
    fn bound_rejects(&self, z: &[f64], u: f64) -> bool {
        let acc = self.inner.accepted();
        if acc.is_empty() {
            return false;
        }
        let thresh = u * self.poly.n;
        let c = self.grid.cell_of(z);
        let near = self.grid.neighbours(&c);
        for &cell in &near {
            for &k in &self.grid.buckets[cell] {
                if self.poly.eval_diff(z, &acc[k]) < thresh {
                    return true;
                }
            }
        }
        for (k, pc) in self.grid.point_cells.iter().enumerate() {
            let is_near = pc.iter().zip(&c).all(|(a, b)| a.abs_diff(*b) <= 1);
            if !is_near && self.poly.eval_diff(z, &acc[k]) < thresh {
                return true;
            }
        }
        false
    }
}

/// Draws from `p_i` by uniform proposals, screening with the Fourier bound before evaluating `p_i`.
pub fn sample_pi_fourier<R: Rng>(state: &mut FourierState<'_>, cfg: &SamplerConfig, rng: &mut R) -> Result<Vec<f64>> {
    let remaining = state.inner.remaining();
    ensure(remaining > 0, || "no points left to sample".into())?;
    let domain = state.inner.basis().domain().clone();
    let mut z = vec![0.0; domain.dim()];
    let mut tries = 0u64;
    loop {
        if tries >= cfg.max_proposals_per_point {
            return Err(Error::Stalled { proposals: tries, remaining });
        }
        tries += 1;
        state.inner.counters_mut().proposals += 1;
        domain.sample_uniform_into(rng, &mut z);
        let u: f64 = rng.random();
        if state.bound_rejects(&z, u) {
            let c = state.inner.counters_mut();
            c.rejections += 1;
            c.bound_rejections += 1;
            continue;
        }
        let (w, _) = state.inner.conditional(&z)?;
        if w / state.bound > u {
            return Ok(z);
        }
        state.inner.counters_mut().rejections += 1;
    }
}

/// Matern II thinning with caller-supplied marks: points closer than `border` to the
/// boundary are dropped, then a point survives unless a survivor within `min_dist` has a smaller mark.
pub fn matern2_thin_with_marks(points: &[Vec<f64>], marks: &[f64], min_dist: f64, border: f64, domain: &Domain) -> Vec<Vec<f64>> {
    assert_eq!(points.len(), marks.len());
    let inside: Vec<usize> = (0..points.len()).filter(|&k| domain.distance_to_boundary(&points[k]) >= border).collect();
    let md2 = min_dist * min_dist;
    inside
        .iter()
        .filter(|&&k| {
            !inside.iter().any(|&l| {
                l != k && marks[l] < marks[k] && crate::kernel::sq_dist(&points[k], &points[l]) < md2
            })
        })
        .map(|&k| points[k].clone())
        .collect()
}

/// Matern II thinning with fresh uniform marks.
pub fn matern2_thin<R: Rng + ?Sized>(points: &[Vec<f64>], min_dist: f64, border: f64, domain: &Domain, rng: &mut R) -> Vec<Vec<f64>> {
    let marks: Vec<f64> = points.iter().map(|_| rng.random()).collect();
    matern2_thin_with_marks(points, &marks, min_dist, border, domain)
}

/// Piecewise quadratic/constant dominating density on `[0, 1]` built around separated conditioning points.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseProposal {
    n: f64,
    a: f64,
    half: f64,
    unit: f64,
    centers: Vec<f64>,
}

/// `a^2 = 4 pi^2 (sum j^2 - (sum j)^2 / n)`.
pub fn scale_a(freqs: &[i64]) -> f64 {
    let n = freqs.len() as f64;
    let s: f64 = freqs.iter().map(|&j| j as f64).sum();
    let s2: f64 = freqs.iter().map(|&j| (j * j) as f64).sum();
    (4.0 * PI * PI * (s2 - s * s / n)).max(0.0).sqrt()
}

impl PiecewiseProposal {
    /// Proposal around the given centres, which must be sorted, `2 sqrt(n)/a` apart and `sqrt(n)/a` from 0 and 1.
    pub fn new(mut centers: Vec<f64>, n: usize, a: f64) -> Result<Self> {
        ensure(n >= 1, || "n must be positive".into())?;
        let nf = n as f64;
        if !(a > 0.0) {
            ensure(centers.is_empty(), || "centres require a positive scale".into())?;
            return Ok(PiecewiseProposal { n: nf, a, half: f64::INFINITY, unit: 0.0, centers });
        }
        centers.sort_by(f64::total_cmp);
        let half = nf.sqrt() / a;
        let tol = 1e-12;
        for (k, &c) in centers.iter().enumerate() {
            ensure(c - half >= -tol && c + half <= 1.0 + tol, || format!("interval around {c} leaves [0, 1]"))?;
            if k > 0 {
                ensure(c - centers[k - 1] >= 2.0 * half - tol, || "proposal intervals overlap".into())?;
            }
        }
        Ok(PiecewiseProposal { n: nf, a, half, unit: nf.powf(1.5) / (3.0 * a), centers })
    }

    /// Border removal and Matern II thinning of the conditioning points, then the proposal.
    pub fn build<R: Rng + ?Sized>(conditioning: &[f64], freqs: &[i64], rng: &mut R) -> Self {
        let n = freqs.len();
        let a = scale_a(freqs);
        if !(a > 0.0) || conditioning.is_empty() {
            return Self::new(Vec::new(), n, a).expect("empty proposal is valid");
        }
        let half = (n as f64).sqrt() / a;
        let pts: Vec<Vec<f64>> = conditioning.iter().map(|&x| vec![x]).collect();
        let kept = matern2_thin(&pts, 2.0 * half, half, &Domain::unit_box(1), rng);
        Self::new(kept.into_iter().map(|p| p[0]).collect(), n, a).expect("thinned centres are separated")
    }

    pub fn retained(&self) -> &[f64] {
        &self.centers
    }

    pub fn scale(&self) -> f64 {
        self.a
    }

    pub fn total_mass(&self) -> f64 {
        self.n - 4.0 * self.centers.len() as f64 * self.unit
    }

    /// `(y_k^-, y_k, y_k^+)` for 1-based `k`.
    pub fn knots(&self, k: usize) -> (f64, f64, f64) {
        let c = self.centers[k - 1];
        let kf = k as f64;
        let lo = self.n * c - (4.0 * kf - 1.0) * self.unit;
        (lo, lo + self.unit, lo + 2.0 * self.unit)
    }

    /// The dominating function `f`.
    pub fn density(&self, x: f64) -> f64 {
        let idx = self.centers.partition_point(|&c| c + self.half < x);
        if idx < self.centers.len() && x >= self.centers[idx] - self.half {
            let h = x - self.centers[idx];
            self.a * self.a * h * h
        } else {
            self.n
        }
    }

    /// Primitive `F(x) = int_0^x f`.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.centers.partition_point(|&c| c + self.half < x);
        if idx < self.centers.len() && x >= self.centers[idx] - self.half {
            let (_, yk, _) = self.knots(idx + 1);
            yk + self.a * self.a / 3.0 * (x - self.centers[idx]).powi(3)
        } else {
            self.n * x - 4.0 * idx as f64 * self.unit
        }
    }

    /// `F^{-1}(y)` for `y` in `[0, F(1)]`.
    pub fn inverse(&self, y: f64) -> f64 {
        let p = self.centers.len();
        let idx = (1..=p).map(|k| self.knots(k).2).take_while(|&yp| yp < y).count();
        if idx < p {
            let (ym, _, _) = self.knots(idx + 1);
            if y >= ym {
                let (_, yk, _) = self.knots(idx + 1);
                let arg = 3.0 / (self.a * self.a) * (y - yk);
                return self.centers[idx] + arg.cbrt();
            }
        }
        (y + 4.0 * idx as f64 * self.unit) / self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse(self.total_mass() * rng.random::<f64>()).clamp(0.0, 1.0)
    }
}

/// Draws from `p_i` on `[0, 1]` with the piecewise proposal rebuilt from the accepted points.
pub fn sample_pi_fourier_d1<R: Rng>(state: &mut SpectralState<'_>, freqs: &[i64], cfg: &SamplerConfig, rng: &mut R) -> Result<f64> {
    ensure(state.basis().domain().is_unit_box() && state.dim() == 1, || "inversion proposal needs the unit interval".into())?;
    let remaining = state.remaining();
    ensure(remaining > 0, || "no points left to sample".into())?;
    let cond: Vec<f64> = state.accepted().iter().map(|p| p[0]).collect();
    let proposal = PiecewiseProposal::build(&cond, freqs, rng);
    let mut tries = 0u64;
    loop {
        if tries >= cfg.max_proposals_per_point {
            return Err(Error::Stalled { proposals: tries, remaining });
        }
        tries += 1;
        state.counters_mut().proposals += 1;
        let z = proposal.sample(rng);
        let u: f64 = rng.random();
        let f = proposal.density(z);
        if f > 0.0 {
            let (w, _) = state.conditional(&[z])?;
            if w / f > u {
                return Ok(z);
            }
        }
        state.counters_mut().rejections += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FourierMethod {
    /// Uniform proposal with bound `n`.
    Plain,
    /// Uniform proposal pre-screened by the quadratic bound.
    Refined,
    /// Piecewise inversion proposal (one dimension only).
    Inversion,
}

impl FourierMethod {
    pub fn id(&self) -> &'static str {
        match self {
            FourierMethod::Plain => "fourier-plain",
            FourierMethod::Refined => "fourier-refined",
            FourierMethod::Inversion => "fourier-inversion",
        }
    }
}

/// Samples the projection DPP with kernel `sum_{j in J} exp(2 pi i j.(x-y))/|S|`.
pub fn sample_fourier_projection<R: Rng>(basis: &FourierBasis, method: FourierMethod, cfg: &SamplerConfig, rng: &mut R) -> Result<PointPattern> {
    let proj = basis.projection();
    let domain = basis.domain().clone();
    let prov = Provenance::new("fourier-projection", method.id()).with_param("n", basis.n() as f64);
    match method {
        FourierMethod::Plain => {
            let mut st = SpectralState::new(&proj);
            let strat = RejectionStrategy::uniform(basis.diagonal())?;
            run_to_completion(&mut st, &domain, &strat, cfg, rng)?;
            finish_pattern(&st, &domain, prov)
        }
        FourierMethod::Refined => {
            let mut st = FourierState::new(basis, &proj)?;
            while st.inner.remaining() > 0 {
                let x = sample_pi_fourier(&mut st, cfg, rng)?;
                st.push(x)?;
            }
            finish_pattern(&st.inner, &domain, prov)
        }
        FourierMethod::Inversion => {
            ensure(basis.dim == 1 && domain.is_unit_box(), || "inversion proposal needs the unit interval".into())?;
            let freqs: Vec<i64> = basis.freqs.clone();
            let mut st = SpectralState::new(&proj);
            while st.remaining() > 0 {
                let x = sample_pi_fourier_d1(&mut st, &freqs, cfg, rng)?;
                st.push(vec![x])?;
            }
            finish_pattern(&st, &domain, prov)
        }
    }
}

/// Fourier-series approximation on a box: eigenfunctions `exp(2 pi i k.x)`, eigenvalues `phi(k)`, `|k|_inf <= ell`.
pub fn fourier_spectral_approx(phi: &dyn Fn(&[i64]) -> f64, domain: &Domain, ell: i64) -> Result<SpectralBasis> {
    ensure(ell >= 0, || "truncation must be nonnegative".into())?;
    let freqs = FourierBasis::cube_frequencies(ell, domain.dim());
    let eig: Vec<f64> = freqs.iter().map(|k| phi(k)).collect();
    for (k, &l) in eig.iter().enumerate() {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::InvalidSpectrum { index: k, value: l });
        }
    }
    let basis = FourierBasis::on_box(freqs, domain.clone())?;
    SpectralBasis::new(eig, Arc::new(basis), domain.clone(), Truncation { order: ell as usize, target_error: None })
}

/// Spectral density of the Gaussian kernel on the unit box: `rho alpha^d pi^{d/2} exp(-pi^2 alpha^2 |k|^2)`.
pub fn gaussian_spectral_density(rho: f64, alpha: f64, dim: usize) -> impl Fn(&[i64]) -> f64 {
    let scale = rho * alpha.powi(dim as i32) * PI.powf(dim as f64 / 2.0);
    // alpha_max computed in floating point can overshoot the boundary by an ulp
    let scale = if scale > 1.0 && scale <= 1.0 + 1e-12 { 1.0 } else { scale };
    let rate = PI * PI * alpha * alpha;
    move |k: &[i64]| scale * (-rate * k.iter().map(|&v| (v * v) as f64).sum::<f64>()).exp()
}

/// Smallest `ell` whose per-axis Gaussian tail beyond `ell` is below `tol` relative to the peak.
pub fn gaussian_truncation(alpha: f64, tol: f64) -> i64 {
    ((1.0 / tol).ln().sqrt() / (PI * alpha)).ceil() as i64
}

/// Fourier approximation of the stationary Gaussian model on the unit box: Bernoulli selection, then the selected frequencies.
pub fn gaussian_fourier_frequencies<R: Rng + ?Sized>(rho: f64, alpha: f64, dim: usize, rng: &mut R) -> Result<Vec<Vec<i64>>> {
    let phi = gaussian_spectral_density(rho, alpha, dim);
    let ell = gaussian_truncation(alpha, 1e-12);
    let basis = fourier_spectral_approx(&phi, &Domain::unit_box(dim), ell)?;
    let feats = FourierBasis::cube_frequencies(ell, dim);
    let sel = basis.select(rng)?;
    Ok(sel.into_iter().map(|k| feats[k].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn gaussian_frequencies_at_the_existence_boundary() {
        let mut rng = stream_rng(0, 0);
        for rho in [25.0, 169.0, 289.0] {
            let alpha = crate::kernel::alpha_max(crate::kernel::StationaryKind::Gaussian, rho, 2);
            assert!(gaussian_spectral_density(rho, alpha, 2)(&[0, 0]) <= 1.0);
            assert!(gaussian_fourier_frequencies(rho, alpha, 2, &mut rng).is_ok());
        }
    }

    #[test]
    fn features_are_orthonormal_on_a_box() {
        let dom = Domain::new_box(vec![-1.0, 2.0], vec![1.0, 2.5]).unwrap();
        let b = FourierBasis::on_box(vec![vec![0, 0], vec![1, -2], vec![3, 1]], dom.clone()).unwrap();
        let m = 24;
        let mut gram = [[Complex64::new(0.0, 0.0); 3]; 3];
        let idx = [0, 1, 2];
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for a in 0..m {
            for c in 0..m {
                let x = [-1.0 + 2.0 * (a as f64 + 0.5) / m as f64, 2.0 + 0.5 * (c as f64 + 0.5) / m as f64];
                b.eval_selected(&x, &idx, &mut v);
                for i in 0..3 {
                    for j in 0..3 {
                        gram[i][j] += v[i] * v[j].conj() * (dom.volume() / (m * m) as f64);
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - t).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_matches_kernel_spec_on_unit_box() {
        let b = FourierBasis::most_repulsive(2, 2);
        let spec = b.kernel_spec();
        let p = b.projection();
        let x = [0.3, 0.8];
        let y = [0.55, 0.1];
        assert!((p.eval(&x, &y) - spec.eval(&x, &y)).norm() < 1e-12);
        assert_eq!(b.n(), 25);
    }

    #[test]
    fn nearest_frequencies_reduce_to_cube() {
        assert_eq!(FourierBasis::nearest_frequencies(9, 2).len(), 9);
        let mut a = FourierBasis::nearest_frequencies(25, 2);
        let mut b = FourierBasis::cube_frequencies(2, 2);
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn polynomial_examples() {
        let b = FourierBasis::new(vec![vec![-1], vec![0], vec![1]]).unwrap();
        let p = BoundPolynomial::from_basis(&b);
        assert!((p.coefficients()[0] - 8.0 * PI * PI).abs() < 1e-12);
        assert!((p.eval(&[0.1]) - 8.0 * PI * PI * 0.01).abs() < 1e-12);
        assert_eq!(p.eval(&[0.0]), 0.0);
        assert_eq!(bound_value(&p, &[vec![0.4]], &[0.4]), 0.0);
        assert!((scale_a(&[-1, 0, 1]).powi(2) - 8.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn polynomial_is_psd() {
        let b = FourierBasis::most_repulsive(2, 3);
        let p = BoundPolynomial::from_basis(&b);
        let c = p.coefficients();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[i * 3 + j] - c[j * 3 + i]).abs() < 1e-12);
            }
        }
        let mut rng = stream_rng(1, 0);
        for _ in 0..1000 {
            let h: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(p.eval(&h) >= -1e-12);
        }
    }

    #[test]
    fn bound_dominates_conditional_density() {
        let b = FourierBasis::most_repulsive(2, 2);
        let proj = b.projection();
        let mut rng = stream_rng(8, 0);
        let poly = BoundPolynomial::from_basis(&b);
        let mut st = SpectralState::new(&proj);
        for _ in 0..10 {
            st.push(vec![rng.random(), rng.random()]).unwrap();
            for _ in 0..100 {
                let x = [rng.random(), rng.random()];
                let (w, _) = st.conditional(&x).unwrap();
                assert!(w / b.n() as f64 <= bound_value(&poly, st.accepted(), &x) + 1e-10);
            }
        }
    }

    #[test]
    fn refined_and_plain_produce_identical_patterns_from_one_stream() {
        let b = FourierBasis::most_repulsive(3, 2);
        let cfg = SamplerConfig::default();
        let plain = sample_fourier_projection(&b, FourierMethod::Plain, &cfg, &mut stream_rng(3, 1)).unwrap();
        let refined = sample_fourier_projection(&b, FourierMethod::Refined, &cfg, &mut stream_rng(3, 1)).unwrap();
        assert_eq!(plain.points(), refined.points());
        let (cp, cr) = (plain.provenance.counters, refined.provenance.counters);
        assert_eq!(cp.proposals, cr.proposals);
        assert_eq!(cp.rejections, cr.rejections);
        assert!(cr.bound_rejections > 0 && cp.bound_rejections == 0);
    }

    #[test]
    fn matern_examples() {
        let dom = Domain::unit_box(1);
        let mut rng = stream_rng(0, 0);
        assert!(matern2_thin(&[], 0.1, 0.0, &dom, &mut rng).is_empty());
        let pts = vec![vec![0.5], vec![0.52]];
        let kept = matern2_thin_with_marks(&pts, &[0.7, 0.2], 0.05, 0.0, &dom);
        assert_eq!(kept, vec![vec![0.52]]);
        let kept = matern2_thin_with_marks(&pts, &[0.1, 0.2], 0.05, 0.0, &dom);
        assert_eq!(kept, vec![vec![0.5]]);
        let border = 0.03;
        let many: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random::<f64>()]).collect();
        let kept = matern2_thin(&many, 0.05, border, &dom, &mut rng);
        for (i, p) in kept.iter().enumerate() {
            assert!(p[0] >= border && p[0] <= 1.0 - border);
            for q in &kept[i + 1..] {
                assert!((p[0] - q[0]).abs() >= 0.05);
            }
        }
    }

    fn proposal_from_repulsive(n_ell: i64, seed: u64) -> (PiecewiseProposal, Vec<i64>) {
        let freqs: Vec<i64> = (-n_ell..=n_ell).collect();
        let mut rng = stream_rng(seed, 0);
        let cond: Vec<f64> = (0..(2 * n_ell) as usize).map(|_| rng.random()).collect();
        (PiecewiseProposal::build(&cond, &freqs, &mut rng), freqs)
    }

    #[test]
    fn empty_proposal_is_flat() {
        let p = PiecewiseProposal::build(&[], &[-1, 0, 1], &mut stream_rng(0, 0));
        assert_eq!(p.total_mass(), 3.0);
        assert_eq!(p.density(0.4), 3.0);
        assert!((p.inverse(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn total_mass_matches_quadrature() {
        for seed in 0..5 {
            let (p, _) = proposal_from_repulsive(10, seed);
            assert!(!p.retained().is_empty());
            let m = 1_000_000;
            let h = 1.0 / m as f64;
            let mut s = 0.5 * (p.density(0.0) + p.density(1.0));
            for k in 1..m {
                s += p.density(k as f64 * h);
            }
            s *= h;
            assert!(((s - p.total_mass()) / p.total_mass()).abs() <= 1e-8, "{s} vs {}", p.total_mass());
            assert!(p.total_mass() < 21.0);
            assert!((p.cdf(1.0) - p.total_mass()).abs() < 1e-12);
        }
    }

    #[test]
    fn knots_match_cdf() {
        let (p, _) = proposal_from_repulsive(8, 3);
        let half = (17f64).sqrt() / p.scale();
        for k in 1..=p.retained().len() {
            let c = p.retained()[k - 1];
            let (ym, y, yp) = p.knots(k);
            assert!((p.cdf(c - half) - ym).abs() < 1e-11);
            assert!((p.cdf(c) - y).abs() < 1e-11);
            assert!((p.cdf(c + half) - yp).abs() < 1e-11);
        }
    }

    #[test]
    fn inverse_is_backward_stable() {
        // error in x is the rounding of F(x) divided by the local density
        let (p, _) = proposal_from_repulsive(10, 11);
        let mut rng = stream_rng(12, 0);
        for _ in 0..10_000 {
            let x: f64 = rng.random();
            let y = p.cdf(x);
            let slack = 8.0 * f64::EPSILON * p.total_mass();
            let err = (p.inverse(y) - x).abs();
            let scale = (p.density(x).max(1e-300)).recip() * slack;
            let cube = (3.0 * slack / (p.a * p.a)).cbrt();
            assert!(err <= 1e-10_f64.max(scale.min(cube)), "x={x} err={err}");
        }
    }

    #[test]
    fn inversion_sampler_yields_n_points() {
        let b = FourierBasis::new((-5..=5).map(|j| vec![j]).collect()).unwrap();
        let mut rng = stream_rng(4, 4);
        let p = sample_fourier_projection(&b, FourierMethod::Inversion, &SamplerConfig::default(), &mut rng).unwrap();
        assert_eq!(p.len(), 11);
        let b2 = FourierBasis::most_repulsive(1, 2);
        assert!(sample_fourier_projection(&b2, FourierMethod::Inversion, &SamplerConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn spectral_approx_examples() {
        let dom = Domain::unit_box(2);
        let one = |_: &[i64]| 1.0;
        let b = fourier_spectral_approx(&one, &dom, 2).unwrap();
        assert_eq!(b.len(), 25);
        assert_eq!(b.trace(), 25.0);
        let bad = |k: &[i64]| if k == [1, 0] { 1.2 } else { 0.5 };
        assert!(matches!(fourier_spectral_approx(&bad, &dom, 2), Err(Error::InvalidSpectrum { .. })));
    }

    // Poisson summation: sum_k exp(-pi^2 a^2 k^2) = (1/(a sqrt pi)) sum_m exp(-m^2/a^2).
    #[test]
    fn gaussian_spectral_mass_converges_to_rho() {
        let rho = 100.0;
        let alpha = 0.5 / (rho * PI).sqrt();
        let phi = gaussian_spectral_density(rho, alpha, 2);
        let total = |ell: i64| -> f64 {
            let mut s = 0.0;
            for a in -ell..=ell {
                for b in -ell..=ell {
                    s += phi(&[a, b]);
                }
            }
            s
        };
        // independent oracle for the truncated mass: rho times the squared
        // fraction of a one-dimensional Gaussian lattice sum inside [-ell, ell]
        let frac = |ell: i64| -> f64 {
            let r = PI * PI * alpha * alpha;
            let full = 1.0 / (alpha * PI.sqrt());
            let inner: f64 = (-ell..=ell).map(|k| (-r * (k * k) as f64).exp()).sum();
            inner / full
        };
        assert!((total(30) - rho * frac(30).powi(2)).abs() < 1e-9);
        assert!((total(60) - rho).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn cdf_is_increasing(seed in 0u64..200) {
            let (p, _) = proposal_from_repulsive(6, seed);
            let mut prev = -1.0;
            for k in 0..=400 {
                let v = p.cdf(k as f64 / 400.0);
                prop_assert!(v > prev);
                prev = v;
            }
        }

        #[test]
        fn mass_strictly_below_n_with_retained_points(seed in 0u64..200) {
            let (p, _) = proposal_from_repulsive(7, seed);
            if !p.retained().is_empty() {
                prop_assert!(p.total_mass() < 15.0);
            }
        }
    }
}

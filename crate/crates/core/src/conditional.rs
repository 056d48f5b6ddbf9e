//! Palm kernels, simulation given observed points, in-painting and
//! projection-kernel selection from thinned observations.

use num_complex::Complex64;
use rand::Rng;

use crate::domain::Domain;
use crate::error::{check_dim, ensure, Error, Result};
use crate::fourier::FourierBasis;
use crate::kernel::Kernel;
use crate::pattern::{PointPattern, Provenance};
use crate::projection::{
    finish_pattern, run_to_completion, KernelState, ProjectionSource, RejectionStrategy, SamplerConfig, SequentialState, SpectralState,
};

const MAX_CONDITION: f64 = 1e12;

/// `K_y(x, z) = K(x, z) - k(x)* K_m^{-1} k(z)` for conditioning points `y_1..y_m`.
pub struct PalmKernel<K: Kernel> {
    base: K,
    points: Vec<Vec<f64>>,
    // Cholesky rows of K_m = L L*
    rows: Vec<Vec<Complex64>>,
}

impl<K: Kernel> PalmKernel<K> {
    pub fn new(base: K, points: Vec<Vec<f64>>) -> Result<Self> {
        for p in &points {
            check_dim(base.dim(), p.len())?;
        }
        let mut palm = PalmKernel { base, points: Vec::with_capacity(points.len()), rows: Vec::new() };
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for p in points {
            let l = palm.solve(&p);
            let schur = palm.base.diag(&p) - l.iter().map(|c| c.norm_sqr()).sum::<f64>();
            let delta = schur.max(0.0).sqrt();
            if !(delta > 1e-12) {
                return Err(Error::InvalidConditioning(format!("point {p:?} has zero conditional density")));
            }
            dmin = dmin.min(delta);
            dmax = dmax.max(delta);
            if (dmax / dmin).powi(2) > MAX_CONDITION {
                return Err(Error::IllConditioned { condition: (dmax / dmin).powi(2) });
            }
            let mut row: Vec<Complex64> = l.iter().map(|c| c.conj()).collect();
            row.push(Complex64::new(delta, 0.0));
            palm.rows.push(row);
            palm.points.push(p);
        }
        Ok(palm)
    }

    pub fn conditioning_points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn base(&self) -> &K {
        &self.base
    }

    // l = L^{-1} k(x) with k_j = K(y_j, x)
    fn solve(&self, x: &[f64]) -> Vec<Complex64> {
        let mut l: Vec<Complex64> = Vec::with_capacity(self.rows.len());
        for (j, row) in self.rows.iter().enumerate() {
            let mut s = self.base.eval(&self.points[j], x);
            for t in 0..j {
                s -= row[t] * l[t];
            }
            l.push(s / row[j].re);
        }
        l
    }
}

impl<K: Kernel> Kernel for PalmKernel<K> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let lx = self.solve(x);
        let ly = self.solve(y);
        self.base.eval(x, y) - lx.iter().zip(&ly).map(|(a, b)| a.conj() * b).sum::<Complex64>()
    }

    fn diag(&self, x: &[f64]) -> f64 {
        let lx = self.solve(x);
        self.base.diag(x) - lx.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

/// Builds the Palm kernel of `base` at `points`.
pub fn palm_kernel<K: Kernel>(base: K, points: Vec<Vec<f64>>) -> Result<PalmKernel<K>> {
    PalmKernel::new(base, points)
}

fn degenerate_to_conditioning(e: Error) -> Error {
    match e {
        Error::DegeneratePoint { norm } => {
            Error::InvalidConditioning(format!("observed point has zero conditional density (residual {norm:e})"))
        }
        other => other,
    }
}

/// Simulates the remaining `n - m` points of a projection DPP given `m` observed points.
pub fn simulate_given_subset<R: Rng>(
    source: ProjectionSource<'_>,
    domain: &Domain,
    observed: &[Vec<f64>],
    strategy: &RejectionStrategy,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PointPattern> {
    let prov = Provenance::new("conditional", source.algorithm_id()).with_param("m", observed.len() as f64);
    let run = |st: &mut dyn SequentialState, rng: &mut R| -> Result<Vec<Vec<f64>>> {
        ensure(observed.len() <= st.total(), || "more observed points than the kernel rank".into())
            .map_err(|e| Error::InvalidConditioning(e.to_string()))?;
        for y in observed {
            check_dim(domain.dim(), y.len())?;
            st.push(y.clone()).map_err(degenerate_to_conditioning)?;
        }
        run_to_completion(st, domain, strategy, cfg, rng)?;
        Ok(st.accepted()[observed.len()..].to_vec())
    };
    let (new, counters, warnings) = match source {
        ProjectionSource::Spectral(basis) => {
            let mut st = SpectralState::new(basis);
            let pts = run(&mut st, rng)?;
            (pts, *st.counters(), st.warnings().to_vec())
        }
        ProjectionSource::Kernel { kernel, n } => {
            let mut st = KernelState::new(kernel, n);
            let pts = run(&mut st, rng)?;
            (pts, *st.counters(), st.warnings().to_vec())
        }
    };
    let mut prov = prov;
    prov.counters = counters;
    prov.warnings = warnings;
    PointPattern::new(new, domain.clone(), prov)
}

/// Known points outside a region `A` and the total cardinality.
#[derive(Clone, Debug, PartialEq)]
pub struct InpaintRegion {
    pub region: Domain,
    pub outside: Vec<Vec<f64>>,
    pub n: usize,
}

impl InpaintRegion {
    pub fn new(region: Domain, outside: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        for y in &outside {
            check_dim(region.dim(), y.len())?;
            if region.contains(y) {
                return Err(Error::InvalidConditioning(format!("point {y:?} lies inside the in-painting region")));
            }
        }
        if outside.len() > n {
            return Err(Error::InvalidConditioning(format!("{} observed points exceed n = {n}", outside.len())));
        }
        Ok(InpaintRegion { region, outside, n })
    }
}

/// Fills `A` with `n - m` points from the Palm kernel at the outside points, restricted to `A`.
pub fn inpaint<K: Kernel, R: Rng>(base: K, region: &InpaintRegion, probes: usize, cfg: &SamplerConfig, rng: &mut R) -> Result<PointPattern> {
    let InpaintRegion { region: a, outside, n } = region;
    let m = outside.len();
    let mut prov = Provenance::new("inpaint", "projection-kernel").with_param("n", *n as f64).with_param("m", m as f64);
    if m == *n {
        return PointPattern::new(Vec::new(), a.clone(), prov);
    }
    let palm = PalmKernel::new(base, outside.clone())?;
    let mut top = 0.0f64;
    let mut x = vec![0.0; a.dim()];
    for _ in 0..probes.max(1) {
        a.sample_uniform_into(rng, &mut x);
        top = top.max(palm.diag(&x));
    }
    let strategy = RejectionStrategy::uniform(1.05 * top)?;
    prov.params.insert("bound".into(), 1.05 * top);
    let mut st = KernelState::new(&palm, n - m);
    run_to_completion(&mut st, a, &strategy, cfg, rng)?;
    finish_pattern(&st, a, prov)
}

/// Frequencies drawn from a spectrum, conditioned on having at least `m` of them.
#[derive(Clone, Debug)]
pub struct KernelSelection {
    pub basis: FourierBasis,
    pub intensity_estimate: f64,
    pub redraws: usize,
    pub truncation: i64,
}

/// Midpoint-rule integral over a box, with resolution chosen by dimension.
pub fn integrate_box(f: &dyn Fn(&[f64]) -> f64, domain: &Domain) -> f64 {
    let (lo, hi) = domain.bounding_box();
    let d = lo.len();
    let m: usize = match d {
        1 => 4096,
        2 => 256,
        3 => 48,
        _ => 12,
    };
    let total = m.pow(d as u32);
    let cell: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a) / m as f64).product();
    let mut x = vec![0.0; d];
    let mut s = 0.0;
    for mut c in 0..total {
        for a in 0..d {
            let k = c % m;
            c /= m;
            x[a] = lo[a] + (hi[a] - lo[a]) * (k as f64 + 0.5) / m as f64;
        }
        if domain.contains(&x) {
            s += f(&x);
        }
    }
    s * cell
}

const MAX_REDRAWS: usize = 10_000;

/// Chooses the frequencies of a projection kernel given `m` points observed after thinning with retention `q`.
pub fn select_projection_kernel<R: Rng + ?Sized>(
    m: usize,
    retention: &dyn Fn(&[f64]) -> f64,
    spectrum: &dyn Fn(&[i64]) -> f64,
    domain: &Domain,
    rng: &mut R,
) -> Result<KernelSelection> {
    let d = domain.dim();
    let q_int = integrate_box(retention, domain);
    ensure(q_int > 0.0, || "retention integrates to zero".into())?;
    // total spectral mass by growing shells
    let shell = |ell: i64| -> Result<f64> {
        let mut s = 0.0;
        for k in FourierBasis::cube_frequencies(ell, d) {
            if k.iter().map(|v| v.abs()).max().unwrap_or(0) == ell {
                let v = spectrum(&k);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidSpectrum { index: 0, value: v });
                }
                s += v;
            }
        }
        Ok(s)
    };
    let cap = ((1e7f64).powf(1.0 / d as f64) as i64 - 1) / 2;
    let mut masses = vec![shell(0)?];
    let mut total = masses[0];
    let mut ell = 0;
    while ell < cap {
        ell += 1;
        let s = shell(ell)?;
        masses.push(s);
        total += s;
        if s <= 1e-12 * total.max(1e-300) && ell >= 1 {
            break;
        }
    }
    let target = (m as f64).max(0.999 * total);
    let mut acc = 0.0;
    let mut chosen = ell;
    for (l, s) in masses.iter().enumerate() {
        acc += s;
        if acc >= target {
            chosen = l as i64;
            break;
        }
    }
    let freqs = FourierBasis::cube_frequencies(chosen, d);
    let probs: Vec<f64> = freqs.iter().map(|k| spectrum(k)).collect();
    for redraws in 1..=MAX_REDRAWS {
        let sel: Vec<usize> = (0..freqs.len()).filter(|&k| rng.random::<f64>() < probs[k]).collect();
        if sel.len() >= m && !sel.is_empty() {
            let basis = FourierBasis::on_box(sel.iter().map(|&k| freqs[k].clone()).collect(), domain.clone())?;
            return Ok(KernelSelection { basis, intensity_estimate: m as f64 / q_int, redraws, truncation: chosen });
        }
    }
    Err(Error::InfeasibleSpectrum { m, redraws: MAX_REDRAWS })
}

/// Independent thinning: each point is kept with probability `retention(x)`. Returns `(kept, deleted)`.
pub fn thin_independent<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    retention: &dyn Fn(&[f64]) -> f64,
    rng: &mut R,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut kept = Vec::new();
    let mut deleted = Vec::new();
    for p in points {
        if rng.random::<f64>() < retention(p) {
            kept.push(p.clone());
        } else {
            deleted.push(p.clone());
        }
    }
    (kept, deleted)
}

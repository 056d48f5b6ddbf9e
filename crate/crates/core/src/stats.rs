//! Summary statistics for validating samplers, and the timing harness.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::domain::{ball_volume, Domain};
use crate::error::{ensure, Error, Result};
use crate::fourier::{gaussian_fourier_frequencies, sample_fourier_projection, FourierBasis, FourierMethod};
use crate::ginibre::{ginibre_spectral_basis, sample_ginibre_eigen, sample_ginibre_spectral, GinibreParams};
use crate::kernel::sq_dist;
use crate::pattern::{PointPattern, Provenance};
use crate::projection::SamplerConfig;
use crate::rng::stream_rng;

/// Smallest number of patterns accepted by the pooled estimators.
pub const MIN_PATTERNS: usize = 50;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
}

fn check_patterns(patterns: &[PointPattern], radii: &[f64]) -> Result<Domain> {
    if patterns.len() < MIN_PATTERNS {
        return Err(Error::InsufficientData(format!("{} patterns, at least {MIN_PATTERNS} needed", patterns.len())));
    }
    ensure(!radii.is_empty() && radii.windows(2).all(|w| w[0] < w[1]), || "radii must be strictly increasing".into())?;
    ensure(radii[0] > 0.0, || "radii must be positive".into())?;
    let domain = patterns[0].domain().clone();
    ensure(patterns.iter().all(|p| *p.domain() == domain), || "patterns must share one window".into())?;
    let total: usize = patterns.iter().map(|p| p.len()).sum();
    if total < 2 {
        return Err(Error::InsufficientData("fewer than two points in total".into()));
    }
    Ok(domain)
}

fn sphere_area(d: usize) -> f64 {
    d as f64 * ball_volume(d, 1.0)
}

/// `3/(4h) (1 - t^2/h^2)` on `|t| < h`.
pub fn epanechnikov(t: f64, h: f64) -> f64 {
    let u = t / h;
    if u.abs() < 1.0 {
        0.75 * (1.0 - u * u) / h
    } else {
        0.0
    }
}

/// Ratio of pooled sums and its bootstrap standard error over patterns.
fn pooled_ratio<R: Rng + ?Sized>(num: &[Vec<f64>], den: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let p = num.len();
    let m = num[0].len();
    let ratio = |idx: &mut dyn Iterator<Item = usize>| {
        let mut s = vec![0.0; m];
        let mut d = 0.0;
        for i in idx {
            s.iter_mut().zip(&num[i]).for_each(|(a, b)| *a += b);
            d += den[i];
        }
        s.iter().map(|v| if d > 0.0 { v / d } else { f64::NAN }).collect::<Vec<f64>>()
    };
    let est = ratio(&mut (0..p));
    let mut acc = vec![(0.0, 0.0, 0usize); m];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let draws: Vec<usize> = (0..p).map(|_| rng.random_range(0..p)).collect();
        let b = ratio(&mut draws.into_iter());
        for (a, v) in acc.iter_mut().zip(b) {
            if v.is_finite() {
                a.0 += v;
                a.1 += v * v;
                a.2 += 1;
            }
        }
    }
    let se = acc
        .iter()
        .map(|&(s, s2, k)| {
            if k < 2 {
                return f64::NAN;
            }
            let mean = s / k as f64;
            ((s2 / k as f64 - mean * mean).max(0.0) * k as f64 / (k - 1) as f64).sqrt()
        })
        .collect();
    (est, se)
}

/// Translation-corrected kernel estimate of the pair correlation function, pooled
/// over patterns with the intensity estimated by the mean count. The default
/// bandwidth is `0.15 / lambda^{1/d}`.
pub fn estimate_pcf<R: Rng + ?Sized>(patterns: &[PointPattern], radii: &[f64], bandwidth: Option<f64>, rng: &mut R) -> Result<Curve> {
    let domain = check_patterns(patterns, radii)?;
    let d = domain.dim();
    let vol = domain.volume();
    let mean_n = patterns.iter().map(|p| p.len() as f64).sum::<f64>() / patterns.len() as f64;
    let lambda = mean_n / vol;
    let h = bandwidth.unwrap_or(0.15 / lambda.powf(1.0 / d as f64));
    ensure(h > 0.0, || "bandwidth must be positive".into())?;
    let reach = radii[radii.len() - 1] + h;
    let area = sphere_area(d);
    let mut diff = vec![0.0; d];
    let num: Vec<Vec<f64>> = patterns
        .iter()
        .map(|p| {
            let pts = p.points();
            let mut acc = vec![0.0; radii.len()];
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    if i == j {
                        continue;
                    }
                    let s = sq_dist(&pts[i], &pts[j]).sqrt();
                    if s >= reach {
                        continue;
                    }
                    for k in 0..d {
                        diff[k] = pts[j][k] - pts[i][k];
                    }
                    let overlap = domain.translation_overlap(&diff);
                    if overlap <= 0.0 {
                        continue;
                    }
                    for (a, &r) in acc.iter_mut().zip(radii) {
                        let w = epanechnikov(r - s, h);
                        if w > 0.0 {
                            *a += w / (area * r.powi(d as i32 - 1) * overlap);
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let den = vec![lambda * lambda; patterns.len()];
    let (values, se) = pooled_ratio(&num, &den, rng);
    Ok(Curve { radii: radii.to_vec(), values, se })
}

/// Expected value of [`estimate_pcf`] when the true pair correlation is `g`:
/// `int k_h(r - s) g(s) (s/r)^{d-1} ds`, by Simpson's rule.
pub fn smoothed_pcf(g: &dyn Fn(f64) -> f64, r: f64, h: f64, dim: usize) -> f64 {
    let (lo, hi) = ((r - h).max(0.0), r + h);
    let m = 2000;
    let step = (hi - lo) / m as f64;
    let f = |s: f64| epanechnikov(r - s, h) * g(s) * (s / r).powi(dim as i32 - 1);
    let mut acc = f(lo) + f(hi);
    for i in 1..m {
        acc += f(lo + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * step / 3.0
}

/// Border-corrected Ripley K: only points at distance at least `r` from the boundary act as centres.
pub fn estimate_k<R: Rng + ?Sized>(patterns: &[PointPattern], radii: &[f64], rng: &mut R) -> Result<Curve> {
    let domain = check_patterns(patterns, radii)?;
    let vol = domain.volume();
    let lambda = patterns.iter().map(|p| p.len() as f64).sum::<f64>() / patterns.len() as f64 / vol;
    // numerator per radius; per-radius denominators differ, so pool pairs and centres separately
    let m = radii.len();
    let mut pairs: Vec<Vec<f64>> = Vec::with_capacity(patterns.len());
    let mut centres: Vec<Vec<f64>> = Vec::with_capacity(patterns.len());
    for p in patterns {
        let pts = p.points();
        let mut pr = vec![0.0; m];
        let mut ce = vec![0.0; m];
        for (i, x) in pts.iter().enumerate() {
            let b = domain.distance_to_boundary(x);
            let dists: Vec<f64> = pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| sq_dist(x, y).sqrt()).collect();
            for (k, &r) in radii.iter().enumerate() {
                if b >= r {
                    ce[k] += 1.0;
                    pr[k] += dists.iter().filter(|&&s| s <= r).count() as f64;
                }
            }
        }
        pairs.push(pr);
        centres.push(ce);
    }
    let mut values = Vec::with_capacity(m);
    let mut se = Vec::with_capacity(m);
    for k in 0..m {
        let num: Vec<Vec<f64>> = pairs.iter().map(|v| vec![v[k]]).collect();
        let den: Vec<f64> = centres.iter().map(|v| v[k] * lambda).collect();
        if den.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InsufficientData(format!("no interior centres at radius {}", radii[k])));
        }
        let (v, s) = pooled_ratio(&num, &den, rng);
        values.push(v[0]);
        se.push(s[0]);
    }
    Ok(Curve { radii: radii.to_vec(), values, se })
}

/// Poisson value of `K(r)`, the volume of the radius-`r` ball.
pub fn poisson_k(r: f64, dim: usize) -> f64 {
    ball_volume(dim, r)
}

/// Homogeneous Poisson pattern on `domain`.
pub fn poisson_pattern<R: Rng + ?Sized>(intensity: f64, domain: &Domain, rng: &mut R) -> Result<PointPattern> {
    ensure(intensity > 0.0 && intensity.is_finite(), || format!("intensity must be positive, got {intensity}"))?;
    let mean = intensity * domain.volume();
    let n = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng) as usize;
    let points = (0..n).map(|_| domain.sample_uniform(rng)).collect();
    PointPattern::new(points, domain.clone(), Provenance::new("poisson", "uniform").with_param("intensity", intensity))
}

/// Binomial pattern with exactly `n` uniform points.
pub fn binomial_pattern<R: Rng + ?Sized>(n: usize, domain: &Domain, rng: &mut R) -> Result<PointPattern> {
    let points = (0..n).map(|_| domain.sample_uniform(rng)).collect();
    PointPattern::new(points, domain.clone(), Provenance::new("binomial", "uniform"))
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn mean_count(patterns: &[PointPattern]) -> (f64, f64) {
    mean_se(&patterns.iter().map(|p| p.len() as f64).collect::<Vec<_>>())
}

/// Distance from every point to its nearest neighbour; empty when fewer than two points.
pub fn nn_distances(pattern: &PointPattern) -> Vec<f64> {
    let pts = pattern.points();
    if pts.len() < 2 {
        return Vec::new();
    }
    pts.iter()
        .enumerate()
        .map(|(i, x)| {
            pts.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, y)| sq_dist(x, y))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

/// Nearest-neighbour distance of one uniformly chosen point.
pub fn nn_distance_of_random_point<R: Rng + ?Sized>(pattern: &PointPattern, rng: &mut R) -> Option<f64> {
    let pts = pattern.points();
    if pts.len() < 2 {
        return None;
    }
    let i = rng.random_range(0..pts.len());
    Some(
        pts.iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, y)| sq_dist(&pts[i], y))
            .fold(f64::INFINITY, f64::min)
            .sqrt(),
    )
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=8).map(|k| ((2 * k - 1) as f64).powi(2) * y).map(f64::exp).sum();
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with Stephens' small-sample correction.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    ensure(!a.is_empty() && !b.is_empty(), || "both samples must be non-empty".into())?;
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    Ok(TestResult { statistic: d, p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d) })
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<TestResult> {
    ensure(!a.is_empty(), || "sample must be non-empty".into())?;
    let mut x = a.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    let en = n.sqrt();
    Ok(TestResult { statistic: d, p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d) })
}

/// Pearson chi-square goodness of fit; `estimated` parameters are removed from the degrees of freedom.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], estimated: usize) -> Result<TestResult> {
    ensure(observed.len() == expected.len() && observed.len() > estimated + 1, || "need matching bins".into())?;
    ensure(expected.iter().all(|&e| e > 0.0), || "expected counts must be positive".into())?;
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (observed.len() - 1 - estimated) as f64;
    Ok(TestResult { statistic: stat, p_value: crate::special::chi2_sf(stat, dof) })
}

/// Counts in `radial x angular` equal-area cells of the disc `domain` (d = 2), summed over patterns.
pub fn disc_bin_counts(patterns: &[PointPattern], radial: usize, angular: usize) -> Result<Vec<f64>> {
    let domain = patterns.first().map(|p| p.domain().clone()).ok_or_else(|| Error::InsufficientData("no patterns".into()))?;
    let (center, radius) = match &domain {
        Domain::Ball { center, radius } if center.len() == 2 => (center.clone(), *radius),
        _ => return Err(Error::InvalidParameter("disc bins need a 2-d ball window".into())),
    };
    let mut counts = vec![0.0; radial * angular];
    for p in patterns {
        for x in p.points() {
            let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
            let frac = ((dx * dx + dy * dy) / (radius * radius)).min(1.0 - 1e-15);
            let ring = (frac * radial as f64) as usize;
            let theta = dy.atan2(dx).rem_euclid(2.0 * PI);
            let sector = ((theta / (2.0 * PI) * angular as f64) as usize).min(angular - 1);
            counts[ring * angular + sector] += 1.0;
        }
    }
    Ok(counts)
}

/// Counts on a regular `bins^d` grid of a box window, summed over patterns.
pub fn box_bin_counts(patterns: &[PointPattern], bins: usize) -> Result<Vec<f64>> {
    let domain = patterns.first().map(|p| p.domain().clone()).ok_or_else(|| Error::InsufficientData("no patterns".into()))?;
    let (lo, hi) = match &domain {
        Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
        _ => return Err(Error::InvalidParameter("grid bins need a box window".into())),
    };
    let d = lo.len();
    let mut counts = vec![0.0; bins.pow(d as u32)];
    for p in patterns {
        for x in p.points() {
            let mut idx = 0;
            for k in 0..d {
                let t = ((x[k] - lo[k]) / (hi[k] - lo[k]) * bins as f64) as usize;
                idx = idx * bins + t.min(bins - 1);
            }
            counts[idx] += 1.0;
        }
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub algorithm: String,
    pub median: f64,
    pub iqr: f64,
    pub replicates: usize,
}

impl Timing {
    pub fn from_samples(algorithm: &str, samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Timing { algorithm: algorithm.into(), median: quantile(&s, 0.5), iqr: quantile(&s, 0.75) - quantile(&s, 0.25), replicates: s.len() }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryReport {
    pub replicates: usize,
    pub mean_count: f64,
    pub se_count: f64,
    pub pcf: Option<Curve>,
    pub ripley_k: Option<Curve>,
    pub bound_rate: Option<f64>,
    pub timings: Vec<Timing>,
}

/// Counts, pooled counters and, with enough patterns, pcf and K curves.
pub fn summarize<R: Rng + ?Sized>(patterns: &[PointPattern], radii: &[f64], rng: &mut R) -> SummaryReport {
    let (mean, se) = mean_count(patterns);
    let mut counters = crate::pattern::Counters::default();
    patterns.iter().for_each(|p| counters.absorb(&p.provenance.counters));
    SummaryReport {
        replicates: patterns.len(),
        mean_count: mean,
        se_count: se,
        pcf: estimate_pcf(patterns, radii, None, rng).ok(),
        ripley_k: estimate_k(patterns, radii, rng).ok(),
        bound_rate: counters.bound_rate(),
        timings: Vec::new(),
    }
}

/// Models of the refinement benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Table1Model {
    MostRepulsive,
    GaussAlphaMax,
    GaussHalfAlphaMax,
}

impl Table1Model {
    pub const ALL: [Table1Model; 3] = [Table1Model::MostRepulsive, Table1Model::GaussAlphaMax, Table1Model::GaussHalfAlphaMax];

    pub fn label(&self) -> &'static str {
        match self {
            Table1Model::MostRepulsive => "most-repulsive",
            Table1Model::GaussAlphaMax => "gauss-alpha-max",
            Table1Model::GaussHalfAlphaMax => "gauss-alpha-max/2",
        }
    }

    /// Frequencies on the unit square for intensity `rho`.
    pub fn frequencies<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> Result<Vec<Vec<i64>>> {
        let alpha_max = 1.0 / (rho * PI).sqrt();
        match self {
            Table1Model::MostRepulsive => {
                let ell = ((rho.sqrt() - 1.0) / 2.0).round() as i64;
                ensure(ell >= 0 && ((2 * ell + 1) as f64).powi(2) == rho, || format!("most repulsive model needs rho = (2l+1)^2, got {rho}"))?;
                Ok(FourierBasis::cube_frequencies(ell, 2))
            }
            Table1Model::GaussAlphaMax => gaussian_fourier_frequencies(rho, alpha_max, 2, rng),
            Table1Model::GaussHalfAlphaMax => gaussian_fourier_frequencies(rho, alpha_max / 2.0, 2, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub model: String,
    pub rho: f64,
    pub bound_rate: f64,
    /// Median time with the refinement over median time without it.
    pub time_ratio: f64,
    pub plain: Timing,
    pub refined: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Row {
    pub rho: f64,
    pub beta_fraction: f64,
    pub beta: f64,
    pub eigen: Timing,
    pub spectral: Timing,
    pub mean_count_eigen: f64,
    pub mean_count_spectral: f64,
    pub fastest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Scenario {
    Table1 { intensities: Vec<f64>, models: Vec<Table1Model> },
    Table2 { intensities: Vec<f64>, beta_fractions: Vec<f64> },
}

impl Scenario {
    pub fn table1() -> Self {
        Scenario::Table1 { intensities: vec![25.0, 81.0, 289.0, 625.0, 1089.0], models: Table1Model::ALL.to_vec() }
    }

    pub fn table2() -> Self {
        Scenario::Table2 { intensities: vec![100.0, 200.0, 400.0, 800.0], beta_fractions: vec![1.0 / 3.0, 0.5, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub scenario: Scenario,
    pub replicates: usize,
    pub seed: u64,
    pub table1: Vec<Table1Row>,
    pub table2: Vec<Table2Row>,
}

/// Paired timing of plain and refined rejection on identical random streams.
pub fn bench_table1_cell(model: Table1Model, rho: f64, reps: usize, seed: u64, stream_offset: u64) -> Result<Table1Row> {
    let cfg = SamplerConfig::default();
    let mut plain = Vec::with_capacity(reps);
    let mut refined = Vec::with_capacity(reps);
    let (mut bound, mut rejections) = (0u64, 0u64);
    for r in 0..reps {
        let stream = stream_offset + r as u64;
        let mut rng = stream_rng(seed, stream);
        let freqs = model.frequencies(rho, &mut rng)?;
        let basis = FourierBasis::new(freqs)?;
        for (method, out) in [(FourierMethod::Plain, &mut plain), (FourierMethod::Refined, &mut refined)] {
            let mut local = rng.clone();
            let start = Instant::now();
            let pat = sample_fourier_projection(&basis, method, &cfg, &mut local)?;
            out.push(start.elapsed().as_secs_f64());
            if method == FourierMethod::Refined {
                bound += pat.provenance.counters.bound_rejections;
                rejections += pat.provenance.counters.rejections;
            }
        }
    }
    let plain = Timing::from_samples(FourierMethod::Plain.id(), &plain);
    let refined = Timing::from_samples(FourierMethod::Refined.id(), &refined);
    Ok(Table1Row {
        model: model.label().into(),
        rho,
        bound_rate: if rejections > 0 { bound as f64 / rejections as f64 } else { 0.0 },
        time_ratio: refined.median / plain.median,
        plain,
        refined,
    })
}

/// Eigenvalue and spectral Ginibre samplers on the unit-area disc.
pub fn bench_table2_cell(rho: f64, beta_fraction: f64, reps: usize, seed: u64, stream_offset: u64) -> Result<Table2Row> {
    let beta = beta_fraction * GinibreParams::beta_max(rho);
    let params = GinibreParams::new(rho, beta, GinibreParams::unit_area_radius())?;
    let spectrum = ginibre_spectral_basis(&params)?;
    let cfg = SamplerConfig::default();
    let (mut te, mut ts, mut ne, mut ns) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in 0..reps {
        let mut rng = stream_rng(seed, stream_offset + r as u64);
        let start = Instant::now();
        ne.push(sample_ginibre_eigen(&params, &mut rng)?.len() as f64);
        te.push(start.elapsed().as_secs_f64());
        let start = Instant::now();
        ns.push(sample_ginibre_spectral(&spectrum, &cfg, &mut rng)?.len() as f64);
        ts.push(start.elapsed().as_secs_f64());
    }
    let eigen = Timing::from_samples("ginibre-eigen", &te);
    let spectral = Timing::from_samples("ginibre-spectral", &ts);
    let fastest = if eigen.median < spectral.median { "eigen" } else { "spectral" }.to_string();
    Ok(Table2Row {
        rho,
        beta_fraction,
        beta,
        mean_count_eigen: mean_se(&ne).0,
        mean_count_spectral: mean_se(&ns).0,
        eigen,
        spectral,
        fastest,
    })
}

/// Runs every cell of `scenario` with `reps` replicates; cell `c` uses streams `c * reps ..`.
pub fn run_benchmark(scenario: &Scenario, reps: usize, seed: u64) -> Result<BenchmarkReport> {
    ensure(reps > 0, || "replicates must be positive".into())?;
    let mut report = BenchmarkReport { scenario: scenario.clone(), replicates: reps, seed, table1: Vec::new(), table2: Vec::new() };
    let mut cell = 0u64;
    match scenario {
        Scenario::Table1 { intensities, models } => {
            for &model in models {
                for &rho in intensities {
                    report.table1.push(bench_table1_cell(model, rho, reps, seed, cell * reps as u64)?);
                    cell += 1;
                }
            }
        }
        Scenario::Table2 { intensities, beta_fractions } => {
            for &frac in beta_fractions {
                for &rho in intensities {
                    report.table2.push(bench_table2_cell(rho, frac, reps, seed, cell * reps as u64)?);
                    cell += 1;
                }
            }
        }
    }
    Ok(report)
}

//! Quick validation suites run by `dppsim validate`.

use std::f64::consts::PI;

use dppsim::bessel::{bessel_spectral_basis, BesselTruncation};
use dppsim::conditional::{integrate_box, palm_kernel};
use dppsim::fourier::{bound_value, sample_fourier_projection, BoundPolynomial, FourierBasis, FourierMethod, PiecewiseProposal};
use dppsim::gaussian::{hom_gaussian_plan, HermiteBasisParams};
use dppsim::ginibre::{ginibre_spectral_basis, sample_ginibre_eigen, sample_ginibre_spectral, GinibreParams};
use dppsim::projection::{SequentialState, SpectralState};
use dppsim::rng::stream_rng;
use dppsim::stats::{ks_two_sample, mean_se, nn_distance_of_random_point};
use dppsim::{Domain, Kernel, KernelSpec, SamplerConfig};
use rand::Rng;
use serde::Serialize;

use crate::args::SuiteName;
use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: &'static str, passed: bool, detail: String) -> Self {
        Check { suite, name, passed, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}/{}: {}", if self.passed { "PASS" } else { "FAIL" }, self.suite, self.name, self.detail)
    }
}

type Suite = fn(u64) -> Result<Vec<Check>, CliError>;

pub fn suites(name: SuiteName) -> Vec<(&'static str, Suite)> {
    let all: [(&'static str, Suite); 5] = [
        ("fourier", fourier_suite),
        ("ginibre", ginibre_suite),
        ("gaussian", gaussian_suite),
        ("bessel", bessel_suite),
        ("conditional", conditional_suite),
    ];
    let wanted = match name {
        SuiteName::Fourier => "fourier",
        SuiteName::Ginibre => "ginibre",
        SuiteName::Gaussian => "gaussian",
        SuiteName::Bessel => "bessel",
        SuiteName::Conditional => "conditional",
        SuiteName::All => return all.to_vec(),
    };
    all.into_iter().filter(|(n, _)| *n == wanted).collect()
}

pub fn run_suites(name: SuiteName, seed: u64) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for (_, suite) in suites(name) {
        out.extend(suite(seed)?);
    }
    Ok(out)
}

fn fourier_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    let cfg = SamplerConfig::default();
    let basis = FourierBasis::most_repulsive(3, 2);
    let mut rng = stream_rng(seed, 100);
    let mut wrong = 0;
    for _ in 0..100 {
        if sample_fourier_projection(&basis, FourierMethod::Refined, &cfg, &mut rng)?.len() != 49 {
            wrong += 1;
        }
    }
    let mut checks = vec![Check::new("fourier", "cardinality", wrong == 0, format!("{wrong} of 100 runs without 49 points"))];

    let b = FourierBasis::most_repulsive(2, 2);
    let proj = b.projection();
    let poly = BoundPolynomial::from_basis(&b);
    let mut st = SpectralState::new(&proj);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        for _ in 0..100 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let (w, _) = st.conditional(&x)?;
            worst = worst.max(w / b.n() as f64 - bound_value(&poly, st.accepted(), &x));
        }
        st.push(vec![rng.random(), rng.random()])?;
    }
    checks.push(Check::new("fourier", "bound-validity", worst <= 1e-10, format!("max excess {worst:.3e} over 2000 probes")));

    let freqs: Vec<i64> = (-10..=10).collect();
    let cond: Vec<f64> = (0..20).map(|_| rng.random()).collect();
    let p = PiecewiseProposal::build(&cond, &freqs, &mut rng);
    let m = 1_000_000;
    let h = 1.0 / m as f64;
    let quad = h * ((1..m).map(|k| p.density(k as f64 * h)).sum::<f64>() + 0.5 * (p.density(0.0) + p.density(1.0)));
    let rel = ((quad - p.total_mass()) / p.total_mass()).abs();
    checks.push(Check::new("fourier", "proposal-mass", rel <= 1e-8, format!("relative error {rel:.3e}")));
    Ok(checks)
}

fn ginibre_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    let rho = 50.0;
    let params = GinibreParams::new(rho, GinibreParams::beta_max(rho), GinibreParams::unit_area_radius())?;
    let spec = ginibre_spectral_basis(&params)?;
    let expected = rho * PI * params.radius * params.radius;
    let trace_err = (spec.basis.trace() - expected).abs();
    let mut checks = vec![Check::new("ginibre", "trace", trace_err <= 1e-6, format!("|trace - {expected}| = {trace_err:.3e}"))];
    let cfg = SamplerConfig::default();
    let reps = 200;
    let (mut ne, mut ns, mut de, mut ds) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in 0..reps {
        let mut rng = stream_rng(seed, 200 + r);
        let a = sample_ginibre_eigen(&params, &mut rng)?;
        let b = sample_ginibre_spectral(&spec, &cfg, &mut rng)?;
        ne.push(a.len() as f64);
        ns.push(b.len() as f64);
        de.extend(nn_distance_of_random_point(&a, &mut rng));
        ds.extend(nn_distance_of_random_point(&b, &mut rng));
    }
    for (name, counts) in [("mean-count-eigen", &ne), ("mean-count-spectral", &ns)] {
        let (m, se) = mean_se(counts);
        checks.push(Check::new("ginibre", name, (m - expected).abs() <= 4.0 * se, format!("{m:.3} +- {se:.3} vs {expected}")));
    }
    let ks = ks_two_sample(&de, &ds)?;
    checks.push(Check::new("ginibre", "nn-ks", ks.p_value > 0.001, format!("D = {:.4}, p = {:.4}", ks.statistic, ks.p_value)));
    Ok(checks)
}

fn gaussian_suite(_seed: u64) -> Result<Vec<Check>, CliError> {
    let p = HermiteBasisParams::new(1.0, 1.0, 1.0, 1)?;
    let worst = (0..10).map(|j| (p.eigenvalue(j) - 0.5f64.powi(j as i32 + 1)).abs()).fold(0.0, f64::max);
    let mut checks = vec![Check::new("gaussian", "hand-eigenvalues", worst <= 1e-14, format!("max error {worst:.3e}"))];
    let rho = 50.0;
    let alpha = 0.5 / (rho * PI).sqrt();
    let plan = hom_gaussian_plan(rho, alpha, 2)?;
    let inhom = KernelSpec::GaussianInhom { rho: plan.rho_tilde, alpha, sigma: plan.sigma0, dim: 2 };
    let hom = KernelSpec::GaussianHom { rho, alpha, dim: 2 };
    let mut rng = stream_rng(0, 300);
    let ball = Domain::centered_ball(2, 1.0)?;
    let mut resid = 0.0f64;
    for _ in 0..200 {
        let x = ball.sample_uniform(&mut rng);
        let y = ball.sample_uniform(&mut rng);
        let thinned = (plan.retention(&x) * plan.retention(&y)).sqrt() * inhom.eval(&x, &y).re;
        resid = resid.max((thinned - hom.eval(&x, &y).re).abs() / rho);
    }
    checks.push(Check::new("gaussian", "thinned-kernel", resid <= 1e-12, format!("max relative residual {resid:.3e}")));
    Ok(checks)
}

fn bessel_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    let rho = 20.0;
    let alpha = 0.5 * dppsim::kernel::alpha_max(dppsim::kernel::StationaryKind::Bessel, rho, 2);
    let spec = bessel_spectral_basis(rho, alpha, &BesselTruncation::default())?;
    let tr = spec.basis.trace();
    let target = rho * PI;
    let mut checks = vec![Check::new("bessel", "trace", (tr - target).abs() <= 0.01 * target, format!("{tr:.4} vs {target:.4}"))];
    let top = spec.basis.eigenvalues().iter().cloned().fold(0.0, f64::max);
    checks.push(Check::new("bessel", "eigenvalues", top <= 1.0 + 1e-9, format!("largest {top:.12}")));
    let exact = KernelSpec::Bessel { rho, alpha, dim: 2 };
    let disc = Domain::centered_ball(2, 1.0)?;
    let mut rng = stream_rng(seed, 400);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = disc.sample_uniform(&mut rng);
        let y = disc.sample_uniform(&mut rng);
        worst = worst.max((spec.basis.eval(&x, &y).re - exact.eval(&x, &y).re).abs() / rho);
    }
    checks.push(Check::new("bessel", "reconstruction", worst <= 1e-3, format!("max error {worst:.3e} relative to rho")));
    Ok(checks)
}

fn conditional_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    let k = KernelSpec::FourierProjection { frequencies: FourierBasis::nearest_frequencies(12, 2) };
    let mut rng = stream_rng(seed, 500);
    let pts: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.random(), rng.random()]).collect();
    let palm = palm_kernel(&k, pts)?;
    let unit = Domain::unit_box(2);
    let tr = integrate_box(&|x| palm.diag(x), &unit);
    let mut checks = vec![Check::new("conditional", "palm-trace", (tr - 8.0).abs() <= 1e-3, format!("trace {tr:.6} vs 8"))];
    let lowest = (0..2000).map(|_| palm.diag(&[rng.random(), rng.random()])).fold(f64::INFINITY, f64::min);
    checks.push(Check::new("conditional", "palm-diagonal", lowest >= -1e-9, format!("min {lowest:.3e}")));
    Ok(checks)
}

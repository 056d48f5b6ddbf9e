//! Resolution of model flags into ready-to-run samplers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use dppsim::bessel::{bessel_spectral_basis, sample_bessel_d2, BesselSpectrum, BesselTruncation};
use dppsim::fourier::{gaussian_fourier_frequencies, sample_fourier_projection, FourierBasis, FourierMethod};
use dppsim::gaussian::{sample_hom_gaussian_ball, sample_inhom_gaussian, HermiteBasisParams, DEFAULT_EPSILON};
use dppsim::ginibre::{ginibre_spectral_basis, sample_ginibre_eigen, sample_ginibre_spectral, GinibreParams, GinibreSpectrum};
use dppsim::kernel::{alpha_max, StationaryKind};
use dppsim::rng::stream_rng;
use dppsim::stats::poisson_pattern;
use dppsim::{check_existence, Domain, KernelSpec, PointPattern, SamplerConfig};
use serde::Serialize;

use crate::args::{ModelArgs, ModelName, Radius, Scale};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GinibreAlgo {
    Eigen,
    Spectral,
}

pub enum Prepared {
    Fourier { basis: FourierBasis, method: FourierMethod },
    FourierGauss { rho: f64, alpha: f64, dim: usize, method: FourierMethod },
    Ginibre { params: GinibreParams, algo: GinibreAlgo, spectrum: Option<GinibreSpectrum> },
    GaussInhom { params: HermiteBasisParams, epsilon: f64 },
    GaussBall { rho: f64, alpha: f64, dim: usize, epsilon: f64 },
    Bessel { spectrum: Box<BesselSpectrum> },
    Poisson { rho: f64, domain: Domain },
}

/// A model with resolved parameters, shared by all replicates.
pub struct ModelPlan {
    pub name: ModelName,
    pub algorithm: String,
    pub params: BTreeMap<String, f64>,
    pub prepared: Prepared,
}

fn need<T>(v: Option<T>, flag: &str, model: ModelName) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("model {} needs --{flag}", model.id())))
}

fn nonexistent(spec: &KernelSpec) -> CliError {
    let report = check_existence(spec);
    CliError::NonExistent {
        message: format!("constraint value {} exceeds bound {}", report.constraint_value, report.constraint_bound),
        report: Some(report),
    }
}

fn check(spec: KernelSpec) -> Result<(), CliError> {
    spec.validate()?;
    if check_existence(&spec).exists {
        Ok(())
    } else {
        Err(nonexistent(&spec))
    }
}

fn fourier_method(algo: Option<&str>) -> Result<FourierMethod, CliError> {
    match algo.unwrap_or("refined") {
        "plain" => Ok(FourierMethod::Plain),
        "refined" => Ok(FourierMethod::Refined),
        "inversion" => Ok(FourierMethod::Inversion),
        other => Err(CliError::Usage(format!("unknown algorithm {other:?} for Fourier models (plain, refined, inversion)"))),
    }
}

fn only_algo(algo: Option<&str>, allowed: &str) -> Result<String, CliError> {
    match algo {
        None => Ok(allowed.into()),
        Some(a) if a == allowed => Ok(allowed.into()),
        Some(a) => Err(CliError::Usage(format!("unknown algorithm {a:?}, expected {allowed:?}"))),
    }
}

fn resolve_alpha(a: Scale, kind: StationaryKind, rho: f64, dim: usize) -> f64 {
    match a {
        Scale::Max => alpha_max(kind, rho, dim),
        Scale::Value(v) => v,
    }
}

impl ModelPlan {
    pub fn from_args(m: &ModelArgs) -> Result<Self, CliError> {
        let name = m.model.ok_or_else(|| CliError::Usage("--model is required".into()))?;
        let algo = m.algo.as_deref();
        let mut params = BTreeMap::new();
        let (algorithm, prepared) = match name {
            ModelName::FourierProj => {
                let dim = m.dim.unwrap_or(2);
                let freqs = match (m.ell, m.n) {
                    (Some(ell), None) => {
                        if ell < 0 {
                            return Err(CliError::Usage("--ell must be nonnegative".into()));
                        }
                        FourierBasis::cube_frequencies(ell, dim)
                    }
                    (None, Some(n)) if n > 0 => FourierBasis::nearest_frequencies(n, dim),
                    (None, None) => return Err(CliError::Usage("fourier-proj needs --ell or --n".into())),
                    _ => return Err(CliError::Usage("give exactly one of --ell and a positive --n".into())),
                };
                let basis = FourierBasis::new(freqs)?;
                let method = fourier_method(algo)?;
                params.insert("dim".into(), dim as f64);
                params.insert("n".into(), basis.n() as f64);
                if let Some(ell) = m.ell {
                    params.insert("ell".into(), ell as f64);
                }
                (method.id().to_string(), Prepared::Fourier { basis, method })
            }
            ModelName::FourierGauss => {
                let dim = m.dim.unwrap_or(2);
                let rho = need(m.rho, "rho", name)?;
                let alpha = resolve_alpha(need(m.alpha, "alpha", name)?, StationaryKind::Gaussian, rho, dim);
                check(KernelSpec::GaussianHom { rho, alpha, dim })?;
                let method = fourier_method(algo)?;
                if method == FourierMethod::Inversion && dim != 1 {
                    return Err(CliError::Usage("inversion needs --dim 1".into()));
                }
                params.extend([("dim".into(), dim as f64), ("rho".into(), rho), ("alpha".into(), alpha)]);
                (method.id().to_string(), Prepared::FourierGauss { rho, alpha, dim, method })
            }
            ModelName::Ginibre => {
                let rho = need(m.rho, "rho", name)?;
                let beta = match need(m.beta, "beta", name)? {
                    Scale::Max => GinibreParams::beta_max(rho),
                    Scale::Value(v) => v,
                };
                let radius = match m.radius.unwrap_or(Radius::Auto) {
                    Radius::Auto => GinibreParams::unit_area_radius(),
                    Radius::Value(r) => r,
                };
                check(KernelSpec::Ginibre { rho, beta })?;
                let params_g = match m.epsilon {
                    Some(e) => GinibreParams::with_epsilon(rho, beta, radius, e)?,
                    None => GinibreParams::new(rho, beta, radius)?,
                };
                let algo = match algo.unwrap_or("spectral") {
                    "eigen" => GinibreAlgo::Eigen,
                    "spectral" => GinibreAlgo::Spectral,
                    other => return Err(CliError::Usage(format!("unknown algorithm {other:?} for ginibre (eigen, spectral)"))),
                };
                let spectrum = match algo {
                    GinibreAlgo::Spectral => Some(ginibre_spectral_basis(&params_g)?),
                    GinibreAlgo::Eigen => None,
                };
                params.extend([("rho".into(), rho), ("beta".into(), beta), ("radius".into(), radius), ("epsilon".into(), params_g.epsilon)]);
                let id = match algo {
                    GinibreAlgo::Eigen => "ginibre-eigen",
                    GinibreAlgo::Spectral => "ginibre-spectral",
                };
                (id.to_string(), Prepared::Ginibre { params: params_g, algo, spectrum })
            }
            ModelName::GaussInhom => {
                let dim = m.dim.unwrap_or(2);
                let rho = need(m.rho, "rho", name)?;
                let sigma = need(m.sigma, "sigma", name)?;
                let alpha = match need(m.alpha, "alpha", name)? {
                    Scale::Max => return Err(CliError::Usage("alpha max is defined for stationary models only".into())),
                    Scale::Value(v) => v,
                };
                let hp = HermiteBasisParams::new(rho, alpha, sigma, dim)?;
                if !hp.exists() {
                    return Err(nonexistent(&KernelSpec::GaussianInhom { rho, alpha, sigma, dim }));
                }
                let epsilon = m.epsilon.unwrap_or(DEFAULT_EPSILON);
                params.extend([
                    ("dim".into(), dim as f64),
                    ("rho".into(), rho),
                    ("alpha".into(), alpha),
                    ("sigma".into(), sigma),
                    ("epsilon".into(), epsilon),
                ]);
                (only_algo(algo, "hermite-spectral")?, Prepared::GaussInhom { params: hp, epsilon })
            }
            ModelName::GaussBall => {
                let dim = m.dim.unwrap_or(2);
                let rho = need(m.rho, "rho", name)?;
                let alpha = resolve_alpha(need(m.alpha, "alpha", name)?, StationaryKind::Gaussian, rho, dim);
                check(KernelSpec::GaussianHom { rho, alpha, dim })?;
                let epsilon = m.epsilon.unwrap_or(DEFAULT_EPSILON);
                params.extend([("dim".into(), dim as f64), ("rho".into(), rho), ("alpha".into(), alpha), ("epsilon".into(), epsilon)]);
                (only_algo(algo, "hermite-thinning")?, Prepared::GaussBall { rho, alpha, dim, epsilon })
            }
            ModelName::Bessel => {
                if m.dim.is_some_and(|d| d != 2) {
                    return Err(CliError::Usage("the Bessel sampler is available for --dim 2 only".into()));
                }
                let rho = need(m.rho, "rho", name)?;
                let alpha = resolve_alpha(need(m.alpha, "alpha", name)?, StationaryKind::Bessel, rho, 2);
                check(KernelSpec::Bessel { rho, alpha, dim: 2 })?;
                let spectrum = bessel_spectral_basis(rho, alpha, &BesselTruncation::default())?;
                params.extend([("dim".into(), 2.0), ("rho".into(), rho), ("alpha".into(), alpha)]);
                (only_algo(algo, "prolate-spectral")?, Prepared::Bessel { spectrum: Box::new(spectrum) })
            }
            ModelName::Poisson => {
                let dim = m.dim.unwrap_or(2);
                let rho = need(m.rho, "rho", name)?;
                params.extend([("dim".into(), dim as f64), ("rho".into(), rho)]);
                (only_algo(algo, "uniform")?, Prepared::Poisson { rho, domain: Domain::unit_box(dim) })
            }
        };
        Ok(ModelPlan { name, algorithm, params, prepared })
    }

    /// Window of the output patterns.
    pub fn window(&self) -> Result<Domain, CliError> {
        Ok(match &self.prepared {
            Prepared::Fourier { basis, .. } => basis.domain().clone(),
            Prepared::FourierGauss { dim, .. } => Domain::unit_box(*dim),
            Prepared::Ginibre { params, .. } => params.domain(),
            Prepared::GaussInhom { params, epsilon } => Domain::centered_ball(params.dim, params.window_radius(*epsilon))?,
            Prepared::GaussBall { dim, .. } => Domain::centered_ball(*dim, 1.0)?,
            Prepared::Bessel { .. } => Domain::centered_ball(2, 1.0)?,
            Prepared::Poisson { domain, .. } => domain.clone(),
        })
    }

    /// Replicate `index` on its own random stream.
    pub fn sample(&self, seed: u64, index: u64) -> Result<PointPattern, CliError> {
        let mut rng = stream_rng(seed, index);
        let cfg = SamplerConfig::default();
        let mut pat = match &self.prepared {
            Prepared::Fourier { basis, method } => sample_fourier_projection(basis, *method, &cfg, &mut rng)?,
            Prepared::FourierGauss { rho, alpha, dim, method } => {
                let freqs = gaussian_fourier_frequencies(*rho, *alpha, *dim, &mut rng)?;
                if freqs.is_empty() {
                    PointPattern::new(Vec::new(), Domain::unit_box(*dim), dppsim::Provenance::new("fourier-gauss", method.id()))?
                } else {
                    sample_fourier_projection(&FourierBasis::new(freqs)?, *method, &cfg, &mut rng)?
                }
            }
            Prepared::Ginibre { params, algo, spectrum } => match algo {
                GinibreAlgo::Eigen => sample_ginibre_eigen(params, &mut rng)?,
                GinibreAlgo::Spectral => sample_ginibre_spectral(spectrum.as_ref().expect("spectrum built"), &cfg, &mut rng)?,
            },
            Prepared::GaussInhom { params, epsilon } => sample_inhom_gaussian(params, *epsilon, &cfg, &mut rng)?,
            Prepared::GaussBall { rho, alpha, dim, epsilon } => sample_hom_gaussian_ball(*rho, *alpha, *dim, *epsilon, &cfg, &mut rng)?,
            Prepared::Bessel { spectrum } => sample_bessel_d2(spectrum, &cfg, &mut rng)?,
            Prepared::Poisson { rho, domain } => poisson_pattern(*rho, domain, &mut rng)?,
        };
        pat.provenance.seed = Some(seed);
        Ok(pat)
    }

    /// Expected number of points per replicate, when known in closed form.
    pub fn expected_count(&self) -> Option<f64> {
        match &self.prepared {
            Prepared::Fourier { basis, .. } => Some(basis.n() as f64),
            Prepared::FourierGauss { rho, .. } => Some(*rho),
            Prepared::Ginibre { params, .. } => Some(params.rho * PI * params.radius * params.radius),
            Prepared::GaussBall { rho, dim, .. } => Some(rho * dppsim::domain::ball_volume(*dim, 1.0)),
            Prepared::Bessel { spectrum } => Some(spectrum.rho * PI),
            Prepared::Poisson { rho, domain } => Some(rho * domain.volume()),
            Prepared::GaussInhom { params, .. } => Some(params.rho),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(model: ModelName) -> ModelArgs {
        ModelArgs { model: Some(model), dim: None, ell: None, n: None, rho: None, alpha: None, beta: None, sigma: None, radius: None, epsilon: None, algo: None }
    }

    #[test]
    fn fourier_cardinality() {
        let mut a = args(ModelName::FourierProj);
        a.ell = Some(2);
        let plan = ModelPlan::from_args(&a).unwrap();
        assert_eq!(plan.sample(1, 0).unwrap().len(), 25);
        assert_eq!(plan.algorithm, "fourier-refined");
    }

    #[test]
    fn beta_max_keyword() {
        let mut a = args(ModelName::Ginibre);
        a.rho = Some(50.0);
        a.beta = Some(Scale::Max);
        a.algo = Some("eigen".into());
        let plan = ModelPlan::from_args(&a).unwrap();
        assert!((plan.params["beta"] - 1.0 / (50.0 * PI)).abs() < 1e-15);
        assert!((plan.params["radius"] - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn alpha_max_keyword() {
        let mut a = args(ModelName::FourierGauss);
        a.rho = Some(100.0);
        a.alpha = Some(Scale::Max);
        let plan = ModelPlan::from_args(&a).unwrap();
        assert!((plan.params["alpha"] - 1.0 / (100.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nonexistent_model_is_exit_two() {
        let mut a = args(ModelName::Ginibre);
        a.rho = Some(100.0);
        a.beta = Some(Scale::Value(1.0));
        let e = ModelPlan::from_args(&a).err().unwrap();
        assert_eq!(e.exit_code(), 2);
        assert!(matches!(e, CliError::NonExistent { report: Some(_), .. }));
    }

    #[test]
    fn unknown_algorithm_is_rejected() {
        let mut a = args(ModelName::FourierProj);
        a.ell = Some(1);
        a.algo = Some("magic".into());
        assert_eq!(ModelPlan::from_args(&a).err().unwrap().exit_code(), 2);
    }
}

//! Subcommand implementations.

use std::collections::BTreeMap;
use std::time::Instant;

use dppsim::conditional::{inpaint, simulate_given_subset, InpaintRegion};
use dppsim::fourier::FourierBasis;
use dppsim::rng::stream_rng;
use dppsim::stats::{run_benchmark, BenchmarkReport, Scenario};
use dppsim::{Counters, Domain, KernelSpec, PointPattern, ProjectionSource, RejectionStrategy, SamplerConfig};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{parse_list, BenchArgs, ConditionArgs, ConditionMode, OutputArgs, ScenarioName, SimulateArgs};
use crate::error::CliError;
use crate::io::{ensure_dir, read_csv, svg_scatter, write_file, write_json, write_pattern_csv};
use crate::models::ModelPlan;

/// Worker pool sized by `DPPSIM_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DPPSIM_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("DPPSIM_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Usage("DPPSIM_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve_seed(out: &OutputArgs) -> u64 {
    out.seed.unwrap_or_else(|| {
        let s = rand::rng().random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

#[derive(Debug, Serialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub file: String,
    pub count: usize,
    pub deleted: usize,
    pub counters: Counters,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SimulateManifest {
    pub command: &'static str,
    pub model: String,
    pub algorithm: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub window: Domain,
    pub replicates: usize,
    pub counts: Vec<usize>,
    pub expected_count: Option<f64>,
    pub counters: Counters,
    pub bound_rate: Option<f64>,
    pub wall_time: f64,
    pub files: Vec<ReplicateRecord>,
}

fn replicate_name(i: usize) -> String {
    format!("pattern_{i:04}")
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateManifest, CliError> {
    let plan = ModelPlan::from_args(&args.model)?;
    if args.output.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    let seed = resolve_seed(&args.output);
    let window = plan.window()?;
    let pool = thread_pool()?;
    let start = Instant::now();
    let results: Vec<Result<(PointPattern, f64), CliError>> = pool.install(|| {
        (0..args.output.reps)
            .into_par_iter()
            .map(|i| {
                let t = Instant::now();
                plan.sample(seed, i as u64).map(|p| (p, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let out = &args.output.out;
    ensure_dir(out)?;
    let mut files = Vec::with_capacity(results.len());
    let mut counters = Counters::default();
    for (i, r) in results.into_iter().enumerate() {
        let (pat, wall) = r?;
        let name = replicate_name(i);
        write_pattern_csv(&out.join(format!("{name}.csv")), &pat)?;
        if args.output.svg {
            write_file(&out.join(format!("{name}.svg")), &svg_scatter(&pat))?;
        }
        counters.absorb(&pat.provenance.counters);
        files.push(ReplicateRecord {
            index: i,
            file: format!("{name}.csv"),
            count: pat.len(),
            deleted: pat.provenance.deleted.len(),
            counters: pat.provenance.counters,
            wall_time: wall,
            warnings: pat.provenance.warnings.clone(),
        });
    }
    let manifest = SimulateManifest {
        command: "simulate",
        model: plan.name.id().into(),
        algorithm: plan.algorithm.clone(),
        params: plan.params.clone(),
        seed,
        window,
        replicates: files.len(),
        counts: files.iter().map(|f| f.count).collect(),
        expected_count: plan.expected_count(),
        counters,
        bound_rate: counters.bound_rate(),
        wall_time: start.elapsed().as_secs_f64(),
        files,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Serialize)]
pub struct ConditionManifest {
    pub command: &'static str,
    pub mode: &'static str,
    pub observed: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub simulated: usize,
    pub retention: Option<f64>,
    pub region: Option<Domain>,
    pub counters: Counters,
    pub wall_time: f64,
    pub files: Vec<String>,
}

fn parse_region(text: &str, dim: usize) -> Result<Domain, CliError> {
    let v = parse_list(text)?;
    if v.len() != 2 * dim {
        return Err(CliError::Usage(format!("--region needs {} numbers for dimension {dim}", 2 * dim)));
    }
    Ok(Domain::new_box(v[..dim].to_vec(), v[dim..].to_vec())?)
}

pub fn cmd_condition(args: &ConditionArgs) -> Result<ConditionManifest, CliError> {
    let (dim, observed) = read_csv(&args.observed)?;
    let window = Domain::unit_box(dim);
    if let Some(p) = observed.iter().find(|p| !window.contains(p)) {
        return Err(CliError::Usage(format!("observed point {p:?} lies outside the unit box")));
    }
    let m = observed.len();
    let seed = resolve_seed(&args.output);
    let mut rng = stream_rng(seed, 0);
    let cfg = SamplerConfig::default();
    let start = Instant::now();
    let (mode, n, retention, region, simulated) = match args.mode {
        ConditionMode::Palm => {
            let q = args.retention;
            if !(q > 0.0 && q <= 1.0) {
                return Err(CliError::Usage(format!("--retention must lie in (0, 1], got {q}")));
            }
            let n = args.n.unwrap_or_else(|| (m as f64 / q).round() as usize);
            if n < m || n == 0 {
                return Err(CliError::Usage(format!("total cardinality {n} is below the {m} observed points")));
            }
            let basis = FourierBasis::new(FourierBasis::nearest_frequencies(n, dim))?;
            let proj = basis.projection();
            let strategy = RejectionStrategy::uniform(basis.diagonal())?;
            let pat = simulate_given_subset(ProjectionSource::Spectral(&proj), &window, &observed, &strategy, &cfg, &mut rng)?;
            ("palm", n, Some(q), None, pat)
        }
        ConditionMode::Inpaint => {
            let text = args.region.as_deref().ok_or_else(|| CliError::Usage("inpaint mode needs --region".into()))?;
            let a = parse_region(text, dim)?;
            let (lo, hi) = a.bounding_box();
            if lo.iter().any(|v| *v < 0.0) || hi.iter().any(|v| *v > 1.0) {
                return Err(CliError::Usage("--region must lie inside the unit box".into()));
            }
            let outside_volume = window.volume() - a.volume();
            if outside_volume <= 0.0 {
                return Err(CliError::Usage("--region must not cover the whole window".into()));
            }
            let n = args.n.unwrap_or_else(|| (m as f64 * window.volume() / outside_volume).round() as usize);
            let reg = InpaintRegion::new(a.clone(), observed.clone(), n)?;
            let pat = if n == m {
                PointPattern::new(Vec::new(), a.clone(), dppsim::Provenance::new("inpaint", "projection-kernel"))?
            } else {
                let base = KernelSpec::FourierProjection { frequencies: FourierBasis::nearest_frequencies(n, dim) };
                inpaint(base, &reg, 4096, &cfg, &mut rng)?
            };
            ("inpaint", n, None, Some(a), pat)
        }
    };
    let out = &args.output.out;
    ensure_dir(out)?;
    let mut combined = observed.clone();
    combined.extend(simulated.points().iter().cloned());
    let combined = PointPattern::new(combined, window.clone(), simulated.provenance.clone())?;
    let complement = PointPattern::new(simulated.points().to_vec(), window, simulated.provenance.clone())?;
    write_pattern_csv(&out.join("complement.csv"), &complement)?;
    write_pattern_csv(&out.join("combined.csv"), &combined)?;
    let mut files = vec!["complement.csv".to_string(), "combined.csv".to_string()];
    if args.output.svg {
        let mut shown = combined.clone();
        shown.provenance.deleted.clear();
        write_file(&out.join("combined.svg"), &svg_scatter(&shown))?;
        files.push("combined.svg".into());
    }
    let manifest = ConditionManifest {
        command: "condition",
        mode,
        observed: args.observed.display().to_string(),
        seed,
        n,
        m,
        simulated: complement.len(),
        retention,
        region,
        counters: simulated.provenance.counters,
        wall_time: start.elapsed().as_secs_f64(),
        files,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Human-readable table in the layout of the benchmark tables.
pub fn format_report(r: &BenchmarkReport) -> String {
    let mut s = String::new();
    if !r.table1.is_empty() {
        s.push_str(&format!("{:<20} {:>6} {:>10} {:>10} {:>12} {:>12}\n", "model", "rho", "bound rate", "time ratio", "plain (s)", "refined (s)"));
        for row in &r.table1 {
            s.push_str(&format!(
                "{:<20} {:>6} {:>10.3} {:>10.3} {:>12.4e} {:>12.4e}\n",
                row.model, row.rho, row.bound_rate, row.time_ratio, row.plain.median, row.refined.median
            ));
        }
    }
    if !r.table2.is_empty() {
        s.push_str(&format!("{:>6} {:>8} {:>12} {:>12} {:>9}\n", "rho", "beta", "eigen (s)", "spectral (s)", "fastest"));
        for row in &r.table2 {
            let frac = if (row.beta_fraction - 1.0).abs() < 1e-12 { "max".to_string() } else { format!("max*{:.3}", row.beta_fraction) };
            let mark = |name: &str, v: f64| if row.fastest == name { format!("*{v:.4e}") } else { format!("{v:.4e}") };
            s.push_str(&format!(
                "{:>6} {:>8} {:>12} {:>12} {:>9}\n",
                row.rho,
                frac,
                mark("eigen", row.eigen.median),
                mark("spectral", row.spectral.median),
                row.fastest
            ));
        }
    }
    s
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchmarkReport, CliError> {
    let mut scenario = match args.scenario {
        ScenarioName::Table1 => Scenario::table1(),
        ScenarioName::Table2 => Scenario::table2(),
    };
    if let Some(text) = &args.intensities {
        let grid = parse_list(text)?;
        match &mut scenario {
            Scenario::Table1 { intensities, .. } | Scenario::Table2 { intensities, .. } => *intensities = grid,
        }
    }
    let report = run_benchmark(&scenario, args.reps, args.seed)?;
    ensure_dir(&args.out)?;
    let stem = match args.scenario {
        ScenarioName::Table1 => "table1",
        ScenarioName::Table2 => "table2",
    };
    let table = format_report(&report);
    write_file(&args.out.join(format!("{stem}.txt")), &table)?;
    write_json(&args.out.join(format!("{stem}.json")), &report)?;
    print!("{table}");
    Ok(report)
}

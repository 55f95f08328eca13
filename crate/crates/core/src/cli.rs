//! Command-line front end: reproducible solver runs that always emit their
//! resolved configuration and a hash of it alongside the numbers.

use crate::adi::{solve_steady, SolverConfig, TraceRow};
use crate::bvp::{piecewise_initial_eps, solve_bvp, BvpConfig, BvpResult};
use crate::charge::{
    coulomb_initial_condition, dirichlet_boundary, distribute_charges, fit_grid, parse_pqr,
    ChargeSystem, PhysicalConstants,
};
use crate::dielectric::{DielectricModel, HalfNodeScheme};
use crate::energy::{
    nonpolar_energy, polar_energy, surface_function, EnergyReport, NonpolarParams, WcaAttractive,
};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::mms::{fit_order, run_spatial_study, run_temporal_study, BenchmarkSpec, ConvergenceRow};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "npe",
    version,
    about = "Nonlinear Poisson solver with field-dependent permittivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study in space or time.
    MmsConvergence(MmsArgs),
    /// Solvation of the built-in one-atom system (unit charge, 1 Å radius).
    Born(BornArgs),
    /// Full solvation run on a PQR file: solvent + vacuum + energy report.
    Solvate(SolvateArgs),
    /// ADI vs alternating-BVP side-by-side on the same physical problem.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum SchemeArg {
    Eps1,
    Eps2,
}

impl SchemeArg {
    fn scheme(self) -> HalfNodeScheme {
        match self {
            SchemeArg::Eps1 => HalfNodeScheme::EpsI,
            SchemeArg::Eps2 => HalfNodeScheme::EpsII,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum SchemeSelect {
    Eps1,
    Eps2,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Study {
    Space,
    Time,
}

#[derive(Args)]
struct MmsArgs {
    #[arg(long, value_enum, default_value_t = Study::Space)]
    study: Study,
    #[arg(long, value_enum, default_value_t = SchemeSelect::Both)]
    scheme: SchemeSelect,
    /// Time step for the space study.
    #[arg(long, default_value_t = 0.001)]
    dt: f64,
    /// Final pseudo-time of the benchmark.
    #[arg(long = "t-final", default_value_t = 10.0)]
    t_final: f64,
    /// Mesh spacings for the space study; accepts pi/N tokens
    /// (default "pi/4,pi/8,pi/16,pi/32").
    #[arg(long = "h-list")]
    h_list: Option<String>,
    /// Mesh spacing for the time study (default pi/48).
    #[arg(long)]
    h: Option<String>,
    /// Time steps for the time study (default "0.8,0.4,0.2,0.1,0.05").
    #[arg(long = "dt-list")]
    dt_list: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long = "t-final", default_value_t = 5.0)]
    t_final: f64,
    /// Successive-energy convergence tolerance, kcal/mol.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Eps1)]
    scheme: SchemeArg,
    #[arg(long = "monitor-every", default_value_t = 1)]
    monitor_every: usize,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long = "eps-m", default_value_t = 1.0)]
    eps_m: f64,
    #[arg(long = "eps-s", default_value_t = 80.0)]
    eps_s: f64,
    /// Nonlinearity strength of the simplified rational permittivity.
    #[arg(long, default_value_t = 40.0)]
    alpha: f64,
    /// Divisor applied to |∇φ|² inside the permittivity model; defaults to
    /// 2·k_B·T in Gaussian-style units (φ in e_c/Å, energy in e_c²/Å), which
    /// is 2·coulomb_prefactor once φ is expressed in k_B·T/e_c.
    #[arg(long = "grad-scale")]
    grad_scale: Option<f64>,
    #[arg(long, default_value_t = 298.15)]
    temperature: f64,
}

impl ModelArgs {
    fn model(&self) -> Result<DielectricModel> {
        let constants = PhysicalConstants::at_temperature(self.temperature)?;
        let grad_scale = self
            .grad_scale
            .unwrap_or(2.0 * constants.coulomb_prefactor);
        DielectricModel::rational(self.eps_m, self.eps_s, self.alpha, 1, grad_scale)
    }
}

#[derive(Args)]
struct NonpolarArgs {
    /// Surface tension, kcal/(mol·Å²); 0 disables the area term.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Pressure, kcal/(mol·Å³).
    #[arg(long, default_value_t = 0.0)]
    pressure: f64,
    /// Solvent density, Å⁻³; 0 disables the dispersion term.
    #[arg(long = "rho-s", default_value_t = 0.0)]
    rho_s: f64,
    /// Well depth of the default attractive dispersion potential, kcal/mol.
    #[arg(long = "well-depth", default_value_t = 0.152)]
    well_depth: f64,
}

impl NonpolarArgs {
    fn params(&self) -> NonpolarParams {
        NonpolarParams {
            gamma: self.gamma,
            pressure: self.pressure,
            rho_s: self.rho_s,
        }
    }
}

#[derive(Args)]
struct BornArgs {
    #[arg(long, default_value_t = 0.25)]
    h: f64,
    #[arg(long, default_value_t = 8.0)]
    padding: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    nonpolar: NonpolarArgs,
    /// Comma-separated α values; emits a CSV sweep instead of one report.
    #[arg(long = "alpha-sweep")]
    alpha_sweep: Option<String>,
    /// Also run the alternating-BVP oracle at each sweep point.
    #[arg(long = "both-solvers", default_value_t = false)]
    both_solvers: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV convergence trace (step, time, dG_p, max|φ|).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SolvateArgs {
    #[arg(long)]
    pqr: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    h: f64,
    #[arg(long, default_value_t = 8.0)]
    padding: f64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long = "t-final", default_value_t = 2.0)]
    t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Eps1)]
    scheme: SchemeArg,
    #[arg(long = "monitor-every", default_value_t = 1)]
    monitor_every: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    nonpolar: NonpolarArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum SolverSelect {
    Both,
    AdiOnly,
}

#[derive(Args)]
struct CompareArgs {
    /// PQR input; the built-in one-atom system when omitted.
    #[arg(long)]
    pqr: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    h: f64,
    #[arg(long, default_value_t = 8.0)]
    padding: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SolverSelect::Both)]
    solver_select: SolverSelect,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point used by the binary; clap handles usage errors itself
/// (exit code 2).
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::MmsConvergence(a) => cmd_mms(a),
        Command::Born(a) => cmd_born(a),
        Command::Solvate(a) => cmd_solvate(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// SHA-256 of the canonical JSON of a resolved configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents)?,
        None => print!("{contents}"),
    }
    Ok(())
}

/// Parse "pi", "π/4", "0.25", … into a float.
fn parse_scale(token: &str) -> Result<f64> {
    let t = token.trim().replace('π', "pi");
    let bad = || Error::InvalidArgument(format!("cannot parse '{token}' as a spacing"));
    if let Some(rest) = t.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(PI);
        }
        let denom = rest
            .strip_prefix('/')
            .and_then(|d| d.trim().parse::<f64>().ok())
            .ok_or_else(bad)?;
        if denom <= 0.0 {
            return Err(bad());
        }
        return Ok(PI / denom);
    }
    t.parse::<f64>().map_err(|_| bad())
}

fn parse_list(tokens: &str) -> Result<Vec<f64>> {
    let vals: Result<Vec<f64>> = tokens.split(',').map(parse_scale).collect();
    let vals = vals?;
    if vals.is_empty() {
        return Err(Error::InvalidArgument("empty list".into()));
    }
    Ok(vals)
}

/// Node count of the benchmark cube whose spacing is closest to `h`.
fn benchmark_n(h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("spacing must be > 0, got {h}")));
    }
    let n = (2.0 * PI / h).round() as usize + 1;
    if n < 4 {
        return Err(Error::InvalidArgument(format!("spacing {h} is too coarse")));
    }
    Ok(n)
}

#[derive(Serialize)]
struct MmsConfig {
    study: Study,
    scheme: SchemeSelect,
    dt: f64,
    t_final: f64,
    n_list: Vec<usize>,
    dt_list: Vec<f64>,
    benchmark: BenchmarkSpec,
}

fn cmd_mms(args: MmsArgs) -> Result<()> {
    let schemes: Vec<HalfNodeScheme> = match args.scheme {
        SchemeSelect::Eps1 => vec![HalfNodeScheme::EpsI],
        SchemeSelect::Eps2 => vec![HalfNodeScheme::EpsII],
        SchemeSelect::Both => vec![HalfNodeScheme::EpsI, HalfNodeScheme::EpsII],
    };

    let (n_list, dt_list) = match args.study {
        Study::Space => {
            let hs = parse_list(args.h_list.as_deref().unwrap_or("pi/4,pi/8,pi/16,pi/32"))?;
            let ns: Result<Vec<usize>> = hs.iter().map(|&h| benchmark_n(h)).collect();
            (ns?, vec![args.dt])
        }
        Study::Time => {
            let n = benchmark_n(parse_scale(args.h.as_deref().unwrap_or("pi/48"))?)?;
            let dts = parse_list(args.dt_list.as_deref().unwrap_or("0.8,0.4,0.2,0.1,0.05"))?;
            (vec![n], dts)
        }
    };

    let mut spec = BenchmarkSpec::standard(schemes[0]);
    spec.t_final = args.t_final;
    let config = MmsConfig {
        study: args.study,
        scheme: args.scheme,
        dt: args.dt,
        t_final: args.t_final,
        n_list: n_list.clone(),
        dt_list: dt_list.clone(),
        benchmark: spec,
    };
    let hash = config_hash(&config)?;

    let mut out = String::new();
    let _ = writeln!(out, "# config_hash: {hash}");
    let _ = writeln!(out, "# config: {}", serde_json::to_string(&config)?);
    let _ = writeln!(out, "scheme,n,h,dt,steps,linf,linf_order,l2,l2_order");

    for &scheme in &schemes {
        let mut spec = BenchmarkSpec::standard(scheme);
        spec.t_final = args.t_final;
        let label = match scheme {
            HalfNodeScheme::EpsI => "eps1",
            HalfNodeScheme::EpsII => "eps2",
        };
        let rows: Vec<ConvergenceRow> = match args.study {
            Study::Space => run_spatial_study(&spec, &n_list, args.dt)?,
            Study::Time => run_temporal_study(&spec, n_list[0], &dt_list)?,
        };
        let scales: Vec<f64> = rows
            .iter()
            .map(|r| match args.study {
                Study::Space => r.h,
                Study::Time => r.dt,
            })
            .collect();
        for (idx, r) in rows.iter().enumerate() {
            let order = |errs: &dyn Fn(&ConvergenceRow) -> f64| -> String {
                if idx == 0 {
                    "".into()
                } else {
                    let o = (errs(&rows[idx - 1]) / errs(r)).ln()
                        / (scales[idx - 1] / scales[idx]).ln();
                    format!("{o:.3}")
                }
            };
            let _ = writeln!(
                out,
                "{label},{},{:.6},{},{},{:.6e},{},{:.6e},{}",
                r.n,
                r.h,
                r.dt,
                r.steps,
                r.linf,
                order(&|r: &ConvergenceRow| r.linf),
                r.l2,
                order(&|r: &ConvergenceRow| r.l2),
            );
        }
        if rows.len() >= 2 {
            let linfs: Vec<f64> = rows.iter().map(|r| r.linf).collect();
            let l2s: Vec<f64> = rows.iter().map(|r| r.l2).collect();
            let _ = writeln!(
                out,
                "# fitted_slope scheme={label} linf={:.4} l2={:.4}",
                fit_order(&scales, &linfs)?,
                fit_order(&scales, &l2s)?
            );
        }
    }
    write_output(args.out.as_deref(), &out)
}

/// Resolved configuration shared by the solvation pipelines.
#[derive(Serialize, Clone)]
pub struct PipelineConfig {
    pub h: f64,
    pub padding: f64,
    pub dt: f64,
    pub t_final: f64,
    pub energy_tol: f64,
    pub monitor_every: usize,
    pub scheme: HalfNodeScheme,
    pub model: DielectricModel,
    pub temperature: f64,
    pub nonpolar: NonpolarParams,
    pub well_depth: f64,
}

/// Everything a solvation run produces besides the raw fields.
#[derive(Serialize)]
pub struct PipelineOutput {
    pub report: EnergyReport,
    pub steps_taken: usize,
    pub converged: bool,
    pub vacuum_converged: bool,
    pub final_energy_delta: f64,
    pub wall_time_s: f64,
    pub grid_dims: [usize; 3],
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub phi: ScalarField,
    #[serde(skip)]
    pub g0: f64,
}

/// Vacuum run + solvated ADI run + energy assembly. The vacuum potential
/// uses ε ≡ 1 on the same grid and charge spreading, so the grid
/// self-energy cancels in ΔG_p.
pub fn run_adi_pipeline(system: &ChargeSystem, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let constants = PhysicalConstants::at_temperature(cfg.temperature)?;
    let grid = fit_grid(system, cfg.padding, cfg.h)?;
    let q = distribute_charges(system, &grid, &constants)?;

    let vacuum = vacuum_reference(system, &grid, &q, &constants, cfg)?;
    let g0 = polar_energy(&vacuum.phi, system, &constants)?;

    let model = cfg.model;
    // Start from the exact discrete vacuum field scaled by the piecewise
    // dielectric profile. The lattice self-potential at the charge nodes is
    // then exact from step one (it cancels against g0 in the monitor), so
    // pseudo-time only has to relax the dielectric interface region.
    let mut phi0 = vacuum.phi.clone();
    let eps_profile = piecewise_initial_eps(system, &grid, &model);
    for (v, e) in phi0.values.iter_mut().zip(&eps_profile.values) {
        *v /= e;
    }
    let solver = SolverConfig {
        dt: cfg.dt,
        t_final: cfg.t_final,
        max_steps: None,
        energy_tol: cfg.energy_tol,
        scheme: cfg.scheme,
        monitor_every: cfg.monitor_every,
    };
    let sys = system.clone();
    let consts = constants;
    let monitor = move |phi: &ScalarField| {
        polar_energy(phi, &sys, &consts).unwrap_or(f64::NAN) - g0
    };
    let solved = solve_steady(&phi0, &q, &model, &solver, &monitor)?;

    let g_p = polar_energy(&solved.phi, system, &constants)?;
    let report = assemble_report(&solved.phi, system, &model, cfg, g_p, g0);
    Ok(PipelineOutput {
        report,
        steps_taken: solved.steps_taken,
        converged: solved.converged,
        vacuum_converged: vacuum.converged,
        final_energy_delta: solved.final_energy_delta,
        wall_time_s: solved.wall_time_s,
        grid_dims: grid.dims,
        trace: solved.trace,
        phi: solved.phi,
        g0,
    })
}

/// The vacuum problem (ε ≡ 1) is linear, so its exact discrete solution is
/// one direct solve of the same 7-point system the ADI fixed point
/// satisfies; the grid self-energy then cancels in ΔG_p.
fn vacuum_reference(
    system: &ChargeSystem,
    grid: &crate::grid::Grid,
    q: &ScalarField,
    constants: &PhysicalConstants,
    cfg: &PipelineConfig,
) -> Result<BvpResult> {
    let vac_model = DielectricModel::simplified(1.0, 1.0, 0.0)?;
    let dirichlet = dirichlet_boundary(system, grid, 1.0, constants)?;
    let phi0 = coulomb_initial_condition(system, grid, 1.0, constants)?;
    let bvp_cfg = BvpConfig {
        energy_tol: cfg.energy_tol,
        ..BvpConfig::default()
    };
    let sys = system.clone();
    let consts = *constants;
    let monitor =
        move |phi: &ScalarField| polar_energy(phi, &sys, &consts).unwrap_or(f64::NAN);
    solve_bvp(system, q, &dirichlet, &phi0, &vac_model, &bvp_cfg, &monitor)
}

fn assemble_report(
    phi: &ScalarField,
    system: &ChargeSystem,
    model: &DielectricModel,
    cfg: &PipelineConfig,
    g_p: f64,
    g0: f64,
) -> EnergyReport {
    let s = surface_function(phi, model);
    let att;
    let att_ref: Option<&dyn crate::energy::AttractivePotential> = if cfg.nonpolar.rho_s > 0.0 {
        att = WcaAttractive {
            atoms: system.atoms.clone(),
            well_depth: cfg.well_depth,
        };
        Some(&att)
    } else {
        None
    };
    let (g_np, area, volume) = nonpolar_energy(&s, &cfg.nonpolar, att_ref);
    EnergyReport::assemble(g_p, g0, area, volume, g_np, att_ref.is_none())
}

/// The alternating-BVP oracle on the same physical problem; vacuum reference
/// energy is supplied by the caller so both solvers share one baseline.
pub fn run_bvp_pipeline(
    system: &ChargeSystem,
    cfg: &PipelineConfig,
    g0: f64,
) -> Result<(BvpResult, f64)> {
    let constants = PhysicalConstants::at_temperature(cfg.temperature)?;
    let grid = fit_grid(system, cfg.padding, cfg.h)?;
    let q = distribute_charges(system, &grid, &constants)?;
    let dirichlet = dirichlet_boundary(system, &grid, cfg.model.eps_s, &constants)?;
    let phi0 = coulomb_initial_condition(system, &grid, cfg.model.eps_s, &constants)?;
    let bvp_cfg = BvpConfig {
        energy_tol: cfg.energy_tol,
        scheme: cfg.scheme,
        ..BvpConfig::default()
    };
    let sys = system.clone();
    let consts = constants;
    let monitor =
        move |phi: &ScalarField| polar_energy(phi, &sys, &consts).unwrap_or(f64::NAN) - g0;
    let result = solve_bvp(system, &q, &dirichlet, &phi0, &cfg.model, &bvp_cfg, &monitor)?;
    let dg_p = polar_energy(&result.phi, system, &constants)? - g0;
    Ok((result, dg_p))
}

fn trace_csv(hash: &str, trace: &[TraceRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash: {hash}");
    let _ = writeln!(out, "step,time,dG_p,max_abs_phi");
    for row in trace {
        let _ = writeln!(
            out,
            "{},{:.6},{:.10e},{:.10e}",
            row.step, row.time, row.monitor, row.max_abs_phi
        );
    }
    out
}

#[derive(Serialize)]
struct SolvationDocument<'a> {
    config: &'a PipelineConfig,
    config_hash: String,
    n_atoms: usize,
    total_charge: f64,
    #[serde(flatten)]
    output: &'a PipelineOutput,
}

fn emit_solvation(
    system: &ChargeSystem,
    cfg: &PipelineConfig,
    out_path: Option<&Path>,
    trace_path: Option<&Path>,
) -> Result<()> {
    let output = run_adi_pipeline(system, cfg)?;
    let hash = config_hash(cfg)?;
    let doc = SolvationDocument {
        config: cfg,
        config_hash: hash.clone(),
        n_atoms: system.atoms.len(),
        total_charge: system.total_charge(),
        output: &output,
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    write_output(out_path, &json)?;
    if let Some(p) = trace_path {
        write_output(Some(p), &trace_csv(&hash, &output.trace))?;
    }
    Ok(())
}

fn pipeline_config(
    h: f64,
    padding: f64,
    solver: &SolverArgs,
    model: &ModelArgs,
    nonpolar: NonpolarParams,
    well_depth: f64,
) -> Result<PipelineConfig> {
    Ok(PipelineConfig {
        h,
        padding,
        dt: solver.dt,
        t_final: solver.t_final,
        energy_tol: solver.tol,
        monitor_every: solver.monitor_every,
        scheme: solver.scheme.scheme(),
        model: model.model()?,
        temperature: model.temperature,
        nonpolar,
        well_depth,
    })
}

fn cmd_born(args: BornArgs) -> Result<()> {
    let system = ChargeSystem::unit_atom();
    let cfg = pipeline_config(
        args.h,
        args.padding,
        &args.solver,
        &args.model,
        args.nonpolar.params(),
        args.nonpolar.well_depth,
    )?;

    if let Some(sweep) = &args.alpha_sweep {
        let alphas = parse_list(sweep)?;
        let hash = config_hash(&(&cfg, &alphas))?;
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash: {hash}");
        let _ = writeln!(out, "# config: {}", serde_json::to_string(&cfg)?);
        let header = if args.both_solvers {
            "alpha,area,volume,dgp_adi,time_adi,steps_adi,dgp_bvp,time_bvp,outer_bvp"
        } else {
            "alpha,area,volume,dgp_adi,time_adi,steps_adi"
        };
        let _ = writeln!(out, "{header}");
        for &alpha in &alphas {
            let mut point = cfg.clone();
            point.model = DielectricModel::rational(
                cfg.model.eps_m,
                cfg.model.eps_s,
                alpha,
                1,
                cfg.model.grad_scale,
            )?;
            let adi = run_adi_pipeline(&system, &point)?;
            let _ = write!(
                out,
                "{alpha},{:.6},{:.6},{:.6},{:.3},{}",
                adi.report.area,
                adi.report.volume,
                adi.report.dg_p,
                adi.wall_time_s,
                adi.steps_taken
            );
            if args.both_solvers {
                let (bvp, dgp) = run_bvp_pipeline(&system, &point, adi.g0)?;
                let _ = write!(out, ",{dgp:.6},{:.3},{}", bvp.wall_time_s, bvp.outer_iters);
            }
            out.push('\n');
        }
        return write_output(args.out.as_deref(), &out);
    }

    emit_solvation(&system, &cfg, args.out.as_deref(), args.trace.as_deref())
}

fn cmd_solvate(args: SolvateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.pqr)?;
    let system = parse_pqr(&text)?;
    let solver = SolverArgs {
        dt: args.dt,
        t_final: args.t_final,
        tol: args.tol,
        scheme: args.scheme,
        monitor_every: args.monitor_every,
    };
    let cfg = pipeline_config(
        args.h,
        args.padding,
        &solver,
        &args.model,
        args.nonpolar.params(),
        args.nonpolar.well_depth,
    )?;
    emit_solvation(&system, &cfg, args.out.as_deref(), args.trace.as_deref())
}

#[derive(Serialize)]
struct CompareDocument {
    config: PipelineConfig,
    config_hash: String,
    adi_dgp: f64,
    adi_steps: usize,
    adi_wall_time_s: f64,
    adi_converged: bool,
    bvp_dgp: Option<f64>,
    bvp_outer_iters: Option<usize>,
    bvp_inner_iters: Option<usize>,
    bvp_wall_time_s: Option<f64>,
    bvp_converged: Option<bool>,
    speedup_bvp_over_adi: Option<f64>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let system = match &args.pqr {
        Some(p) => parse_pqr(&std::fs::read_to_string(p)?)?,
        None => ChargeSystem::unit_atom(),
    };
    let cfg = pipeline_config(
        args.h,
        args.padding,
        &args.solver,
        &args.model,
        NonpolarParams::zero(),
        0.0,
    )?;
    let adi = run_adi_pipeline(&system, &cfg)?;
    let mut doc = CompareDocument {
        config_hash: config_hash(&cfg)?,
        config: cfg.clone(),
        adi_dgp: adi.report.dg_p,
        adi_steps: adi.steps_taken,
        adi_wall_time_s: adi.wall_time_s,
        adi_converged: adi.converged,
        bvp_dgp: None,
        bvp_outer_iters: None,
        bvp_inner_iters: None,
        bvp_wall_time_s: None,
        bvp_converged: None,
        speedup_bvp_over_adi: None,
    };
    if args.solver_select == SolverSelect::Both {
        let (bvp, dgp) = run_bvp_pipeline(&system, &cfg, adi.g0)?;
        doc.bvp_dgp = Some(dgp);
        doc.bvp_outer_iters = Some(bvp.outer_iters);
        doc.bvp_inner_iters = Some(bvp.inner_iters_total);
        doc.bvp_wall_time_s = Some(bvp.wall_time_s);
        doc.bvp_converged = Some(bvp.converged);
        if adi.wall_time_s > 0.0 {
            doc.speedup_bvp_over_adi = Some(bvp.wall_time_s / adi.wall_time_s);
        }
    }
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    write_output(args.out.as_deref(), &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_tokens() {
        assert!((parse_scale("pi/4").unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_scale("π/32").unwrap() - PI / 32.0).abs() < 1e-15);
        assert!((parse_scale("pi").unwrap() - PI).abs() < 1e-15);
        assert!((parse_scale("0.25").unwrap() - 0.25).abs() < 1e-15);
        assert!(parse_scale("four").is_err());
        assert!(parse_scale("pi/0").is_err());
    }

    #[test]
    fn benchmark_node_counts() {
        assert_eq!(benchmark_n(PI / 4.0).unwrap(), 9);
        assert_eq!(benchmark_n(PI / 32.0).unwrap(), 65);
        assert_eq!(benchmark_n(PI / 48.0).unwrap(), 97);
    }

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        let a = config_hash(&("x", 1)).unwrap();
        let b = config_hash(&("x", 1)).unwrap();
        let c = config_hash(&("x", 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}

//! Manufactured-solution convergence benchmark.
//!
//! The exact field φ(x,y,z,t) = sin x · sin y · sin z · (1 + e^{−γt}) on
//! [−π,π]³ is substituted into φ_t = ∇·(ε(|∇φ|²)∇φ) + F and F is solved for
//! in closed form by differentiating the same ε the solver evaluates, so the
//! discrete solution must converge to φ as the mesh refines.

use crate::adi::adi_step;
use crate::dielectric::{DielectricModel, HalfNodeScheme};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use std::f64::consts::PI;

/// Fixed parameters of one benchmark problem.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BenchmarkSpec {
    pub eps_m: f64,
    pub eps_s: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub scheme: HalfNodeScheme,
}

impl BenchmarkSpec {
    /// The reference configuration: eps_m = 1, eps_s = 80, α = 0.1, γ = 0.1,
    /// integrated to T = 10.
    pub fn standard(scheme: HalfNodeScheme) -> Self {
        Self {
            eps_m: 1.0,
            eps_s: 80.0,
            alpha: 0.1,
            gamma: 0.1,
            t_final: 10.0,
            scheme,
        }
    }

    pub fn model(&self) -> Result<DielectricModel> {
        DielectricModel::simplified(self.eps_m, self.eps_s, self.alpha)
    }

    /// Grid of n³ nodes spanning [−π,π]³, h = 2π/(n−1).
    pub fn grid(&self, n: usize) -> Result<Grid> {
        let h = 2.0 * PI / (n as f64 - 1.0);
        Grid::new([-PI, -PI, -PI], h, [n, n, n])
    }

    fn t_factor(&self, t: f64) -> f64 {
        1.0 + (-self.gamma * t).exp()
    }

    fn t_factor_deriv(&self, t: f64) -> f64 {
        -self.gamma * (-self.gamma * t).exp()
    }

    /// Exact solution at a point and time.
    pub fn exact(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        x.sin() * y.sin() * z.sin() * self.t_factor(t)
    }

    pub fn exact_field(&self, grid: Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x, y, z| self.exact(x, y, z, t))
    }

    /// Manufactured source F = φ_t − ∇·(ε∇φ) at a point and time.
    ///
    /// With u = sin x sin y sin z and T(t) the time factor, φ = u·T and
    ///   F = u T' + 3 ε(g) u T − ε'(g) T³ (∇s2 · ∇u),
    /// where s2 = |∇u|² and g = T² s2.
    pub fn source(&self, x: f64, y: f64, z: f64, t: f64) -> Result<f64> {
        let model = self.model()?;
        let f = SpatialFactors::at(x, y, z);
        Ok(self.source_from_factors(&model, &f, t))
    }

    fn source_from_factors(&self, model: &DielectricModel, f: &SpatialFactors, t: f64) -> f64 {
        let tf = self.t_factor(t);
        let g = tf * tf * f.s2;
        f.u * self.t_factor_deriv(t) + 3.0 * model.eval_raw(g) * f.u * tf
            - model.eval_deriv(g) * tf * tf * tf * f.dot
    }
}

/// Time-independent per-node data entering the manufactured source.
#[derive(Debug, Clone, Copy)]
struct SpatialFactors {
    /// u = sin x sin y sin z
    u: f64,
    /// |∇u|²
    s2: f64,
    /// ∇(|∇u|²) · ∇u
    dot: f64,
}

impl SpatialFactors {
    fn at(x: f64, y: f64, z: f64) -> Self {
        let (sx, cx) = x.sin_cos();
        let (sy, cy) = y.sin_cos();
        let (sz, cz) = z.sin_cos();
        let u = sx * sy * sz;
        let ux = cx * sy * sz;
        let uy = sx * cy * sz;
        let uz = sx * sy * cz;
        let s2 = ux * ux + uy * uy + uz * uz;
        // ∂(s2)/∂x = −2u·ux + 2uy·(cx cy sz) + 2uz·(cx sy cz), cyclically.
        let wx = 2.0 * (-u * ux + uy * (cx * cy * sz) + uz * (cx * sy * cz));
        let wy = 2.0 * (ux * (cx * cy * sz) - u * uy + uz * (sx * cy * cz));
        let wz = 2.0 * (ux * (cx * sy * cz) + uy * (sx * cy * cz) - u * uz);
        let dot = wx * ux + wy * uy + wz * uz;
        Self { u, s2, dot }
    }
}

/// Per-grid cache of the spatial factors so the time loop only evaluates a
/// handful of multiplications per node per step.
pub struct SourceCache {
    spec: BenchmarkSpec,
    model: DielectricModel,
    factors: Vec<SpatialFactors>,
    grid: Grid,
}

impl SourceCache {
    pub fn new(spec: BenchmarkSpec, grid: Grid) -> Result<Self> {
        let model = spec.model()?;
        let mut factors = Vec::with_capacity(grid.n_nodes());
        for k in 0..grid.nz() {
            for j in 0..grid.ny() {
                for i in 0..grid.nx() {
                    let [x, y, z] = grid.node_position(i, j, k)?;
                    factors.push(SpatialFactors::at(x, y, z));
                }
            }
        }
        Ok(Self {
            spec,
            model,
            factors,
            grid,
        })
    }

    /// Fill `q` with F(·, t).
    pub fn fill(&self, t: f64, q: &mut ScalarField) -> Result<()> {
        if q.grid != self.grid {
            return Err(Error::GridMismatch(
                "source cache built for a different grid".into(),
            ));
        }
        for (slot, f) in q.values.iter_mut().zip(&self.factors) {
            *slot = self.spec.source_from_factors(&self.model, f, t);
        }
        Ok(())
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub linf: f64,
    pub l2: f64,
}

/// Result of a single benchmark integration.
pub struct MmsRun {
    pub phi: ScalarField,
    pub linf: f64,
    pub l2: f64,
    pub steps: usize,
}

/// Integrate the benchmark on an n³ grid with time step `dt`, starting from
/// the exact initial state, and compare with the exact solution at the final
/// time actually reached (`round(T/dt)` steps). The source is evaluated at
/// the end of each step, matching the implicit stages.
pub fn run_mms(spec: &BenchmarkSpec, n: usize, dt: f64) -> Result<MmsRun> {
    if !(dt > 0.0) || n < 4 {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and n >= 4, got dt={dt}, n={n}"
        )));
    }
    let grid = spec.grid(n)?;
    let model = spec.model()?;
    let cache = SourceCache::new(*spec, grid)?;
    let steps = (spec.t_final / dt).round().max(1.0) as usize;

    let mut phi = spec.exact_field(grid, 0.0);
    let mut q = ScalarField::zeros(grid);
    for step in 1..=steps {
        let t_next = step as f64 * dt;
        cache.fill(t_next, &mut q)?;
        phi = adi_step(&phi, &q, &model, spec.scheme, dt)?;
        let max_abs = phi.max_abs();
        if !max_abs.is_finite() {
            return Err(Error::BlowUp { step, max_abs });
        }
    }

    let exact = spec.exact_field(grid, steps as f64 * dt);
    let linf = phi.linf_diff(&exact)?;
    let l2 = phi.rms_diff(&exact)?;
    Ok(MmsRun {
        phi,
        linf,
        l2,
        steps,
    })
}

/// Refine the mesh at fixed dt.
pub fn run_spatial_study(
    spec: &BenchmarkSpec,
    n_list: &[usize],
    dt: f64,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let run = run_mms(spec, n, dt)?;
        rows.push(ConvergenceRow {
            n,
            h: spec.grid(n)?.h,
            dt,
            steps: run.steps,
            linf: run.linf,
            l2: run.l2,
        });
    }
    Ok(rows)
}

/// Refine the time step on a fixed mesh.
pub fn run_temporal_study(
    spec: &BenchmarkSpec,
    n: usize,
    dt_list: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let run = run_mms(spec, n, dt)?;
        rows.push(ConvergenceRow {
            n,
            h: spec.grid(n)?.h,
            dt,
            steps: run.steps,
            linf: run.linf,
            l2: run.l2,
        });
    }
    Ok(rows)
}

/// Least-squares slope of ln(err) against ln(scale): the observed order of
/// accuracy across a whole study.
pub fn fit_order(scales: &[f64], errors: &[f64]) -> Result<f64> {
    if scales.len() != errors.len() || scales.len() < 2 {
        return Err(Error::InvalidArgument(
            "fit_order needs at least two matching samples".into(),
        ));
    }
    if scales.iter().chain(errors).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(
            "fit_order needs strictly positive samples".into(),
        ));
    }
    let n = scales.len() as f64;
    let lx: Vec<f64> = scales.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(num / den)
}

/// Pairwise observed orders ln(e_i/e_{i+1}) / ln(s_i/s_{i+1}).
pub fn pairwise_orders(scales: &[f64], errors: &[f64]) -> Vec<f64> {
    scales
        .windows(2)
        .zip(errors.windows(2))
        .map(|(s, e)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .collect()
}

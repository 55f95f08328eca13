//! The nonlinear dielectric function ε(|∇φ|²) and its two half-node
//! discretizations.
//!
//! ε_I evaluates the model directly at a half node, with the axial
//! derivative from the two-point difference across the half node and the
//! transverse derivatives from four-point averaged central differences.
//! ε_II averages the two nodal ε values built from full central
//! differences; it is the same averaging rule the baseline BVP solver uses.
//!
//! Both schemes are pure functions of a field snapshot; during ADI
//! stepping they are always fed the field at the current time level.

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Sweep / stencil axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// Unit index offset along this axis.
    #[inline]
    fn offset(self) -> (usize, usize, usize) {
        match self {
            Axis::X => (1, 0, 0),
            Axis::Y => (0, 1, 0),
            Axis::Z => (0, 0, 1),
        }
    }
}

/// Which half-node dielectric discretization a solver run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum HalfNodeScheme {
    EpsI,
    EpsII,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DielectricVariant {
    /// eps_m + (eps_s - eps_m) / (1 + alpha * g / grad_scale)^p
    Rational { p: i32 },
    /// eps_m + (eps_s - eps_m) * exp(-g / grad_scale)
    Exponential,
    /// eps_m + (eps_s - eps_m) / (1 + alpha * g); the benchmark form,
    /// grad_scale fixed to 1.
    SimplifiedRational,
}

/// The nonlinear permittivity model family.
///
/// `grad_scale` is the divisor applied to |∇φ|² in place of the paper's
/// dimensionally ambiguous 2·k_B·T factor; it is free configuration and is
/// recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DielectricModel {
    pub variant: DielectricVariant,
    pub eps_m: f64,
    pub eps_s: f64,
    pub alpha: f64,
    pub grad_scale: f64,
}

impl DielectricModel {
    fn validated(self) -> Result<Self> {
        if !(self.eps_m > 0.0 && self.eps_s >= self.eps_m) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < eps_m <= eps_s, got eps_m={}, eps_s={}",
                self.eps_m, self.eps_s
            )));
        }
        if !(self.alpha >= 0.0) || !(self.grad_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need alpha >= 0 and grad_scale > 0, got alpha={}, grad_scale={}",
                self.alpha, self.grad_scale
            )));
        }
        Ok(self)
    }

    pub fn rational(eps_m: f64, eps_s: f64, alpha: f64, p: i32, grad_scale: f64) -> Result<Self> {
        if p != 1 && p != 2 {
            return Err(Error::InvalidArgument(format!("p must be 1 or 2, got {p}")));
        }
        Self {
            variant: DielectricVariant::Rational { p },
            eps_m,
            eps_s,
            alpha,
            grad_scale,
        }
        .validated()
    }

    pub fn exponential(eps_m: f64, eps_s: f64, grad_scale: f64) -> Result<Self> {
        Self {
            variant: DielectricVariant::Exponential,
            eps_m,
            eps_s,
            alpha: 0.0,
            grad_scale,
        }
        .validated()
    }

    pub fn simplified(eps_m: f64, eps_s: f64, alpha: f64) -> Result<Self> {
        Self {
            variant: DielectricVariant::SimplifiedRational,
            eps_m,
            eps_s,
            alpha,
            grad_scale: 1.0,
        }
        .validated()
    }

    /// ε at a given squared gradient magnitude.
    pub fn eval_epsilon(&self, grad_sq: f64) -> Result<f64> {
        if !grad_sq.is_finite() || grad_sq < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grad_sq must be finite and >= 0, got {grad_sq}"
            )));
        }
        Ok(self.eval_raw(grad_sq))
    }

    /// Hot-loop evaluation; callers guarantee `grad_sq >= 0`.
    #[inline]
    pub(crate) fn eval_raw(&self, grad_sq: f64) -> f64 {
        let d = self.eps_s - self.eps_m;
        match self.variant {
            DielectricVariant::Rational { p } => {
                let base = 1.0 + self.alpha * grad_sq / self.grad_scale;
                if p == 1 {
                    self.eps_m + d / base
                } else {
                    self.eps_m + d / (base * base)
                }
            }
            DielectricVariant::Exponential => {
                self.eps_m + d * (-grad_sq / self.grad_scale).exp()
            }
            DielectricVariant::SimplifiedRational => {
                self.eps_m + d / (1.0 + self.alpha * grad_sq)
            }
        }
    }

    /// dε/dg at a squared gradient magnitude g. Used when manufacturing a
    /// source term that differentiates the model in closed form.
    pub fn eval_deriv(&self, grad_sq: f64) -> f64 {
        let d = self.eps_s - self.eps_m;
        match self.variant {
            DielectricVariant::Rational { p } => {
                let a = self.alpha / self.grad_scale;
                let base = 1.0 + a * grad_sq;
                if p == 1 {
                    -d * a / (base * base)
                } else {
                    -2.0 * d * a / (base * base * base)
                }
            }
            DielectricVariant::Exponential => {
                -d / self.grad_scale * (-grad_sq / self.grad_scale).exp()
            }
            DielectricVariant::SimplifiedRational => {
                let base = 1.0 + self.alpha * grad_sq;
                -d * self.alpha / (base * base)
            }
        }
    }
}

/// |∇φ|² at a node from central differences, falling back to one-sided
/// two-point differences on boundary nodes (used by ε_II, whose nodal
/// stencil can touch the boundary layer when only interior rows are solved).
pub(crate) fn nodal_grad_sq(phi: &ScalarField, i: usize, j: usize, k: usize) -> f64 {
    let g = &phi.grid;
    let h = g.h;
    let d1 = |lo: f64, hi: f64, span: f64| (hi - lo) / (span * h);
    let [nx, ny, nz] = g.dims;
    let gx = if i > 0 && i < nx - 1 {
        d1(phi.get(i - 1, j, k), phi.get(i + 1, j, k), 2.0)
    } else if i == 0 {
        d1(phi.get(0, j, k), phi.get(1, j, k), 1.0)
    } else {
        d1(phi.get(nx - 2, j, k), phi.get(nx - 1, j, k), 1.0)
    };
    let gy = if j > 0 && j < ny - 1 {
        d1(phi.get(i, j - 1, k), phi.get(i, j + 1, k), 2.0)
    } else if j == 0 {
        d1(phi.get(i, 0, k), phi.get(i, 1, k), 1.0)
    } else {
        d1(phi.get(i, ny - 2, k), phi.get(i, ny - 1, k), 1.0)
    };
    let gz = if k > 0 && k < nz - 1 {
        d1(phi.get(i, j, k - 1), phi.get(i, j, k + 1), 2.0)
    } else if k == 0 {
        d1(phi.get(i, j, 0), phi.get(i, j, 1), 1.0)
    } else {
        d1(phi.get(i, j, nz - 2), phi.get(i, j, nz - 1), 1.0)
    };
    gx * gx + gy * gy + gz * gz
}

/// Squared gradient at the half node `(i,j,k) + axis/2` per the ε_I stencils.
fn half_node_grad_sq(
    phi: &ScalarField,
    axis: Axis,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    let g = &phi.grid;
    let h = g.h;
    let (di, dj, dk) = axis.offset();
    let [nx, ny, nz] = g.dims;
    // Axial neighbour plus one transverse layer on each side must exist.
    let transverse_ok = match axis {
        Axis::X => j >= 1 && j + 1 < ny && k >= 1 && k + 1 < nz && i + 1 < nx,
        Axis::Y => i >= 1 && i + 1 < nx && k >= 1 && k + 1 < nz && j + 1 < ny,
        Axis::Z => i >= 1 && i + 1 < nx && j >= 1 && j + 1 < ny && k + 1 < nz,
    };
    if !transverse_ok {
        return Err(Error::StencilOutOfRange {
            i,
            j,
            k,
            axis: axis.name(),
        });
    }
    // Two-point difference straddling the half node.
    let axial = (phi.get(i + di, j + dj, k + dk) - phi.get(i, j, k)) / h;
    // Averaged central differences on the two nodes bracketing the half node.
    let mut transverse_sq = 0.0;
    for t in Axis::ALL {
        if t == axis {
            continue;
        }
        let (ti, tj, tk) = t.offset();
        let near = (phi.get(i + ti, j + tj, k + tk) - phi.get(i - ti, j - tj, k - tk)) / (4.0 * h);
        let far = (phi.get(i + di + ti, j + dj + tj, k + dk + tk)
            - phi.get(i + di - ti, j + dj - tj, k + dk - tk))
            / (4.0 * h);
        let d = near + far;
        transverse_sq += d * d;
    }
    Ok(axial * axial + transverse_sq)
}

/// ε_I: the model evaluated directly at the half node `(i,j,k) + axis/2`.
pub fn half_node_eps_i(
    phi: &ScalarField,
    model: &DielectricModel,
    axis: Axis,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    Ok(model.eval_raw(half_node_grad_sq(phi, axis, i, j, k)?))
}

/// ε_II: arithmetic mean of the nodal ε values on the two nodes bracketing
/// the half node, with nodal gradients from standard central differences
/// (one-sided on boundary nodes).
pub fn half_node_eps_ii(
    phi: &ScalarField,
    model: &DielectricModel,
    axis: Axis,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    let g = &phi.grid;
    let (di, dj, dk) = axis.offset();
    if !g.in_range(i, j, k) || !g.in_range(i + di, j + dj, k + dk) {
        return Err(Error::StencilOutOfRange {
            i,
            j,
            k,
            axis: axis.name(),
        });
    }
    let ga = nodal_grad_sq(phi, i, j, k);
    let gb = nodal_grad_sq(phi, i + di, j + dj, k + dk);
    Ok(0.5 * (model.eval_raw(ga) + model.eval_raw(gb)))
}

/// Scheme-dispatching half-node ε.
pub fn half_node_eps(
    phi: &ScalarField,
    model: &DielectricModel,
    scheme: HalfNodeScheme,
    axis: Axis,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    match scheme {
        HalfNodeScheme::EpsI => half_node_eps_i(phi, model, axis, i, j, k),
        HalfNodeScheme::EpsII => half_node_eps_ii(phi, model, axis, i, j, k),
    }
}

/// All half-node ε values a solver step needs, frozen at one field snapshot.
///
/// `x(i,j,k)` is ε at `(i+1/2, j, k)` and is populated for
/// `i in 0..nx-1` with `j`, `k` interior; the y/z arrays are symmetric.
/// Entries outside those sets are never read by the sweeps and stay zero.
pub struct HalfNodeEps {
    pub scheme: HalfNodeScheme,
    nx: usize,
    ny: usize,
    ex: Vec<f64>,
    ey: Vec<f64>,
    ez: Vec<f64>,
}

impl HalfNodeEps {
    pub fn compute(phi: &ScalarField, model: &DielectricModel, scheme: HalfNodeScheme) -> Self {
        let [nx, ny, nz] = phi.grid.dims;
        let mut out = Self {
            scheme,
            nx,
            ny,
            ex: vec![0.0; (nx - 1) * ny * nz],
            ey: vec![0.0; nx * (ny - 1) * nz],
            ez: vec![0.0; nx * ny * (nz - 1)],
        };
        match scheme {
            HalfNodeScheme::EpsI => out.fill_eps_i(phi, model),
            HalfNodeScheme::EpsII => out.fill_eps_ii(phi, model),
        }
        out
    }

    /// ε at (i+1/2, j, k).
    #[inline]
    pub fn x(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ex[i + (self.nx - 1) * (j + self.ny * k)]
    }

    /// ε at (i, j+1/2, k).
    #[inline]
    pub fn y(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ey[i + self.nx * (j + (self.ny - 1) * k)]
    }

    /// ε at (i, j, k+1/2).
    #[inline]
    pub fn z(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ez[i + self.nx * (j + self.ny * k)]
    }

    fn fill_eps_i(&mut self, phi: &ScalarField, model: &DielectricModel) {
        let [nx, ny, nz] = phi.grid.dims;
        let h = phi.grid.h;
        let v = &phi.values;
        let sx = 1;
        let sy = nx;
        let sz = nx * ny;
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                let row = sy * j + sz * k;
                for i in 0..nx - 1 {
                    let c = row + i;
                    let ax = (v[c + sx] - v[c]) / h;
                    let ty = (v[c + sy] - v[c - sy] + v[c + sx + sy] - v[c + sx - sy]) / (4.0 * h);
                    let tz = (v[c + sz] - v[c - sz] + v[c + sx + sz] - v[c + sx - sz]) / (4.0 * h);
                    self.ex[i + (nx - 1) * (j + ny * k)] =
                        model.eval_raw(ax * ax + ty * ty + tz * tz);
                }
            }
        }
        for k in 1..nz - 1 {
            for j in 0..ny - 1 {
                let row = sy * j + sz * k;
                for i in 1..nx - 1 {
                    let c = row + i;
                    let ay = (v[c + sy] - v[c]) / h;
                    let tx = (v[c + sx] - v[c - sx] + v[c + sy + sx] - v[c + sy - sx]) / (4.0 * h);
                    let tz = (v[c + sz] - v[c - sz] + v[c + sy + sz] - v[c + sy - sz]) / (4.0 * h);
                    self.ey[i + nx * (j + (ny - 1) * k)] =
                        model.eval_raw(ay * ay + tx * tx + tz * tz);
                }
            }
        }
        for k in 0..nz - 1 {
            for j in 1..ny - 1 {
                let row = sy * j + sz * k;
                for i in 1..nx - 1 {
                    let c = row + i;
                    let az = (v[c + sz] - v[c]) / h;
                    let tx = (v[c + sx] - v[c - sx] + v[c + sz + sx] - v[c + sz - sx]) / (4.0 * h);
                    let ty = (v[c + sy] - v[c - sy] + v[c + sz + sy] - v[c + sz - sy]) / (4.0 * h);
                    self.ez[i + nx * (j + ny * k)] = model.eval_raw(az * az + tx * tx + ty * ty);
                }
            }
        }
    }

    /// Half-node table by averaging an arbitrary nodal ε field (the same
    /// averaging rule ε_II applies to its gradient-derived nodal values).
    pub fn from_nodal(nodal: &ScalarField) -> Self {
        let [nx, ny, nz] = nodal.grid.dims;
        let mut out = Self {
            scheme: HalfNodeScheme::EpsII,
            nx,
            ny,
            ex: vec![0.0; (nx - 1) * ny * nz],
            ey: vec![0.0; nx * (ny - 1) * nz],
            ez: vec![0.0; nx * ny * (nz - 1)],
        };
        out.average_nodal(&nodal.values, [nx, ny, nz]);
        out
    }

    fn fill_eps_ii(&mut self, phi: &ScalarField, model: &DielectricModel) {
        let [nx, ny, nz] = phi.grid.dims;
        // Nodal ε once, then half-node values are plain averages.
        let mut nodal = vec![0.0; phi.grid.n_nodes()];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    nodal[phi.grid.idx(i, j, k)] =
                        model.eval_raw(nodal_grad_sq(phi, i, j, k));
                }
            }
        }
        self.average_nodal(&nodal, [nx, ny, nz]);
    }

    fn average_nodal(&mut self, nodal: &[f64], dims: [usize; 3]) {
        let [nx, ny, nz] = dims;
        let sy = nx;
        let sz = nx * ny;
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                let row = sy * j + sz * k;
                for i in 0..nx - 1 {
                    let c = row + i;
                    self.ex[i + (nx - 1) * (j + ny * k)] = 0.5 * (nodal[c] + nodal[c + 1]);
                }
            }
        }
        for k in 1..nz - 1 {
            for j in 0..ny - 1 {
                let row = sy * j + sz * k;
                for i in 1..nx - 1 {
                    let c = row + i;
                    self.ey[i + nx * (j + (ny - 1) * k)] = 0.5 * (nodal[c] + nodal[c + sy]);
                }
            }
        }
        for k in 0..nz - 1 {
            for j in 1..ny - 1 {
                let row = sy * j + sz * k;
                for i in 1..nx - 1 {
                    let c = row + i;
                    self.ez[i + nx * (j + ny * k)] = 0.5 * (nodal[c] + nodal[c + sz]);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn simplified() -> DielectricModel {
        DielectricModel::simplified(1.0, 80.0, 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let rational = DielectricModel::rational(1.0, 80.0, 40.0, 1, 1.0).unwrap();
        assert_eq!(rational.eval_epsilon(0.0).unwrap(), 80.0);

        let s = simplified();
        assert!((s.eval_epsilon(1.0).unwrap() - 40.5).abs() < 1e-12);

        let e = DielectricModel::exponential(1.0, 80.0, 1.0).unwrap();
        let expect = 1.0 + 79.0 * (-1.0_f64).exp();
        assert!((e.eval_epsilon(1.0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 30.063).abs() < 1e-3);
    }

    #[test]
    fn eval_rejects_bad_input() {
        let s = simplified();
        assert!(s.eval_epsilon(-1.0).is_err());
        assert!(s.eval_epsilon(f64::NAN).is_err());
    }

    #[test]
    fn constant_field_gives_eps_s() {
        let g = Grid::new([0.0; 3], 0.5, [6, 6, 6]).unwrap();
        let phi = ScalarField::constant(g, 3.7);
        let m = simplified();
        for scheme in [HalfNodeScheme::EpsI, HalfNodeScheme::EpsII] {
            for axis in Axis::ALL {
                let e = half_node_eps(&phi, &m, scheme, axis, 2, 2, 2).unwrap();
                assert!((e - 80.0).abs() < 1e-12, "{scheme:?} {axis:?}");
            }
        }
    }

    #[test]
    fn linear_field_reproduced_exactly() {
        // phi = x: phi_x = 1 exactly, transverse derivatives vanish.
        let g = Grid::new([0.0; 3], 0.25, [8, 8, 8]).unwrap();
        let phi = ScalarField::from_fn(g, |x, _, _| x);
        let m = simplified();
        let expect = m.eval_epsilon(1.0).unwrap();
        for scheme in [HalfNodeScheme::EpsI, HalfNodeScheme::EpsII] {
            let e = half_node_eps(&phi, &m, scheme, Axis::X, 3, 3, 3).unwrap();
            assert!((e - expect).abs() < 1e-12, "{scheme:?}");
        }
    }

    #[test]
    fn stencil_out_of_range_reported() {
        let g = Grid::new([0.0; 3], 0.5, [5, 5, 5]).unwrap();
        let phi = ScalarField::zeros(g);
        let m = simplified();
        assert!(matches!(
            half_node_eps_i(&phi, &m, Axis::X, 2, 0, 2),
            Err(Error::StencilOutOfRange { .. })
        ));
        assert!(matches!(
            half_node_eps_i(&phi, &m, Axis::X, 4, 2, 2),
            Err(Error::StencilOutOfRange { .. })
        ));
    }

    /// DERIVED oracle: half-node ε converges at O(h²) to the analytic ε of a
    /// closed-form field under grid refinement.
    #[test]
    fn half_node_eps_second_order() {
        let m = simplified();
        // phi = sin(x) sin(y) sin(z); analytic gradient known in closed form.
        let analytic_eps = |x: f64, y: f64, z: f64| {
            let gx = x.cos() * y.sin() * z.sin();
            let gy = x.sin() * y.cos() * z.sin();
            let gz = x.sin() * y.sin() * z.cos();
            m.eval_raw(gx * gx + gy * gy + gz * gz)
        };
        let mut errs = Vec::new();
        for n in [17usize, 33, 65] {
            let h = 2.0 / (n - 1) as f64;
            let g = Grid::new([-1.0; 3], h, [n, n, n]).unwrap();
            let phi = ScalarField::from_fn(g, |x, y, z| x.sin() * y.sin() * z.sin());
            // Worst error over interior half nodes, both schemes.
            let mut worst = 0.0_f64;
            for k in 1..n - 1 {
                for j in 1..n - 1 {
                    for i in 1..n - 2 {
                        let x = g.origin[0] + h * (i as f64 + 0.5);
                        let y = g.origin[1] + h * j as f64;
                        let z = g.origin[2] + h * k as f64;
                        let exact = analytic_eps(x, y, z);
                        let e1 = half_node_eps_i(&phi, &m, Axis::X, i, j, k).unwrap();
                        worst = worst.max((e1 - exact).abs());
                    }
                }
            }
            errs.push(worst);
        }
        // refinement by 2 should cut the error by about 4
        assert!(errs[1] / errs[0] < 0.35, "{errs:?}");
        assert!(errs[2] / errs[1] < 0.35, "{errs:?}");
    }

    #[test]
    fn schemes_agree_for_constant_gradient() {
        let g = Grid::new([0.0; 3], 0.5, [7, 7, 7]).unwrap();
        let phi = ScalarField::from_fn(g, |x, y, z| 0.3 * x - 0.2 * y + 0.7 * z);
        let m = simplified();
        for axis in Axis::ALL {
            let a = half_node_eps_i(&phi, &m, axis, 2, 3, 3).unwrap();
            let b = half_node_eps_ii(&phi, &m, axis, 2, 3, 3).unwrap();
            assert!((a - b).abs() < 1e-12, "{axis:?}: {a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn eval_bounds_and_monotonic(g1 in 0.0f64..1e6, g2 in 0.0f64..1e6, alpha in 0.01f64..100.0) {
            let models = [
                DielectricModel::rational(1.0, 80.0, alpha, 1, 1.0).unwrap(),
                DielectricModel::rational(1.0, 80.0, alpha, 2, 1.0).unwrap(),
                DielectricModel::exponential(1.0, 80.0, alpha).unwrap(),
                DielectricModel::simplified(1.0, 80.0, alpha).unwrap(),
            ];
            let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
            for m in models {
                let el = m.eval_epsilon(lo).unwrap();
                let eh = m.eval_epsilon(hi).unwrap();
                // the exponential model underflows to exactly eps_m at
                // extreme gradients, so the lower bound is inclusive
                prop_assert!(el >= 1.0 && el <= 80.0);
                prop_assert!(eh <= el);
            }
        }

        #[test]
        fn half_node_bounds(seed in 0u64..200) {
            // pseudo-random smooth-ish field; ε stays in (eps_m, eps_s]
            let g = Grid::new([0.0; 3], 0.5, [6, 6, 6]).unwrap();
            let phi = ScalarField::from_fn(g, |x, y, z| {
                ((seed as f64) * 0.37 + x * 1.3).sin() + (y * 0.9 - z * 1.1).cos()
            });
            let m = simplified();
            for scheme in [HalfNodeScheme::EpsI, HalfNodeScheme::EpsII] {
                for axis in Axis::ALL {
                    let e = half_node_eps(&phi, &m, scheme, axis, 2, 2, 2).unwrap();
                    prop_assert!(e > m.eps_m && e <= m.eps_s);
                }
            }
        }
    }
}

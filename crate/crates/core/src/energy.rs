//! Post-processing of a converged potential into surface, volume, nonpolar,
//! polar, and total solvation energies.

use crate::charge::{ChargeSystem, PhysicalConstants};
use crate::dielectric::{nodal_grad_sq, DielectricModel};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Parameters of the Wagoner–Baker style nonpolar functional
/// G_np = γ·Area + p·Vol + ρ_s ∫ (1-S) U_att.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct NonpolarParams {
    /// Surface tension, kcal/(mol·Å²).
    pub gamma: f64,
    /// Hydrodynamic pressure, kcal/(mol·Å³).
    pub pressure: f64,
    /// Solvent bulk density, Å⁻³.
    pub rho_s: f64,
}

impl NonpolarParams {
    pub fn zero() -> Self {
        Self {
            gamma: 0.0,
            pressure: 0.0,
            rho_s: 0.0,
        }
    }
}

/// Attractive solute–solvent dispersion potential evaluated at a point,
/// kcal/mol. The model never pins this down, so it is pluggable.
pub trait AttractivePotential {
    fn eval(&self, r: [f64; 3]) -> f64;
}

/// Default WCA-style decomposition: per atom, the 12-6 potential outside its
/// minimum and the well depth inside, keeping only the attractive branch.
pub struct WcaAttractive {
    pub atoms: Vec<crate::charge::Atom>,
    /// Well depth, kcal/mol.
    pub well_depth: f64,
}

impl AttractivePotential for WcaAttractive {
    fn eval(&self, r: [f64; 3]) -> f64 {
        let mut u = 0.0;
        for a in &self.atoms {
            let dx = r[0] - a.position[0];
            let dy = r[1] - a.position[1];
            let dz = r[2] - a.position[2];
            let d2 = dx * dx + dy * dy + dz * dz;
            let rmin = a.radius.max(1e-6);
            let rmin2 = rmin * rmin;
            if d2 < rmin2 {
                u -= self.well_depth;
            } else {
                // 12-6 with minimum at rmin and depth well_depth
                let s6 = (rmin2 / d2).powi(3);
                u += self.well_depth * (s6 * s6 - 2.0 * s6);
            }
        }
        u
    }
}

/// Full solvation report; `dg_total = g_np + dg_p` holds exactly.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EnergyReport {
    pub g_p: f64,
    pub g_0: f64,
    pub dg_p: f64,
    pub area: f64,
    pub volume: f64,
    pub g_np: f64,
    pub dg_total: f64,
    /// True when the dispersion term was skipped for lack of a potential.
    pub dispersion_omitted: bool,
}

impl EnergyReport {
    pub fn assemble(
        g_p: f64,
        g_0: f64,
        area: f64,
        volume: f64,
        g_np: f64,
        dispersion_omitted: bool,
    ) -> Self {
        let dg_p = g_p - g_0;
        Self {
            g_p,
            g_0,
            dg_p,
            area,
            volume,
            g_np,
            dg_total: g_np + dg_p,
            dispersion_omitted,
        }
    }
}

/// The solute characteristic function S = (eps_s - ε(|∇φ|²)) / (eps_s - eps_m)
/// from nodal central differences; S ∈ [0, 1), 0 in bulk solvent.
pub fn surface_function(phi: &ScalarField, model: &DielectricModel) -> ScalarField {
    let grid = phi.grid;
    let span = model.eps_s - model.eps_m;
    let mut s = ScalarField::zeros(grid);
    if span <= 0.0 {
        // no dielectric contrast: no solute region
        return s;
    }
    for k in 0..grid.nz() {
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let eps = model.eval_raw(nodal_grad_sq(phi, i, j, k));
                s.set(i, j, k, (model.eps_s - eps) / span);
            }
        }
    }
    s
}

/// Central-difference gradient magnitude, one-sided on the boundary.
fn grad_mag(f: &ScalarField, i: usize, j: usize, k: usize) -> f64 {
    let g = &f.grid;
    let [nx, ny, nz] = g.dims;
    let h = g.h;
    let d = |lo: f64, hi: f64, span: f64| (hi - lo) / (span * h);
    let gx = if i > 0 && i < nx - 1 {
        d(f.get(i - 1, j, k), f.get(i + 1, j, k), 2.0)
    } else if i == 0 {
        d(f.get(0, j, k), f.get(1, j, k), 1.0)
    } else {
        d(f.get(nx - 2, j, k), f.get(nx - 1, j, k), 1.0)
    };
    let gy = if j > 0 && j < ny - 1 {
        d(f.get(i, j - 1, k), f.get(i, j + 1, k), 2.0)
    } else if j == 0 {
        d(f.get(i, 0, k), f.get(i, 1, k), 1.0)
    } else {
        d(f.get(i, ny - 2, k), f.get(i, ny - 1, k), 1.0)
    };
    let gz = if k > 0 && k < nz - 1 {
        d(f.get(i, j, k - 1), f.get(i, j, k + 1), 2.0)
    } else if k == 0 {
        d(f.get(i, j, 0), f.get(i, j, 1), 1.0)
    } else {
        d(f.get(i, j, nz - 2), f.get(i, j, nz - 1), 1.0)
    };
    (gx * gx + gy * gy + gz * gz).sqrt()
}

/// Coarea surface area: h³ Σ |∇S| over all nodes, Å².
pub fn surface_area(s: &ScalarField) -> f64 {
    let grid = s.grid;
    let h3 = grid.h * grid.h * grid.h;
    let mut acc = 0.0;
    for k in 0..grid.nz() {
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                acc += grad_mag(s, i, j, k);
            }
        }
    }
    h3 * acc
}

/// Solute volume: h³ Σ S, Å³.
pub fn solute_volume(s: &ScalarField) -> f64 {
    let h3 = s.grid.h * s.grid.h * s.grid.h;
    h3 * s.values.iter().sum::<f64>()
}

/// Nonpolar free energy; the dispersion term is zero when no potential is
/// supplied (callers flag that in the report).
pub fn nonpolar_energy(
    s: &ScalarField,
    params: &NonpolarParams,
    att: Option<&dyn AttractivePotential>,
) -> (f64, f64, f64) {
    let area = surface_area(s);
    let volume = solute_volume(s);
    let grid = s.grid;
    let h3 = grid.h * grid.h * grid.h;
    let mut dispersion = 0.0;
    if let Some(pot) = att {
        if params.rho_s > 0.0 {
            for k in 0..grid.nz() {
                for j in 0..grid.ny() {
                    for i in 0..grid.nx() {
                        let r = grid.node_position(i, j, k).expect("in range");
                        dispersion += (1.0 - s.get(i, j, k)) * pot.eval(r);
                    }
                }
            }
            dispersion *= params.rho_s * h3;
        }
    }
    let g_np = params.gamma * area + params.pressure * volume + dispersion;
    (g_np, area, volume)
}

/// Polar energy G_p = ½ Σ q_i φ(r_i) in kcal/mol, φ interpolated trilinearly
/// at the atom centers.
pub fn polar_energy(
    phi: &ScalarField,
    system: &ChargeSystem,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let mut acc = 0.0;
    for (index, atom) in system.atoms.iter().enumerate() {
        let v = phi.interpolate(atom.position).map_err(|_| {
            Error::AtomOutsideGrid {
                index,
                x: atom.position[0],
                y: atom.position[1],
                z: atom.position[2],
            }
        })?;
        acc += atom.charge * v;
    }
    Ok(0.5 * acc * constants.kbt_kcal)
}

/// Electrostatic solvation free energy ΔG_p = ½ Σ q_i (φ - φ_vac)(r_i),
/// kcal/mol. Both potentials must come from the same grid and charge
/// spreading so the grid self-energy cancels.
pub fn electrostatic_solvation(
    phi: &ScalarField,
    phi_vac: &ScalarField,
    system: &ChargeSystem,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if phi.grid != phi_vac.grid {
        return Err(Error::GridMismatch(
            "solvated and vacuum potentials must share one grid".into(),
        ));
    }
    Ok(polar_energy(phi, system, constants)? - polar_energy(phi_vac, system, constants)?)
}

/// Root-mean-square error between computed and reference energies.
pub fn rmse(computed: &[f64], reference: &[f64]) -> Result<f64> {
    if computed.len() != reference.len() || computed.is_empty() {
        return Err(Error::InvalidArgument(
            "rmse needs two equal-length nonempty lists".into(),
        ));
    }
    let ss: f64 = computed
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / computed.len() as f64).sqrt())
}

/// Grid whose every node carries S = 1 over a given box, for area/volume
/// sanity tests and CLI demos.
pub fn indicator_field(grid: Grid, value: f64) -> ScalarField {
    ScalarField::constant(grid, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::Atom;
    use std::f64::consts::PI;

    #[test]
    fn surface_function_limits() {
        let g = Grid::new([0.0; 3], 0.5, [6, 6, 6]).unwrap();
        let m = DielectricModel::simplified(1.0, 80.0, 1.0).unwrap();
        // flat field: solvent everywhere
        let s = surface_function(&ScalarField::constant(g, 1.0), &m);
        assert!(s.values.iter().all(|&v| v.abs() < 1e-14));
        // steep field: solute-like at interior nodes
        let steep = ScalarField::from_fn(g, |x, _, _| 1e6 * x);
        let s = surface_function(&steep, &m);
        assert!(s.get(3, 3, 3) > 0.999);
        // no contrast means no solute anywhere
        let mc = DielectricModel::simplified(80.0, 80.0, 1.0).unwrap();
        let s = surface_function(&steep, &mc);
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn area_and_volume_trivials() {
        let g = Grid::new([0.0; 3], 1.0, [11, 11, 11]).unwrap();
        let zero = ScalarField::zeros(g);
        assert_eq!(surface_area(&zero), 0.0);
        assert_eq!(solute_volume(&zero), 0.0);
        let one = indicator_field(g, 1.0);
        // S ≡ 1 on a 10x10x10 Å box of 11³ nodes
        assert!((solute_volume(&one) - 11.0 * 11.0 * 11.0).abs() < 1e-9);
        assert_eq!(surface_area(&one), 0.0);
    }

    /// DERIVED oracle: for the radial profile S(r) = (1 - tanh((r-R)/w))/2
    /// the coarea integral is ∫ |S'(r)| 4πr² dr, evaluated here by dense
    /// 1D quadrature; as w → 0 it approaches 4πR².
    #[test]
    fn tanh_sphere_area_matches_quadrature() {
        let radius = 1.0;
        let width = 0.25;
        let profile = |r: f64| 0.5 * (1.0 - ((r - radius) / width).tanh());
        // quadrature oracle
        let n = 400_000;
        let r_max = 4.0;
        let dr = r_max / n as f64;
        let mut oracle = 0.0;
        for step in 0..n {
            let r = (step as f64 + 0.5) * dr;
            let dsdr =
                -0.5 / width * (1.0 - ((r - radius) / width).tanh().powi(2));
            oracle += dsdr.abs() * 4.0 * PI * r * r * dr;
        }
        let g = Grid::centered_cube([0.0; 3], 3.0, 0.05).unwrap();
        let s = ScalarField::from_fn(g, |x, y, z| profile((x * x + y * y + z * z).sqrt()));
        let area = surface_area(&s);
        assert!(
            (area - oracle).abs() / oracle < 0.01,
            "area {area} vs oracle {oracle}"
        );
        // the sharp-interface limit is the sphere area
        assert!((oracle - 4.0 * PI * radius * radius).abs() / (4.0 * PI) < 0.1);

        let volume = solute_volume(&s);
        let mut vol_oracle = 0.0;
        for step in 0..n {
            let r = (step as f64 + 0.5) * dr;
            vol_oracle += profile(r) * 4.0 * PI * r * r * dr;
        }
        assert!(
            (volume - vol_oracle).abs() / vol_oracle < 0.01,
            "volume {volume} vs oracle {vol_oracle}"
        );
    }

    #[test]
    fn nonpolar_trivials() {
        let g = Grid::centered_cube([0.0; 3], 2.0, 0.2).unwrap();
        let s = ScalarField::from_fn(g, |x, y, z| {
            0.5 * (1.0 - ((x * x + y * y + z * z).sqrt() - 1.0).tanh())
        });
        let (zero, _, _) = nonpolar_energy(&s, &NonpolarParams::zero(), None);
        assert_eq!(zero, 0.0);
        let gamma_only = NonpolarParams {
            gamma: 1.0,
            pressure: 0.0,
            rho_s: 0.0,
        };
        let (g_np, area, _) = nonpolar_energy(&s, &gamma_only, None);
        assert!((g_np - area).abs() < 1e-12);
    }

    #[test]
    fn polar_energy_trivials() {
        let g = Grid::new([-2.0; 3], 1.0, [5, 5, 5]).unwrap();
        let c = PhysicalConstants::room_temperature();
        let phi = ScalarField::constant(g, 3.0);
        let sys = ChargeSystem::new(vec![Atom {
            position: [0.1, -0.4, 0.2],
            charge: 0.5,
            radius: 1.0,
        }])
        .unwrap();
        let gp = polar_energy(&phi, &sys, &c).unwrap();
        assert!((gp - 0.5 * 0.5 * 3.0 * c.kbt_kcal).abs() < 1e-12);

        let zero_sys = ChargeSystem::new(vec![Atom {
            position: [0.0; 3],
            charge: 0.0,
            radius: 1.0,
        }])
        .unwrap();
        assert_eq!(polar_energy(&phi, &zero_sys, &c).unwrap(), 0.0);
    }

    #[test]
    fn solvation_trivials_and_mismatch() {
        let g = Grid::new([-2.0; 3], 1.0, [5, 5, 5]).unwrap();
        let c = PhysicalConstants::room_temperature();
        let phi = ScalarField::from_fn(g, |x, y, _| x * y);
        let sys = ChargeSystem::unit_atom();
        assert_eq!(
            electrostatic_solvation(&phi, &phi, &sys, &c).unwrap(),
            0.0
        );
        let other = Grid::new([-2.0; 3], 0.5, [9, 9, 9]).unwrap();
        let phi2 = ScalarField::zeros(other);
        assert!(electrostatic_solvation(&phi, &phi2, &sys, &c).is_err());
    }

    #[test]
    fn report_identity() {
        let r = EnergyReport::assemble(-150.0, -10.0, 12.5, 4.2, 0.8, true);
        assert_eq!(r.dg_p, r.g_p - r.g_0);
        assert_eq!(r.dg_total, r.g_np + r.dg_p);
    }
}

//! Solute ingestion: PQR parsing, trilinear charge spreading, and the
//! Coulomb superposition used for Dirichlet boundary data.
//!
//! Unit conventions: lengths in Å, partial charges in units of the
//! fundamental charge, potential φ in k_B·T/e_c, energies in kcal/mol.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// One solute atom: position (Å), partial charge (e_c), vdW radius (Å).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Atom {
    pub position: [f64; 3],
    pub charge: f64,
    pub radius: f64,
}

/// The solute: a nonempty ordered list of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSystem {
    pub atoms: Vec<Atom>,
}

impl ChargeSystem {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySystem);
        }
        Ok(Self { atoms })
    }

    /// The one-atom reference system: unit charge, unit vdW radius, at the
    /// origin.
    pub fn unit_atom() -> Self {
        Self {
            atoms: vec![Atom {
                position: [0.0; 3],
                charge: 1.0,
                radius: 1.0,
            }],
        }
    }

    pub fn total_charge(&self) -> f64 {
        self.atoms.iter().map(|a| a.charge).sum()
    }

    /// Axis-aligned bounding box over atom centers.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for a in &self.atoms {
            for d in 0..3 {
                lo[d] = lo[d].min(a.position[d]);
                hi[d] = hi[d].max(a.position[d]);
            }
        }
        (lo, hi)
    }
}

/// Unit-system constants derived from CODATA values at a chosen temperature.
///
/// `coulomb_prefactor` is e_c²/(4πϵ₀ k_B T) in Å, so that
/// φ(r) = coulomb_prefactor · q / (ε r) is dimensionless (k_B T / e_c).
/// `four_pi_prefactor` is exactly 4π times that, matching the source-term
/// prefactor. `kbt_kcal` converts a k_B T energy to kcal/mol.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysicalConstants {
    pub temperature: f64,
    pub coulomb_prefactor: f64,
    pub four_pi_prefactor: f64,
    pub kbt_kcal: f64,
}

/// e²/(4πϵ₀) per mole, in kcal·Å/mol.
const COULOMB_KCAL_ANG: f64 = {
    let e = 1.602176634e-19; // C
    let eps0 = 8.8541878128e-12; // F/m
    let avogadro = 6.02214076e23;
    let joule_per_kcal = 4184.0;
    let pi = std::f64::consts::PI;
    e * e / (4.0 * pi * eps0) * avogadro / joule_per_kcal * 1e10
};

/// Boltzmann constant in kcal/(mol·K).
const KB_KCAL_MOL_K: f64 = 1.380649e-23 * 6.02214076e23 / 4184.0;

impl PhysicalConstants {
    pub fn at_temperature(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let kbt_kcal = KB_KCAL_MOL_K * temperature;
        let coulomb_prefactor = COULOMB_KCAL_ANG / kbt_kcal;
        Ok(Self {
            temperature,
            coulomb_prefactor,
            four_pi_prefactor: 4.0 * std::f64::consts::PI * coulomb_prefactor,
            kbt_kcal,
        })
    }

    /// Room temperature, 298.15 K.
    pub fn room_temperature() -> Self {
        Self::at_temperature(298.15).expect("positive temperature")
    }
}

/// Parse whitespace-delimited PQR text: every ATOM/HETATM record carries
/// x, y, z, charge, radius as its last five numeric columns; all other
/// lines are ignored.
pub fn parse_pqr(text: &str) -> Result<ChargeSystem> {
    let mut atoms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"ATOM") | Some(&"HETATM") => {}
            _ => continue,
        }
        if fields.len() < 6 {
            return Err(Error::PqrParse {
                line: lineno + 1,
                msg: format!("record has only {} fields, need at least 6", fields.len()),
            });
        }
        let tail = &fields[fields.len() - 5..];
        let mut nums = [0.0; 5];
        for (slot, raw) in nums.iter_mut().zip(tail) {
            *slot = raw.parse::<f64>().map_err(|_| Error::PqrParse {
                line: lineno + 1,
                msg: format!("cannot parse '{raw}' as a number"),
            })?;
        }
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(Error::PqrParse {
                line: lineno + 1,
                msg: "non-finite numeric field".into(),
            });
        }
        atoms.push(Atom {
            position: [nums[0], nums[1], nums[2]],
            charge: nums[3],
            radius: nums[4],
        });
    }
    ChargeSystem::new(atoms)
}

/// The eight trilinear corner weights of an atom inside its containing cell.
fn cell_weights(grid: &Grid, pos: [f64; 3]) -> Option<([usize; 3], [f64; 3])> {
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let f = (pos[d] - grid.origin[d]) / grid.h;
        // strictly inside the interior cell region: all 8 corners interior
        if !(f >= 1.0 && f <= (grid.dims[d] - 2) as f64) {
            return None;
        }
        let mut i0 = f.floor() as usize;
        if i0 >= grid.dims[d] - 2 {
            i0 = grid.dims[d] - 3; // atom exactly on node dims-2
        }
        base[d] = i0;
        frac[d] = f - i0 as f64;
    }
    Some((base, frac))
}

/// Spread point charges to grid nodes with trilinear weights, producing the
/// source density Q = four_pi_prefactor · (weighted charge) / h³.
///
/// The h² bookkeeping of the discrete schemes lives in the stencils, so this
/// one density serves both the BVP and the pseudo-time formulations.
pub fn distribute_charges(
    system: &ChargeSystem,
    grid: &Grid,
    constants: &PhysicalConstants,
) -> Result<ScalarField> {
    let mut q = ScalarField::zeros(*grid);
    let scale = constants.four_pi_prefactor / (grid.h * grid.h * grid.h);
    for (index, atom) in system.atoms.iter().enumerate() {
        let (base, frac) = cell_weights(grid, atom.position).ok_or(Error::AtomOutsideGrid {
            index,
            x: atom.position[0],
            y: atom.position[1],
            z: atom.position[2],
        })?;
        for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
            for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
                    let idx = grid.idx(base[0] + di, base[1] + dj, base[2] + dk);
                    q.values[idx] += scale * atom.charge * wi * wj * wk;
                }
            }
        }
    }
    Ok(q)
}

/// Coulomb superposition φ(r) = pref · Σ q_i / (eps_s |r - r_i|) at a point.
fn coulomb_at(system: &ChargeSystem, eps_s: f64, constants: &PhysicalConstants, r: [f64; 3]) -> Option<f64> {
    let mut phi = 0.0;
    for atom in &system.atoms {
        let dx = r[0] - atom.position[0];
        let dy = r[1] - atom.position[1];
        let dz = r[2] - atom.position[2];
        let dist = (dx * dx + dy * dy + dz * dz).sqrt();
        if dist == 0.0 {
            return None;
        }
        phi += atom.charge / dist;
    }
    Some(constants.coulomb_prefactor / eps_s * phi)
}

/// Dirichlet data on every boundary node from the Coulomb superposition;
/// interior nodes of the returned field are zero.
pub fn dirichlet_boundary(
    system: &ChargeSystem,
    grid: &Grid,
    eps_s: f64,
    constants: &PhysicalConstants,
) -> Result<ScalarField> {
    let mut bc = ScalarField::zeros(*grid);
    for (i, j, k) in grid.boundary() {
        let r = grid.node_position(i, j, k)?;
        let v = coulomb_at(system, eps_s, constants, r).ok_or_else(|| {
            let index = system
                .atoms
                .iter()
                .position(|a| a.position == r)
                .unwrap_or(0);
            Error::SingularBoundary { index }
        })?;
        bc.set(i, j, k, v);
    }
    Ok(bc)
}

/// Coulombic initial guess on every node: the screened 1/r superposition
/// over atoms, with nodes that coincide with an atom position patched
/// afterwards by the average of their six neighbours.
pub fn coulomb_initial_condition(
    system: &ChargeSystem,
    grid: &Grid,
    eps_s: f64,
    constants: &PhysicalConstants,
) -> Result<ScalarField> {
    let mut phi = ScalarField::zeros(*grid);
    let mut singular = Vec::new();
    for k in 0..grid.nz() {
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let r = grid.node_position(i, j, k)?;
                match coulomb_at(system, eps_s, constants, r) {
                    Some(v) => phi.set(i, j, k, v),
                    None => singular.push((i, j, k)),
                }
            }
        }
    }
    for (i, j, k) in singular {
        let mut acc = 0.0;
        let mut n = 0;
        let [nx, ny, nz] = grid.dims;
        let mut push = |ii: usize, jj: usize, kk: usize| {
            acc += phi.get(ii, jj, kk);
            n += 1;
        };
        if i > 0 {
            push(i - 1, j, k);
        }
        if i + 1 < nx {
            push(i + 1, j, k);
        }
        if j > 0 {
            push(i, j - 1, k);
        }
        if j + 1 < ny {
            push(i, j + 1, k);
        }
        if k > 0 {
            push(i, j, k - 1);
        }
        if k + 1 < nz {
            push(i, j, k + 1);
        }
        phi.set(i, j, k, acc / n as f64);
    }
    Ok(phi)
}

/// Box that contains the solute with at least `padding` Å of clearance on
/// every side. The origin is staggered by h/2 relative to the solute bounding
/// box so point charges do not coincide with grid nodes; a charge exactly on
/// a node would have a symmetric potential peak there, making the nodal
/// central-difference gradient vanish and the dielectric spuriously reach its
/// solvent value at the most singular point.
pub fn fit_grid(system: &ChargeSystem, padding: f64, h: f64) -> Result<Grid> {
    let (lo, hi) = system.bounding_box();
    let mut origin = [0.0; 3];
    let mut dims = [0usize; 3];
    for d in 0..3 {
        let span = hi[d] - lo[d] + 2.0 * padding + h;
        let n = (span / h).ceil() as usize + 1;
        origin[d] = lo[d] - padding - 0.5 * h;
        dims[d] = n.max(4);
    }
    Grid::new(origin, h, dims)
}

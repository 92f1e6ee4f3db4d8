//! Frequency-domain panel method for arrays of heaving bodies in deep water.
//!
//! Conventions: time dependence `e^{−iωt}`, `z` up with the free surface at
//! `z = 0`, normals pointing out of the body into the fluid. The incident
//! wave of unit amplitude is `φ_I = −(ig/ω) e^{kz} e^{ik(x cos β + y sin β)}`,
//! pressure is `p = iωρφ` and elevation `ζ = (iω/g) φ` at `z = 0`.

pub mod aca;
pub mod assembly;
pub mod green;
pub(crate) mod panel;
pub(crate) mod solver;

use crate::geometry::WecGeometry;
use crate::linalg::{LinalgError, C64};
use crate::mesh::{MeshError, PanelMesh};
use assembly::{point_kernels, InfluenceMatrices, PanelSet};
pub use assembly::{AcaSettings, Formulation};
use rayon::prelude::*;
use serde::Serialize;
use solver::Factored;

#[derive(Debug, thiserror::Error)]
pub enum HydroError {
    #[error("wave frequency must be positive, got {0}")]
    BadFrequency(f64),
    #[error("no bodies to solve for")]
    NoBodies,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Deep-water wave state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveEnvironment {
    pub omega: f64,
    pub amplitude: f64,
    pub heading: f64,
    pub wavenumber: f64,
}

impl WaveEnvironment {
    pub fn new(omega: f64, amplitude: f64, heading: f64, g: f64) -> Result<Self, HydroError> {
        Ok(Self { omega, amplitude, heading, wavenumber: wavenumber(omega, g)? })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavenumber
    }
}

/// Deep-water dispersion `k = ω²/g`.
pub fn wavenumber(omega: f64, g: f64) -> Result<f64, HydroError> {
    if omega > 0.0 && omega.is_finite() {
        Ok(green::wavenumber(omega, g))
    } else {
        Err(HydroError::BadFrequency(omega))
    }
}

/// Heave hydrostatic stiffness `ρgπr²` and mass `ρπr²T`.
pub fn hydrostatics(geom: &WecGeometry, rho: f64, g: f64) -> (f64, f64) {
    let awp = std::f64::consts::PI * geom.radius * geom.radius;
    (rho * g * awp, rho * geom.displaced_volume())
}

/// Solver and compression settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BemOptions {
    /// `None` assembles every block densely and solves by LU.
    pub aca: Option<AcaSettings>,
    pub condition_threshold: f64,
    pub formulation: Formulation,
}

impl BemOptions {
    pub fn dense() -> Self {
        Self { aca: None, condition_threshold: 500.0, formulation: Formulation::Potential }
    }

    pub fn compressed() -> Self {
        Self { aca: Some(AcaSettings::default()), condition_threshold: 500.0, formulation: Formulation::Potential }
    }
}

impl Default for BemOptions {
    fn default() -> Self {
        Self::compressed()
    }
}

/// Condition diagnostic of the system matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kappa: f64,
    pub accepted: bool,
}

/// Accept or reject by the condition threshold (rejected when `κ ≥ threshold`).
pub fn condition_check(kappa: f64, threshold: f64) -> ConditionReport {
    ConditionReport { kappa, accepted: kappa.is_finite() && kappa < threshold }
}

/// Radiation solution for unit heave velocity of each body in turn.
#[derive(Debug, Clone)]
pub struct RadiationResult {
    pub added_mass: Vec<Vec<f64>>,
    pub damping: Vec<Vec<f64>>,
    /// Panel potentials per mode.
    pub potential: Vec<Vec<C64>>,
    /// Prescribed normal velocity per mode.
    pub normal_velocity: Vec<Vec<C64>>,
    /// Source strengths per mode; empty for the potential formulation.
    pub sigma: Vec<Vec<C64>>,
}

/// Diffraction solution for a unit-amplitude incident wave.
#[derive(Debug, Clone)]
pub struct DiffractionResult {
    pub heading: f64,
    /// Heave excitation per body, per metre of wave amplitude.
    pub excitation: Vec<C64>,
    /// Scattered potential at the panel centroids.
    pub potential: Vec<C64>,
    pub normal_velocity: Vec<C64>,
    /// Source strengths; empty for the potential formulation.
    pub sigma: Vec<C64>,
}

/// Coefficients consumed by the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroCoefficients {
    pub omega: f64,
    pub added_mass: Vec<Vec<f64>>,
    pub damping: Vec<Vec<f64>>,
    pub excitation: Vec<C64>,
    pub stiffness: Vec<f64>,
    pub mass: Vec<f64>,
    pub condition: ConditionReport,
}

impl HydroCoefficients {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Single-row CSV dump: κ, then A and B row-major, then F as (re, im) pairs.
    pub fn to_csv_row(&self) -> String {
        let mut f: Vec<String> = vec![format!("{:.10e}", self.condition.kappa)];
        for m in [&self.added_mass, &self.damping] {
            f.extend(m.iter().flatten().map(|v| format!("{v:.10e}")));
        }
        for z in &self.excitation {
            f.push(format!("{:.10e}", z.re));
            f.push(format!("{:.10e}", z.im));
        }
        f.join(",")
    }
}

/// An assembled and factorised boundary-element problem at one frequency.
pub struct BemProblem {
    meshes: Vec<PanelMesh>,
    set: PanelSet,
    matrices: InfluenceMatrices,
    system: Factored,
    omega: f64,
    k: f64,
    rho: f64,
    g: f64,
    formulation: Formulation,
    condition: ConditionReport,
}

impl std::fmt::Debug for BemProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BemProblem")
            .field("bodies", &self.meshes.len())
            .field("panels", &self.set.len())
            .field("omega", &self.omega)
            .field("condition", &self.condition)
            .finish()
    }
}

impl BemProblem {
    pub fn new(meshes: Vec<PanelMesh>, omega: f64, rho: f64, g: f64, opts: BemOptions) -> Result<Self, HydroError> {
        if meshes.is_empty() {
            return Err(HydroError::NoBodies);
        }
        let k = wavenumber(omega, g)?;
        let set = PanelSet::new(&meshes);
        let matrices = InfluenceMatrices::assemble(&meshes, &set, k, opts.formulation, opts.aca);
        let system = Factored::new(&matrices, opts.aca.is_some())?;
        let kappa = system.condition_one(&matrices)?;
        let condition = condition_check(kappa, opts.condition_threshold);
        Ok(Self { meshes, set, matrices, system, omega, k, rho, g, formulation: opts.formulation, condition })
    }

    /// Body `b` on its own, moved to the origin. Reuses the self-influence
    /// block (and its factorisation when compressed) instead of reassembling.
    pub fn isolated(&self, b: usize, condition_threshold: f64) -> Result<Self, HydroError> {
        if b >= self.meshes.len() {
            return Err(HydroError::NoBodies);
        }
        let c = self.meshes[b].center;
        let mesh = self.meshes[b].translated([-c[0], -c[1]]);
        let set = PanelSet::new(std::slice::from_ref(&mesh));
        let matrices = self.matrices.diagonal_only(b);
        let system = self.system.diagonal_only(b, &matrices)?;
        let kappa = system.condition_one(&matrices)?;
        Ok(Self {
            meshes: vec![mesh],
            set,
            matrices,
            system,
            omega: self.omega,
            k: self.k,
            rho: self.rho,
            g: self.g,
            formulation: self.formulation,
            condition: condition_check(kappa, condition_threshold),
        })
    }

    pub fn meshes(&self) -> &[PanelMesh] {
        &self.meshes
    }

    pub fn matrices(&self) -> &InfluenceMatrices {
        &self.matrices
    }

    pub fn condition(&self) -> ConditionReport {
        self.condition
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn panel_count(&self) -> usize {
        self.set.len()
    }

    /// `Σ_{i ∈ body a} φ_i n_z,i A_i` in fixed panel order.
    fn heave_integral(&self, a: usize, phi: &[C64]) -> C64 {
        self.set.body_range(a).map(|i| phi[i] * (self.set.quads[i].normal[2] * self.set.quads[i].area)).sum()
    }

    /// Solves for the panel potentials given the normal velocity; also returns
    /// the source strengths when the source formulation is used.
    fn solve_boundary(&self, dphi_dn: &[C64]) -> Result<(Vec<C64>, Vec<C64>), HydroError> {
        Ok(match self.formulation {
            Formulation::Source => {
                let sigma = self.system.solve(&self.matrices, dphi_dn)?;
                (self.matrices.apply_s(&sigma), sigma)
            }
            Formulation::Potential => {
                let rhs = self.matrices.apply_s(dphi_dn);
                (self.system.solve(&self.matrices, &rhs)?, Vec::new())
            }
        })
    }

    pub fn solve_radiation(&self) -> Result<RadiationResult, HydroError> {
        let nb = self.meshes.len();
        let n = self.set.len();
        let mut added_mass = vec![vec![0.0; nb]; nb];
        let mut damping = vec![vec![0.0; nb]; nb];
        let mut sigma = Vec::with_capacity(nb);
        let mut potential = Vec::with_capacity(nb);
        let mut normal_velocity = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut rhs = vec![C64::new(0.0, 0.0); n];
            for i in self.set.body_range(b) {
                rhs[i] = C64::new(self.set.quads[i].normal[2], 0.0);
            }
            let (phi, s) = self.solve_boundary(&rhs)?;
            for a in 0..nb {
                // A + iB/ω = −ρ ∫ φ n_z dS
                let z = -self.rho * self.heave_integral(a, &phi);
                added_mass[a][b] = z.re;
                damping[a][b] = self.omega * z.im;
            }
            sigma.push(s);
            potential.push(phi);
            normal_velocity.push(rhs);
        }
        Ok(RadiationResult { added_mass, damping, potential, normal_velocity, sigma })
    }

    /// Incident potential and its gradient at a point, unit amplitude.
    pub fn incident(&self, p: [f64; 3], heading: f64) -> (C64, [C64; 3]) {
        let k = self.k;
        let (sb, cb) = heading.sin_cos();
        let phase = k * (p[0] * cb + p[1] * sb);
        let phi = C64::new(0.0, -self.g / self.omega) * (k * p[2]).exp() * C64::from_polar(1.0, phase);
        let ik = C64::new(0.0, k);
        (phi, [phi * ik * cb, phi * ik * sb, phi * k])
    }

    pub fn solve_diffraction(&self, heading: f64) -> Result<DiffractionResult, HydroError> {
        let n = self.set.len();
        let mut rhs = vec![C64::new(0.0, 0.0); n];
        let mut phi_i = vec![C64::new(0.0, 0.0); n];
        for (i, q) in self.set.quads.iter().enumerate() {
            let (phi, grad) = self.incident(q.centroid, heading);
            phi_i[i] = phi;
            rhs[i] = -(grad[0] * q.normal[0] + grad[1] * q.normal[1] + grad[2] * q.normal[2]);
        }
        let (potential, sigma) = self.solve_boundary(&rhs)?;
        let total: Vec<C64> = phi_i.iter().zip(&potential).map(|(a, b)| a + b).collect();
        let factor = C64::new(0.0, -self.omega * self.rho);
        let excitation = (0..self.meshes.len()).map(|a| factor * self.heave_integral(a, &total)).collect();
        Ok(DiffractionResult { heading, excitation, potential, normal_velocity: rhs, sigma })
    }

    /// Excitation from the radiation potentials via the Haskind relation.
    pub fn haskind_excitation(&self, rad: &RadiationResult, heading: f64) -> Vec<C64> {
        let factor = C64::new(0.0, -self.omega * self.rho);
        (0..self.meshes.len())
            .map(|a| {
                let range = self.set.body_range(a);
                let s: C64 = self
                    .set
                    .quads
                    .iter()
                    .enumerate()
                    .map(|(i, q)| {
                        let (phi, g) = self.incident(q.centroid, heading);
                        let dphi_dn = g[0] * q.normal[0] + g[1] * q.normal[1] + g[2] * q.normal[2];
                        let dphia_dn = if range.contains(&i) { q.normal[2] } else { 0.0 };
                        (phi * dphia_dn - rad.potential[a][i] * dphi_dn) * q.area
                    })
                    .sum();
                factor * s
            })
            .collect()
    }

    /// Full coefficient set for bodies sharing one geometry.
    pub fn coefficients(&self, geom: &WecGeometry, heading: f64) -> Result<(HydroCoefficients, RadiationResult, DiffractionResult), HydroError> {
        let rad = self.solve_radiation()?;
        let diff = self.solve_diffraction(heading)?;
        let (c33, m) = hydrostatics(geom, self.rho, self.g);
        let nb = self.meshes.len();
        let coeffs = HydroCoefficients {
            omega: self.omega,
            added_mass: rad.added_mass.clone(),
            damping: rad.damping.clone(),
            excitation: diff.excitation.clone(),
            stiffness: vec![c33; nb],
            mass: vec![m; nb],
            condition: self.condition,
        };
        Ok((coeffs, rad, diff))
    }

    /// Potential at a point in the fluid, on or below the free surface, from a
    /// boundary solution.
    pub fn potential_at(&self, p: [f64; 3], potential: &[C64], normal_velocity: &[C64], sigma: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.set.len() {
            let (s, _, dn) = point_kernels(&self.set, self.k, p, j, false);
            acc += match self.formulation {
                Formulation::Source => s * sigma[j],
                Formulation::Potential => s * normal_velocity[j] - dn * potential[j],
            };
        }
        acc
    }

    /// Free-surface elevation on a rectangular grid. `velocities` are the
    /// complex heave velocities of the bodies, `amplitude` scales incident and
    /// scattered waves.
    pub fn free_surface_elevation(
        &self,
        rad: &RadiationResult,
        diff: &DiffractionResult,
        velocities: &[C64],
        amplitude: f64,
        grid: &SurfaceGrid,
    ) -> FreeSurfaceField {
        let iw_g = C64::new(0.0, self.omega / self.g);
        // Superpose the radiation modes once.
        let combine = |modes: &[Vec<C64>]| -> Vec<C64> {
            let mut out = vec![C64::new(0.0, 0.0); self.set.len()];
            for (m, u) in modes.iter().zip(velocities) {
                for (acc, v) in out.iter_mut().zip(m) {
                    *acc += v * u;
                }
            }
            out
        };
        let (phi_r, vn_r, sig_r) = (combine(&rad.potential), combine(&rad.normal_velocity), combine(&rad.sigma));
        let points = grid.points();
        let values: Vec<Option<[C64; 3]>> = points
            .par_iter()
            .map(|&[x, y]| {
                let inside = self.meshes.iter().any(|m| (x - m.center[0]).hypot(y - m.center[1]) <= m.radius);
                if inside {
                    return None;
                }
                let p = [x, y, 0.0];
                let inc = iw_g * self.incident(p, diff.heading).0 * amplitude;
                let dif = iw_g * self.potential_at(p, &diff.potential, &diff.normal_velocity, &diff.sigma) * amplitude;
                let radz = iw_g * self.potential_at(p, &phi_r, &vn_r, &sig_r);
                Some([inc, radz, dif])
            })
            .collect();
        FreeSurfaceField::from_components(grid.clone(), values)
    }
}

/// Regular grid on the free surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl SurfaceGrid {
    pub fn new(center: [f64; 2], half_width: f64, n: usize) -> Self {
        let axis = |c: f64| -> Vec<f64> {
            if n == 1 {
                vec![c]
            } else {
                (0..n).map(|i| c - half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
            }
        };
        Self { xs: axis(center[0]), ys: axis(center[1]) }
    }

    /// Points in row-major order (`y` outer, `x` inner).
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.ys.iter().flat_map(|&y| self.xs.iter().map(move |&x| [x, y])).collect()
    }
}

/// Elevation components on a grid; `None` marks points inside a waterline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeSurfaceField {
    pub grid: SurfaceGrid,
    pub incident: Vec<Option<C64>>,
    pub radiated: Vec<Option<C64>>,
    pub diffracted: Vec<Option<C64>>,
    pub total: Vec<Option<C64>>,
}

impl FreeSurfaceField {
    fn from_components(grid: SurfaceGrid, values: Vec<Option<[C64; 3]>>) -> Self {
        let pick = |k: usize| values.iter().map(|v| v.map(|c| c[k])).collect::<Vec<_>>();
        let total = values.iter().map(|v| v.map(|c| c[0] + c[1] + c[2])).collect();
        Self { incident: pick(0), radiated: pick(1), diffracted: pick(2), total, grid }
    }

    /// Field of the undisturbed incident wave alone.
    pub fn incident_only(grid: SurfaceGrid, omega: f64, g: f64, heading: f64, amplitude: f64) -> Self {
        let k = omega * omega / g;
        let (sb, cb) = heading.sin_cos();
        let values = grid
            .points()
            .iter()
            .map(|&[x, y]| {
                let z = C64::from_polar(amplitude, k * (x * cb + y * sb));
                Some([z, C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
            })
            .collect();
        Self::from_components(grid, values)
    }
}

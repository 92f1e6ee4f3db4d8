//! Quadrilateral panel meshes of the wetted surface of a floating cylinder.

use crate::geometry::WecGeometry;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("mesh resolution {0:?} cannot close the hull; every count must be at least 1 and n_theta at least 3")]
    TooCoarse(MeshResolution),
    #[error("invalid hull: radius {radius} m, draft {draft} m")]
    BadHull { radius: f64, draft: f64 },
    #[error("mesh convergence study needs at least two resolutions, got {0}")]
    TooFewResolutions(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Panel counts: `nr` rings on the bottom disk, `ntheta` around, `nx` slices down the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshResolution {
    pub nr: usize,
    pub ntheta: usize,
    pub nx: usize,
}

impl MeshResolution {
    pub fn new(nr: usize, ntheta: usize, nx: usize) -> Self {
        Self { nr, ntheta, nx }
    }

    pub fn panel_count(&self) -> usize {
        self.ntheta * (self.nx + self.nr)
    }
}

/// Radius-dependent default resolution.
pub fn resolution_for_radius(r: f64) -> MeshResolution {
    if r > 5.0 {
        MeshResolution::new(7, 35, 25)
    } else if r > 4.0 {
        MeshResolution::new(5, 25, 20)
    } else if r > 3.0 {
        MeshResolution::new(3, 15, 15)
    } else {
        MeshResolution::new(2, 10, 10)
    }
}

/// Flat quadrilateral panel; vertices run counter-clockwise seen from the fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub vertices: [usize; 4],
    pub centroid: [f64; 3],
    pub normal: [f64; 3],
    pub area: f64,
    /// Twice the largest centroid-to-vertex distance.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelMesh {
    pub vertices: Vec<[f64; 3]>,
    pub panels: Vec<Panel>,
    pub center: [f64; 2],
    pub resolution: MeshResolution,
    pub radius: f64,
    pub draft: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Geometry of a planar quad (possibly with one collapsed edge).
pub(crate) fn quad_properties(v: [[f64; 3]; 4]) -> ([f64; 3], [f64; 3], f64, f64) {
    let c = cross(sub(v[2], v[0]), sub(v[3], v[1]));
    let twice_area = norm(c);
    let normal = [c[0] / twice_area, c[1] / twice_area, c[2] / twice_area];
    // Area-weighted centroid from the two triangles (0,1,2) and (0,2,3).
    let t1 = 0.5 * norm(cross(sub(v[1], v[0]), sub(v[2], v[0])));
    let t2 = 0.5 * norm(cross(sub(v[2], v[0]), sub(v[3], v[0])));
    let mut centroid = [0.0; 3];
    for k in 0..3 {
        let g1 = (v[0][k] + v[1][k] + v[2][k]) / 3.0;
        let g2 = (v[0][k] + v[2][k] + v[3][k]) / 3.0;
        centroid[k] = (t1 * g1 + t2 * g2) / (t1 + t2);
    }
    let diameter = 2.0 * v.iter().map(|p| norm(sub(*p, centroid))).fold(0.0, f64::max);
    (centroid, normal, 0.5 * twice_area, diameter)
}

/// Cosine spacing down the side wall: fine at the waterline and at the
/// bottom edge, where the potential varies fastest.
fn side_fraction(j: usize, n: usize) -> f64 {
    0.5 * (1.0 - (PI * j as f64 / n as f64).cos())
}

/// Radial spacing on the disk, refined toward the rim.
fn disk_fraction(m: usize, n: usize) -> f64 {
    (0.5 * PI * m as f64 / n as f64).sin()
}

/// Meshes the wetted side wall and bottom disk, centred at `center`.
///
/// Vertex radii are inflated so that each polygonal ring encloses the exact
/// circle area; waterplane area and displaced volume then match the cylinder.
pub fn build_cylinder_mesh(geom: &WecGeometry, res: MeshResolution, center: [f64; 2]) -> Result<PanelMesh, MeshError> {
    let (r, t) = (geom.radius, geom.draft());
    if !(r > 0.0 && t > 0.0 && r.is_finite() && t.is_finite()) {
        return Err(MeshError::BadHull { radius: r, draft: t });
    }
    if res.nr < 1 || res.nx < 1 || res.ntheta < 3 {
        return Err(MeshError::TooCoarse(res));
    }
    let nt = res.ntheta;
    let dtheta = 2.0 * PI / nt as f64;
    let rv = r * (dtheta / dtheta.sin()).sqrt();
    let (cx, cy) = (0.0, 0.0);
    let ring = |rad: f64, z: f64| -> Vec<[f64; 3]> {
        (0..nt)
            .map(|i| {
                let th = i as f64 * dtheta;
                [cx + rad * th.cos(), cy + rad * th.sin(), z]
            })
            .collect()
    };
    let mut vertices = Vec::with_capacity(nt * (res.nx + res.nr) + 1);
    // Side rings j = 0 (waterline) .. nx (bottom edge).
    for j in 0..=res.nx {
        vertices.extend(ring(rv, -t * side_fraction(j, res.nx)));
    }
    let side = |j: usize, i: usize| j * nt + i % nt;
    // Interior disk rings m = nr-1 .. 1, then the centre.
    let disk_base = vertices.len();
    for m in 1..res.nr {
        vertices.extend(ring(rv * disk_fraction(m, res.nr), -t));
    }
    let centre = vertices.len();
    vertices.push([cx, cy, -t]);
    // Disk ring index: m = 0 centre, m = nr shares the bottom side ring.
    let disk = |m: usize, i: usize| -> usize {
        if m == 0 {
            centre
        } else if m == res.nr {
            side(res.nx, i)
        } else {
            disk_base + (m - 1) * nt + i % nt
        }
    };
    let mut panels = Vec::with_capacity(res.panel_count());
    let mut push = |idx: [usize; 4], vertices: &Vec<[f64; 3]>| {
        let v = idx.map(|k| vertices[k]);
        let (centroid, normal, area, diameter) = quad_properties(v);
        panels.push(Panel { vertices: idx, centroid, normal, area, diameter });
    };
    for j in 0..res.nx {
        for i in 0..nt {
            push([side(j + 1, i), side(j + 1, i + 1), side(j, i + 1), side(j, i)], &vertices);
        }
    }
    for m in 0..res.nr {
        for i in 0..nt {
            push([disk(m, i), disk(m, i + 1), disk(m + 1, i + 1), disk(m + 1, i)], &vertices);
        }
    }
    // Built at the origin, then shifted so translated meshes differ by exactly the offset.
    for v in &mut vertices {
        v[0] += center[0];
        v[1] += center[1];
    }
    for p in &mut panels {
        p.centroid[0] += center[0];
        p.centroid[1] += center[1];
    }
    Ok(PanelMesh { vertices, panels, center, resolution: res, radius: r, draft: t })
}

impl PanelMesh {
    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    pub fn total_area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    pub fn panel_vertices(&self, p: usize) -> [[f64; 3]; 4] {
        self.panels[p].vertices.map(|k| self.vertices[k])
    }

    /// True when `other` is this mesh shifted horizontally (same shape and resolution).
    /// Copy shifted horizontally by `offset`.
    pub fn translated(&self, offset: [f64; 2]) -> Self {
        let shift = |p: [f64; 3]| [p[0] + offset[0], p[1] + offset[1], p[2]];
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|v| *v = shift(*v));
        out.panels.iter_mut().for_each(|p| p.centroid = shift(p.centroid));
        out.center = [self.center[0] + offset[0], self.center[1] + offset[1]];
        out
    }

    pub fn is_translate_of(&self, other: &PanelMesh) -> bool {
        if self.resolution != other.resolution
            || self.radius.to_bits() != other.radius.to_bits()
            || self.draft.to_bits() != other.draft.to_bits()
        {
            return false;
        }
        let (dx, dy) = (self.center[0] - other.center[0], self.center[1] - other.center[1]);
        self.panels.iter().zip(&other.panels).all(|(a, b)| {
            (a.centroid[0] - b.centroid[0] - dx).abs() < 1e-9
                && (a.centroid[1] - b.centroid[1] - dy).abs() < 1e-9
                && a.centroid[2] == b.centroid[2]
        })
    }

    /// Plain-text export: a `n_vertices n_panels` line, one `x y z` line per
    /// vertex, then one line of four zero-based vertex indices per panel.
    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.vertices.len(), self.panels.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.12e} {:.12e} {:.12e}", v[0], v[1], v[2])?;
        }
        for p in &self.panels {
            let [a, b, c, d] = p.vertices;
            writeln!(out, "{a} {b} {c} {d}")?;
        }
        Ok(())
    }
}

/// Ascending ladder from 70 to about 1300 panels.
pub fn study_resolutions() -> Vec<MeshResolution> {
    [(2, 10, 5), (3, 15, 8), (4, 20, 10), (5, 25, 15), (6, 30, 20), (7, 35, 22), (8, 40, 25)]
        .into_iter()
        .map(|(a, b, c)| MeshResolution::new(a, b, c))
        .collect()
}

/// `n` hulls by Latin hypercube over integer diameter and aspect ratio.
pub fn latin_hypercube_hulls(n: usize, bounds: &crate::geometry::DesignBounds, seed: u64) -> Vec<WecGeometry> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut column = |lo: f64, hi: f64| -> Vec<f64> {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        strata.into_iter().map(|s| lo + (hi - lo) * (s as f64 + rng.gen::<f64>()) / n as f64).collect()
    };
    let (dlo, dhi) = (bounds.diameter_m.0 as f64, bounds.diameter_m.1 as f64);
    let diameters = column(dlo - 0.5, dhi + 0.5);
    let aspects = column(bounds.aspect.0, bounds.aspect.1);
    diameters
        .into_iter()
        .zip(aspects)
        .map(|(d, a)| {
            let r = 0.5 * d.round().clamp(dlo, dhi);
            WecGeometry::cylinder(r, a * r)
        })
        .collect()
}

/// One row of a mesh convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub design: usize,
    pub radius: f64,
    pub length: f64,
    pub nr: usize,
    pub ntheta: usize,
    pub nx: usize,
    pub panels: usize,
    pub added_mass: f64,
    pub damping: f64,
    /// Relative change of added mass from the previous resolution.
    pub relative_change: Option<f64>,
    pub converged: bool,
}

/// Single-body heave added mass per design and resolution. A row is flagged
/// converged once it differs from the previous resolution by less than 1%.
pub fn mesh_convergence_study(
    designs: &[WecGeometry],
    resolutions: &[MeshResolution],
    omega: f64,
    rho: f64,
    g: f64,
) -> Result<Vec<ConvergenceRow>, crate::hydro::HydroError> {
    if resolutions.len() < 2 {
        return Err(MeshError::TooFewResolutions(resolutions.len()).into());
    }
    let mut rows = Vec::new();
    for (d, geom) in designs.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for &res in resolutions {
            let mesh = build_cylinder_mesh(geom, res, [0.0, 0.0])?;
            let problem = crate::hydro::BemProblem::new(vec![mesh], omega, rho, g, crate::hydro::BemOptions::dense())?;
            let rad = problem.solve_radiation()?;
            let a = rad.added_mass[0][0];
            let change = prev.map(|p| (a - p).abs() / a.abs());
            rows.push(ConvergenceRow {
                design: d,
                radius: geom.radius,
                length: geom.length,
                nr: res.nr,
                ntheta: res.ntheta,
                nx: res.nx,
                panels: res.panel_count(),
                added_mass: a,
                damping: rad.damping[0][0],
                relative_change: change,
                converged: change.is_some_and(|c| c < 0.01),
            });
            prev = Some(a);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(r: f64, l: f64) -> PanelMesh {
        let g = WecGeometry::cylinder(r, l);
        build_cylinder_mesh(&g, resolution_for_radius(r), [0.0, 0.0]).unwrap()
    }

    #[test]
    fn hypercube_hulls_cover_each_stratum() {
        let b = crate::geometry::DesignBounds::default();
        let hulls = latin_hypercube_hulls(6, &b, 3);
        assert_eq!(hulls, latin_hypercube_hulls(6, &b, 3));
        let mut strata: Vec<usize> = hulls.iter().map(|h| ((h.length / h.radius - 0.1) / 1.9 * 6.0) as usize).collect();
        strata.sort();
        assert_eq!(strata, (0..6).collect::<Vec<_>>());
        assert!(hulls.iter().all(|h| (2.0..=10.0).contains(&h.radius) && (2.0 * h.radius).fract() == 0.0));
        assert!(study_resolutions().windows(2).all(|w| w[0].panel_count() < w[1].panel_count()));
    }

    #[test]
    fn table_resolution() {
        assert_eq!(resolution_for_radius(6.0), MeshResolution::new(7, 35, 25));
        assert_eq!(resolution_for_radius(4.0), MeshResolution::new(3, 15, 15));
        assert_eq!(resolution_for_radius(4.5), MeshResolution::new(5, 25, 20));
        assert_eq!(resolution_for_radius(2.5), MeshResolution::new(2, 10, 10));
    }

    #[test]
    fn panel_count_and_area() {
        let m = mesh(4.0, 0.4);
        assert_eq!(m.panel_count(), 270);
        let exact = 2.0 * PI * 4.0 * 0.2 + PI * 16.0;
        assert!((m.total_area() - exact).abs() / exact < 0.01);
        assert!(m.panels.iter().all(|p| p.area > 0.0));
    }

    #[test]
    fn normals_point_out_of_the_body() {
        for (r, l) in [(4.0, 0.4), (10.0, 20.0), (2.0, 4.0)] {
            let m = mesh(r, l);
            for p in &m.panels {
                let n = p.normal;
                assert!((n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0).abs() < 1e-12);
                let c = p.centroid;
                let on_bottom = (c[2] + m.draft).abs() < 1e-12;
                let outward = if on_bottom { -n[2] } else { n[0] * c[0] + n[1] * c[1] };
                assert!(outward > 0.0);
            }
        }
    }

    #[test]
    fn closed_surface_flux_vanishes() {
        // Wetted surface plus the waterplane disk is closed: Σ n·area = 0 and
        // the divergence theorem returns the displaced volume.
        let m = mesh(5.0, 4.0);
        let mut s = [0.0; 3];
        let mut vol = 0.0;
        for p in &m.panels {
            for k in 0..3 {
                s[k] += p.normal[k] * p.area;
            }
            vol += p.normal[2] * p.centroid[2] * p.area;
        }
        let area = m.total_area();
        assert!(s[0].abs() < 1e-6 * area && s[1].abs() < 1e-6 * area);
        // Waterplane closes the vertical flux; its area is exactly πr².
        assert!((s[2] + PI * 25.0).abs() < 1e-9 * area);
        assert!((vol - PI * 25.0 * 2.0).abs() < 1e-9 * vol);
    }

    #[test]
    fn translation_shifts_centroids_exactly() {
        let g = WecGeometry::cylinder(4.0, 0.4);
        let res = resolution_for_radius(4.0);
        let a = build_cylinder_mesh(&g, res, [0.0, 0.0]).unwrap();
        let b = build_cylinder_mesh(&g, res, [10.0, 0.0]).unwrap();
        for (p, q) in a.panels.iter().zip(&b.panels) {
            assert_eq!(q.centroid[0], p.centroid[0] + 10.0);
            assert_eq!(q.centroid[1], p.centroid[1]);
        }
        assert!(b.is_translate_of(&a));
        assert_eq!(a, build_cylinder_mesh(&g, res, [0.0, 0.0]).unwrap());
    }

    #[test]
    fn rejects_degenerate_resolution() {
        let g = WecGeometry::cylinder(4.0, 0.4);
        assert!(build_cylinder_mesh(&g, MeshResolution::new(0, 10, 3), [0.0, 0.0]).is_err());
    }

    #[test]
    fn text_export_layout() {
        let m = mesh(2.0, 1.0);
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + m.vertices.len() + m.panels.len());
        assert_eq!(lines[0], format!("{} {}", m.vertices.len(), m.panels.len()));
    }
}
